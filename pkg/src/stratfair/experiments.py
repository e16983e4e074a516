"""Experiment plumbing: run configuration, per-seed evaluation and table sweeps."""

from __future__ import annotations

import hashlib
import json
import platform
from dataclasses import asdict, dataclass, replace
from pathlib import Path
from typing import Optional

import numpy as np

from . import __version__
from .data import GroupCdfTable, SplitSpec, TabularDataset, default_fico_table, load_lawschool, sample_fico, seed_streams, split
from .metrics import FairnessReport, disparity, if_ratio, macro_f1
from .policy import FairPolicy, FitSpec, fit_deterministic_baseline, fit_group, fit_individual, predict_scores
from .score_cost import CostModel, ScoreModel

DATASETS = ("fico-synthetic", "lawschool")
DATASET_DEFAULTS = {
    "fico-synthetic": {"alpha": 100.0, "beta": 2.0, "lam": 1.0, "bins": 200},
    "lawschool": {"alpha": 1.0, "beta": 2.0, "lam": 1.0, "bins": 80},
}
DEFAULT_SEEDS = (0, 1, 2, 3, 4)

TARGETS = {
    "fico-if": {"dataset": "fico-synthetic", "sweep": "cap", "values": (1.0, 0.5, 0.25, 0.1)},
    "law-if": {"dataset": "lawschool", "sweep": "cap", "values": (1.0, 0.8, 0.4, 0.3)},
    "fico-sp": {"dataset": "fico-synthetic", "sweep": "omega", "values": (0.1, 0.08, 0.06, 0.04)},
    "law-sp": {"dataset": "lawschool", "sweep": "omega", "values": (0.1, 0.08, 0.06, 0.04)},
}
IF_ROWS = ("f1_macro", "if_ratio_outcome", "s_dp", "eo_dp", "ed_dp")
SP_ROWS = ("f1_macro", "if_ratio_outcome", "s_dp")
ROW_LABELS = {
    "f1_macro": "F1 score",
    "if_ratio_outcome": "IF ratio",
    "if_ratio_brc": "IF ratio (BRC)",
    "s_dp": "S-DP",
    "eo_dp": "EO-DP",
    "ed_dp": "ED-DP",
}


@dataclass(frozen=True)
class RunConfig:
    """Everything needed to regenerate a run; validated on construction."""

    dataset: str = "fico-synthetic"
    data_path: Optional[str] = None
    cdf_path: Optional[str] = None
    n_samples: int = 5000
    normalize: bool = False
    lam: Optional[float] = None
    alpha: Optional[float] = None
    beta: Optional[float] = None
    bins: Optional[int] = None
    m_c: Optional[float] = None
    m_p: Optional[float] = None
    cap_l: Optional[float] = None
    group_mode: str = "none"
    omega: float = 0.0
    seeds: tuple = DEFAULT_SEEDS
    strict_alg2: bool = False
    if_subsample: Optional[int] = None
    exclude_group_feature: bool = False

    def __post_init__(self):
        if self.dataset not in DATASETS:
            raise ValueError(f"dataset must be one of {DATASETS}, got {self.dataset!r}")
        defaults = DATASET_DEFAULTS[self.dataset]
        for name, value in defaults.items():
            if getattr(self, name) is None:
                object.__setattr__(self, name, value)
        object.__setattr__(self, "seeds", tuple(int(s) for s in self.seeds))
        if not self.seeds:
            raise ValueError("at least one seed is required")
        if self.dataset == "lawschool" and not self.data_path:
            raise ValueError("the lawschool dataset needs a CSV path")
        if self.n_samples < 10:
            raise ValueError("n_samples must be at least 10")
        if self.if_subsample is not None and self.if_subsample < 2:
            raise ValueError("if_subsample must be >= 2")
        self.cost  # validates the cost parameters
        self.fit_spec()

    @property
    def cost(self) -> CostModel:
        return CostModel(self.lam, self.alpha, self.beta)

    @property
    def cap_mode(self) -> Optional[str]:
        if self.cap_l is not None:
            return "direct"
        if self.m_c is not None and self.m_p is not None:
            return "joint"
        if self.m_c is not None:
            return "brc"
        if self.m_p is not None:
            return "outcome"
        return None

    def fit_spec(self, seed: Optional[int] = None) -> Optional[FitSpec]:
        if self.cap_mode is None:
            return None
        return FitSpec(
            bins=int(self.bins), cap_mode=self.cap_mode, m_c=self.m_c, m_p=self.m_p, cap_l=self.cap_l,
            group_mode=self.group_mode, omega=float(self.omega), seed=seed,
        )

    def to_dict(self) -> dict:
        d = asdict(self)
        d["seeds"] = list(self.seeds)
        return d

    def config_hash(self) -> str:
        blob = json.dumps(self.to_dict(), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()[:16]


def versions_stamp() -> dict:
    return {"stratfair": __version__, "numpy": np.__version__, "python": platform.python_version()}


@dataclass
class PreparedData:
    train: TabularDataset
    validation: TabularDataset
    test: TabularDataset
    score: ScoreModel
    sample_seed: int
    seed: int

    def scored(self, part: str):
        return getattr(self, part).scored(self.score)


def prepare(config: RunConfig, seed: int, table: Optional[GroupCdfTable] = None) -> PreparedData:
    """Generate or load the dataset for ``seed`` and split it 60/20/20."""
    streams = seed_streams(seed)
    if config.dataset == "fico-synthetic":
        if table is None:
            table = GroupCdfTable.from_csv(config.cdf_path) if config.cdf_path else default_fico_table()
        ds = sample_fico(table, config.n_samples, streams["generate"], normalize=config.normalize)
        score = ScoreModel.coordinate(0)
    else:
        ds, score = load_lawschool(config.data_path, streams["split"])
    train, val, test = split(ds, SplitSpec(seed=streams["split"]))
    return PreparedData(train, val, test, score, streams["sample"], seed)


def fit_policy(config: RunConfig, data: PreparedData, spec: Optional[FitSpec] = None, return_problem=False):
    spec = spec or config.fit_spec(data.seed)
    if spec is None:
        raise ValueError("no density cap configured (give m_c, m_p or cap_l)")
    train = data.scored("train")
    if spec.group_mode == "none":
        return fit_individual(train, spec, config.cost, data.score, return_problem=return_problem)
    return fit_group(train, spec, config.cost, data.score, return_problem=return_problem)


def fit_baseline(config: RunConfig, data: PreparedData, group_mode: str = "none", omega: float = 0.0) -> FairPolicy:
    spec = FitSpec(bins=int(config.bins), cap_mode="direct", cap_l=1.0, group_mode=group_mode, omega=omega, seed=data.seed)
    return fit_deterministic_baseline(data.scored("train"), data.scored("validation"), spec, config.cost, data.score)


def _distance_features(dataset: TabularDataset, exclude_group: bool) -> np.ndarray:
    X = dataset.features
    if not exclude_group:
        return X
    drop = [i for i, c in enumerate(dataset.columns) if c in ("group", "racetxt")]
    return np.delete(X, drop, axis=1)


def evaluate_policy(
    policy: FairPolicy,
    dataset: TabularDataset,
    seed: int,
    strict_alg2: bool = False,
    if_subsample: Optional[int] = None,
    exclude_group_feature: bool = False,
) -> dict:
    """All table metrics for ``policy`` on ``dataset``.

    IF ratios use exact expected outcomes and costs; F1 and disparities use
    sampled decisions.
    """
    scores = policy.score(dataset.features)
    groups = dataset.groups if policy.grouped else None
    preds = predict_scores(policy, scores, groups, seed=seed, strict_alg2=strict_alg2)
    dist_x = _distance_features(dataset, exclude_group_feature)
    out = {
        "f1_macro": macro_f1(preds, dataset.labels),
        "if_ratio_outcome": if_ratio(policy.expected_outcomes(scores, groups), dist_x, max_rows=if_subsample, seed=seed),
        "if_ratio_brc": if_ratio(policy.expected_costs(scores, groups), dist_x, max_rows=if_subsample, seed=seed),
        "s_dp": None, "eo_dp": None, "ed_dp": None,
    }
    if np.unique(dataset.groups).size == 2:
        out["s_dp"] = disparity(preds, dataset.groups, dataset.labels, "sdp")
        out["eo_dp"] = disparity(preds, dataset.groups, dataset.labels, "eodp")
        out["ed_dp"] = disparity(preds, dataset.groups, dataset.labels, "eddp")
    return out


def column_labels(target: str) -> list:
    t = TARGETS[target]
    sym = "L_p" if t["sweep"] == "cap" else "Omega"
    return ["Deterministic"] + [f"{sym} = {v:g}" for v in t["values"]]


def run_reproduce(target: str, seeds=DEFAULT_SEEDS, data_path: Optional[str] = None,
                  n_samples: int = 5000, policy_sink=None) -> dict:
    """Run the sweep behind one results table and return the report dictionary.

    ``policy_sink(seed, column, policy)`` is called with every fitted policy.
    """
    if target not in TARGETS:
        raise ValueError(f"unknown target {target!r}; choose from {sorted(TARGETS)}")
    t = TARGETS[target]
    base_cfg = RunConfig(dataset=t["dataset"], data_path=data_path, n_samples=n_samples, seeds=tuple(seeds), cap_l=1.0)
    columns = column_labels(target)
    reports = {c: FairnessReport() for c in columns}
    objectives = {c: [] for c in columns[1:]}
    for seed in base_cfg.seeds:
        data = prepare(base_cfg, seed)
        if t["sweep"] == "cap":
            baseline = fit_baseline(base_cfg, data)
        else:
            baseline = fit_baseline(base_cfg, data, group_mode="parity", omega=max(t["values"]))
        sinks = [(columns[0], baseline)]
        for col, value in zip(columns[1:], t["values"]):
            if t["sweep"] == "cap":
                cfg = replace(base_cfg, cap_l=value)
            else:
                cfg = replace(base_cfg, cap_l=1.0, group_mode="parity", omega=value)
            policy = fit_policy(cfg, data)
            objectives[col].append(policy.metadata["objective"])
            sinks.append((col, policy))
        for col, policy in sinks:
            reports[col].add(evaluate_policy(policy, data.test, data.sample_seed))
            if policy_sink is not None:
                policy_sink(seed, col, policy)
    rows = IF_ROWS if t["sweep"] == "cap" else SP_ROWS
    return {
        "target": target,
        "dataset": t["dataset"],
        "seeds": list(base_cfg.seeds),
        "columns": columns,
        "rows": list(rows),
        "results": {c: reports[c].to_dict() for c in columns},
        "train_objectives": objectives,
        "config_hash": base_cfg.config_hash(),
        "versions": versions_stamp(),
        "note": "std spans both split and sampling randomness; one master seed drives both per run",
    }


def format_table(report: dict, rows=None, digits: int = 3) -> str:
    """Plain-text table: metrics down the side, methods across, ``mean ± std`` cells."""
    columns = report["columns"]
    rows = rows or report["rows"]
    header = ["Method"] + columns
    body = []
    for r in rows:
        cells = [ROW_LABELS.get(r, r)]
        for c in columns:
            m = report["results"][c]["mean"][r]
            s = report["results"][c]["std"][r]
            cells.append("n/a" if m is None or not np.isfinite(m) else f"{m:.{digits}f} ± {s:.{digits}f}")
        body.append(cells)
    widths = [max(len(row[i]) for row in [header] + body) for i in range(len(header))]
    lines = ["  ".join(h.ljust(w) for h, w in zip(header, widths))]
    lines.append("  ".join("-" * w for w in widths))
    lines += ["  ".join(c.ljust(w) for c, w in zip(row, widths)) for row in body]
    return "\n".join(lines) + "\n"


def write_json(path: Path, obj) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(obj, indent=2, sort_keys=True, allow_nan=True) + "\n")
