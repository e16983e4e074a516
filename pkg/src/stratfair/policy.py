"""Fitting randomized (and deterministic baseline) threshold policies, and inference."""

from __future__ import annotations

import itertools
import json
from dataclasses import asdict, dataclass, field
from typing import Mapping, Optional, Union

import numpy as np

from .errors import InfeasibleError, UnknownGroupError
from .estimation import (
    BinWeights,
    ScoredSamples,
    compute_error_weights,
    compute_positive_weights,
    conditional_positive_weights,
)
from .lp import OPTIMAL, LpProblem, solve
from .response import ThresholdDistribution, expected_brc, expected_outcome
from .score_cost import CostModel, FairnessBudget, ScoreBounds, ScoreModel, density_cap_individual

SHARED = "*"
CAP_MODES = ("brc", "outcome", "joint", "direct")
GROUP_MODES = ("none", "parity", "eqopp", "eqodds")
POLICY_FORMAT = "stratfair-policy/1"


@dataclass(frozen=True)
class FitSpec:
    """What to fit: bin count, how the density cap is set, and the group constraint."""

    bins: int = 200
    cap_mode: str = "outcome"
    m_c: Optional[float] = None
    m_p: Optional[float] = None
    cap_l: Optional[float] = None
    group_mode: str = "none"
    omega: float = 0.0
    seed: Optional[int] = None

    def __post_init__(self):
        if int(self.bins) < 1:
            raise ValueError(f"bins must be >= 1, got {self.bins}")
        if self.cap_mode not in CAP_MODES:
            raise ValueError(f"cap_mode must be one of {CAP_MODES}, got {self.cap_mode!r}")
        if self.group_mode not in GROUP_MODES:
            raise ValueError(f"group_mode must be one of {GROUP_MODES}, got {self.group_mode!r}")
        if self.omega < 0:
            raise ValueError(f"omega must be >= 0, got {self.omega}")
        need = {"brc": ("m_c",), "outcome": ("m_p",), "joint": ("m_c", "m_p"), "direct": ("cap_l",)}
        for name in need[self.cap_mode]:
            v = getattr(self, name)
            if v is None or not v > 0:
                raise ValueError(f"cap_mode {self.cap_mode!r} needs a positive {name}")

    def density_cap(self, cost: CostModel, score: ScoreModel) -> float:
        if self.cap_mode == "direct":
            return float(self.cap_l)
        budget = FairnessBudget(
            m_c=self.m_c if self.cap_mode in ("brc", "joint") else None,
            m_p=self.m_p if self.cap_mode in ("outcome", "joint") else None,
        )
        return density_cap_individual(budget, cost, score).joint

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class FairPolicy:
    """Fitted threshold laws keyed by group id (``"*"`` when shared by everyone)."""

    distributions: Mapping[str, ThresholdDistribution]
    costs: Mapping[str, CostModel]
    score: ScoreModel
    spec: FitSpec
    density_cap: Optional[float] = None
    metadata: dict = field(default_factory=dict)

    @property
    def grouped(self) -> bool:
        return SHARED not in self.distributions

    @property
    def kind(self) -> str:
        return next(iter(self.distributions.values())).kind

    def _key(self, group) -> str:
        if not self.grouped:
            return SHARED
        key = str(group)
        if key not in self.distributions:
            raise UnknownGroupError(f"policy has no threshold law for group {group!r}")
        return key

    def law_for(self, group=None) -> ThresholdDistribution:
        return self.distributions[self._key(group)]

    def cost_for(self, group=None) -> CostModel:
        return self.costs[self._key(group)]

    def _per_group(self, scores, groups, fn):
        scores = np.asarray(scores, dtype=float)
        out = np.empty(scores.size)
        if not self.grouped:
            out[:] = fn(scores, self.distributions[SHARED], self.costs[SHARED])
            return out
        if groups is None:
            raise UnknownGroupError("policy is per-group; groups are required")
        keys = np.asarray([str(g) for g in np.asarray(groups)])
        for key in np.unique(keys):
            if key not in self.distributions:
                raise UnknownGroupError(f"policy has no threshold law for group {key!r}")
            m = keys == key
            out[m] = fn(scores[m], self.distributions[key], self.costs[key])
        return out

    def expected_outcomes(self, scores, groups=None) -> np.ndarray:
        return self._per_group(scores, groups, expected_outcome)

    def expected_costs(self, scores, groups=None) -> np.ndarray:
        return self._per_group(scores, groups, expected_brc)

    def to_dict(self) -> dict:
        return {
            "format": POLICY_FORMAT,
            "score": self.score.to_dict(),
            "costs": {k: c.to_dict() for k, c in self.costs.items()},
            "distributions": {k: d.to_dict() for k, d in self.distributions.items()},
            "density_cap": self.density_cap,
            "spec": self.spec.to_dict(),
            "metadata": self.metadata,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "FairPolicy":
        if d.get("format") != POLICY_FORMAT:
            raise ValueError(f"not a policy file (format={d.get('format')!r})")
        return cls(
            distributions={k: ThresholdDistribution.from_dict(v) for k, v in d["distributions"].items()},
            costs={k: CostModel.from_dict(v) for k, v in d["costs"].items()},
            score=ScoreModel.from_dict(d["score"]),
            spec=FitSpec(**d["spec"]),
            density_cap=d.get("density_cap"),
            metadata=d.get("metadata", {}),
        )

    def dumps(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)


def threshold_edges(bounds: ScoreBounds, cost: CostModel, bins: int) -> np.ndarray:
    """``bins`` equal-width bins covering ``(lower + cap, upper)``."""
    lo = bounds.lower + cost.cap
    if not lo < bounds.upper:
        raise InfeasibleError(
            f"cap {cost.cap:g} exceeds the score range [{bounds.lower:g}, {bounds.upper:g}]; "
            "every agent can reach every threshold"
        )
    return np.linspace(lo, bounds.upper, bins + 1)


def _check_mass_feasible(edges: np.ndarray, cap: float, label: str = "") -> None:
    span = edges[-1] - edges[0]
    if cap * span < 1.0 - 1e-12:
        need = 1.0 / span
        where = f" for group {label}" if label else ""
        raise InfeasibleError(
            f"density cap L={cap:g} cannot carry unit mass over a threshold range of "
            f"length {span:g}{where}; minimum feasible L is {need:.6g}",
            min_cap=need,
        )


def _distribution(edges, p) -> ThresholdDistribution:
    widths = np.diff(edges)
    p = np.clip(np.asarray(p, dtype=float), 0.0, None)
    # Remove the solver's round-off from the unit-mass row.
    p = p / float(p @ widths)
    return ThresholdDistribution.piecewise(edges, p)


def individual_lp(weights: BinWeights, cap: float) -> LpProblem:
    widths = weights.widths
    return LpProblem(
        c=weights.error_weight,
        a_eq=widths[None, :],
        b_eq=[1.0],
        upper=np.full(widths.size, cap),
    )


def fit_individual(
    train: ScoredSamples,
    spec: FitSpec,
    cost: CostModel,
    score: ScoreModel,
    return_problem: bool = False,
):
    """Error-minimizing threshold density under the cap ``0 <= p_k <= L``."""
    if len(train) == 0:
        raise ValueError("training sample is empty")
    cap = spec.density_cap(cost, score)
    bounds = ScoreBounds.from_scores(train.scores)
    edges = threshold_edges(bounds, cost, spec.bins)
    _check_mass_feasible(edges, cap)
    weights = compute_error_weights(train.scores, train.labels, edges, cost)
    problem = individual_lp(weights, cap)
    sol = solve(problem)
    if sol.status != OPTIMAL:
        raise InfeasibleError(f"LP returned status {sol.status}")
    dist = _distribution(edges, sol.x)
    meta = {
        "lp_status": sol.status,
        "lp_iterations": sol.iterations,
        "objective": float(weights.error_weight @ dist.densities),
        "bounds": {SHARED: [bounds.lower, bounds.upper]},
        "n_train": len(train),
    }
    policy = FairPolicy({SHARED: dist}, {SHARED: cost}, score, spec, cap, meta)
    if return_problem:
        return policy, problem, {SHARED: weights}
    return policy


def _costs_by_group(costs: Union[CostModel, Mapping], groups: list) -> dict:
    if isinstance(costs, CostModel):
        return {str(g): costs for g in groups}
    out = {}
    for g in groups:
        c = costs.get(g, costs.get(str(g)))
        if c is None:
            raise UnknownGroupError(f"no cost model for group {g!r}")
        out[str(g)] = c
    return out


def fit_group(
    train: ScoredSamples,
    spec: FitSpec,
    costs: Union[CostModel, Mapping],
    score: ScoreModel,
    return_problem: bool = False,
):
    """Per-group threshold densities minimizing prior-weighted error.

    Pairwise rate rows ``|B_a @ p_a - B_a' @ p_a'| <= omega`` couple the groups;
    the rate is the acceptance rate (parity), the true-positive rate
    (equal opportunity) or both true- and false-positive rates (equalized odds).
    """
    if train.groups is None:
        raise ValueError("group fit needs group ids on the training sample")
    groups = train.group_ids()
    cost_map = _costs_by_group(costs, groups)
    n_total = len(train)
    K = spec.bins

    blocks = []
    for g in groups:
        key = str(g)
        sub = train.subset(train.groups == g)
        if len(sub) == 0:
            raise ValueError(f"group {g!r} is empty")
        cost = cost_map[key]
        cap = spec.density_cap(cost, score)
        bounds = ScoreBounds.from_scores(sub.scores)
        edges = threshold_edges(bounds, cost, K)
        _check_mass_feasible(edges, cap, key)
        err = compute_error_weights(sub.scores, sub.labels, edges, cost, group=key)
        families = []
        if spec.group_mode == "parity":
            families.append(compute_positive_weights(sub.scores, edges, cost, group=key).positive_weight)
        if spec.group_mode in ("eqopp", "eqodds"):
            families.append(conditional_positive_weights(sub.scores, sub.labels, edges, cost, 1, group=key).positive_weight)
        if spec.group_mode == "eqodds":
            families.append(conditional_positive_weights(sub.scores, sub.labels, edges, cost, 0, group=key).positive_weight)
        blocks.append(
            dict(key=key, cost=cost, cap=cap, bounds=bounds, edges=edges, weights=err,
                 prior=len(sub) / n_total, families=families)
        )

    G = len(blocks)
    n = G * K
    c = np.concatenate([b["prior"] * b["weights"].error_weight for b in blocks])
    a_eq = np.zeros((G, n))
    upper = np.empty(n)
    for i, b in enumerate(blocks):
        a_eq[i, i * K : (i + 1) * K] = np.diff(b["edges"])
        upper[i * K : (i + 1) * K] = b["cap"]
    rows = []
    for (i, bi), (j, bj) in itertools.combinations(enumerate(blocks), 2):
        for f in range(len(bi["families"])):
            row = np.zeros(n)
            row[i * K : (i + 1) * K] = bi["families"][f]
            row[j * K : (j + 1) * K] = -bj["families"][f]
            rows.extend([row, -row])
    a_ub = np.array(rows) if rows else None
    b_ub = np.full(len(rows), float(spec.omega)) if rows else None
    problem = LpProblem(c, a_eq, np.ones(G), a_ub, b_ub, upper)
    sol = solve(problem)
    if sol.status != OPTIMAL:
        raise InfeasibleError(
            f"group LP is {sol.status} at omega={spec.omega:g} ({spec.group_mode}); try a larger omega"
        )

    dists, meta_bounds, caps, objective = {}, {}, {}, 0.0
    gaps = []
    for i, b in enumerate(blocks):
        dist = _distribution(b["edges"], sol.x[i * K : (i + 1) * K])
        dists[b["key"]] = dist
        meta_bounds[b["key"]] = [b["bounds"].lower, b["bounds"].upper]
        caps[b["key"]] = b["cap"]
        objective += b["prior"] * float(b["weights"].error_weight @ dist.densities)
    for bi, bj in itertools.combinations(blocks, 2):
        for f in range(len(bi["families"])):
            gaps.append(abs(float(bi["families"][f] @ dists[bi["key"]].densities - bj["families"][f] @ dists[bj["key"]].densities)))
    meta = {
        "lp_status": sol.status,
        "lp_iterations": sol.iterations,
        "objective": objective,
        "bounds": meta_bounds,
        "group_caps": caps,
        "priors": {b["key"]: b["prior"] for b in blocks},
        "train_rate_gaps": gaps,
        "n_train": n_total,
    }
    policy = FairPolicy(dists, {b["key"]: b["cost"] for b in blocks}, score, spec, min(caps.values()), meta)
    if return_problem:
        return policy, problem, {b["key"]: b["weights"] for b in blocks}
    return policy


def _f1_from_counts(tp, fp, fn, tn):
    """Macro F1 over classes {0, 1}; an empty class contributes 0."""
    with np.errstate(divide="ignore", invalid="ignore"):
        d1 = 2 * tp + fp + fn
        d0 = 2 * tn + fn + fp
        f1 = np.where(d1 > 0, 2 * tp / np.where(d1 > 0, d1, 1), 0.0)
        f0 = np.where(d0 > 0, 2 * tn / np.where(d0 > 0, d0, 1), 0.0)
    return 0.5 * (f1 + f0)


def _candidate_counts(z, y, candidates):
    """Confusion counts for ``accept iff z >= t`` at every candidate ``t``."""
    zp = np.sort(z[y == 1])
    zn = np.sort(z[y == 0])
    tp = zp.size - np.searchsorted(zp, candidates, side="left")
    fp = zn.size - np.searchsorted(zn, candidates, side="left")
    return dict(
        tp=tp.astype(float), fp=fp.astype(float),
        fn=(zp.size - tp).astype(float), tn=(zn.size - fp).astype(float),
        npos=zp.size, nneg=zn.size,
    )


def _candidates(z, edges):
    lo, hi = edges[0], edges[-1]
    cand = np.concatenate([z, edges])
    return np.unique(cand[(cand >= lo) & (cand <= hi)])


def _gap(ca, cb, mode):
    gaps = []
    if mode == "parity":
        na, nb = ca["npos"] + ca["nneg"], cb["npos"] + cb["nneg"]
        gaps.append(np.abs(((ca["tp"] + ca["fp"]) / na)[:, None] - ((cb["tp"] + cb["fp"]) / nb)[None, :]))
    if mode in ("eqopp", "eqodds"):
        if ca["npos"] == 0 or cb["npos"] == 0:
            raise ValueError("equal opportunity needs positives in every group")
        gaps.append(np.abs((ca["tp"] / ca["npos"])[:, None] - (cb["tp"] / cb["npos"])[None, :]))
    if mode == "eqodds":
        if ca["nneg"] == 0 or cb["nneg"] == 0:
            raise ValueError("equalized odds needs negatives in every group")
        gaps.append(np.abs((ca["fp"] / ca["nneg"])[:, None] - (cb["fp"] / cb["nneg"])[None, :]))
    return np.maximum.reduce(gaps)


def fit_deterministic_baseline(
    train: ScoredSamples,
    validation: Optional[ScoredSamples],
    spec: FitSpec,
    costs: Union[CostModel, Mapping],
    score: ScoreModel,
) -> FairPolicy:
    """Grid search for the macro-F1-best deterministic threshold(s) on the training split.

    Candidates are every ``l_i + cap`` and every bin edge inside the threshold
    range.  With ``group_mode != "none"`` one threshold per group (two groups)
    is searched over the full Cartesian product subject to the training-split
    gap ``<= omega``.  Ties go to the smaller threshold.
    """
    if len(train) == 0:
        raise ValueError("training sample is empty")
    if spec.group_mode == "none":
        cost = costs if isinstance(costs, CostModel) else next(iter(costs.values()))
        bounds = ScoreBounds.from_scores(train.scores)
        edges = threshold_edges(bounds, cost, spec.bins)
        z = train.scores + cost.cap
        cand = _candidates(z, edges)
        cnt = _candidate_counts(z, train.labels, cand)
        f1 = _f1_from_counts(cnt["tp"], cnt["fp"], cnt["fn"], cnt["tn"])
        best = int(np.argmax(f1))
        t0 = float(cand[best])
        meta = {"train_f1": float(f1[best]), "n_candidates": int(cand.size), "selection_split": "train",
                "bounds": {SHARED: [bounds.lower, bounds.upper]}}
        policy = FairPolicy({SHARED: ThresholdDistribution.dirac(t0)}, {SHARED: cost}, score, spec, None, meta)
    else:
        if train.groups is None:
            raise ValueError("group baseline needs group ids")
        groups = train.group_ids()
        if len(groups) != 2:
            raise ValueError(f"grouped baseline search supports exactly two groups, got {len(groups)}")
        cost_map = _costs_by_group(costs, groups)
        per = []
        for g in groups:
            key = str(g)
            sub = train.subset(train.groups == g)
            cost = cost_map[key]
            bounds = ScoreBounds.from_scores(sub.scores)
            edges = threshold_edges(bounds, cost, spec.bins)
            z = sub.scores + cost.cap
            cand = _candidates(z, edges)
            per.append((key, cand, _candidate_counts(z, sub.labels, cand), bounds))
        (ka, cand_a, ca, ba), (kb, cand_b, cb, bb) = per
        best_f1, best_ij = -1.0, None
        block = 256
        for start in range(0, cand_a.size, block):
            sl = slice(start, start + block)
            sub_a = {k: (v[sl] if isinstance(v, np.ndarray) else v) for k, v in ca.items()}
            f1 = _f1_from_counts(
                sub_a["tp"][:, None] + cb["tp"][None, :],
                sub_a["fp"][:, None] + cb["fp"][None, :],
                sub_a["fn"][:, None] + cb["fn"][None, :],
                sub_a["tn"][:, None] + cb["tn"][None, :],
            )
            gap = _gap(sub_a, cb, spec.group_mode)
            f1 = np.where(gap <= spec.omega + 1e-12, f1, -np.inf)
            flat = int(np.argmax(f1))
            val = float(f1.flat[flat])
            if val > best_f1:
                best_f1 = val
                best_ij = (start + flat // cand_b.size, flat % cand_b.size)
        if best_ij is None or not np.isfinite(best_f1):
            raise InfeasibleError(
                f"no pair of deterministic thresholds meets the {spec.group_mode} gap <= {spec.omega:g} on training data"
            )
        dists = {ka: ThresholdDistribution.dirac(float(cand_a[best_ij[0]])),
                 kb: ThresholdDistribution.dirac(float(cand_b[best_ij[1]]))}
        meta = {"train_f1": best_f1, "n_candidates": [int(cand_a.size), int(cand_b.size)],
                "selection_split": "train",
                "bounds": {ka: [ba.lower, ba.upper], kb: [bb.lower, bb.upper]}}
        policy = FairPolicy(dists, {ka: cost_map[ka], kb: cost_map[kb]}, score, spec, None, meta)

    if validation is not None and len(validation):
        preds = predict_scores(policy, validation.scores, validation.groups, seed=0)
        from .metrics import macro_f1

        policy.metadata["validation_f1"] = macro_f1(preds, validation.labels)
    return policy


def predict_scores(policy: FairPolicy, scores, groups=None, seed=0, strict_alg2: bool = False) -> np.ndarray:
    """Randomized decisions for rows with precomputed scores.

    Each row draws a bin with probability proportional to its mass, then a
    threshold uniformly inside it, and is accepted iff ``l + cap >= t``
    (or ``l >= t`` with ``strict_alg2``, ignoring the agent's response).
    """
    scores = np.asarray(scores, dtype=float)
    n = scores.size
    rng = np.random.default_rng(seed)
    u_bin, u_pos = rng.random((2, n))
    t = np.empty(n)
    shift = np.empty(n)
    if policy.grouped:
        if groups is None:
            raise UnknownGroupError("policy is per-group; groups are required")
        keys = np.asarray([str(g) for g in np.asarray(groups)])
    else:
        keys = np.full(n, SHARED)
    for key in np.unique(keys):
        if key not in policy.distributions:
            raise UnknownGroupError(f"policy has no threshold law for group {key!r}")
        m = keys == key
        dist = policy.distributions[key]
        shift[m] = 0.0 if strict_alg2 else policy.costs[key].cap
        if dist.kind == "dirac":
            t[m] = dist.t0
            continue
        mass = dist.densities * dist.widths
        cum = np.cumsum(mass / mass.sum())
        k = np.minimum(np.searchsorted(cum, u_bin[m], side="right"), cum.size - 1)
        t[m] = dist.edges[k] + u_pos[m] * dist.widths[k]
    return (scores + shift >= t).astype(int)


def predict(policy: FairPolicy, features, groups=None, seed=0, strict_alg2: bool = False) -> np.ndarray:
    """Decisions for raw feature rows; deterministic given ``seed``."""
    X = np.atleast_2d(np.asarray(features, dtype=float))
    if groups is not None and np.ndim(groups) == 0:
        groups = np.full(X.shape[0], groups, dtype=object)
    return predict_scores(policy, policy.score(X), groups, seed, strict_alg2)


def empirical_error(policy: FairPolicy, samples: ScoredSamples) -> float:
    """Mean expected post-response error on ``samples`` (the LP objective's plug-in)."""
    yhat = policy.expected_outcomes(samples.scores, samples.groups)
    err = np.where(samples.labels == 1, 1.0 - yhat, yhat)
    return float(err.mean())
