"""Dataset generation, ingestion and seeded splitting.

Two sources are supported:

* a FICO-style table of per-group score CDFs (``group,score,cdf`` CSV), from
  which labeled points are drawn by inverse-CDF sampling, and
* a Law School CSV with the columns in ``LAW_COLUMNS``; its score is a
  least-squares fit of ``zgpa`` on the remaining features.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Optional

import numpy as np

from .errors import IngestionError
from .estimation import ScoredSamples
from .score_cost import ScoreModel

LAW_COLUMNS = (
    "decile1b", "decile3", "lsat", "ugpa", "zfygpa", "zgpa",
    "fulltime", "fam_inc", "male", "racetxt", "tier", "pass_bar",
)
LAW_SCORE_COLUMN = "zgpa"
LAW_LABEL_COLUMN = "pass_bar"
LAW_GROUP_COLUMN = "racetxt"

# Synthetic-benchmark label model: P(Y=1 | score) = sigmoid((u - center) / temperature)
# with u the score rescaled to [0, 1] by the table's range.
FICO_LABEL_CENTER = 0.5
FICO_LABEL_TEMPERATURE = 0.0083


def seed_streams(master_seed: int) -> dict:
    """Independent child seeds for splitting, generation and Algorithm-2 sampling."""
    children = np.random.SeedSequence(int(master_seed)).spawn(3)
    names = ("split", "generate", "sample")
    return {n: int(c.generate_state(1, dtype=np.uint32)[0]) for n, c in zip(names, children)}


@dataclass(frozen=True)
class TabularDataset:
    features: np.ndarray
    labels: np.ndarray
    groups: np.ndarray
    columns: tuple = ()
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        X = np.atleast_2d(np.asarray(self.features, dtype=float))
        y = np.asarray(self.labels).astype(int)
        g = np.asarray(self.groups)
        if X.shape[0] != y.size or g.size != y.size:
            raise ValueError("features, labels and groups must have the same number of rows")
        if not np.all(np.isfinite(X)):
            raise ValueError("features contain missing or non-finite values")
        object.__setattr__(self, "features", X)
        object.__setattr__(self, "labels", y)
        object.__setattr__(self, "groups", g)

    def __len__(self):
        return self.labels.size

    def take(self, idx) -> "TabularDataset":
        return TabularDataset(self.features[idx], self.labels[idx], self.groups[idx], self.columns, self.metadata)

    def scored(self, score: ScoreModel) -> ScoredSamples:
        return ScoredSamples(score(self.features), self.labels, self.groups)


@dataclass(frozen=True)
class SplitSpec:
    fractions: tuple = (0.6, 0.2, 0.2)
    seed: int = 0

    def __post_init__(self):
        if len(self.fractions) != 3 or any(f < 0 for f in self.fractions):
            raise ValueError("need three non-negative fractions")
        if abs(sum(self.fractions) - 1.0) > 1e-9:
            raise ValueError(f"fractions must sum to 1, got {sum(self.fractions)}")


def split(dataset: TabularDataset, spec: SplitSpec = SplitSpec()):
    """Seeded permutation sliced into (train, validation, test) at floor boundaries."""
    n = len(dataset)
    if n == 0:
        raise ValueError("cannot split an empty dataset")
    perm = np.random.default_rng(spec.seed).permutation(n)
    n_train = math.floor(spec.fractions[0] * n)
    n_val = math.floor(spec.fractions[1] * n)
    return (
        dataset.take(perm[:n_train]),
        dataset.take(perm[n_train : n_train + n_val]),
        dataset.take(perm[n_train + n_val :]),
    )


@dataclass(frozen=True)
class GroupCdfTable:
    """Per-group cumulative score distribution plus group priors."""

    scores: dict
    cdfs: dict
    priors: dict

    def __post_init__(self):
        if not self.scores:
            raise IngestionError("CDF table has no groups")
        for g in self.scores:
            s = np.asarray(self.scores[g], dtype=float)
            c = np.asarray(self.cdfs[g], dtype=float)
            if s.shape != c.shape or s.ndim != 1 or s.size == 0:
                raise IngestionError(f"group {g!r}: scores and cdf must be equal-length vectors")
            if np.any(np.diff(s) <= 0):
                raise IngestionError(f"group {g!r}: scores must be strictly ascending")
            if np.any(np.diff(c) < 0) or c[0] < 0:
                raise IngestionError(f"group {g!r}: cdf must be non-decreasing and non-negative")
            if abs(c[-1] - 1.0) > 1e-6:
                raise IngestionError(f"group {g!r}: cdf must end at 1, ends at {c[-1]}")
        if set(self.priors) != set(self.scores):
            raise IngestionError("priors must cover exactly the table's groups")
        total = sum(self.priors.values())
        if any(p < 0 for p in self.priors.values()) or abs(total - 1.0) > 1e-9:
            raise IngestionError(f"group priors must be non-negative and sum to 1, got {total}")

    @property
    def group_names(self) -> list:
        return sorted(self.scores)

    @property
    def score_range(self) -> tuple:
        lo = min(float(np.min(s)) for s in self.scores.values())
        hi = max(float(np.max(s)) for s in self.scores.values())
        return lo, hi

    @classmethod
    def from_csv(cls, path, priors: Optional[dict] = None, groups: Optional[list] = None) -> "GroupCdfTable":
        rows: dict = {}
        with open(path, newline="") as fh:
            reader = csv.DictReader(fh)
            missing = {"group", "score", "cdf"} - set(reader.fieldnames or ())
            if missing:
                raise IngestionError(f"{path}: missing column(s) {sorted(missing)}")
            for lineno, row in enumerate(reader, start=2):
                try:
                    s, c = float(row["score"]), float(row["cdf"])
                except (TypeError, ValueError) as exc:
                    raise IngestionError(f"{path}:{lineno}: unparseable score/cdf ({exc})") from None
                rows.setdefault(row["group"], []).append((s, c))
        if groups is not None:
            unknown = set(groups) - set(rows)
            if unknown:
                raise IngestionError(f"{path}: groups {sorted(unknown)} not in table")
            rows = {g: rows[g] for g in groups}
        scores = {g: np.array([r[0] for r in v]) for g, v in rows.items()}
        cdfs = {g: np.array([r[1] for r in v]) for g, v in rows.items()}
        if priors is None:
            priors = {g: 1.0 / len(rows) for g in rows}
        return cls(scores, cdfs, dict(priors))

    def inverse_cdf(self, group, u) -> np.ndarray:
        s = np.asarray(self.scores[group], dtype=float)
        c = np.asarray(self.cdfs[group], dtype=float)
        if s.size == 1:
            return np.full(np.shape(u), s[0])
        return np.interp(u, c, s, left=s[0], right=s[-1])


def default_fico_table(priors: Optional[dict] = None) -> GroupCdfTable:
    """The bundled two-group FICO-style CDF table (TransRisk-like 0-100 scale)."""
    ref = resources.files("stratfair") / "resources" / "fico_cdf.csv"
    with resources.as_file(ref) as path:
        return GroupCdfTable.from_csv(path, priors=priors)


def fico_label_probability(scores, score_range, center=FICO_LABEL_CENTER, temperature=FICO_LABEL_TEMPERATURE):
    lo, hi = score_range
    scores = np.asarray(scores, dtype=float)
    # A single-score table has no range to normalize by; put everyone at the center.
    u = (scores - lo) / (hi - lo) if hi > lo else np.full(scores.shape, center)
    return 1.0 / (1.0 + np.exp(-(u - center) / temperature))


def sample_fico(
    table: GroupCdfTable,
    n: int,
    seed: int,
    normalize: bool = False,
    center: float = FICO_LABEL_CENTER,
    temperature: float = FICO_LABEL_TEMPERATURE,
) -> TabularDataset:
    """Draw ``n`` rows ``x = [score, group_code]`` with score-monotone Bernoulli labels.

    Group codes are positions in ``table.group_names``.  With ``normalize``
    the score is rescaled to [0, 1] by the table's score range.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    rng = np.random.default_rng(seed)
    names = table.group_names
    priors = np.array([table.priors[g] for g in names])
    codes = rng.choice(len(names), size=n, p=priors)
    u = rng.random(n)
    scores = np.empty(n)
    for i, g in enumerate(names):
        m = codes == i
        scores[m] = table.inverse_cdf(g, u[m])
    rng_label = rng.random(n)
    labels = (rng_label < fico_label_probability(scores, table.score_range, center, temperature)).astype(int)
    if normalize:
        lo, hi = table.score_range
        scores = (scores - lo) / (hi - lo)
    X = np.column_stack([scores, codes.astype(float)])
    meta = {"source": "fico-synthetic", "groups": names, "normalized": normalize,
            "label_center": center, "label_temperature": temperature}
    return TabularDataset(X, labels, codes, ("score", "group"), meta)


def fit_ols(X, y, ridge: float = 1e-8):
    """Least squares with intercept via the normal equations.

    An absolute ridge ``ridge * I`` on ``Z'Z`` (``Z`` is ``X`` with an intercept
    column) keeps the system solvable when features are collinear.
    Returns ``(weights, intercept)``.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    Z = np.column_stack([X, np.ones(X.shape[0])])
    gram = Z.T @ Z
    beta = np.linalg.solve(gram + ridge * np.eye(gram.shape[0]), Z.T @ y)
    return beta[:-1], float(beta[-1])


def read_lawschool_csv(path) -> tuple:
    """Parse the CSV into a float matrix; errors carry the row and column."""
    path = Path(path)
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise IngestionError(f"{path}: empty file") from None
        missing = [c for c in LAW_COLUMNS if c not in header]
        if missing:
            raise IngestionError(f"{path}: missing column(s) {missing}")
        data = []
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not cell.strip() for cell in row):
                continue
            if len(row) != len(header):
                raise IngestionError(f"{path}:{lineno}: expected {len(header)} cells, got {len(row)}")
            vals = []
            for col, cell in zip(header, row):
                try:
                    v = float(cell)
                except ValueError:
                    raise IngestionError(f"{path}:{lineno}: column {col!r} has unparseable value {cell!r}") from None
                if not math.isfinite(v):
                    raise IngestionError(f"{path}:{lineno}: column {col!r} is missing or non-finite")
                vals.append(v)
            data.append(vals)
    if not data:
        raise IngestionError(f"{path}: no data rows")
    return header, np.array(data)


def load_lawschool(path, seed: int, fractions=(0.6, 0.2, 0.2)):
    """Load the Law School CSV and fit the linear score model on its training split.

    Features are every column except ``zgpa`` and ``pass_bar`` (so the group
    column ``racetxt`` is a feature too); the label is ``pass_bar``.  The score
    regresses ``zgpa`` on the features using the training rows of
    ``split(dataset, SplitSpec(fractions, seed))`` only.
    """
    header, M = read_lawschool_csv(path)
    col = {c: i for i, c in enumerate(header)}
    labels = M[:, col[LAW_LABEL_COLUMN]]
    bad = np.flatnonzero((labels != 0) & (labels != 1))
    if bad.size:
        raise IngestionError(f"{path}:{bad[0] + 2}: column 'pass_bar' must be 0/1, got {labels[bad[0]]}")
    feat_cols = tuple(c for c in header if c not in (LAW_SCORE_COLUMN, LAW_LABEL_COLUMN))
    X = M[:, [col[c] for c in feat_cols]]
    groups = M[:, col[LAW_GROUP_COLUMN]]
    groups = groups.astype(int) if np.all(groups == np.round(groups)) else groups
    target = M[:, col[LAW_SCORE_COLUMN]]
    meta = {"source": "lawschool", "path": str(path)}
    dataset = TabularDataset(X, labels.astype(int), groups, feat_cols, meta)
    # Split with the target riding along as an extra column so the rows match split().
    with_target = TabularDataset(np.column_stack([X, target]), dataset.labels, groups)
    train, _, _ = split(with_target, SplitSpec(tuple(fractions), seed))
    w, b = fit_ols(train.features[:, :-1], train.features[:, -1])
    return dataset, ScoreModel.linear(w, b)
