"""Accuracy, individual-fairness and group-disparity metrics."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

DISPARITY_MODES = ("sdp", "eodp", "eddp")
METRIC_NAMES = ("f1_macro", "if_ratio_outcome", "if_ratio_brc", "s_dp", "eo_dp", "ed_dp")


def macro_f1(predictions, labels) -> float:
    """Unweighted mean of the per-class F1 scores for classes 0 and 1.

    A class that appears in neither ``predictions`` nor ``labels`` scores 0.
    """
    yhat = np.asarray(predictions).astype(int).ravel()
    y = np.asarray(labels).astype(int).ravel()
    if yhat.size == 0:
        raise ValueError("macro_f1 needs at least one row")
    if yhat.shape != y.shape:
        raise ValueError(f"length mismatch: {yhat.size} predictions vs {y.size} labels")
    scores = []
    for cls in (0, 1):
        tp = np.sum((yhat == cls) & (y == cls))
        fp = np.sum((yhat == cls) & (y != cls))
        fn = np.sum((yhat != cls) & (y == cls))
        denom = 2 * tp + fp + fn
        if denom == 0:
            warnings.warn(f"class {cls} absent from predictions and labels; its F1 counts as 0", stacklevel=2)
            scores.append(0.0)
        else:
            scores.append(2 * tp / denom)
    return float(np.mean(scores))


def if_ratio(gammas, features, block: int = 128, max_rows: Optional[int] = None, seed: int = 0) -> float:
    """``max_{i != j} |gamma_i - gamma_j| / ||x_i - x_j||_2`` over all row pairs.

    Pairs at zero distance are skipped when their gammas agree and make the
    ratio infinite otherwise.  ``max_rows`` scans a seeded random subset.
    """
    g = np.asarray(gammas, dtype=float).ravel()
    X = np.asarray(features, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    if g.size < 2:
        raise ValueError("if_ratio needs at least two rows")
    if X.shape[0] != g.size:
        raise ValueError("gammas and features must have the same number of rows")
    if max_rows is not None and g.size > max_rows:
        idx = np.sort(np.random.default_rng(seed).choice(g.size, size=max_rows, replace=False))
        g, X = g[idx], X[idx]
    n = g.size
    best = 0.0
    for start in range(0, n - 1, block):
        stop = min(start + block, n)
        rows = np.arange(start, stop)
        dist = np.sqrt(((X[start:stop, None, :] - X[None, :, :]) ** 2).sum(axis=-1))
        diff = np.abs(g[start:stop, None] - g[None, :])
        upper = np.arange(n)[None, :] > rows[:, None]
        zero = upper & (dist == 0.0)
        if np.any(zero & (diff > 0)):
            return math.inf
        valid = upper & (dist > 0.0)
        if valid.any():
            best = max(best, float(np.max(np.where(valid, diff / np.where(valid, dist, 1.0), 0.0))))
    return best


def disparity(predictions, groups, labels=None, mode: str = "sdp") -> float:
    """Gap in acceptance rates between the two groups.

    ``sdp`` compares overall acceptance, ``eodp`` acceptance among true
    positives, and ``eddp`` takes the larger of the positive- and
    negative-class gaps.  Predictions may be hard 0/1 decisions or acceptance
    probabilities.
    """
    if mode not in DISPARITY_MODES:
        raise ValueError(f"mode must be one of {DISPARITY_MODES}, got {mode!r}")
    yhat = np.asarray(predictions, dtype=float).ravel()
    a = np.asarray(groups).ravel()
    ids = sorted(np.unique(a).tolist())
    if len(ids) != 2:
        raise ValueError(f"disparity is defined for exactly two groups, got {len(ids)}")

    def rate(group, label=None):
        m = a == group
        if label is not None:
            m &= y == label
        if not m.any():
            cell = f"group={group!r}" + ("" if label is None else f", label={label}")
            raise ValueError(f"empty conditioning cell ({cell})")
        return float(yhat[m].mean())

    if mode == "sdp":
        return abs(rate(ids[1]) - rate(ids[0]))
    if labels is None:
        raise ValueError(f"mode {mode!r} needs labels")
    y = np.asarray(labels).astype(int).ravel()
    gap_pos = abs(rate(ids[1], 1) - rate(ids[0], 1))
    if mode == "eodp":
        return gap_pos
    return max(gap_pos, abs(rate(ids[1], 0) - rate(ids[0], 0)))


@dataclass
class FairnessReport:
    """Per-seed metric values with mean and (population) standard deviation."""

    runs: list = field(default_factory=list)

    def add(self, metrics: dict) -> None:
        self.runs.append({k: metrics.get(k) for k in METRIC_NAMES})

    def values(self, name: str) -> np.ndarray:
        return np.array([r[name] if r[name] is not None else np.nan for r in self.runs], dtype=float)

    def mean(self, name: str) -> float:
        return float(np.mean(self.values(name)))

    def std(self, name: str) -> float:
        return float(np.std(self.values(name)))

    def __getattr__(self, name):
        if name in METRIC_NAMES:
            return self.mean(name)
        raise AttributeError(name)

    def to_dict(self) -> dict:
        return {
            "per_seed": self.runs,
            "mean": {k: self.mean(k) for k in METRIC_NAMES},
            "std": {k: self.std(k) for k in METRIC_NAMES},
        }
