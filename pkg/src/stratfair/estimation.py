"""Plug-in estimates of the per-bin LP coefficients from labeled scores.

Under the empirical measure every double integral over (threshold, score)
collapses to a sum of interval lengths: for sample ``i`` the threshold ``t``
accepts it after best response exactly when ``t <= l_i + cap``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import EstimationError
from .score_cost import CostModel


@dataclass(frozen=True)
class ScoredSamples:
    """Column view of scored, labeled (and optionally grouped) rows."""

    scores: np.ndarray
    labels: np.ndarray
    groups: Optional[np.ndarray] = None

    def __post_init__(self):
        s = np.asarray(self.scores, dtype=float)
        y = np.asarray(self.labels).astype(int)
        if s.shape != y.shape or s.ndim != 1:
            raise ValueError("scores and labels must be 1-d and of equal length")
        if not np.all((y == 0) | (y == 1)):
            raise ValueError("labels must be 0/1")
        object.__setattr__(self, "scores", s)
        object.__setattr__(self, "labels", y)
        if self.groups is not None:
            g = np.asarray(self.groups)
            if g.shape != s.shape:
                raise ValueError("groups must align with scores")
            object.__setattr__(self, "groups", g)

    def __len__(self):
        return self.scores.size

    def subset(self, mask) -> "ScoredSamples":
        g = None if self.groups is None else self.groups[mask]
        return ScoredSamples(self.scores[mask], self.labels[mask], g)

    def group_ids(self) -> list:
        if self.groups is None:
            return []
        return sorted(np.unique(self.groups).tolist())


@dataclass(frozen=True)
class BinWeights:
    edges: np.ndarray
    error_weight: Optional[np.ndarray] = None
    positive_weight: Optional[np.ndarray] = None
    group: Optional[object] = None
    n_samples: int = 0

    @property
    def widths(self) -> np.ndarray:
        return np.diff(self.edges)

    def to_dict(self) -> dict:
        def lst(a):
            return None if a is None else np.asarray(a).tolist()

        return {
            "group": self.group,
            "n_samples": self.n_samples,
            "edges": lst(self.edges),
            "error_weight": lst(self.error_weight),
            "positive_weight": lst(self.positive_weight),
        }


def _check_edges(edges) -> np.ndarray:
    edges = np.asarray(edges, dtype=float)
    if edges.ndim != 1 or edges.size < 2 or np.any(np.diff(edges) <= 0):
        raise EstimationError("edges must be a strictly increasing vector of length >= 2")
    return edges


def accepted_lengths(scores, edges, cost: CostModel) -> np.ndarray:
    """``(N, K)`` lengths of ``bin_k ∩ {t <= l_i + cap}``.

    Ties ``t == l_i + cap`` count as accepted, a measure-zero convention.
    """
    z = np.asarray(scores, dtype=float)[:, None] + cost.cap
    left = edges[None, :-1]
    width = np.diff(edges)[None, :]
    return np.clip(z - left, 0.0, width)


def compute_error_weights(scores, labels, edges, cost: CostModel, group=None) -> BinWeights:
    """Per-bin misclassification mass ``A_k`` (and positive-rate mass ``B_k``).

    ``A_k = mean_i[y_i * |bin_k ∩ {t > l_i + cap}| + (1 - y_i) * |bin_k ∩ {t <= l_i + cap}|]``
    """
    edges = _check_edges(edges)
    scores = np.asarray(scores, dtype=float)
    labels = np.asarray(labels).astype(int)
    if scores.size == 0:
        raise EstimationError("cannot estimate error weights from an empty sample")
    if labels.shape != scores.shape:
        raise EstimationError("labels must align with scores")
    acc = accepted_lengths(scores, edges, cost)
    width = np.diff(edges)
    pos = labels[:, None] == 1
    err = np.where(pos, width[None, :] - acc, acc)
    n = scores.size
    return BinWeights(
        edges=edges,
        error_weight=err.sum(axis=0) / n,
        positive_weight=acc.sum(axis=0) / n,
        group=group,
        n_samples=n,
    )


def compute_positive_weights(scores, edges, cost: CostModel, group=None) -> BinWeights:
    """Per-bin positive-rate mass ``B_k = mean_i |bin_k ∩ {t <= l_i + cap}|``."""
    edges = _check_edges(edges)
    scores = np.asarray(scores, dtype=float)
    if scores.size == 0:
        raise EstimationError(f"group {group!r} has no samples; positive weights undefined")
    acc = accepted_lengths(scores, edges, cost)
    return BinWeights(edges=edges, positive_weight=acc.sum(axis=0) / scores.size, group=group, n_samples=scores.size)


def conditional_positive_weights(scores, labels, edges, cost: CostModel, on_label: int, group=None) -> BinWeights:
    """Positive-rate mass restricted to rows whose true label equals ``on_label``."""
    if on_label not in (0, 1):
        raise EstimationError(f"on_label must be 0 or 1, got {on_label!r}")
    scores = np.asarray(scores, dtype=float)
    labels = np.asarray(labels).astype(int)
    keep = labels == on_label
    if not keep.any():
        raise EstimationError(f"group {group!r} has no samples with label {on_label}")
    return compute_positive_weights(scores[keep], edges, cost, group=group)
