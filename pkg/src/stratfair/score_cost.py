"""Score models, power-law cost models and the density caps they induce.

A score model maps a feature vector ``x`` to a scalar score ``l(x)``; the
cost of moving from score ``l`` to ``l' >= l`` is ``alpha * (l' - l) ** beta``
and an agent weighs it by ``lam`` against a unit classification gain.  The
largest gap an agent is willing to close is therefore the *cap*
``(1 / (alpha * lam)) ** (1 / beta)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, Optional

import numpy as np

from .errors import DegenerateScoreModelError, InvalidCostModelError

BOUNDS_WIDEN = 1e-9


@dataclass(frozen=True)
class ScoreBounds:
    lower: float
    upper: float

    def __post_init__(self):
        if not self.lower < self.upper:
            raise ValueError(f"score bounds need lower < upper, got [{self.lower}, {self.upper}]")

    @classmethod
    def from_scores(cls, scores, widen: float = BOUNDS_WIDEN) -> "ScoreBounds":
        """Bounds from observed scores, widened so the extremes sit strictly inside."""
        scores = np.asarray(scores, dtype=float)
        if scores.size == 0:
            raise ValueError("cannot derive score bounds from an empty sample")
        lo, hi = float(scores.min()), float(scores.max())
        return cls(lo - widen, hi + widen)

    def contains(self, scores) -> bool:
        scores = np.asarray(scores, dtype=float)
        return bool(np.all((scores >= self.lower) & (scores <= self.upper)))


@dataclass(frozen=True)
class CostModel:
    """Power cost ``g(d) = alpha * d**beta`` weighted by ``lam`` in the agent utility."""

    lam: float = 1.0
    alpha: float = 1.0
    beta: float = 2.0

    def __post_init__(self):
        for name in ("lam", "alpha", "beta"):
            value = getattr(self, name)
            if not (isinstance(value, (int, float)) and math.isfinite(value)):
                raise InvalidCostModelError(f"{name} must be a finite number, got {value!r}")
        if self.lam <= 0 or self.alpha <= 0:
            raise InvalidCostModelError(
                f"lambda and alpha must be positive (lambda={self.lam}, alpha={self.alpha})"
            )
        if self.beta < 1:
            raise InvalidCostModelError(f"beta must be >= 1, got {self.beta}")

    def g(self, d):
        d = np.asarray(d, dtype=float)
        out = self.alpha * np.power(np.maximum(d, 0.0), self.beta)
        return out if out.ndim else float(out)

    def g_prime(self, d):
        d = np.asarray(d, dtype=float)
        if self.beta == 1:
            out = np.full_like(d, self.alpha)
        else:
            out = self.alpha * self.beta * np.power(np.maximum(d, 0.0), self.beta - 1)
        return out if out.ndim else float(out)

    def g_inverse(self, c):
        c = np.asarray(c, dtype=float)
        out = np.power(np.maximum(c, 0.0) / self.alpha, 1.0 / self.beta)
        return out if out.ndim else float(out)

    @property
    def cap(self) -> float:
        return cap_constant(self)

    @property
    def slope_bound(self) -> float:
        # g' is non-decreasing for beta >= 1, so the max over [0, cap] sits at cap
        return float(self.g_prime(self.cap))

    def to_dict(self) -> dict:
        return {"lambda": self.lam, "alpha": self.alpha, "beta": self.beta}

    @classmethod
    def from_dict(cls, d: dict) -> "CostModel":
        return cls(lam=float(d["lambda"]), alpha=float(d["alpha"]), beta=float(d["beta"]))


def cap_constant(cost: CostModel) -> float:
    """Largest score gap an agent will pay to close: ``g^{-1}(1 / lam)``."""
    if cost.lam <= 0 or cost.alpha <= 0 or cost.beta < 1:
        raise InvalidCostModelError("cost model parameters must be positive with beta >= 1")
    return (1.0 / (cost.alpha * cost.lam)) ** (1.0 / cost.beta)


@dataclass(frozen=True)
class ScoreModel:
    """Either a single raw feature (``coordinate``) or an affine map (``linear``)."""

    variant: str = "coordinate"
    index: int = 0
    weights: tuple = field(default_factory=tuple)
    intercept: float = 0.0

    def __post_init__(self):
        if self.variant not in ("coordinate", "linear"):
            raise ValueError(f"unknown score variant {self.variant!r}")
        if self.variant == "linear":
            object.__setattr__(self, "weights", tuple(float(w) for w in self.weights))
            if not self.weights:
                raise ValueError("linear score model needs at least one weight")

    @classmethod
    def coordinate(cls, index: int = 0) -> "ScoreModel":
        return cls(variant="coordinate", index=int(index))

    @classmethod
    def linear(cls, weights, intercept: float = 0.0) -> "ScoreModel":
        return cls(variant="linear", weights=tuple(np.asarray(weights, dtype=float)), intercept=float(intercept))

    @property
    def gradient_bound(self) -> float:
        if self.variant == "coordinate":
            return 1.0
        return float(np.linalg.norm(np.asarray(self.weights)))

    def __call__(self, features) -> np.ndarray:
        X = np.asarray(features, dtype=float)
        single = X.ndim == 1
        X = np.atleast_2d(X)
        if self.variant == "coordinate":
            out = X[:, self.index]
        else:
            w = np.asarray(self.weights)
            if X.shape[1] != w.size:
                raise ValueError(f"expected {w.size} features, got {X.shape[1]}")
            out = X @ w + self.intercept
        return float(out[0]) if single else out

    def to_dict(self) -> dict:
        if self.variant == "coordinate":
            return {"variant": "coordinate", "index": self.index}
        return {"variant": "linear", "weights": list(self.weights), "intercept": self.intercept}

    @classmethod
    def from_dict(cls, d: dict) -> "ScoreModel":
        if d["variant"] == "coordinate":
            return cls.coordinate(d.get("index", 0))
        if d["variant"] == "linear":
            return cls.linear(d["weights"], d.get("intercept", 0.0))
        raise ValueError(f"unknown score variant {d['variant']!r}")


@dataclass(frozen=True)
class FairnessBudget:
    """Lipschitz budgets for expected cost (``m_c``) and expected outcome (``m_p``)."""

    m_c: Optional[float] = None
    m_p: Optional[float] = None

    def __post_init__(self):
        if self.m_c is None and self.m_p is None:
            raise ValueError("at least one of m_c, m_p must be given")
        for name in ("m_c", "m_p"):
            v = getattr(self, name)
            if v is not None and not v > 0:
                raise ValueError(f"{name} must be positive, got {v}")


@dataclass(frozen=True)
class DensityCaps:
    l_c: Optional[float]
    l_p: Optional[float]

    @property
    def joint(self) -> float:
        return min(v for v in (self.l_c, self.l_p) if v is not None)


def density_cap_individual(budget: FairnessBudget, cost: CostModel, score: ScoreModel) -> DensityCaps:
    """Upper bounds on the threshold density that certify the requested budgets.

    ``l_c = min(lam * m_c / C_l, m_c / (C_l * C_g * cap))`` and ``l_p = m_p / C_l``
    where ``C_l`` is the score gradient bound and ``C_g`` the cost slope bound.
    """
    c_l = score.gradient_bound
    if not c_l > 0:
        raise DegenerateScoreModelError("score model has zero gradient bound; caps are undefined")
    l_c = l_p = None
    if budget.m_c is not None:
        cap = cost.cap
        l_c = min(cost.lam * budget.m_c / c_l, budget.m_c / (c_l * cost.slope_bound * cap))
    if budget.m_p is not None:
        l_p = budget.m_p / c_l
    return DensityCaps(l_c, l_p)


def models_to_json(cost: CostModel, score: ScoreModel) -> dict[str, Any]:
    out = cost.to_dict()
    out["score"] = score.to_dict()
    return out


def models_from_json(d: dict) -> tuple[CostModel, ScoreModel]:
    return CostModel.from_dict(d), ScoreModel.from_dict(d["score"])
