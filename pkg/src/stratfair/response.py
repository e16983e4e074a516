"""Agent best responses and the expected outcome / expected cost of a threshold law."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .score_cost import CostModel

MASS_TOL = 1e-9
WIDTH_RTOL = 1e-9


@dataclass(frozen=True)
class BestResponse:
    new_score: float
    cost_paid: float
    outcome: int


def best_respond(l: float, t: float, cost: CostModel) -> BestResponse:
    """Utility-maximizing move of an agent at score ``l`` facing threshold ``t``.

    The agent climbs to exactly ``t`` when ``t - cap <= l < t`` and stays put
    otherwise.  At ``l == t - cap`` it is indifferent and moves (cost ``1/lam``).
    """
    cap = cost.cap
    if t - cap <= l < t:
        paid = min(float(cost.g(t - l)), 1.0 / cost.lam)
        return BestResponse(float(t), paid, 1)
    return BestResponse(float(l), 0.0, int(l >= t))


def utility(l: float, new_score, t: float, cost: CostModel):
    """Gain minus weighted cost for moving from ``l`` to ``new_score``; -inf for downward moves."""
    new_score = np.asarray(new_score, dtype=float)
    gain = (new_score >= t).astype(float) - float(l >= t)
    u = gain - cost.lam * cost.g(new_score - l)
    return np.where(new_score < l, -np.inf, u)


@dataclass(frozen=True)
class ThresholdDistribution:
    """Threshold law: either a point mass at ``t0`` or a piecewise-constant density.

    ``edges`` has ``K + 1`` strictly increasing entries with equal spacing and
    ``densities`` the ``K`` per-unit densities; total mass is one.
    """

    kind: str
    edges: Optional[np.ndarray] = None
    densities: Optional[np.ndarray] = None
    t0: Optional[float] = None

    def __post_init__(self):
        if self.kind == "dirac":
            if self.t0 is None or not np.isfinite(self.t0):
                raise ValueError("dirac threshold needs a finite t0")
            object.__setattr__(self, "t0", float(self.t0))
            return
        if self.kind != "piecewise":
            raise ValueError(f"unknown threshold kind {self.kind!r}")
        edges = np.asarray(self.edges, dtype=float)
        dens = np.asarray(self.densities, dtype=float)
        if edges.ndim != 1 or edges.size < 2 or dens.shape != (edges.size - 1,):
            raise ValueError("need K+1 edges and K densities")
        widths = np.diff(edges)
        if np.any(widths <= 0):
            raise ValueError("edges must be strictly increasing")
        if not np.allclose(widths, widths[0], rtol=WIDTH_RTOL * 1e3, atol=0):
            raise ValueError("bins must have equal widths")
        if np.any(dens < -1e-12):
            raise ValueError("densities must be non-negative")
        dens = np.maximum(dens, 0.0)
        mass = float(dens @ widths)
        if abs(mass - 1.0) > MASS_TOL:
            raise ValueError(f"density integrates to {mass!r}, expected 1")
        edges.setflags(write=False)
        dens.setflags(write=False)
        object.__setattr__(self, "edges", edges)
        object.__setattr__(self, "densities", dens)

    @classmethod
    def dirac(cls, t0: float) -> "ThresholdDistribution":
        return cls("dirac", t0=t0)

    @classmethod
    def piecewise(cls, edges, densities) -> "ThresholdDistribution":
        return cls("piecewise", edges=edges, densities=densities)

    @classmethod
    def uniform(cls, lower: float, upper: float, bins: int = 1) -> "ThresholdDistribution":
        edges = np.linspace(lower, upper, bins + 1)
        return cls.piecewise(edges, np.full(bins, 1.0 / (upper - lower)))

    @property
    def n_bins(self) -> int:
        return 0 if self.kind == "dirac" else self.densities.size

    @property
    def widths(self) -> np.ndarray:
        return np.diff(self.edges)

    @property
    def max_density(self) -> float:
        return float("inf") if self.kind == "dirac" else float(self.densities.max())

    def cdf(self, z):
        """Probability mass of thresholds ``t <= z``."""
        z = np.asarray(z, dtype=float)
        if self.kind == "dirac":
            return (z >= self.t0).astype(float)
        cum = np.concatenate([[0.0], np.cumsum(self.densities * self.widths)])
        return np.clip(np.interp(z, self.edges, cum, left=0.0, right=cum[-1]), 0.0, 1.0)

    def to_dict(self) -> dict:
        if self.kind == "dirac":
            return {"kind": "dirac", "t0": self.t0}
        return {"kind": "piecewise", "edges": self.edges.tolist(), "densities": self.densities.tolist()}

    @classmethod
    def from_dict(cls, d: dict) -> "ThresholdDistribution":
        if d["kind"] == "dirac":
            return cls.dirac(d["t0"])
        return cls.piecewise(d["edges"], d["densities"])


def _scalar_or_array(out, like):
    return float(out) if np.ndim(like) == 0 else out


def expected_outcome(l, dist: ThresholdDistribution, cost: CostModel):
    """Acceptance probability after best response: the mass of thresholds ``t <= l + cap``."""
    z = np.asarray(l, dtype=float) + cost.cap
    return _scalar_or_array(dist.cdf(z), l)


def expected_brc(l, dist: ThresholdDistribution, cost: CostModel):
    """Expected best-response cost ``E[g(t - l); l <= t <= l + cap]``.

    Piecewise densities are integrated exactly per bin overlap using the
    antiderivative of the power cost.
    """
    larr = np.asarray(l, dtype=float)
    cap = cost.cap
    if dist.kind == "dirac":
        d = dist.t0 - larr
        moves = (dist.t0 - cap <= larr) & (larr < dist.t0)
        out = np.where(moves, np.minimum(cost.g(np.maximum(d, 0.0)), 1.0 / cost.lam), 0.0)
        return _scalar_or_array(out, l)

    flat = np.atleast_1d(larr).ravel()[:, None]
    lo = np.maximum(dist.edges[None, :-1], flat)
    hi = np.minimum(dist.edges[None, 1:], flat + cap)
    live = hi > lo
    p1 = cost.beta + 1.0
    seg = (np.power(np.where(live, hi - flat, 0.0), p1) - np.power(np.where(live, lo - flat, 0.0), p1)) / p1
    out = cost.alpha * (seg * dist.densities[None, :]).sum(axis=1)
    out = np.clip(out, 0.0, 1.0 / cost.lam).reshape(larr.shape)
    return _scalar_or_array(out, l)


_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(32)


def _brc_by_quadrature(l: float, dist: ThresholdDistribution, g: Callable, cap: float) -> float:
    # Generic-cost fallback (Gauss-Legendre per bin overlap); not used for power costs.
    total = 0.0
    for k in range(dist.n_bins):
        a = max(dist.edges[k], l)
        b = min(dist.edges[k + 1], l + cap)
        if b <= a:
            continue
        t = 0.5 * (b - a) * _GL_NODES + 0.5 * (b + a)
        total += dist.densities[k] * 0.5 * (b - a) * float(_GL_WEIGHTS @ g(t - l))
    return total
