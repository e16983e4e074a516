"""Dense bounded-variable primal simplex for small linear programs.

Solves::

    minimize    c @ x
    subject to  A_eq @ x == b_eq
                A_ub @ x <= b_ub
                0 <= x <= upper

Upper bounds are handled natively: a nonbasic variable sits at either its
lower or its upper bound and may flip between them without a basis change.
Entering and leaving variables follow Bland's smallest-index rule, so the
method terminates on degenerate problems.  Phase one minimizes the sum of
artificial variables; phase two optimizes the true objective from the
resulting basis.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from .errors import LpDimensionError, OracleTooLargeError

PIVOT_TOL = 1e-10
FEAS_TOL = 1e-7
OPT_TOL = 1e-10
MAX_ITER = 200_000

OPTIMAL = "optimal"
INFEASIBLE = "infeasible"
UNBOUNDED = "unbounded"


def _as_matrix(a, n: int, name: str) -> np.ndarray:
    if a is None:
        return np.zeros((0, n))
    a = np.asarray(a, dtype=float)
    if a.size == 0:
        return np.zeros((0, n))
    a = np.atleast_2d(a)
    if a.shape[1] != n:
        raise LpDimensionError(f"{name} has {a.shape[1]} columns, expected {n}")
    return a


def _as_vector(b, m: int, name: str) -> np.ndarray:
    if b is None:
        b = np.zeros(0)
    b = np.asarray(b, dtype=float).ravel()
    if b.size != m:
        raise LpDimensionError(f"{name} has length {b.size}, expected {m}")
    return b


@dataclass(frozen=True)
class LpProblem:
    c: np.ndarray
    a_eq: np.ndarray = None
    b_eq: np.ndarray = None
    a_ub: np.ndarray = None
    b_ub: np.ndarray = None
    upper: np.ndarray = None

    def __post_init__(self):
        c = np.asarray(self.c, dtype=float).ravel()
        n = c.size
        if n == 0:
            raise LpDimensionError("problem has no variables")
        a_eq = _as_matrix(self.a_eq, n, "a_eq")
        a_ub = _as_matrix(self.a_ub, n, "a_ub")
        b_eq = _as_vector(self.b_eq, a_eq.shape[0], "b_eq")
        b_ub = _as_vector(self.b_ub, a_ub.shape[0], "b_ub")
        upper = np.full(n, np.inf) if self.upper is None else np.asarray(self.upper, dtype=float).ravel()
        if upper.size != n:
            raise LpDimensionError(f"upper has length {upper.size}, expected {n}")
        for name, arr in (("c", c), ("a_eq", a_eq), ("b_eq", b_eq), ("a_ub", a_ub), ("b_ub", b_ub)):
            if not np.all(np.isfinite(arr)):
                raise LpDimensionError(f"{name} has non-finite entries")
        if np.any(np.isnan(upper)) or np.any(upper < 0):
            raise LpDimensionError("upper bounds must be >= 0")
        for name, arr in (("c", c), ("a_eq", a_eq), ("b_eq", b_eq), ("a_ub", a_ub), ("b_ub", b_ub), ("upper", upper)):
            object.__setattr__(self, name, arr)

    @property
    def n(self) -> int:
        return self.c.size

    def to_dict(self) -> dict:
        def finite(v):
            return [None if not np.isfinite(x) else float(x) for x in v]

        return {
            "c": self.c.tolist(),
            "a_eq": self.a_eq.tolist(),
            "b_eq": self.b_eq.tolist(),
            "a_ub": self.a_ub.tolist(),
            "b_ub": self.b_ub.tolist(),
            "upper": finite(self.upper),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "LpProblem":
        upper = [np.inf if u is None else u for u in d["upper"]]
        return cls(d["c"], d["a_eq"], d["b_eq"], d["a_ub"], d["b_ub"], upper)

    def max_violation(self, x) -> float:
        """Largest constraint violation of ``x`` (0 when feasible)."""
        x = np.asarray(x, dtype=float)
        v = [0.0]
        if self.b_eq.size:
            v.append(np.max(np.abs(self.a_eq @ x - self.b_eq)))
        if self.b_ub.size:
            v.append(np.max(self.a_ub @ x - self.b_ub))
        v.append(np.max(-x))
        v.append(np.max(x - self.upper))
        return float(max(v))


@dataclass(frozen=True)
class LpSolution:
    x: np.ndarray
    objective_value: float
    status: str
    iterations: int = field(default=0, compare=False)

    @property
    def ok(self) -> bool:
        return self.status == OPTIMAL


class _Tableau:
    """Bookkeeping for the bounded simplex on ``A x = b, 0 <= x <= ub``."""

    def __init__(self, A, b, ub, basis):
        self.A = A
        self.b = b
        self.ub = ub
        self.basis = list(basis)
        self.at_upper = np.zeros(A.shape[1], dtype=bool)
        self.iterations = 0

    def nonbasic_values(self) -> np.ndarray:
        x = np.where(self.at_upper, self.ub, 0.0)
        x[self.basis] = 0.0
        return x

    def point(self) -> np.ndarray:
        x = self.nonbasic_values()
        B = self.A[:, self.basis]
        x[self.basis] = np.linalg.solve(B, self.b - self.A @ x)
        return x

    def run(self, cost, allowed) -> str:
        A, ub = self.A, self.ub
        m = A.shape[0]
        while True:
            self.iterations += 1
            if self.iterations > MAX_ITER:
                raise RuntimeError("simplex iteration limit exceeded")
            B = A[:, self.basis]
            x = self.point()
            xb = x[self.basis]
            y = np.linalg.solve(B.T, cost[self.basis])
            d = cost - A.T @ y
            nonbasic = np.ones(A.shape[1], dtype=bool)
            nonbasic[self.basis] = False
            improving = nonbasic & allowed & ((~self.at_upper & (d < -OPT_TOL)) | (self.at_upper & (d > OPT_TOL)))
            candidates = np.flatnonzero(improving)
            if candidates.size == 0:
                return OPTIMAL
            j = int(candidates[0])
            sigma = -1.0 if self.at_upper[j] else 1.0
            w = np.linalg.solve(B, A[:, j]) * sigma

            theta = ub[j]
            leave = -1
            leave_to_upper = False
            for r in range(m):
                wr = w[r]
                bvar = self.basis[r]
                if wr > PIVOT_TOL:
                    t = max(xb[r], 0.0) / wr
                    to_upper = False
                elif wr < -PIVOT_TOL and np.isfinite(ub[bvar]):
                    t = max(ub[bvar] - xb[r], 0.0) / -wr
                    to_upper = True
                else:
                    continue
                if t < theta - 1e-12 or (
                    leave >= 0 and abs(t - theta) <= 1e-12 and bvar < self.basis[leave]
                ):
                    theta, leave, leave_to_upper = t, r, to_upper
            if not np.isfinite(theta):
                return UNBOUNDED
            if leave < 0:
                self.at_upper[j] = not self.at_upper[j]
                continue
            out = self.basis[leave]
            self.basis[leave] = j
            self.at_upper[j] = False
            self.at_upper[out] = leave_to_upper


def solve(problem: LpProblem) -> LpSolution:
    """Solve ``problem``; infeasible and unbounded outcomes come back as a status."""
    n = problem.n
    m_eq, m_ub = problem.b_eq.size, problem.b_ub.size
    m = m_eq + m_ub
    c = problem.c

    if m == 0:
        if np.any((c < 0) & ~np.isfinite(problem.upper)):
            return LpSolution(np.zeros(n), -np.inf, UNBOUNDED)
        x = np.where(c < 0, problem.upper, 0.0)
        return LpSolution(x, float(c @ x), OPTIMAL)

    A = np.zeros((m, n + m_ub + m))
    A[:m_eq, :n] = problem.a_eq
    A[m_eq:, :n] = problem.a_ub
    A[m_eq:, n : n + m_ub] = np.eye(m_ub)
    b = np.concatenate([problem.b_eq, problem.b_ub])
    flip = b < 0
    A[flip] *= -1.0
    b = np.where(flip, -b, b)
    art = np.arange(n + m_ub, n + m_ub + m)
    A[:, art] = np.eye(m)
    ub = np.concatenate([problem.upper, np.full(m_ub, np.inf), np.full(m, np.inf)])

    tab = _Tableau(A, b, ub, art)
    phase1_cost = np.zeros(A.shape[1])
    phase1_cost[art] = 1.0
    all_vars = np.ones(A.shape[1], dtype=bool)
    tab.run(phase1_cost, all_vars)
    x = tab.point()
    scale = max(1.0, float(np.abs(b).max()))
    if x[art].sum() > FEAS_TOL * scale:
        return LpSolution(np.zeros(n), float("nan"), INFEASIBLE, tab.iterations)

    is_art = np.zeros(A.shape[1], dtype=bool)
    is_art[art] = True
    for r in range(m):
        if not is_art[tab.basis[r]]:
            continue
        row = np.linalg.solve(A[:, tab.basis].T, np.eye(m)[r]) @ A
        nonbasic = ~is_art
        nonbasic[tab.basis] = False
        cand = np.flatnonzero(nonbasic & (np.abs(row) > 1e-9))
        if cand.size:
            j = int(cand[0])
            tab.basis[r] = j
            tab.at_upper[j] = False
    # Artificials left in the basis belong to redundant rows; pin them at zero.
    tab.ub = ub.copy()
    tab.ub[art] = 0.0
    tab.at_upper[art] = False

    phase2_cost = np.zeros(A.shape[1])
    phase2_cost[:n] = c
    status = tab.run(phase2_cost, ~is_art)
    if status == UNBOUNDED:
        return LpSolution(np.zeros(n), -np.inf, UNBOUNDED, tab.iterations)
    x = tab.point()[:n]
    x = np.clip(x, 0.0, problem.upper)
    return LpSolution(x, float(c @ x), OPTIMAL, tab.iterations)


ORACLE_MAX_SIZE = 20


def _independent_rows(a: np.ndarray, tol: float = 1e-10) -> list[int]:
    keep: list[int] = []
    for i in range(a.shape[0]):
        trial = a[keep + [i]]
        if np.linalg.matrix_rank(trial, tol=tol) == len(keep) + 1:
            keep.append(i)
    return keep


def _vertex_optimum(problem: LpProblem, box: float):
    n = problem.n
    upper = np.where(np.isfinite(problem.upper), problem.upper, box)
    rows = [problem.a_ub, -np.eye(n), np.eye(n)]
    rhs = [problem.b_ub, np.zeros(n), upper]
    G = np.vstack(rows)
    h = np.concatenate(rhs)
    eq_keep = _independent_rows(problem.a_eq) if problem.b_eq.size else []
    E, e = problem.a_eq[eq_keep], problem.b_eq[eq_keep]
    k = n - len(eq_keep)
    best_val, best_x = np.inf, None
    if k < 0:
        return best_val, best_x
    combos = list(itertools.combinations(range(G.shape[0]), k))
    subsets = np.array(combos, dtype=int) if k else np.zeros((1, 0), dtype=int)
    M = np.concatenate([np.broadcast_to(E, (len(subsets),) + E.shape), G[subsets]], axis=1)
    rhs_all = np.concatenate([np.broadcast_to(e, (len(subsets), e.size)), h[subsets]], axis=1)
    dets = np.abs(np.linalg.det(M))
    good = dets > 1e-9
    if not good.any():
        return best_val, best_x
    xs = np.linalg.solve(M[good], rhs_all[good][..., None])[..., 0]
    viol = np.zeros(len(xs))
    if E.size:
        viol = np.maximum(viol, np.abs(xs @ problem.a_eq.T - problem.b_eq).max(axis=1))
    viol = np.maximum(viol, (xs @ G.T - h).max(axis=1))
    # Tolerance relative to each vertex's magnitude, not to the artificial box.
    coef = max(1.0, float(np.abs(G).max(initial=0.0)), float(np.abs(E).max(initial=0.0)))
    feasible = viol <= 1e-9 * coef * (1.0 + np.abs(xs).max(axis=1))
    if not feasible.any():
        return best_val, best_x
    vals = xs[feasible] @ problem.c
    i = int(np.argmin(vals))
    return float(vals[i]), xs[feasible][i]


def _has_descent_ray(problem: LpProblem) -> bool:
    # A feasible LP is unbounded iff some direction d >= 0 with d_i = 0 on
    # finitely bounded variables, A_eq d = 0 and A_ub d <= 0 has c @ d < 0.
    # Normalizing sum(d) = 1 makes the direction set a polytope, enumerated
    # with the same vertex search.
    free = np.flatnonzero(~np.isfinite(problem.upper))
    if free.size == 0:
        return False
    k = free.size
    a_eq = np.vstack([problem.a_eq[:, free], np.ones((1, k))])
    b_eq = np.concatenate([np.zeros(problem.b_eq.size), [1.0]])
    cone = LpProblem(problem.c[free], a_eq, b_eq, problem.a_ub[:, free], np.zeros(problem.b_ub.size), np.ones(k))
    val, d = _vertex_optimum(cone, 1.0)
    return d is not None and val < -1e-9


def brute_force_oracle(problem: LpProblem) -> LpSolution:
    """Exact optimum by enumerating every basic solution; for testing tiny problems only."""
    n = problem.n
    size = n + problem.b_eq.size + problem.b_ub.size
    if size > ORACLE_MAX_SIZE:
        raise OracleTooLargeError(f"oracle limited to rows + variables <= {ORACLE_MAX_SIZE}, got {size}")
    scale = 1.0 + float(np.abs(np.concatenate([problem.b_eq, problem.b_ub, [0.0]])).max())
    finite_u = problem.upper[np.isfinite(problem.upper)]
    if finite_u.size:
        scale = max(scale, float(finite_u.max()))
    box = 1e6 * scale
    val, x = _vertex_optimum(problem, box)
    if x is None:
        return LpSolution(np.zeros(n), float("nan"), INFEASIBLE)
    if _has_descent_ray(problem):
        return LpSolution(np.zeros(n), -np.inf, UNBOUNDED)
    return LpSolution(x, val, OPTIMAL)
