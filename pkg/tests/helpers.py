"""Shared generators for the test suite."""

import numpy as np

from stratfair.lp import LpProblem


def random_lp(rng, n_max=6, rows_max=8, bounded=True):
    """A random LP with at most ``n_max`` variables and ``rows_max`` constraint rows.

    Most instances are feasible by construction (right-hand sides are built
    around a random interior point); about one in ten has its equality
    right-hand side perturbed so that it may be infeasible.
    """
    n = int(rng.integers(1, n_max + 1))
    m_total = int(rng.integers(0, rows_max + 1))
    m_eq = int(rng.integers(0, min(m_total, n) + 1))
    m_ub = m_total - m_eq
    upper = rng.uniform(0.5, 3.0, n) if bounded else np.where(rng.random(n) < 0.5, np.inf, rng.uniform(0.5, 3.0, n))
    x0 = rng.uniform(0, 1, n) * np.where(np.isfinite(upper), upper, 2.0)
    a_eq = rng.normal(size=(m_eq, n)).round(2)
    b_eq = a_eq @ x0
    if m_eq and rng.random() < 0.1:
        b_eq = b_eq + rng.normal(0, 5, m_eq)
    a_ub = rng.normal(size=(m_ub, n)).round(2)
    b_ub = a_ub @ x0 + rng.uniform(0, 1, m_ub)
    c = rng.normal(size=n).round(2)
    return LpProblem(c, a_eq, b_eq, a_ub, b_ub, upper)


# (number, passed, title, detail) per acceptance criterion, printed by conftest.
ACCEPTANCE = []
