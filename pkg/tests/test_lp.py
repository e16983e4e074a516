import json

import numpy as np
import pytest
from helpers import random_lp
from scipy.optimize import linprog

from stratfair.errors import LpDimensionError, OracleTooLargeError
from stratfair.lp import INFEASIBLE, OPTIMAL, UNBOUNDED, LpProblem, brute_force_oracle, solve


def test_cap_binds():
    prob = LpProblem([-1.0, 0.0], a_eq=[[1.0, 1.0]], b_eq=[1.0], upper=[0.6, 1.0])
    for sol in (solve(prob), brute_force_oracle(prob)):
        assert sol.status == OPTIMAL
        np.testing.assert_allclose(sol.x, [0.6, 0.4], atol=1e-12)
        assert sol.objective_value == pytest.approx(-0.6)


def test_degenerate_objective():
    prob = LpProblem([1.0, 1.0, 1.0], a_eq=[[1.0, 1.0, 1.0]], b_eq=[1.0], upper=[1.0, 1.0, 1.0])
    sol = solve(prob)
    assert sol.ok
    assert sol.objective_value == pytest.approx(1.0)
    assert prob.max_violation(sol.x) <= 1e-9
    assert brute_force_oracle(prob).objective_value == pytest.approx(1.0)


def test_contradictory_equalities():
    prob = LpProblem([1.0, 1.0], a_eq=[[1.0, 1.0], [1.0, 1.0]], b_eq=[1.0, 2.0])
    assert solve(prob).status == INFEASIBLE
    assert brute_force_oracle(prob).status == INFEASIBLE


def test_unbounded():
    prob = LpProblem([-1.0, 0.0], a_ub=[[0.0, 1.0]], b_ub=[1.0])
    assert solve(prob).status == UNBOUNDED
    assert brute_force_oracle(prob).status == UNBOUNDED


def test_redundant_rows_and_negative_rhs():
    prob = LpProblem(
        [1.0, 2.0, -1.0],
        a_eq=[[1.0, 1.0, 1.0], [2.0, 2.0, 2.0]],
        b_eq=[1.0, 2.0],
        a_ub=[[-1.0, 0.0, 0.0]],
        b_ub=[-0.25],
        upper=[1.0, 1.0, 0.5],
    )
    sol = solve(prob)
    assert sol.ok
    np.testing.assert_allclose(sol.x, [0.5, 0.0, 0.5], atol=1e-12)
    assert prob.max_violation(sol.x) <= 1e-9


def test_random_matches_oracle_and_highs(rng):
    checked = 0
    for _ in range(150):
        prob = random_lp(rng, n_max=5, rows_max=7, bounded=bool(rng.random() < 0.7))
        ours, oracle = solve(prob), brute_force_oracle(prob)
        ref = linprog(prob.c, A_ub=prob.a_ub if prob.b_ub.size else None, b_ub=prob.b_ub if prob.b_ub.size else None,
                      A_eq=prob.a_eq if prob.b_eq.size else None, b_eq=prob.b_eq if prob.b_eq.size else None,
                      bounds=list(zip(np.zeros(prob.n), [None if not np.isfinite(u) else u for u in prob.upper])),
                      method="highs")
        # HiGHS presolve can report an unbounded LP as infeasible, so the
        # status comes from the oracle and HiGHS only cross-checks optima.
        assert ours.status == oracle.status
        if ref.status == 0:
            assert ours.status == OPTIMAL
        if ours.status == OPTIMAL:
            checked += 1
            assert ours.objective_value == pytest.approx(oracle.objective_value, abs=1e-6)
            assert ours.objective_value == pytest.approx(ref.fun, abs=1e-6)
            assert prob.max_violation(ours.x) <= 1e-7
    assert checked > 100


def test_optimality_spot_check(rng):
    prob = random_lp(np.random.default_rng(7), n_max=6, rows_max=3)
    sol = solve(prob)
    assert sol.ok
    # Random feasible points: convex combinations of the optimum with other vertices.
    others = [solve(LpProblem(rng.normal(size=prob.n), prob.a_eq, prob.b_eq, prob.a_ub, prob.b_ub, prob.upper))
              for _ in range(20)]
    for _ in range(100):
        o = others[rng.integers(len(others))]
        lam = rng.random()
        x = lam * o.x + (1 - lam) * sol.x
        assert prob.max_violation(x) <= 1e-7
        assert prob.c @ x >= sol.objective_value - 1e-7


def test_scaling_equivariance(rng):
    for _ in range(20):
        prob = random_lp(rng, bounded=True)
        sol = solve(prob)
        if not sol.ok:
            continue
        scaled = LpProblem(7.5 * prob.c, prob.a_eq, prob.b_eq, prob.a_ub, prob.b_ub, prob.upper)
        again = solve(scaled)
        assert scaled.c @ sol.x == pytest.approx(again.objective_value, abs=1e-6)


def test_large_box_lp_fast():
    rng = np.random.default_rng(3)
    K = 200
    c = rng.random(K)
    w = np.full(K, 1.0 / K * 2.0)
    prob = LpProblem(c, a_eq=w[None, :], b_eq=[1.0], upper=np.full(K, 1.0))
    sol = solve(prob)
    assert sol.ok
    expected = np.sort(c)[: K // 2].sum()
    assert sol.objective_value == pytest.approx(expected, abs=1e-9)


def test_dimension_errors():
    with pytest.raises(LpDimensionError):
        LpProblem([1.0, 2.0], a_eq=[[1.0]], b_eq=[1.0])
    with pytest.raises(LpDimensionError):
        LpProblem([1.0], a_eq=[[1.0]], b_eq=[1.0, 2.0])
    with pytest.raises(LpDimensionError):
        LpProblem([1.0], upper=[-1.0])
    with pytest.raises(LpDimensionError):
        LpProblem([])


def test_oracle_size_guard():
    with pytest.raises(OracleTooLargeError):
        brute_force_oracle(LpProblem(np.ones(21)))


def test_problem_json_roundtrip():
    prob = LpProblem([1.0, -1.0], a_ub=[[1.0, 1.0]], b_ub=[1.0], upper=[np.inf, 2.0])
    again = LpProblem.from_dict(json.loads(json.dumps(prob.to_dict())))
    np.testing.assert_array_equal(again.upper, prob.upper)
    assert solve(again).objective_value == solve(prob).objective_value
