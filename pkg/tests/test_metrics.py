import math

import numpy as np
import pytest

from stratfair.metrics import FairnessReport, disparity, if_ratio, macro_f1
from stratfair.response import ThresholdDistribution, expected_brc, expected_outcome
from stratfair.score_cost import CostModel


def confusion_f1(pred, y):
    """Independent tally: per-class precision/recall, then harmonic means."""
    out = []
    for cls in (0, 1):
        tp = sum(1 for p, t in zip(pred, y) if p == cls and t == cls)
        pp = sum(1 for p in pred if p == cls)
        ap = sum(1 for t in y if t == cls)
        if tp == 0:
            out.append(0.0)
            continue
        prec, rec = tp / pp, tp / ap
        out.append(2 * prec * rec / (prec + rec))
    return sum(out) / 2


def test_macro_f1_examples():
    assert macro_f1([1, 0, 1, 0], [1, 0, 1, 0]) == 1.0
    # tp = 2, fp = 2, fn = 0 gives F1 = 2/3 for class 1; class 0 is never predicted.
    assert confusion_f1([1, 1, 1, 1], [1, 1, 0, 0]) == pytest.approx(1 / 3)
    assert macro_f1([1, 1, 1, 1], [1, 1, 0, 0]) == pytest.approx(1 / 3)
    # One rejected negative lifts class 1 to F1 = 0.8.
    assert macro_f1([1, 1, 1, 0], [1, 1, 0, 0]) == pytest.approx((0.8 + 2 / 3) / 2)
    with pytest.warns(UserWarning):
        assert macro_f1([1, 1, 1], [1, 1, 1]) == 0.5


def test_macro_f1_matches_tally(rng):
    for _ in range(50):
        n = int(rng.integers(5, 40))
        pred, y = rng.integers(0, 2, n), rng.integers(0, 2, n)
        if len(set(y)) < 2 or len(set(pred)) < 2:
            continue
        assert macro_f1(pred, y) == pytest.approx(confusion_f1(pred.tolist(), y.tolist()))


def test_macro_f1_errors():
    with pytest.raises(ValueError):
        macro_f1([], [])
    with pytest.raises(ValueError):
        macro_f1([1, 0], [1])


def brute_if(g, X):
    best = 0.0
    for i in range(len(g)):
        for j in range(i + 1, len(g)):
            d = np.linalg.norm(X[i] - X[j])
            if d == 0:
                if g[i] != g[j]:
                    return math.inf
                continue
            best = max(best, abs(g[i] - g[j]) / d)
    return best


def test_if_ratio_examples():
    X = np.random.default_rng(0).normal(size=(10, 2))
    assert if_ratio(np.full(10, 0.3), X) == 0.0
    assert if_ratio([0.0, 1.0], [[0.0], [0.5]]) == pytest.approx(2.0)
    assert if_ratio([0.0, 1.0], [[1.0, 1.0], [1.0, 1.0]]) == math.inf
    assert if_ratio([0.2, 0.2, 0.4], [[1.0], [1.0], [2.0]]) == pytest.approx(0.2)


def test_if_ratio_matches_brute_force(rng):
    g = rng.random(300)
    X = rng.normal(size=(300, 3))
    assert if_ratio(g, X, block=37) == pytest.approx(brute_if(g, X), rel=1e-12)


def test_if_ratio_scale_covariant(rng):
    g, X = rng.random(100), rng.normal(size=(100, 2))
    assert if_ratio(g, 4.0 * X) == pytest.approx(if_ratio(g, X) / 4.0, rel=1e-12)


def test_if_ratio_subsample(rng):
    g, X = rng.random(500), rng.normal(size=(500, 2))
    sub = if_ratio(g, X, max_rows=100, seed=3)
    assert sub <= if_ratio(g, X) + 1e-12
    assert sub == if_ratio(g, X, max_rows=100, seed=3)


def test_if_ratio_equals_cap_on_dense_grid():
    cost = CostModel(1.0, 100.0, 2.0)
    for L in (1.0, 0.5, 0.25):
        width = 1.0 / L
        dist = ThresholdDistribution.uniform(10.0, 10.0 + width, 4)
        scores = np.linspace(0.0, 20.0, 4001)
        gam = expected_outcome(scores, dist, cost)
        X = np.column_stack([scores, np.zeros_like(scores)])
        assert if_ratio(gam, X) == pytest.approx(L, abs=1e-9)


def test_lipschitz_bounds_at_feature_level(rng):
    cost = CostModel(2.0, 5.0, 2.0)
    w = np.array([0.6, -0.8, 0.3])
    X = rng.normal(size=(400, 3))
    s = X @ w
    dens = rng.random(12) + 0.1
    edges = np.linspace(s.min() + cost.cap, s.max(), 13)
    dist = ThresholdDistribution.piecewise(edges, dens / (dens @ np.diff(edges)))
    c_l = np.linalg.norm(w)
    pmax = dist.max_density
    assert if_ratio(expected_outcome(s, dist, cost), X) <= pmax * c_l + 1e-9
    bound = max(pmax / cost.lam, pmax * cost.slope_bound * cost.cap) * c_l
    assert if_ratio(expected_brc(s, dist, cost), X) <= bound + 1e-9


def test_dirac_straddling_pair():
    cost = CostModel(1.0, 100.0, 2.0)
    eps = 1e-4
    t0 = 0.5
    s = np.array([t0 - cost.cap - eps, t0 - cost.cap, 0.2, 0.9])
    dist = ThresholdDistribution.dirac(t0)
    assert if_ratio(expected_outcome(s, dist, cost), s) >= 1 / eps * (1 - 1e-6)


def test_disparity_examples(rng):
    groups = np.array([0, 0, 0, 0, 1, 1, 1, 1])
    labels = np.array([1, 1, 0, 0, 1, 1, 0, 0])
    preds = np.array([1, 0, 1, 0, 1, 1, 1, 0])
    # Hand tally: group 0 accepts 2/4, group 1 accepts 3/4.
    # Positives: group 0 accepts 1/2, group 1 accepts 2/2.  Negatives: 1/2 vs 1/2.
    assert disparity(preds, groups, mode="sdp") == pytest.approx(0.25)
    assert disparity(preds, groups, labels, "eodp") == pytest.approx(0.5)
    assert disparity(preds, groups, labels, "eddp") == pytest.approx(0.5)
    assert disparity(np.repeat([0, 1], 4), groups, mode="sdp") == 1.0


def test_disparity_symmetric_groups(rng):
    n = 100_000
    groups = rng.integers(0, 2, n)
    preds = (rng.random(n) < 0.3).astype(int)
    gap = disparity(preds, groups)
    assert gap <= 3 * np.sqrt(2 * 0.3 * 0.7 / (n / 2))


def test_disparity_errors():
    with pytest.raises(ValueError, match="exactly two"):
        disparity([1, 0, 1], [0, 1, 2])
    with pytest.raises(ValueError, match="label=1"):
        disparity([1, 0, 1, 0], [0, 0, 1, 1], [1, 1, 0, 0], "eodp")
    with pytest.raises(ValueError):
        disparity([1, 0], [0, 1], mode="xyz")


def test_report_mean_std():
    rep = FairnessReport()
    rep.add({"f1_macro": 0.8, "if_ratio_outcome": 1.0})
    rep.add({"f1_macro": 0.9, "if_ratio_outcome": 1.0})
    assert rep.f1_macro == pytest.approx(0.85)
    assert rep.std("f1_macro") == pytest.approx(0.05)
    assert rep.std("if_ratio_outcome") == 0.0
    d = rep.to_dict()
    assert len(d["per_seed"]) == 2 and math.isnan(d["mean"]["s_dp"])
