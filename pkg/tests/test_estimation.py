import numpy as np
import pytest

from stratfair.errors import EstimationError
from stratfair.estimation import (
    ScoredSamples,
    accepted_lengths,
    compute_error_weights,
    compute_positive_weights,
    conditional_positive_weights,
)
from stratfair.score_cost import CostModel

COST = CostModel(1.0, 100.0, 2.0)  # cap 0.1


def mc_weights(scores, labels, edges, cost, draws, rng):
    """Monte Carlo error and acceptance mass per bin with uniform thresholds.

    Returns the estimates and their standard errors.
    """
    raw = np.asarray(scores, dtype=float) + cost.cap
    labels = np.asarray(labels)
    z, pos_z = np.sort(raw), np.sort(raw[labels == 1])
    n, n_pos = z.size, int(labels.sum())
    out_err, out_acc, se_err, se_acc = [], [], [], []
    for lo, hi in zip(edges[:-1], edges[1:]):
        t = rng.uniform(lo, hi, draws)
        acc_all = n - np.searchsorted(z, t, side="left")  # rows with z >= t
        acc_pos = n_pos - np.searchsorted(pos_z, t, side="left")
        err = (n_pos - acc_pos) + (acc_all - acc_pos)
        w = hi - lo
        e_vals, a_vals = w * err / n, w * acc_all / n
        out_err.append(e_vals.mean())
        out_acc.append(a_vals.mean())
        se_err.append(e_vals.std(ddof=1) / np.sqrt(draws))
        se_acc.append(a_vals.std(ddof=1) / np.sqrt(draws))
    return map(np.array, (out_err, out_acc, se_err, se_acc))


def test_single_sample_examples(rng):
    edges = np.array([0.1, 1.0])
    w = compute_error_weights([0.0], [1], edges, COST)
    assert w.error_weight[0] == pytest.approx(0.9)
    w0 = compute_error_weights([0.0], [0], edges, COST)
    assert w0.error_weight[0] == 0.0
    pair = compute_error_weights([0.0, 0.95], [0, 0], edges, COST)
    assert pair.error_weight[0] == pytest.approx(0.45)

    err, _, se, _ = mc_weights([0.0], [1], edges, COST, 100_000, rng)
    assert abs(err[0] - 0.9) <= 3 * se[0] + 1e-12
    err, _, se, _ = mc_weights([0.0, 0.95], [0, 0], edges, COST, 100_000, rng)
    assert abs(err[0] - 0.45) <= 3 * se[0] + 1e-12


def test_positive_weight_examples(rng):
    edges = np.linspace(0.1, 1.0, 4)  # widths 0.3, domain C = 0, D = 1
    top = compute_positive_weights([0.9], edges, COST)
    np.testing.assert_allclose(top.positive_weight, np.diff(edges))
    bottom = compute_positive_weights([0.0], edges, COST)
    np.testing.assert_allclose(bottom.positive_weight, 0.0)
    mid = compute_positive_weights([0.45], edges, COST)  # l + cap = 0.55, centre of bin 2
    np.testing.assert_allclose(mid.positive_weight, [0.3, 0.15, 0.0], atol=1e-12)
    _, acc, _, se = mc_weights([0.45], [0], edges, COST, 200_000, rng)
    assert np.all(np.abs(acc - mid.positive_weight) <= 3 * se + 1e-12)


def test_conditional_weights():
    edges = np.linspace(0.1, 1.0, 5)
    scores, labels = np.array([0.3, 0.7]), np.array([1, 0])
    cond = conditional_positive_weights(scores, labels, edges, COST, 1)
    alone = compute_positive_weights([0.3], edges, COST)
    np.testing.assert_array_equal(cond.positive_weight, alone.positive_weight)
    all_pos = conditional_positive_weights(scores, [1, 1], edges, COST, 1)
    np.testing.assert_array_equal(all_pos.positive_weight, compute_positive_weights(scores, edges, COST).positive_weight)
    with pytest.raises(EstimationError):
        conditional_positive_weights(scores, [0, 0], edges, COST, 1)
    with pytest.raises(EstimationError):
        conditional_positive_weights(scores, labels, edges, COST, 2)


def test_decomposition_and_additivity(rng):
    edges = np.linspace(0.1, 1.0, 7)
    s = rng.uniform(0, 1, 40)
    y = rng.integers(0, 2, 40)
    lengths = accepted_lengths(s, edges, COST)
    width = np.diff(edges)
    err = np.where(y[:, None] == 1, width - lengths, lengths)
    correct = np.where(y[:, None] == 1, lengths, width - lengths)
    np.testing.assert_allclose(err + correct, np.broadcast_to(width, err.shape))

    a = compute_error_weights(s[:15], y[:15], edges, COST)
    b = compute_error_weights(s[15:], y[15:], edges, COST)
    both = compute_error_weights(s, y, edges, COST)
    np.testing.assert_allclose(both.error_weight, (15 * a.error_weight + 25 * b.error_weight) / 40, atol=1e-15)
    np.testing.assert_allclose(both.positive_weight, (15 * a.positive_weight + 25 * b.positive_weight) / 40, atol=1e-15)


def test_ties_count_as_accepted():
    edges = np.array([0.5, 0.6, 0.7])
    lengths = accepted_lengths([0.5], edges, COST)  # l + cap = 0.6 sits on an edge
    np.testing.assert_allclose(lengths, [[0.1, 0.0]])


@pytest.mark.slow
def test_exact_vs_monte_carlo(rng):
    edges = np.linspace(0.1, 1.0, 6)
    s = rng.uniform(0, 1, 30)
    y = rng.integers(0, 2, 30)
    w = compute_error_weights(s, y, edges, COST)
    err, acc, se_e, se_a = mc_weights(s, y, edges, COST, 1_000_000, rng)
    assert np.all(np.abs(err - w.error_weight) <= 3 * se_e + 1e-12)
    assert np.all(np.abs(acc - w.positive_weight) <= 3 * se_a + 1e-12)


def test_errors():
    with pytest.raises(EstimationError):
        compute_error_weights([], [], [0, 1], COST)
    with pytest.raises(EstimationError):
        compute_positive_weights([0.1], [1.0, 0.5], COST)
    with pytest.raises(ValueError):
        ScoredSamples([0.1, 0.2], [1, 2])


def test_samples_subset_and_groups():
    s = ScoredSamples([0.1, 0.2, 0.3], [0, 1, 1], ["b", "a", "b"])
    assert s.group_ids() == ["a", "b"]
    sub = s.subset(s.groups == "b")
    assert len(sub) == 2
    np.testing.assert_array_equal(sub.labels, [0, 1])
