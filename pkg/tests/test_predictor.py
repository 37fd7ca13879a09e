import itertools

import numpy as np
import pytest

from hmmsubspace.errors import ConditionCViolated, NoConvergence, ZeroLikelihood
from hmmsubspace.estimator import subspace_fit
from hmmsubspace.hmm import simulate, stationary_info, validate_model
from hmmsubspace.moments import theoretical_moments
from hmmsubspace.oracles import direct_sum_state, path_sum_predict
from hmmsubspace.predictor import (
    LinearSystem,
    absorb,
    absorb_all,
    filter_path,
    filter_posterior,
    finite_horizon_predict,
    initial_state,
    innovation_covariance,
    l1_distance,
    linear_predict,
    linear_predict_path,
    optimal_predict,
    optimal_predict_path,
    riccati_gain,
    true_system,
)


def test_uninformative_gain(uninformative):
    g = riccati_gain(uninformative)
    assert np.abs(g.K).max() <= 1e-12
    np.testing.assert_allclose(g.V, stationary_info(uninformative).S, atol=1e-12)


def test_gain_invariants(bundled):
    g = riccati_gain(bundled)
    n = bundled.n
    assert np.abs(g.K.sum(axis=0)).max() <= 1e-9
    F = bundled.A - g.K @ bundled.C
    np.testing.assert_allclose(F @ g.gamma, g.gamma, atol=1e-8)
    assert g.gamma.sum() == pytest.approx(1.0)
    assert np.abs(np.linalg.eigvals(g.J)).max() < 1
    np.testing.assert_allclose(g.V, g.V.T, atol=1e-14)
    assert np.linalg.eigvalsh(g.V).min() >= -1e-12
    np.testing.assert_allclose(g.V @ np.ones(n), 0, atol=1e-8)
    assert g.residual < 1e-12


def test_two_state_gain_value(a1c1):
    g = riccati_gain(a1c1)
    np.testing.assert_allclose(g.K, 0.2439 * np.array([[1, -1], [-1, 1]]), atol=1e-4)


def test_condition_c_violation():
    # deterministic emission makes R vanish entirely
    m = validate_model([[0.9, 0.1], [0.1, 0.9]], np.eye(2))
    with pytest.raises(ConditionCViolated):
        riccati_gain(m)


def test_no_convergence(a2c2):
    with pytest.raises(NoConvergence):
        riccati_gain(a2c2, max_iter=2)


def test_innovation_covariance_monte_carlo(a1c1):
    g = riccati_gain(a1c1)
    y = simulate(a1c1, 100_000, 21).observations
    pred = linear_predict_path(true_system(a1c1, g), y[:-1])
    eps = np.eye(2)[y] - pred
    sample = eps[100:].T @ eps[100:] / (eps.shape[0] - 100)
    assert np.abs(sample - innovation_covariance(a1c1, g)).max() <= 0.01


def test_zero_gain_state_is_constant():
    sys = LinearSystem(np.eye(2) * 0.5, np.eye(2), np.zeros((2, 2)), np.array([0.5, 0.5]), affine=False)
    s = absorb_all(initial_state(sys), [0, 1, 1, 0])
    np.testing.assert_array_equal(s.xbar, 0)
    assert s.history_len == 4


def test_state_stays_bounded(a3c3):
    y = simulate(a3c3, 5000, 2).observations
    sys = true_system(a3c3)
    s = initial_state(sys)
    worst = 0.0
    for sym in y:
        s = absorb(s, int(sym))
        worst = max(worst, np.abs(s.xbar).max())
    assert worst < 1.0
    assert abs(s.xbar.sum()) <= 1e-10


def test_recursion_equals_direct_sum(a1c1):
    sys = true_system(a1c1)
    y = simulate(a1c1, 200, 8).observations
    np.testing.assert_allclose(absorb_all(initial_state(sys), y).xbar, direct_sum_state(sys, y, 200), atol=1e-8)


def test_empty_history_gives_mean(bundled):
    sys = true_system(bundled)
    np.testing.assert_allclose(linear_predict(initial_state(sys)), stationary_info(bundled).meanY, atol=1e-15)


def test_long_horizon_returns_to_mean(a1c1):
    s = absorb_all(initial_state(true_system(a1c1)), [0, 0, 0, 0, 1, 0])
    np.testing.assert_allclose(linear_predict(s, 200), [0.5, 0.5], atol=1e-8)


def test_estimated_predictions_sum_to_one(a3c3):
    est = subspace_fit(simulate(a3c3, 5000, 0).observations, 3, 6)
    sys = est.linear_system()
    rng = np.random.default_rng(0)
    y = rng.integers(0, 3, size=10_000)
    for m in (1, 2, 5):
        P = linear_predict_path(sys, y, m)
        assert np.abs(P.sum(axis=1) - 1).max() <= 1e-12
    for _ in range(50):
        h = rng.integers(0, 3, size=rng.integers(0, 30))
        assert abs(linear_predict(absorb_all(initial_state(sys), h), 3).sum() - 1) <= 1e-12


def test_affine_state_keeps_constant(a1c1):
    est = subspace_fit(simulate(a1c1, 3000, 1).observations, 2, 5)
    s = absorb_all(initial_state(est.linear_system()), [0, 1, 1, 0, 1])
    assert s.xbar[-1] == 1.0


@pytest.mark.parametrize("system_kind", ["true", "estimated"])
def test_path_matches_recursive_predictor(a3c3, system_kind):
    if system_kind == "true":
        sys = true_system(a3c3)
    else:
        sys = subspace_fit(simulate(a3c3, 4000, 5).observations, 3, 5).linear_system()
    y = simulate(a3c3, 40, 6).observations
    for m in (1, 3):
        P = linear_predict_path(sys, y, m)
        for t in (0, 1, 17, 40):
            np.testing.assert_allclose(P[t], linear_predict(absorb_all(initial_state(sys), y[:t]), m), atol=1e-13)


def test_filter_empty_history(a3c3):
    np.testing.assert_allclose(filter_posterior(a3c3, []), stationary_info(a3c3).pi)


def test_filter_with_revealing_emissions():
    m = validate_model([[0.9, 0.1], [0.1, 0.9]], np.eye(2))
    np.testing.assert_allclose(filter_posterior(m, [1, 1, 0]), [0.9, 0.1], atol=1e-15)


def test_filter_uninformative(uninformative):
    np.testing.assert_allclose(filter_posterior(uninformative, [0, 1, 1, 1, 0]), [0.5, 0.5], atol=1e-15)
    np.testing.assert_allclose(optimal_predict(uninformative, [1, 1], 4), [0.3, 0.7], atol=1e-15)


def test_filter_zero_likelihood():
    # symbol 1 is never emitted
    m = validate_model([[0.5, 0.5], [0.5, 0.5]], [[1, 1], [0, 0]])
    with pytest.raises(ZeroLikelihood):
        filter_posterior(m, [1])
    with pytest.raises(ZeroLikelihood):
        filter_path(m, [0, 1])


def test_optimal_empty_history(bundled):
    np.testing.assert_allclose(optimal_predict(bundled, []), bundled.C @ stationary_info(bundled).pi)


def test_optimal_matches_path_sum_one_symbol(a1c1):
    np.testing.assert_allclose(optimal_predict(a1c1, [0]), path_sum_predict(a1c1, [0]), atol=1e-12)


@pytest.mark.parametrize("length", [0, 1, 2, 3])
def test_optimal_matches_path_sum(a3c3, length):
    for h in itertools.product(range(3), repeat=length):
        for m in (1, 2):
            np.testing.assert_allclose(optimal_predict(a3c3, h, m), path_sum_predict(a3c3, h, m), atol=1e-12)


def test_optimal_path_matches_pointwise(a2c2):
    y = simulate(a2c2, 30, 1).observations
    P = optimal_predict_path(a2c2, y, 2)
    for t in (0, 5, 30):
        np.testing.assert_allclose(P[t], optimal_predict(a2c2, y[:t], 2), atol=1e-14)


def test_finite_horizon_matches_linear_predictor(a1c1):
    mom = theoretical_moments(a1c1, 25)
    sys = true_system(a1c1)
    rng = np.random.default_rng(1)
    for _ in range(20):
        window = rng.integers(0, 2, size=25)
        stacked = finite_horizon_predict(mom, window)
        state = absorb_all(initial_state(sys), window)
        for m in (1, 2, 3):
            block = stacked[2 * (m - 1): 2 * m] + mom.meanY
            np.testing.assert_allclose(block, linear_predict(state, m), atol=1e-6)


def test_finite_horizon_window_length(a1c1):
    with pytest.raises(ValueError):
        finite_horizon_predict(theoretical_moments(a1c1, 3), [0, 1])


def test_finite_horizon_uninformative(uninformative):
    mom = theoretical_moments(uninformative, 4)
    np.testing.assert_allclose(finite_horizon_predict(mom, [0, 1, 1, 0]), 0, atol=1e-12)


def test_l1_distance():
    assert l1_distance([0.3, 0.7], [0.3, 0.7]) == 0
    assert l1_distance([1, 0], [0, 1]) == 2
    assert l1_distance([0.6, 0.4], [0.5, 0.5]) == pytest.approx(0.2)
    with pytest.raises(ValueError):
        l1_distance([1, 0], [1, 0, 0])


def test_optimal_beats_linear_in_mean_square(a1c1):
    y = simulate(a1c1, 20_000, 4).observations
    onehot = np.eye(2)[y]
    lin = linear_predict_path(true_system(a1c1), y[:-1])
    opt = optimal_predict_path(a1c1, y[:-1])
    assert ((onehot - opt) ** 2).sum(axis=1).mean() <= ((onehot - lin) ** 2).sum(axis=1).mean()


def test_estimated_predictor_approaches_true(a1c1):
    truth = true_system(a1c1)
    rng = np.random.default_rng(5)
    histories = rng.integers(0, 2, size=(1000, 60))
    worst = []
    for T in (2_000, 40_000):
        sys = subspace_fit(simulate(a1c1, T, 7).observations, 2, 10).linear_system()
        worst.append(max(
            l1_distance(linear_predict(absorb_all(initial_state(sys), h)),
                        linear_predict(absorb_all(initial_state(truth), h)))
            for h in histories
        ))
    assert worst[1] < worst[0]
