import numpy as np
import pytest

from hmmsubspace.errors import DegenerateStates, OrderTooLarge
from hmmsubspace.estimator import (
    EstimatedSystem,
    estimate_states,
    factorize,
    load_system,
    regress_system,
    subspace_fit,
    true_factors,
)
from hmmsubspace.hmm import simulate
from hmmsubspace.moments import beta_hat, empirical_moments, hankel, theoretical_moments
from hmmsubspace.oracles import state_alignment_error
from hmmsubspace.predictor import riccati_gain, state_path, true_system


@pytest.fixture(scope="module")
def fit_a3():
    from hmmsubspace.hmm import fixture
    y = simulate(fixture("a3c3"), 5000, 9).observations
    return y, subspace_fit(y, 3, 6)


def assert_structure(est):
    n = est.n
    last = np.zeros(n)
    last[-1] = 1
    np.testing.assert_allclose(est.Ahat[-1], last, atol=1e-10)
    np.testing.assert_allclose(est.Chat.sum(axis=0), last, atol=1e-10)
    np.testing.assert_allclose(est.Khat[-1], 0, atol=1e-10)
    np.testing.assert_allclose(est.residuals.sum(axis=0), 0, atol=1e-10)
    np.testing.assert_allclose(est.residuals.sum(axis=1), 0, atol=1e-9)
    assert (est.Xhat[-1] == 1).all()


def test_factorize_theoretical(a1c1):
    f = factorize(beta_hat(theoretical_moments(a1c1, 6)), 2, 6, 2)
    assert f.sigmaDropped <= 1e-10
    np.testing.assert_allclose(f.Ohat.T @ f.Ohat, np.eye(1), atol=1e-10)


def test_factorize_is_best_approximation(a3c3):
    y = simulate(a3c3, 3000, 0).observations
    b = beta_hat(empirical_moments(hankel(y, 3, 4)))
    f = factorize(b, 3, 4, 3)
    U, s, Vt = np.linalg.svd(b)
    np.testing.assert_allclose(f.Ohat @ f.Khat, (U[:, :2] * s[:2]) @ Vt[:2], atol=1e-12)
    assert f.sigmaDropped == pytest.approx(s[2])


def test_factorize_zero_matrix():
    f = factorize(np.zeros((4, 4)), 2, 2, 2)
    assert np.abs(f.Khat).max() == 0
    assert f.sigmaDropped == 0
    np.testing.assert_allclose(f.Ohat.T @ f.Ohat, np.eye(1))


def test_order_too_large():
    with pytest.raises(OrderTooLarge):
        factorize(np.zeros((4, 4)), 4, 2, 2)
    with pytest.raises(OrderTooLarge):
        subspace_fit([0, 1] * 20, 4, 2)


def test_states_from_zero_gain(a1c1):
    h = hankel(simulate(a1c1, 50, 0).observations, 2, 3)
    f = factorize(np.zeros((6, 6)), 2, 3, 2)
    X = estimate_states(f, h, np.array([0.5, 0.5]))
    assert (X[0] == 0).all() and (X[1] == 1).all()


def test_structural_identities(fit_a3):
    _, est = fit_a3
    assert_structure(est)


def test_unit_eigenvalue_with_left_vector(fit_a3):
    _, est = fit_a3
    e = np.zeros(3)
    e[-1] = 1
    np.testing.assert_allclose(e @ est.Ahat, e, atol=1e-10)
    assert np.min(np.abs(np.linalg.eigvals(est.Ahat) - 1)) <= 1e-10


def test_fit_is_deterministic(fit_a3):
    y, est = fit_a3
    again = subspace_fit(y, 3, 6)
    for name in ("Ahat", "Chat", "Khat", "meanY", "Xhat", "residuals"):
        np.testing.assert_array_equal(getattr(est, name), getattr(again, name))


def test_single_state_fit(a3c3):
    y = simulate(a3c3, 2000, 1).observations
    est = subspace_fit(y, 1, 4)
    np.testing.assert_allclose(est.Chat[:, 0], np.bincount(y, minlength=3) / y.size, atol=1e-12)
    assert (est.Khat == 0).all()
    np.testing.assert_allclose(est.Ahat, [[1.0]], atol=1e-12)


def test_regress_requires_enough_samples():
    with pytest.raises(DegenerateStates):
        regress_system(np.ones((3, 2)), np.eye(2))


def test_regress_detects_collinear_states():
    X = np.vstack([np.zeros(50), np.ones(50)])
    Y = np.eye(2)[np.arange(50) % 2].T
    with pytest.raises(DegenerateStates):
        regress_system(X, Y)


def test_serialisation_roundtrip(tmp_path, fit_a3):
    _, est = fit_a3
    p = tmp_path / "sys.json"
    est.save(p)
    back = load_system(p)
    np.testing.assert_array_equal(back.Ahat, est.Ahat)
    np.testing.assert_array_equal(back.Khat, est.Khat)
    assert back.diagnostics["k"] == 6
    assert isinstance(EstimatedSystem.from_dict(est.to_dict()), EstimatedSystem)


def test_diagnostics(fit_a3):
    _, est = fit_a3
    d = est.diagnostics
    assert d["T"] == 5000 and d["k"] == 6
    assert d["sigmaDropped"] < d["sigmaKept"][-1]
    assert d["gram_cond"] < 1e12
    assert d["warnings"] == []


def test_true_factors_match_beta(a1c1):
    gain = riccati_gain(a1c1)
    O, Kc = true_factors(a1c1, gain.K, 20)
    assert np.linalg.norm(beta_hat(theoretical_moments(a1c1, 20)) - O @ Kc, 2) <= 1e-6


def test_true_factors_ranks(bundled):
    gain = riccati_gain(bundled)
    O, Kc = true_factors(bundled, gain.K, 6)
    assert np.linalg.matrix_rank(O, tol=1e-8) == bundled.n
    assert np.linalg.matrix_rank(Kc, tol=1e-8) == bundled.n - 1


def test_uninformative_factors_vanish(uninformative):
    gain = riccati_gain(uninformative)
    _, Kc = true_factors(uninformative, gain.K, 5)
    assert np.abs(Kc).max() <= 1e-12
    assert np.abs(beta_hat(theoretical_moments(uninformative, 5))).max() <= 1e-12


def test_kept_singular_value_bounded_away(a1c1):
    y = simulate(a1c1, 20_000, 2).observations
    d = subspace_fit(y, 2, 16).diagnostics
    assert d["sigmaKept"][0] > 0.3
    assert d["sigmaDropped"] < 0.2 * d["sigmaKept"][0]


def test_states_align_with_true_recursion(a1c1):
    y = simulate(a1c1, 40_000, 0).observations
    k = 20
    est = subspace_fit(y, 2, k)
    truth = state_path(true_system(a1c1), y)[:-1].T  # column t uses y_1..y_t
    assert state_alignment_error(truth, est.Xhat[:-1], skip=k) <= 0.01


def test_markov_parameters_converge(a1c1):
    gain = riccati_gain(a1c1)
    F = a1c1.A - gain.K @ a1c1.C
    y = simulate(a1c1, 40_000, 3).observations
    est = subspace_fit(y, 2, 20)
    Fh = est.Ahat - est.Khat @ est.Chat
    for m in (1, 2):
        for j in range(3):
            true_mp = a1c1.C @ np.linalg.matrix_power(a1c1.A, m - 1) @ np.linalg.matrix_power(F, j) @ gain.K
            est_mp = est.Chat @ np.linalg.matrix_power(est.Ahat, m - 1) @ np.linalg.matrix_power(Fh, j) @ est.Khat
            assert np.abs(true_mp - est_mp).max() <= 0.01
    ev = np.sort(np.linalg.eigvals(Fh).real)
    np.testing.assert_allclose(ev, np.sort(np.linalg.eigvals(F).real), atol=0.05)
