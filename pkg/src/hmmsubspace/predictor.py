"""m-step predictive distributions for finite-alphabet HMMs.

Three predictors are provided:

* the optimal *linear* predictor of the true system, driven by the Kalman
  gain of the innovation representation;
* the same recursion run with an estimated system ``(Ahat, Chat, Khat)``,
  whose state carries a constant last coordinate;
* the exact conditional distribution from the normalised forward filter.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import ConditionCViolated, NoConvergence, ZeroLikelihood
from .hmm import HmmModel, stationary_info
from .linalg import structured_pinv
from .moments import MomentSet, beta_hat


@dataclass(frozen=True)
class GainSolution:
    K: np.ndarray
    V: np.ndarray
    gamma: np.ndarray
    J: np.ndarray
    iterations: int
    residual: float


def innovation_covariance(model: HmmModel, gain: GainSolution) -> np.ndarray:
    """E[eps eps^T] = R + C V C^T."""
    R = stationary_info(model).R
    return R + model.C @ gain.V @ model.C.T


def riccati_gain(model: HmmModel, tol: float = 1e-12, max_iter: int = 100_000) -> GainSolution:
    """Kalman gain of the innovation form by fixed-point Riccati iteration.

    Iterates ``V <- A V A^T + Q - A V C^T (R + C V C^T)^+ C V A^T`` from
    ``V = S`` with ``Q = diag(pi) - A diag(pi) A^T``, then sets
    ``K = A V C^T (R + C V C^T)^+``.  The pseudo-inverse uses the known
    kernel ``1_ell`` of the innovation covariance.
    """
    A, C = model.A, model.C
    info = stationary_info(model)
    ell = model.ell
    R_eigs = np.linalg.eigvalsh(info.R)
    if R_eigs[1] < 1e-10:
        raise ConditionCViolated(
            f"second-smallest eigenvalue of R is {R_eigs[1]:.3e}; zero eigenvalue is not simple"
        )
    Q = np.diag(info.pi) - A @ np.diag(info.pi) @ A.T
    V = info.S.copy()
    residual = np.inf
    for it in range(1, max_iter + 1):
        W = structured_pinv(info.R + C @ V @ C.T, ell)
        AVC = A @ V @ C.T
        V_new = A @ V @ A.T + Q - AVC @ W @ AVC.T
        V_new = (V_new + V_new.T) / 2
        residual = float(np.linalg.norm(V_new - V, 2))
        V = V_new
        if residual < tol:
            break
    else:
        raise NoConvergence(f"Riccati iteration did not converge in {max_iter} steps (residual {residual:.3e})")
    K = A @ V @ C.T @ structured_pinv(info.R + C @ V @ C.T, ell)
    F = A - K @ C
    n = model.n
    M = np.vstack([F - np.eye(n), np.ones((1, n))])
    rhs = np.zeros(n + 1)
    rhs[-1] = 1.0
    gamma, *_ = np.linalg.lstsq(M, rhs, rcond=None)
    J = F - np.outer(gamma, np.ones(n))
    return GainSolution(K=K, V=V, gamma=gamma, J=J, iterations=it, residual=residual)


@dataclass(frozen=True)
class LinearSystem:
    """Innovation-form system used for linear prediction.

    With ``affine=True`` the last state coordinate is the constant 1 (the
    estimated basis); otherwise states are centred (``1^T x = 0``).
    """
    A: np.ndarray
    C: np.ndarray
    K: np.ndarray
    meanY: np.ndarray
    affine: bool

    @property
    def n(self) -> int:
        return self.A.shape[0]

    @property
    def ell(self) -> int:
        return self.C.shape[0]


def true_system(model: HmmModel, gain: GainSolution | None = None) -> LinearSystem:
    gain = gain if gain is not None else riccati_gain(model)
    return LinearSystem(model.A, model.C, gain.K, stationary_info(model).meanY, affine=False)


@dataclass(frozen=True)
class PredictorState:
    system: LinearSystem
    xbar: np.ndarray
    history_len: int = 0

    def centred(self) -> np.ndarray:
        if self.system.affine:
            s = self.xbar.copy()
            s[-1] = 0.0
            return s
        return self.xbar


def initial_state(system: LinearSystem) -> PredictorState:
    x = np.zeros(system.n)
    if system.affine:
        x[-1] = 1.0
    return PredictorState(system, x, 0)


def absorb(state: PredictorState, symbol: int) -> PredictorState:
    sys = state.system
    s = state.centred()
    z = -sys.meanY.copy()
    z[symbol] += 1.0
    s = (sys.A - sys.K @ sys.C) @ s + sys.K @ z
    if sys.affine:
        s[-1] = 1.0
    return PredictorState(sys, s, state.history_len + 1)


def absorb_all(state: PredictorState, symbols: Sequence[int]) -> PredictorState:
    for s in symbols:
        state = absorb(state, int(s))
    return state


def linear_predict(state: PredictorState, m: int = 1) -> np.ndarray:
    if m < 1:
        raise ValueError("m must be >= 1")
    sys = state.system
    return sys.C @ np.linalg.matrix_power(sys.A, m - 1) @ state.centred() + sys.meanY


def state_path(system: LinearSystem, symbols: Sequence[int]) -> np.ndarray:
    """Centred predictor states after each prefix of ``symbols`` (row 0: empty history).

    For an affine system the constant coordinate is reported as 0.
    """
    y = np.asarray(symbols, dtype=np.int64)
    n = system.n
    F = system.A - system.K @ system.C
    drive = system.K[:, y].T - system.K @ system.meanY  # T x n
    # constant coordinate (if any) stays out of the centred recursion
    if system.affine:
        F = F.copy()
        F[-1] = 0.0
        F[:, -1] = 0.0
        drive[:, -1] = 0.0
    states = np.empty((y.size + 1, n))
    s = np.zeros(n)
    states[0] = s
    for t in range(y.size):
        s = F @ s + drive[t]
        states[t + 1] = s
    return states


def linear_predict_path(system: LinearSystem, symbols: Sequence[int], m: int = 1) -> np.ndarray:
    """Predictions after each prefix of ``symbols``.

    Row t is the m-step prediction from the history ``symbols[:t]``; there
    are ``len(symbols) + 1`` rows, the first one for the empty history.
    """
    out_map = system.C @ np.linalg.matrix_power(system.A, m - 1)
    return state_path(system, symbols) @ out_map.T + system.meanY


def filter_posterior(model: HmmModel, history: Sequence[int]) -> np.ndarray:
    """P(x_t = . | y_1..y_t) from the normalised forward recursion, starting at pi."""
    p = stationary_info(model).pi.copy()
    for s in history:
        w = p * model.C[int(s)]
        total = w.sum()
        if total <= 0:
            raise ZeroLikelihood(f"symbol {s} has probability zero given the history")
        p = model.A @ (w / total)
    return p


def filter_path(model: HmmModel, symbols: Sequence[int]) -> np.ndarray:
    """Filtered state distributions after every prefix (row t uses symbols[:t])."""
    y = np.asarray(symbols, dtype=np.int64)
    A, C = model.A, model.C
    out = np.empty((y.size + 1, model.n))
    p = stationary_info(model).pi.copy()
    out[0] = p
    for t in range(y.size):
        w = p * C[y[t]]
        total = w.sum()
        if total <= 0:
            raise ZeroLikelihood(f"symbol {y[t]} at position {t} has probability zero")
        p = A @ (w / total)
        out[t + 1] = p
    return out


def optimal_predict(model: HmmModel, history: Sequence[int], m: int = 1) -> np.ndarray:
    if m < 1:
        raise ValueError("m must be >= 1")
    return model.C @ np.linalg.matrix_power(model.A, m - 1) @ filter_posterior(model, history)


def optimal_predict_path(model: HmmModel, symbols: Sequence[int], m: int = 1) -> np.ndarray:
    return filter_path(model, symbols) @ (model.C @ np.linalg.matrix_power(model.A, m - 1)).T


def finite_horizon_predict(moments: MomentSet, window: Sequence[int]) -> np.ndarray:
    """beta_k applied to the centred stacked window.

    ``window`` lists the last k symbols in time order (oldest first).  Block
    m-1 of the result plus ``moments.meanY`` is the m-step prediction.
    """
    w = np.asarray(window, dtype=np.int64)
    k, ell = moments.k, moments.ell
    if w.size != k:
        raise ValueError(f"window must hold exactly k={k} symbols")
    past = np.zeros((k, ell))
    past[np.arange(k), w[::-1]] = 1.0  # most recent first
    past -= moments.meanY
    return beta_hat(moments) @ past.ravel()


def l1_distance(p, q) -> float:
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    if p.shape != q.shape:
        raise ValueError("vectors must have equal length")
    return float(np.abs(p - q).sum())
