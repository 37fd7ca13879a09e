"""Subspace estimation of (A, C, K) from a single observed symbol sequence.

The pipeline is: stacked indicator Hankel matrices -> sample covariances ->
least-squares prediction matrix -> rank n-1 SVD factorisation -> estimated
centred states with a constant coordinate adjoined -> linear regressions.
The estimates live in an arbitrary basis; only similarity-invariant
quantities (spectra, Markov parameters, predictions) are comparable with the
true system.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Union

import numpy as np

from .errors import DegenerateStates, OrderTooLarge
from .hmm import HmmModel, stationary_info
from .linalg import structured_pinv, truncated_svd
from .moments import HankelPair, beta_hat, empirical_moments, hankel
from .predictor import LinearSystem

GRAM_COND_MAX = 1e12
TIE_RTOL = 1e-8


@dataclass(frozen=True)
class Factorization:
    Ohat: np.ndarray
    Khat: np.ndarray
    sigmaDropped: float
    singular_values: np.ndarray


@dataclass(frozen=True)
class EstimatedSystem:
    n: int
    ell: int
    Ahat: np.ndarray
    Chat: np.ndarray
    Khat: np.ndarray
    meanY: np.ndarray
    Xhat: np.ndarray | None = None
    residuals: np.ndarray | None = None
    diagnostics: dict = field(default_factory=dict)

    def linear_system(self) -> LinearSystem:
        return LinearSystem(self.Ahat, self.Chat, self.Khat, self.meanY, affine=True)

    def to_dict(self) -> dict:
        return {
            "kind": "estimated",
            "n": self.n,
            "ell": self.ell,
            "A": self.Ahat.tolist(),
            "C": self.Chat.tolist(),
            "Khat": self.Khat.tolist(),
            "meanY": self.meanY.tolist(),
            "diagnostics": self.diagnostics,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "EstimatedSystem":
        A = np.asarray(d["A"], dtype=float).reshape(d["n"], d["n"])
        C = np.asarray(d["C"], dtype=float).reshape(d["ell"], d["n"])
        K = np.asarray(d["Khat"], dtype=float).reshape(d["n"], d["ell"])
        return cls(
            n=int(d["n"]),
            ell=int(d["ell"]),
            Ahat=A,
            Chat=C,
            Khat=K,
            meanY=np.asarray(d["meanY"], dtype=float),
            diagnostics=d.get("diagnostics", {}),
        )

    def save(self, path: Union[str, Path]) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=2) + "\n")


def factorize(betaHat: np.ndarray, n: int, k: int | None = None, ell: int | None = None) -> Factorization:
    """Split beta_hat ~ Ohat Khat with Ohat = U1 and Khat = Lambda11 V1^T at rank n-1.

    The rank budget of beta_hat is k(ell-1); pass ``k`` and ``ell`` to have
    it checked, otherwise the matrix dimension bounds the order.
    """
    r = n - 1
    budget = k * (ell - 1) if k is not None and ell is not None else min(betaHat.shape)
    if r < 0 or r > budget:
        raise OrderTooLarge(f"order n={n} needs rank {r} but beta_hat carries at most {budget}")
    svd = truncated_svd(betaHat, r)
    full = np.linalg.svd(betaHat, compute_uv=False)
    return Factorization(
        Ohat=svd.U1,
        Khat=svd.s[:, None] * svd.V1.T,
        sigmaDropped=svd.sigma_next,
        singular_values=full,
    )


def estimate_states(f: Factorization, h: HankelPair, meanY: np.ndarray) -> np.ndarray:
    """n x T state estimates: Khat applied to the globally centred past, plus a row of ones."""
    centred = h.Yminus - np.tile(meanY, h.k)[:, None]
    top = f.Khat @ centred
    return np.vstack([top, np.ones((1, h.T))])


def regress_system(Xhat: np.ndarray, Y: np.ndarray, meanY: np.ndarray | None = None) -> EstimatedSystem:
    """Least-squares estimates of (A, C, K) from states and indicator observations.

    ``Y`` is ell x T with column t the indicator of y_{t+1}; column t of
    ``Xhat`` is the state estimate used to predict it.
    """
    n, T = Xhat.shape
    ell = Y.shape[0]
    if T < n:
        raise DegenerateStates(f"need at least n={n} samples, got {T}")
    # next-state targets: drop the first column and repeat the last one
    X1 = np.hstack([Xhat[:, 1:], Xhat[:, -1:]])
    sv = np.linalg.svd(Xhat, compute_uv=False)
    gram_cond = float((sv[0] / sv[-1]) ** 2) if sv[-1] > 0 else np.inf
    if not gram_cond <= GRAM_COND_MAX:
        raise DegenerateStates(f"state Gram matrix condition number {gram_cond:.3e} too large")
    coef, *_ = np.linalg.lstsq(Xhat.T, np.hstack([X1.T, Y.T]), rcond=None)
    Ahat = coef[:, :n].T
    Chat = coef[:, n:].T
    E = Y - Chat @ Xhat
    if n == 1:
        Khat = np.zeros((1, ell))
    else:
        Khat = (X1 @ E.T / T) @ structured_pinv(E @ E.T / T, ell)
    if meanY is None:
        meanY = Y.mean(axis=1)
    return EstimatedSystem(
        n=n,
        ell=ell,
        Ahat=Ahat,
        Chat=Chat,
        Khat=Khat,
        meanY=np.asarray(meanY, dtype=float),
        Xhat=Xhat,
        residuals=E,
        diagnostics={"gram_cond": gram_cond},
    )


def subspace_fit(observations, n: int, k: int, ell: int | None = None) -> EstimatedSystem:
    y = np.asarray(observations, dtype=np.int64)
    if ell is None:
        ell = int(y.max()) + 1
    if n - 1 > k * (ell - 1):
        raise OrderTooLarge(f"order n={n} exceeds the rank budget k(ell-1)={k * (ell - 1)}")
    h = hankel(y, ell, k)
    moments = empirical_moments(h)
    f = factorize(beta_hat(moments), n, k, ell)
    meanY = moments.meanY
    Xhat = estimate_states(f, h, meanY)
    Y = h.Yplus[:ell]
    est = regress_system(Xhat, Y, meanY)
    sv = f.singular_values
    warnings = []
    if n >= 2 and sv[n - 2] - f.sigmaDropped <= TIE_RTOL * max(sv[0], 1e-300):
        warnings.append("singular values tie at the rank cut")
    diagnostics = {
        "T": int(y.size),
        "k": int(k),
        "sigmaDropped": f.sigmaDropped,
        "sigmaKept": [float(s) for s in sv[: n - 1]],
        "gram_cond": est.diagnostics["gram_cond"],
        "warnings": warnings,
    }
    return EstimatedSystem(
        n=est.n,
        ell=est.ell,
        Ahat=est.Ahat,
        Chat=est.Chat,
        Khat=est.Khat,
        meanY=est.meanY,
        Xhat=est.Xhat,
        residuals=est.residuals,
        diagnostics=diagnostics,
    )


def true_factors(model: HmmModel, K: np.ndarray, k: int) -> tuple[np.ndarray, np.ndarray]:
    """Truncated observability (C Abar^{i-1}) and gain ((A-KC)^{j-1} K) block matrices."""
    Abar = stationary_info(model).Abar
    F = model.A - K @ model.C
    O_blocks, K_blocks = [], []
    P, Q = np.eye(model.n), K.copy()
    for _ in range(k):
        O_blocks.append(model.C @ P)
        K_blocks.append(Q)
        P = Abar @ P
        Q = F @ Q
    return np.vstack(O_blocks), np.hstack(K_blocks)


def load_system(path: Union[str, Path]) -> EstimatedSystem:
    return EstimatedSystem.from_dict(json.loads(Path(path).read_text()))
