"""Second moments of the centred observation process, theoretical and empirical."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Literal

import numpy as np

from .hmm import HmmModel, stationary_info
from .linalg import structured_pinv


@dataclass(frozen=True)
class MomentSet:
    kind: Literal["theoretical", "empirical"]
    k: int
    ell: int
    H: np.ndarray
    G: np.ndarray
    meanY: np.ndarray


@dataclass(frozen=True)
class HankelPair:
    """Stacked indicator matrices of future (Yplus) and past (Yminus) windows.

    Column u (0-based) of ``Yplus`` stacks y_{u+1}, ..., y_{u+k}; column u of
    ``Yminus`` stacks y_u, y_{u-1}, ..., y_{u-k+1}, in the 1-based time index
    of the observations y_1..y_T.  Positions outside 1..T hold symbol 0.
    """
    Yplus: np.ndarray
    Yminus: np.ndarray
    mPlus: np.ndarray
    mMinus: np.ndarray
    T: int
    k: int
    ell: int


def cross_cov(model: HmmModel, j: int, form: Literal["centred", "raw"] = "centred") -> np.ndarray:
    """E[ybar_t ybar_{t+j}^T] for the centred observation process.

    ``form="raw"`` evaluates the same quantity through powers of A instead of
    the centred transition matrix; both agree because ``1^T S = 0``.
    """
    info = stationary_info(model)
    M = info.Abar if form == "centred" else model.A
    C, S = model.C, info.S
    if j >= 0:
        out = C @ S @ np.linalg.matrix_power(M, j).T @ C.T
        if j == 0:
            out = out + info.R
    else:
        out = C @ np.linalg.matrix_power(M, -j) @ S @ C.T
    return out


def _lag_table(model: HmmModel, lags: range) -> dict[int, np.ndarray]:
    info = stationary_info(model)
    C, S, Abar = model.C, info.S, info.Abar
    table = {}
    # CS(Abar^T)^j C^T for j >= 0, transposed for negative lags
    P = np.eye(model.n)
    max_lag = max(abs(lags.start), abs(lags.stop - 1))
    pos = []
    for _ in range(max_lag + 1):
        pos.append(C @ S @ P.T @ C.T)
        P = Abar @ P
    for j in lags:
        if j >= 0:
            table[j] = pos[j] + (info.R if j == 0 else 0)
        else:
            table[j] = pos[-j].T
    return table


def theoretical_moments(model: HmmModel, k: int) -> MomentSet:
    if k < 1:
        raise ValueError("k must be >= 1")
    ell = model.ell
    lags = _lag_table(model, range(-2 * k + 1, k))
    H = np.empty((k * ell, k * ell))
    G = np.empty((k * ell, k * ell))
    for i in range(1, k + 1):
        for j in range(1, k + 1):
            rows = slice((i - 1) * ell, i * ell)
            cols = slice((j - 1) * ell, j * ell)
            # H block (i,j) = E[ybar_{t+i} ybar_{t-j+1}^T]; Gamma block = E[ybar_{t-i+1} ybar_{t-j+1}^T]
            H[rows, cols] = lags[1 - j - i]
            G[rows, cols] = lags[i - j]
    G = (G + G.T) / 2
    return MomentSet("theoretical", k, ell, H, G, stationary_info(model).meanY.copy())


def _stack_indicators(padded: np.ndarray, offsets: np.ndarray, T: int, ell: int) -> np.ndarray:
    k = offsets.size
    idx = padded[offsets[:, None] + np.arange(T)[None, :]]  # k x T symbol indices
    Y = np.zeros((k, ell, T))
    Y[np.arange(k)[:, None], idx, np.arange(T)[None, :]] = 1.0
    return Y.reshape(k * ell, T)


def hankel(observations, ell: int, k: int) -> HankelPair:
    y = np.asarray(observations, dtype=np.int64)
    T = y.size
    if T < 1 or k < 1:
        raise ValueError("need T >= 1 and k >= 1")
    if y.min() < 0 or y.max() >= ell:
        raise ValueError(f"symbols must lie in 0..{ell - 1}")
    # padded[p] holds y_{p-k+1} (1-based time); pads are symbol 0
    padded = np.zeros(T + 2 * k, dtype=np.int64)
    padded[k: k + T] = y
    # y_s sits at padded index s + k - 1
    plus = _stack_indicators(padded, np.arange(k) + k, T, ell)        # y_{u+i}, i = 0..k-1 (u 1-based)
    minus = _stack_indicators(padded, k - np.arange(1, k + 1), T, ell)  # y_{u-j}, j = 1..k
    return HankelPair(
        Yplus=plus,
        Yminus=minus,
        mPlus=plus.mean(axis=1),
        mMinus=minus.mean(axis=1),
        T=T,
        k=k,
        ell=ell,
    )


def empirical_moments(h: HankelPair) -> MomentSet:
    Yp = h.Yplus - h.mPlus[:, None]
    Ym = h.Yminus - h.mMinus[:, None]
    H = Yp @ Ym.T / h.T
    G = Ym @ Ym.T / h.T
    G = (G + G.T) / 2
    # global mean of y_1..y_T = first block of the future means
    return MomentSet("empirical", h.k, h.ell, H, G, h.mPlus[: h.ell].copy())


def beta_hat(m: MomentSet) -> np.ndarray:
    return m.H @ structured_pinv(m.G, m.ell, m.k)
