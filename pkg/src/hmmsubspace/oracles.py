"""Independent reference computations used to cross-check the main code paths.

Each oracle takes a different route to the same quantity: exact rational
arithmetic instead of floating point solves, exhaustive enumeration of state
paths instead of the forward recursion, a thresholded full SVD instead of the
structured pseudo-inverse, explicit truncated sums instead of recursions.
They are slow and only meant for small inputs.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np

from .estimator import true_factors
from .hmm import HmmModel, fixture
from .linalg import structured_pinv
from .moments import beta_hat, cross_cov, theoretical_moments
from .predictor import (
    LinearSystem,
    absorb_all,
    finite_horizon_predict,
    initial_state,
    linear_predict,
    optimal_predict,
    riccati_gain,
    true_system,
)

Matrix = list[list[Fraction]]


def to_fractions(M, max_denominator: int = 10**6) -> Matrix:
    return [[Fraction(float(x)).limit_denominator(max_denominator) for x in row] for row in np.atleast_2d(M)]


def _solve_exact(M: Matrix, b: list[Fraction]) -> list[Fraction]:
    """Least-squares-free exact solve of a consistent (possibly overdetermined) system."""
    rows = [list(r) + [v] for r, v in zip(M, b)]
    ncol = len(M[0])
    piv_row = 0
    pivots = []
    for col in range(ncol):
        pr = next((r for r in range(piv_row, len(rows)) if rows[r][col] != 0), None)
        if pr is None:
            continue
        rows[piv_row], rows[pr] = rows[pr], rows[piv_row]
        p = rows[piv_row][col]
        rows[piv_row] = [x / p for x in rows[piv_row]]
        for r in range(len(rows)):
            if r != piv_row and rows[r][col] != 0:
                f = rows[r][col]
                rows[r] = [a - f * c for a, c in zip(rows[r], rows[piv_row])]
        pivots.append(col)
        piv_row += 1
    if len(pivots) != ncol:
        raise ValueError("system is singular")
    if any(rows[r][-1] != 0 for r in range(piv_row, len(rows))):
        raise ValueError("system is inconsistent")
    return [rows[i][-1] for i in range(ncol)]


def exact_stationary(A) -> list[Fraction]:
    """pi from the bordered system [(A - I); 1^T] pi = [0; 1] in rational arithmetic."""
    F = to_fractions(A)
    n = len(F)
    M = [[F[i][j] - (1 if i == j else 0) for j in range(n)] for i in range(n)]
    M.append([Fraction(1)] * n)
    return _solve_exact(M, [Fraction(0)] * n + [Fraction(1)])


def _mul(X: Matrix, Y: Matrix) -> Matrix:
    return [[sum((X[i][t] * Y[t][j] for t in range(len(Y))), Fraction(0)) for j in range(len(Y[0]))]
            for i in range(len(X))]


def _T(X: Matrix) -> Matrix:
    return [list(r) for r in zip(*X)]


def exact_cross_cov(A, C, j: int) -> Matrix:
    """E[ybar_t ybar_{t+j}^T] in exact arithmetic from the joint law of (y_t, y_{t+j}).

    P(y_t = a, y_{t+j} = b) is accumulated from pi, A and C directly and the
    product of marginals subtracted; no centred matrices are involved.
    """
    Af, Cf = to_fractions(A), to_fractions(C)
    n, ell = len(Af), len(Cf)
    pi = exact_stationary(A)
    if j < 0:
        return _T(exact_cross_cov(A, C, -j))
    marg = [sum((Cf[a][x] * pi[x] for x in range(n)), Fraction(0)) for a in range(ell)]
    if j == 0:
        joint = [[marg[a] if a == b else Fraction(0) for b in range(ell)] for a in range(ell)]
    else:
        # state x emits y_t; A^{j} carries it to the state emitting y_{t+j}
        P = [[Fraction(int(i == k)) for k in range(n)] for i in range(n)]
        for _ in range(j):
            P = _mul(Af, P)
        joint = [[sum((Cf[b][z] * P[z][x] * Cf[a][x] * pi[x] for x in range(n) for z in range(n)), Fraction(0))
                  for b in range(ell)] for a in range(ell)]
    return [[joint[a][b] - marg[a] * marg[b] for b in range(ell)] for a in range(ell)]


def path_sum_predict(model: HmmModel, history: Sequence[int], m: int = 1) -> np.ndarray:
    """P(y_{t+m} = . | y_1..y_t) by summing over every state path x_0..x_{t+m-1}."""
    A, C = model.A, model.C
    pi = np.asarray([float(p) for p in exact_stationary(A)])
    t = len(history)
    L = t + m
    out = np.zeros(model.ell)
    for path in itertools.product(range(model.n), repeat=L):
        w = pi[path[0]]
        for s in range(1, L):
            w *= A[path[s], path[s - 1]]
        # y_{s+1} is emitted by x_s
        for s, sym in enumerate(history):
            w *= C[int(sym), path[s]]
        if w == 0.0:
            continue
        out += w * C[:, path[L - 1]]
    total = out.sum()
    if total <= 0:
        raise ValueError("history has probability zero")
    return out / total


def svd_pinv(G: np.ndarray, rtol: float = 1e-10) -> np.ndarray:
    """General pseudo-inverse from a thresholded full SVD."""
    U, s, Vt = np.linalg.svd(np.asarray(G, dtype=float))
    keep = s > rtol * max(s[0], 1e-300)
    return (Vt[keep].T / s[keep]) @ U[:, keep].T


def direct_sum_state(system: LinearSystem, history: Sequence[int], window: int = 200) -> np.ndarray:
    """sum_{j < window} (A - KC)^j K (y_{t-j} - meanY), written out term by term."""
    F = system.A - system.K @ system.C
    x = np.zeros(system.n)
    P = np.eye(system.n)
    for sym in list(history)[::-1][:window]:
        z = -system.meanY.copy()
        z[int(sym)] += 1.0
        x += P @ system.K @ z
        P = P @ F
    return x


def state_alignment_error(x_true: np.ndarray, x_hat: np.ndarray, skip: int = 0) -> float:
    """Mean squared residual after the best linear map from true to estimated states.

    Both arguments are (dim x T); columns before ``skip`` are ignored.
    """
    Xt = x_true[:, skip:]
    Xh = x_hat[:, skip:]
    S, *_ = np.linalg.lstsq(Xt.T, Xh.T, rcond=None)
    resid = Xh - S.T @ Xt
    return float((resid ** 2).sum(axis=0).mean())


@dataclass
class OracleCheck:
    name: str
    computed: list
    reference: list
    max_abs_diff: float

    def to_dict(self) -> dict:
        return {"name": self.name, "computed": self.computed, "reference": self.reference,
                "max_abs_diff": self.max_abs_diff}


def _check(name: str, computed, reference) -> OracleCheck:
    c = np.asarray(computed, dtype=float)
    r = np.asarray(reference, dtype=float)
    return OracleCheck(name, c.tolist(), r.tolist(), float(np.max(np.abs(c - r))))


def oracle_report() -> list[OracleCheck]:
    """Derived reference values for the bundled systems next to the library's own numbers."""
    from .hmm import stationary_info

    a1, a3 = fixture("a1c1"), fixture("a3c3")
    info1 = stationary_info(a1)
    checks = [
        _check("stationary pi a3c3", stationary_info(a3).pi, [float(p) for p in exact_stationary(a3.A)]),
        _check("S a1c1", info1.S, [[0.25, -0.25], [-0.25, 0.25]]),
        _check("R a1c1", info1.R, [[0.09, -0.09], [-0.09, 0.09]]),
        _check("cross_cov lag 0 a1c1", cross_cov(a1, 0), exact_cross_cov(a1.A, a1.C, 0)),
        _check("cross_cov lag 1 a1c1", cross_cov(a1, 1), exact_cross_cov(a1.A, a1.C, 1)),
        _check("cross_cov lag -2 a3c3", cross_cov(a3, -2), exact_cross_cov(a3.A, a3.C, -2)),
        _check("pinv Gamma_1 a1c1", structured_pinv(theoretical_moments(a1, 1).G, 2), [[1, -1], [-1, 1]]),
    ]
    G4 = theoretical_moments(a3, 4).G
    checks.append(_check("structured vs svd pinv Gamma_4 a3c3", structured_pinv(G4, 3, 4), svd_pinv(G4)))
    for model, hist in ((a1, [0, 1, 1]), (a3, [2, 0, 1, 1])):
        for m in (1, 3):
            checks.append(_check(f"forward filter vs path sum {model.name} m={m}",
                                 optimal_predict(model, hist, m), path_sum_predict(model, hist, m)))
    gain = riccati_gain(a1)
    truth = true_system(a1, gain)
    rng = np.random.default_rng(7)
    hist = rng.integers(0, 2, size=300).tolist()
    checks.append(_check("recursive vs direct-sum state a1c1",
                         absorb_all(initial_state(truth), hist).xbar, direct_sum_state(truth, hist)))
    mom25 = theoretical_moments(a1, 25)
    window = hist[-25:]
    fh = finite_horizon_predict(mom25, window)[:2] + mom25.meanY
    checks.append(_check("linear predictor vs finite-horizon k=25 a1c1",
                         linear_predict(absorb_all(initial_state(truth), window)), fh))
    O, Kc = true_factors(a1, gain.K, 20)
    checks.append(_check("beta_20 vs O_20 Kcal_20 a1c1", beta_hat(theoretical_moments(a1, 20)), O @ Kc))
    return checks
