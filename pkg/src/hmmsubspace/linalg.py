"""Linear algebra on the orthogonal complement of the all-ones direction.

Probability vectors and centred indicator vectors live in affine/linear
subspaces orthogonal to ``1``; the covariance matrices built from them are
singular in a known way.  The helpers here exploit that known kernel instead
of estimating ranks from thresholded singular values.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
import scipy.linalg

from .errors import SingularCore

CORE_EIG_TOL = 1e-12


@dataclass(frozen=True)
class OrthoComplementBasis:
    n: int
    U: np.ndarray


@dataclass(frozen=True)
class BlockBasis:
    ell: int
    k: int
    U: np.ndarray


@dataclass(frozen=True)
class TruncatedSvd:
    U1: np.ndarray
    s: np.ndarray  # diagonal of Lambda_11, nonincreasing
    V1: np.ndarray
    sigma_next: float

    @property
    def Lambda11(self) -> np.ndarray:
        return np.diag(self.s)

    def product(self) -> np.ndarray:
        return (self.U1 * self.s) @ self.V1.T


@lru_cache(maxsize=64)
def _ortho_matrix(n: int) -> np.ndarray:
    M = np.hstack([np.ones((n, 1)), np.eye(n)[:, : n - 1]])
    Q, _ = np.linalg.qr(M)
    U = Q[:, 1:]
    # fixed sign: first nonzero entry of each column positive
    for j in range(U.shape[1]):
        col = U[:, j]
        first = col[np.flatnonzero(np.abs(col) > 1e-14)[0]]
        if first < 0:
            U[:, j] = -col
    U.flags.writeable = False
    return U


def ortho_basis(n: int) -> OrthoComplementBasis:
    if n < 2:
        raise ValueError("n must be >= 2")
    return OrthoComplementBasis(n=n, U=_ortho_matrix(n))


def block_basis(ell: int, k: int) -> BlockBasis:
    U = scipy.linalg.block_diag(*([_ortho_matrix(ell)] * k))
    return BlockBasis(ell=ell, k=k, U=U)


def complement_projector(n: int) -> np.ndarray:
    return np.eye(n) - np.full((n, n), 1.0 / n)


def compress(G: np.ndarray, ell: int, k: int = 1) -> np.ndarray:
    """Core matrix ``U^T G U`` with ``U`` the block basis."""
    U = block_basis(ell, k).U
    return U.T @ G @ U


def structured_pinv(G: np.ndarray, ell: int, k: int = 1) -> np.ndarray:
    """Moore-Penrose inverse of a PSD matrix whose kernel is (S_ell)^k.

    ``G`` is ``(k*ell) x (k*ell)``, symmetric positive semi-definite, with every
    ell-block annihilated by ``1_ell``.  The inverse is ``U core^{-1} U^T`` with
    ``U`` the block basis and ``core = U^T G U``.
    """
    G = np.asarray(G, dtype=float)
    if G.shape != (k * ell, k * ell):
        raise ValueError(f"expected a {(k * ell, k * ell)} matrix, got {G.shape}")
    U = block_basis(ell, k).U
    core = compress(G, ell, k)
    core = (core + core.T) / 2
    lam_min = scipy.linalg.eigvalsh(core, subset_by_index=[0, 0])[0]
    if not lam_min >= CORE_EIG_TOL:
        raise SingularCore(f"smallest core eigenvalue {lam_min:.3e} below {CORE_EIG_TOL:g}")
    factor = scipy.linalg.cho_factor(core, lower=True)
    inv_core_Ut = scipy.linalg.cho_solve(factor, U.T)
    out = U @ inv_core_Ut
    return (out + out.T) / 2


def truncated_svd(M: np.ndarray, r: int) -> TruncatedSvd:
    """Rank-r truncated SVD with a deterministic sign convention.

    Each left singular vector is flipped so that its largest-magnitude entry
    is positive; the matching right singular vector is flipped with it.
    """
    M = np.asarray(M, dtype=float)
    m, p = M.shape
    if r < 0 or r > min(m, p):
        raise ValueError(f"rank {r} out of range for a {m}x{p} matrix")
    U, s, Vt = np.linalg.svd(M, full_matrices=False)
    sigma_next = float(s[r]) if r < s.size else 0.0
    U1 = U[:, :r].copy()
    V1 = Vt[:r].T.copy()
    for j in range(r):
        i = np.argmax(np.abs(U1[:, j]))
        if U1[i, j] < 0:
            U1[:, j] *= -1
            V1[:, j] *= -1
    return TruncatedSvd(U1=U1, s=s[:r].copy(), V1=V1, sigma_next=sigma_next)
