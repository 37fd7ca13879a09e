"""Finite hidden Markov models: validation, stationary quantities, simulation.

Conventions follow the column-stochastic layout used throughout the package:
``A[i, j] = P(x_{t+1} = i | x_t = j)`` and ``C[i, j] = P(y_{t+1} = i | x_t = j)``,
so the observation emitted at step t+1 is drawn given the state at step t.
States and symbols are 0-based integer indices.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Union

import numpy as np

from .errors import NotErgodic, NotStochastic, NumericalFailure

STOCHASTIC_TOL = 1e-9
FIXTURE_NAMES = ("a1c1", "a2c2", "a3c3")


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=float)
    a.flags.writeable = False
    return a


@dataclass(frozen=True)
class HmmModel:
    A: np.ndarray
    C: np.ndarray
    name: str = ""

    @property
    def n(self) -> int:
        return self.A.shape[0]

    @property
    def ell(self) -> int:
        return self.C.shape[0]

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "n": self.n,
            "ell": self.ell,
            "A": self.A.tolist(),
            "C": self.C.tolist(),
        }


@dataclass(frozen=True)
class StationaryInfo:
    pi: np.ndarray
    Abar: np.ndarray
    S: np.ndarray
    R: np.ndarray
    meanY: np.ndarray


@dataclass(frozen=True)
class Trajectory:
    states: np.ndarray        # length T+1: x_0 .. x_T
    observations: np.ndarray  # length T: y_1 .. y_T
    seed: int


def _check_stochastic(M: np.ndarray, label: str) -> np.ndarray:
    if not np.all(np.isfinite(M)):
        raise NotStochastic(f"{label} has non-finite entries")
    if M.min() < -STOCHASTIC_TOL or M.max() > 1 + STOCHASTIC_TOL:
        raise NotStochastic(f"{label} has entries outside [0, 1]")
    dev = np.abs(M.sum(axis=0) - 1.0)
    if dev.max() > STOCHASTIC_TOL:
        col = int(dev.argmax())
        raise NotStochastic(
            f"column {col} of {label} sums to {M[:, col].sum():.12g}, not 1"
        )
    M = np.clip(M, 0.0, None)
    return M / M.sum(axis=0)


def _bool_matmul(P: np.ndarray, Q: np.ndarray) -> np.ndarray:
    return (P.astype(np.int64) @ Q.astype(np.int64)) > 0


def is_irreducible(A: np.ndarray) -> bool:
    n = A.shape[0]
    reach = np.eye(n, dtype=bool) | (A > 0)
    # (I + A)^(n-1) > 0 entrywise, by repeated squaring on the sign pattern
    power = np.eye(n, dtype=bool)
    steps = n - 1
    while steps:
        if steps & 1:
            power = _bool_matmul(power, reach)
        reach = _bool_matmul(reach, reach)
        steps >>= 1
    return bool(power.all())


def is_aperiodic(A: np.ndarray) -> bool:
    """Primitivity test for an irreducible pattern.

    Wielandt's bound: an irreducible nonnegative matrix is primitive iff
    A^m > 0 for m = (n - 1)^2 + 1.
    """
    n = A.shape[0]
    pattern = A > 0
    power = pattern.copy()
    for _ in range((n - 1) ** 2):
        if power.all():
            return True
        power = _bool_matmul(power, pattern)
    return bool(power.all())


def validate_model(A, C, name: str = "") -> HmmModel:
    A = np.atleast_2d(np.asarray(A, dtype=float))
    C = np.atleast_2d(np.asarray(C, dtype=float))
    n = A.shape[0]
    if A.shape != (n, n):
        raise ValueError(f"A must be square, got shape {A.shape}")
    if C.shape[1] != n:
        raise ValueError(f"C must have {n} columns, got shape {C.shape}")
    if n < 2 or C.shape[0] < 2:
        raise ValueError("need at least 2 states and 2 symbols")
    A = _check_stochastic(A, "A")
    C = _check_stochastic(C, "C")
    if not (is_irreducible(A) and is_aperiodic(A)):
        raise NotErgodic("transition matrix is not irreducible and aperiodic")
    return HmmModel(_frozen(A), _frozen(C), name)


def stationary_distribution(A: np.ndarray) -> np.ndarray:
    n = A.shape[0]
    sv = np.linalg.svd(A - np.eye(n), compute_uv=False)
    if n > 1 and sv[-2] < 1e-12:
        raise NumericalFailure("eigenvalue 1 of A is not simple")
    # bordered system [(A - I); 1^T] pi = [0; 1]
    M = np.vstack([A - np.eye(n), np.ones((1, n))])
    rhs = np.zeros(n + 1)
    rhs[-1] = 1.0
    pi, *_ = np.linalg.lstsq(M, rhs, rcond=None)
    if pi.min() <= 0:
        raise NumericalFailure("stationary distribution has non-positive entries")
    return pi / pi.sum()


def stationary_info(model: HmmModel) -> StationaryInfo:
    A, C = model.A, model.C
    pi = stationary_distribution(A)
    Abar = A - np.outer(pi, np.ones(model.n))
    S = np.diag(pi) - np.outer(pi, pi)
    meanY = C @ pi
    R = np.diag(meanY) - C @ np.diag(pi) @ C.T
    return StationaryInfo(
        pi=_frozen(pi),
        Abar=_frozen(Abar),
        S=_frozen((S + S.T) / 2),
        R=_frozen((R + R.T) / 2),
        meanY=_frozen(meanY),
    )


def _inverse_cdf_table(M: np.ndarray, u: np.ndarray) -> np.ndarray:
    """For every column j of M, the category drawn by uniform u[t] (shape cols x T)."""
    cum = np.cumsum(M, axis=0)
    cum[-1] = 1.0
    return np.stack([np.searchsorted(cum[:, j], u, side="right") for j in range(M.shape[1])])


def simulate(model: HmmModel, T: int, seed: int) -> Trajectory:
    if T < 1:
        raise ValueError("T must be >= 1")
    rng = np.random.default_rng(seed)
    pi = stationary_distribution(model.A)
    x0 = int(np.searchsorted(np.cumsum(pi)[:-1], rng.random(), side="right"))
    # next state given each possible current state, per step
    next_state = _inverse_cdf_table(model.A, rng.random(T)).tolist()
    states = [x0] * (T + 1)
    x = x0
    for t in range(T):
        x = next_state[x][t]
        states[t + 1] = x
    states = np.asarray(states, dtype=np.int64)
    # y_{t+1} is drawn from column x_t of C
    cumC = np.cumsum(model.C, axis=0)
    cumC[-1] = 1.0
    u = rng.random(T)
    obs = (u[:, None] >= cumC.T[states[:-1]]).sum(axis=1)
    return Trajectory(states=states, observations=obs.astype(np.int64), seed=seed)


ModelSource = Union[str, Path, dict]


def model_from_dict(d: dict) -> HmmModel:
    A = np.asarray(d["A"], dtype=float)
    C = np.asarray(d["C"], dtype=float)
    n = d.get("n", A.shape[0])
    ell = d.get("ell", d.get("l", d.get("ℓ", C.shape[0])))
    if A.shape != (n, n) or C.shape != (ell, n):
        raise ValueError(f"model dimensions disagree with n={n}, ell={ell}")
    return validate_model(A, C, name=d.get("name", ""))


def fixture(name: str) -> HmmModel:
    if name not in FIXTURE_NAMES:
        raise KeyError(f"unknown fixture {name!r}; choose from {FIXTURE_NAMES}")
    text = resources.files("hmmsubspace.fixtures").joinpath(f"{name}.json").read_text()
    return model_from_dict(json.loads(text))


def load_model(source: ModelSource) -> HmmModel:
    """Load a model from a fixture name, a JSON file path, or a parsed dict."""
    if isinstance(source, dict):
        return model_from_dict(source)
    if isinstance(source, str) and source in FIXTURE_NAMES:
        return fixture(source)
    return model_from_dict(json.loads(Path(source).read_text()))


def save_model(model: HmmModel, path: Union[str, Path]) -> None:
    Path(path).write_text(json.dumps(model.to_dict(), indent=2) + "\n")


def write_symbols(symbols, ell: int, path: Union[str, Path]) -> None:
    """Plain-text symbol file: header ``# alphabet=<ell>`` then one 0-based index per line."""
    y = np.asarray(symbols, dtype=np.int64)
    body = "\n".join(str(int(s)) for s in y)
    Path(path).write_text(f"# alphabet={ell}\n" + body + ("\n" if y.size else ""))


def read_symbols(path: Union[str, Path]) -> tuple[np.ndarray, int | None]:
    """Inverse of :func:`write_symbols`; the alphabet is None when the header is absent."""
    ell = None
    values = []
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), start=1):
        line = raw.strip()
        if not line:
            continue
        if line.startswith("#"):
            key, _, val = line[1:].strip().partition("=")
            if key.strip() == "alphabet":
                ell = int(val)
            continue
        try:
            values.append(int(line))
        except ValueError:
            raise ValueError(f"{path}:{lineno}: not an integer symbol: {line!r}") from None
    y = np.asarray(values, dtype=np.int64)
    if y.size and (y.min() < 0 or (ell is not None and y.max() >= ell)):
        raise ValueError(f"{path}: symbols outside 0..{(ell or 0) - 1}")
    return y, ell
