"""Monte-Carlo prediction benchmark over systems and (T, k) grids.

For every replication a training series is simulated once at the largest T
in the grid (smaller T use its prefix), the model is fitted for each cell,
and the fitted linear predictor is compared with the true optimal linear
predictor and the forward-filter predictor along an independent evaluation
series.  All randomness flows from integer seeds recorded in the report.
"""
from __future__ import annotations

import csv
import json
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import HmmSubspaceError
from .estimator import subspace_fit
from .hmm import HmmModel, load_model, simulate
from .predictor import (
    LinearSystem,
    linear_predict_path,
    optimal_predict_path,
    riccati_gain,
    true_system,
)

EVAL_SEED_OFFSET = 1_000_003
MEAN_SOURCES = ("train", "pooled", "true")
CSV_COLUMNS = ["system", "T", "k", "m", "err_lin", "err_opt", "stderr_lin", "stderr_opt", "neg_count"]

FULL_SCALE = {"replications": 250, "outOfSampleLen": 5000}


@dataclass
class BenchmarkConfig:
    systems: list[str]
    grid: list[tuple[int, int]]
    replications: int = 100
    outOfSampleLen: int = 2000
    horizons: list[int] = field(default_factory=lambda: [1])
    seed: int = 0
    burnIn: int = 50
    meanSource: str = "train"
    outputPath: str | None = None

    def __post_init__(self):
        self.grid = [(int(T), int(k)) for T, k in self.grid]
        self.horizons = [int(m) for m in self.horizons]
        if self.replications < 1:
            raise ValueError("replications must be >= 1")
        if self.replications >= EVAL_SEED_OFFSET:
            raise ValueError("too many replications for disjoint seed streams")
        if self.meanSource not in MEAN_SOURCES:
            raise ValueError(f"meanSource must be one of {MEAN_SOURCES}")
        if not self.grid or not self.horizons or min(self.horizons) < 1:
            raise ValueError("grid and horizons must be non-empty, horizons >= 1")

    @classmethod
    def from_dict(cls, d: dict) -> "BenchmarkConfig":
        aliases = {"out_of_sample": "outOfSampleLen", "seeds": "seed", "output_path": "outputPath",
                   "burn_in": "burnIn", "mean_source": "meanSource"}
        d = {aliases.get(key, key): v for key, v in d.items()}
        return cls(**d)

    @classmethod
    def load(cls, path) -> "BenchmarkConfig":
        return cls.from_dict(json.loads(Path(path).read_text()))

    def full_scale(self) -> "BenchmarkConfig":
        return BenchmarkConfig(**{**asdict(self), **FULL_SCALE})


@dataclass
class CellResult:
    system: str
    T: int
    k: int
    m: int
    err_lin: float
    err_opt: float
    stderr_lin: float
    stderr_opt: float
    neg_count: int
    replications: int
    failed: int
    wall_clock: float

    def csv_row(self) -> dict:
        return {c: getattr(self, c) for c in CSV_COLUMNS}


@dataclass
class BenchmarkReport:
    config: dict
    cells: list[CellResult]
    seeds: dict

    def cell(self, system: str, T: int, k: int, m: int = 1) -> CellResult:
        for c in self.cells:
            if (c.system, c.T, c.k, c.m) == (system, T, k, m):
                return c
        raise KeyError((system, T, k, m))

    def to_dict(self) -> dict:
        return {"config": self.config, "seeds": self.seeds, "cells": [asdict(c) for c in self.cells]}

    def write(self, out: Path | str) -> tuple[Path, Path]:
        out = Path(out)
        csv_path, json_path = out.with_suffix(".csv"), out.with_suffix(".json")
        csv_path.parent.mkdir(parents=True, exist_ok=True)
        with csv_path.open("w", newline="") as fh:
            writer = csv.DictWriter(fh, fieldnames=CSV_COLUMNS)
            writer.writeheader()
            for c in self.cells:
                writer.writerow(c.csv_row())
        json_path.write_text(json.dumps(self.to_dict(), indent=2) + "\n")
        return csv_path, json_path


def train_seed(cfg: BenchmarkConfig, r: int) -> int:
    return cfg.seed + r


def eval_seed(cfg: BenchmarkConfig, r: int) -> int:
    return cfg.seed + EVAL_SEED_OFFSET + r


def _replication(args) -> dict:
    """One replication of one system over every grid cell; pure given its arguments."""
    model, truth, cfg, r = args
    T_max = max(T for T, _ in cfg.grid)
    train = simulate(model, T_max, train_seed(cfg, r)).observations
    evaluation = simulate(model, cfg.burnIn + cfg.outOfSampleLen, eval_seed(cfg, r)).observations
    keep = slice(cfg.burnIn, cfg.burnIn + cfg.outOfSampleLen)
    # row t predicts from evaluation[:t]; rows burnIn .. burnIn+L-1 are scored
    lin_true = {m: linear_predict_path(truth, evaluation[: keep.stop - 1], m)[keep] for m in cfg.horizons}
    opt = {m: optimal_predict_path(model, evaluation[: keep.stop - 1], m)[keep] for m in cfg.horizons}
    out = {}
    for T, k in cfg.grid:
        t0 = time.perf_counter()
        y = train[:T]
        try:
            est = subspace_fit(y, model.n, k, model.ell)
        except HmmSubspaceError as exc:
            out[(T, k)] = {"failed": type(exc).__name__}
            continue
        system = est.linear_system()
        if cfg.meanSource == "pooled":
            counts = np.bincount(y, minlength=model.ell) + np.bincount(evaluation, minlength=model.ell)
            system = LinearSystem(system.A, system.C, system.K, counts / counts.sum(), affine=True)
        elif cfg.meanSource == "true":
            system = LinearSystem(system.A, system.C, system.K, truth.meanY, affine=True)
        per_m = {}
        for m in cfg.horizons:
            phi_hat = linear_predict_path(system, evaluation[: keep.stop - 1], m)[keep]
            per_m[m] = (
                float(np.abs(phi_hat - lin_true[m]).sum(axis=1).mean()),
                float(np.abs(phi_hat - opt[m]).sum(axis=1).mean()),
                int((phi_hat < 0).any(axis=1).sum()),
            )
        out[(T, k)] = {"per_m": per_m, "seconds": time.perf_counter() - t0}
    return out


def _resolve(name: str) -> tuple[str, HmmModel]:
    model = load_model(name)
    return (model.name or Path(name).stem), model


def run_benchmark(cfg: BenchmarkConfig, threads: int = 1, progress=None) -> BenchmarkReport:
    cells: list[CellResult] = []
    for source in cfg.systems:
        label, model = _resolve(source)
        for T, k in cfg.grid:
            if k * (model.ell - 1) < model.n - 1:
                raise ValueError(f"k={k} too small for system {label}")
        truth = true_system(model, riccati_gain(model))
        tasks = [(model, truth, cfg, r) for r in range(cfg.replications)]
        if threads > 1:
            with ProcessPoolExecutor(max_workers=threads) as pool:
                results = list(pool.map(_replication, tasks))
        else:
            results = [_replication(t) for t in tasks]
        for T, k in cfg.grid:
            ok = [res[(T, k)] for res in results if "per_m" in res[(T, k)]]
            failed = len(results) - len(ok)
            seconds = float(sum(res[(T, k)].get("seconds", 0.0) for res in results))
            for m in cfg.horizons:
                arr = np.array([o["per_m"][m][:2] for o in ok]) if ok else np.full((0, 2), np.nan)
                neg = int(sum(o["per_m"][m][2] for o in ok))
                n_ok = arr.shape[0]
                means = arr.mean(axis=0) if n_ok else np.full(2, np.nan)
                se = arr.std(axis=0, ddof=1) / np.sqrt(n_ok) if n_ok > 1 else np.full(2, np.nan)
                cells.append(CellResult(label, T, k, m, float(means[0]), float(means[1]),
                                        float(se[0]), float(se[1]), neg, n_ok, failed, seconds))
            if progress is not None:
                progress(cells[-1])
    seeds = {
        "train": [train_seed(cfg, 0), train_seed(cfg, cfg.replications - 1)],
        "eval": [eval_seed(cfg, 0), eval_seed(cfg, cfg.replications - 1)],
    }
    return BenchmarkReport(config=asdict(cfg), cells=cells, seeds=seeds)


def sample_size_sweep(replications: int = 100, grid: Sequence[tuple[int, int]] | None = None) -> BenchmarkConfig:
    return BenchmarkConfig(
        systems=["a1c1", "a2c2", "a3c3"],
        grid=list(grid or [(1000, 5), (5000, 8), (10000, 12), (20000, 16), (40000, 20)]),
        replications=replications,
    )


def horizon_sweep(replications: int = 50, ks: Sequence[int] = (5, 10, 20, 50)) -> BenchmarkConfig:
    return BenchmarkConfig(systems=["a1c1"], grid=[(20000, k) for k in ks], replications=replications)
