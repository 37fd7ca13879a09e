"""Command-line entry point: simulate, fit, predict, bench, oracle.

Every failure ends with a one-line JSON object ``{"error": ..., "message": ...}``
on stderr and a nonzero exit status: 1 for domain errors raised by the
library, 2 for usage errors, 3 for unreadable or malformed input files.
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from .errors import HmmSubspaceError
from .estimator import EstimatedSystem, subspace_fit
from .experiments import MEAN_SOURCES, BenchmarkConfig, run_benchmark
from .hmm import load_model, model_from_dict, read_symbols, simulate, write_symbols
from .oracles import oracle_report
from .predictor import absorb_all, initial_state, linear_predict, optimal_predict, true_system

EXIT_DOMAIN, EXIT_USAGE, EXIT_INPUT = 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _emit(obj, out: str | None) -> None:
    text = json.dumps(obj, indent=2) + "\n"
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def cmd_simulate(args) -> None:
    model = load_model(args.model)
    traj = simulate(model, args.T, args.seed)
    if args.out:
        write_symbols(traj.observations, model.ell, args.out)
    else:
        sys.stdout.write(f"# alphabet={model.ell}\n")
        sys.stdout.write("".join(f"{s}\n" for s in traj.observations))
    if args.states_out:
        np.savetxt(args.states_out, traj.states, fmt="%d", header=f"states={model.n} seed={args.seed}")


def cmd_fit(args) -> None:
    y, ell = read_symbols(args.symbols)
    if y.size == 0:
        raise ValueError(f"{args.symbols}: no symbols")
    ell = args.alphabet or ell
    est = subspace_fit(y, args.n, args.k, ell)
    _emit(est.to_dict(), args.out)


def _load_predictor(path: str):
    """Estimated system file, model file or fixture name."""
    p = Path(path)
    d = json.loads(p.read_text()) if p.exists() else None
    if d is not None and d.get("kind") == "estimated":
        return "estimated", EstimatedSystem.from_dict(d).linear_system(), None
    model = model_from_dict(d) if d is not None else load_model(path)
    return "true", true_system(model), model


def cmd_predict(args) -> None:
    kind, system, model = _load_predictor(args.system)
    history, _ = read_symbols(args.history) if args.history else (np.zeros(0, dtype=np.int64), None)
    if history.size and history.max() >= system.ell:
        raise ValueError(f"history contains symbols outside 0..{system.ell - 1}")
    if args.optimal:
        if model is None:
            raise ValueError("--optimal needs a model, not an estimated system")
        p = optimal_predict(model, history, args.m)
        kind = "optimal"
    else:
        p = linear_predict(absorb_all(initial_state(system), history), args.m)
    _emit({"predictor": kind, "m": args.m, "history_len": int(history.size),
           "distribution": p.tolist(), "negative": bool((p < 0).any())}, args.out)


def cmd_bench(args) -> None:
    cfg = BenchmarkConfig.load(args.config)
    if args.full_scale:
        cfg = cfg.full_scale()
    overrides = {}
    if args.replications is not None:
        overrides["replications"] = args.replications
    if args.mean_source is not None:
        overrides["meanSource"] = args.mean_source
    if overrides:
        cfg = BenchmarkConfig(**{**cfg.__dict__, **overrides})
    out = args.out or cfg.outputPath or Path(args.config).with_suffix("")

    def progress(cell):
        if args.verbose:
            print(f"{cell.system} T={cell.T} k={cell.k} done ({cell.wall_clock:.1f}s)", file=sys.stderr)

    report = run_benchmark(cfg, threads=args.threads, progress=progress)
    csv_path, json_path = report.write(out)
    print(json.dumps({"csv": str(csv_path), "json": str(json_path)}))


def cmd_oracle(args) -> None:
    _emit([c.to_dict() for c in oracle_report()], args.out)


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="hmmsubspace", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("simulate", help="simulate an observation sequence")
    s.add_argument("--model", required=True, help="fixture name (a1c1, a2c2, a3c3) or model JSON file")
    s.add_argument("--T", type=int, required=True)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--out")
    s.add_argument("--states-out")
    s.set_defaults(func=cmd_simulate)

    f = sub.add_parser("fit", help="fit (A, C, K) by the subspace method")
    f.add_argument("--symbols", required=True)
    f.add_argument("--n", type=int, required=True)
    f.add_argument("--k", type=int, required=True)
    f.add_argument("--alphabet", type=int, help="alphabet size when the symbol file has no header")
    f.add_argument("--out")
    f.set_defaults(func=cmd_fit)

    q = sub.add_parser("predict", help="m-step predictive distribution after a history")
    q.add_argument("--system", required=True, help="estimated system file, model file or fixture name")
    q.add_argument("--history", help="symbol file; omitted means the empty history")
    q.add_argument("--m", type=int, default=1)
    q.add_argument("--optimal", action="store_true", help="forward-filter predictor (models only)")
    q.add_argument("--out")
    q.set_defaults(func=cmd_predict)

    b = sub.add_parser("bench", help="Monte-Carlo prediction benchmark")
    b.add_argument("--config", required=True, help="JSON benchmark configuration")
    b.add_argument("--out", help="output stem; .csv and .json are written")
    b.add_argument("--replications", type=int)
    b.add_argument("--threads", type=int, default=1)
    b.add_argument("--full-scale", "--paper-scale", dest="full_scale", action="store_true",
                   help="250 replications and 5000 evaluation points")
    b.add_argument("--mean-source", choices=MEAN_SOURCES)
    b.add_argument("--verbose", action="store_true")
    b.set_defaults(func=cmd_bench)

    o = sub.add_parser("oracle", help="print reference values next to computed ones")
    o.add_argument("--out")
    o.set_defaults(func=cmd_oracle)
    return p


def _fail(kind: str, message: str, code: int) -> int:
    sys.stderr.write(json.dumps({"error": kind, "message": message}) + "\n")
    return code


def main(argv: list[str] | None = None) -> int:
    try:
        args = build_parser().parse_args(argv)
        if getattr(args, "m", 1) < 1:
            raise UsageError("--m must be >= 1")
        args.func(args)
    except UsageError as exc:
        return _fail("UsageError", str(exc), EXIT_USAGE)
    except HmmSubspaceError as exc:
        return _fail(type(exc).__name__, str(exc), EXIT_DOMAIN)
    except (OSError, json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
        return _fail(type(exc).__name__, str(exc), EXIT_INPUT)
    return 0


if __name__ == "__main__":
    sys.exit(main())
