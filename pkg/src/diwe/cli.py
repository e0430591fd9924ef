"""Command-line interface: generate streams, run the ensemble, baselines, experiments."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from .core import InvalidInstanceError
from .ensemble import ConfigError, DiweConfig
from .evaluation import DataError, read_stream_csv, write_json, write_stream_csv
from .experiments import EXPERIMENTS, SYNTHETIC_KINDS, run_baseline, run_diwe, run_experiment
from .generators import KINDS, GeneratorSpec, generate

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_DATA = 3

log = logging.getLogger("diwe")


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="diwe", description=__doc__)
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", help="write a seeded synthetic stream as CSV")
    g.add_argument("--kind", required=True, choices=KINDS)
    g.add_argument("--seed", type=int, default=1)
    g.add_argument("--out", required=True, type=Path)
    g.add_argument("--length", type=int, help="stream length (fixed at 4000 for oned_drift)")
    g.add_argument("--noise", type=float, help="label noise for SEA and hyperplane")

    def data_opts(q):
        q.add_argument("--data", required=True, type=Path)
        q.add_argument("--normalize", choices=("none", "full", "prefix"), default="full",
                       help="min-max scaling fit range (default: whole file)")
        q.add_argument("--fit-prefix", type=int, help="rows used to fit scaling with --normalize prefix")
        q.add_argument("--init-size", type=int, default=0,
                       help="leading rows used as initial training data and not scored")
        q.add_argument("--no-timing", action="store_true", help="write step_ms as 0 for byte-stable traces")

    r = sub.add_parser("run", help="prequential run of the ensemble on a stream CSV")
    r.add_argument("--config", required=True, type=Path)
    r.add_argument("--out-dir", required=True, type=Path)
    r.add_argument("--save-state", type=Path, help="write the final ensemble state here")
    data_opts(r)

    b = sub.add_parser("baseline", help="prequential run of a sliding-window k-NN")
    b.add_argument("--window", type=int, required=True)
    b.add_argument("--k", type=int, required=True)
    b.add_argument("--out-dir", type=Path, help="also write trace.csv and summary.json here")
    data_opts(b)

    e = sub.add_parser("experiment", help="run a named experiment and write its report")
    e.add_argument("--name", required=True, choices=EXPERIMENTS)
    e.add_argument("--runs", type=int, default=10)
    e.add_argument("--out-dir", required=True, type=Path)
    e.add_argument("--config", type=Path, help="ensemble config JSON (defaults otherwise)")
    e.add_argument("--kinds", nargs="+", choices=SYNTHETIC_KINDS)
    e.add_argument("--length", type=int, help="override stream length")
    e.add_argument("--n-random", type=int, default=50, help="random policies for exp4_maxrdd_vs_random")
    e.add_argument("--init-size", type=int, default=0)
    e.add_argument("--jobs", type=int, default=1, help="worker processes for independent runs")
    return p


def _check_data_opts(args) -> None:
    if args.normalize == "prefix" and not args.fit_prefix:
        raise ConfigError("--normalize prefix requires --fit-prefix")
    if args.init_size < 0:
        raise ConfigError("--init-size must be >= 0")


def _load_data(args):
    stream = read_stream_csv(args.data, args.normalize, args.fit_prefix)
    if args.init_size >= len(stream):
        raise DataError(f"--init-size {args.init_size} leaves no instances to evaluate")
    return stream


def cmd_generate(args) -> int:
    try:
        spec = GeneratorSpec(args.kind, args.seed, args.length, args.noise)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    stream = generate(spec)
    write_stream_csv(stream, args.out)
    log.info("wrote %d instances to %s", len(stream), args.out)
    return EXIT_OK


def cmd_run(args) -> int:
    _check_data_opts(args)
    config = DiweConfig.from_json(args.config)
    stream = _load_data(args)
    out = args.out_dir
    out.mkdir(parents=True, exist_ok=True)
    trace = run_diwe(stream, config, trace_path=out / "trace.csv",
                     timing=not args.no_timing, init_size=args.init_size,
                     state_path=args.save_state)
    summary = trace.summary()
    summary.update(data=str(args.data), normalization=stream.meta["normalization"])
    write_json(summary, out / "summary.json")
    from .plotting import plot_accuracy_curves

    plot_accuracy_curves({"diwe": trace.running_accuracy}, out / "accuracy.png")
    print(json.dumps({"accuracy": trace.accuracy, "n": len(trace), "out_dir": str(out)}))
    return EXIT_OK


def cmd_baseline(args) -> int:
    _check_data_opts(args)
    if args.k < 1 or args.window < args.k:
        raise ConfigError("baseline needs k >= 1 and window >= k")
    stream = _load_data(args)
    trace_path = None
    if args.out_dir is not None:
        args.out_dir.mkdir(parents=True, exist_ok=True)
        trace_path = args.out_dir / "trace.csv"
    trace = run_baseline(stream, args.window, args.k, args.init_size, trace_path,
                         timing=not args.no_timing)
    summary = trace.summary()
    summary.update(data=str(args.data), normalization=stream.meta["normalization"])
    if args.out_dir is not None:
        write_json(summary, args.out_dir / "summary.json")
    print(json.dumps({"accuracy": trace.accuracy, "n": len(trace), "window": args.window, "k": args.k}))
    return EXIT_OK


def cmd_experiment(args) -> int:
    if args.runs < 1:
        raise ConfigError("--runs must be >= 1")
    kw: dict = {"jobs": args.jobs}
    if args.name != "exp1_removal":
        kw["init_size"] = args.init_size
        if args.config is not None:
            kw["config"] = DiweConfig.from_json(args.config)
        if args.kinds:
            kw["kinds"] = tuple(args.kinds)
        if args.length is not None:
            kw["length"] = args.length
    if args.name == "exp4_maxrdd_vs_random":
        kw["n_random"] = args.n_random
    run_experiment(args.name, args.out_dir, runs=args.runs, **kw)
    print(json.dumps({"experiment": args.name, "out_dir": str(args.out_dir),
                      "summary": str(args.out_dir / f"{args.name.split('_')[0]}_summary.json")}))
    return EXIT_OK


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    handlers = {"generate": cmd_generate, "run": cmd_run, "baseline": cmd_baseline,
                "experiment": cmd_experiment}
    try:
        return handlers[args.command](args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (DataError, InvalidInstanceError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
