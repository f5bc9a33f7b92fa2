"""Command-line verbs: ``python -m mcsvgd {run,simulate,sweep,summarize}``.

Errors are reported as one JSON line on stderr. Exit codes: 0 success,
2 config error, 3 data error, 4 numerical failure.
"""

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from .diagnostics import summarize, write_summary_csv
from .harness import ConfigError, RunConfig, run_experiment, simulate_dataset, sweep
from .io import DataError, read_particles
from .models.base import SimulationError
from .svgd import NumericalError

EXIT_OK, EXIT_CONFIG, EXIT_DATA, EXIT_NUMERIC = 0, 2, 3, 4


def _parser():
    p = argparse.ArgumentParser(prog="python -m mcsvgd", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="verb", required=True)
    for verb in ("run", "simulate", "sweep", "summarize"):
        s = sub.add_parser(verb)
        s.add_argument("--config", type=Path, help="YAML run configuration")
        s.add_argument("--seed", type=int, help="override the master seed")
        s.add_argument("--out", type=Path, help="output directory")
        s.add_argument("--workers", type=int, help="threads for per-particle work")
        s.add_argument("--method", choices=("mcsvgd", "svgd-naive", "exchange", "dmh"),
                       help="override the configured method")
        if verb == "sweep":
            s.add_argument("--axis", choices=("n", "m", "threshold", "iters"))
            s.add_argument("--values", help="comma-separated values")
        if verb == "summarize":
            s.add_argument("--input", type=Path, help="particles or chain CSV (default OUT/particles.csv)")
            s.add_argument("--prob", type=float, default=0.95)
    return p


def _load(args):
    if args.config is None:
        raise ConfigError("--config is required")
    cfg = RunConfig.from_yaml(args.config)
    if args.seed is not None:
        cfg.seed = args.seed
    if args.out is not None:
        cfg.out = str(args.out)
    if args.workers is not None:
        cfg.workers = args.workers
    if args.method is not None:
        cfg.method = args.method
    return cfg


def _run(args):
    report = run_experiment(_load(args))
    for r in report.summaries:
        print(f"theta_{r.coordinate}: mean {r.mean:.4f}  HPD ({r.hpd_low:.4f}, {r.hpd_high:.4f})")


def _simulate(args):
    cfg = _load(args)
    sim = dict(cfg.simulate)
    if "theta" not in sim or "size" not in sim:
        raise ConfigError("simulate.theta and simulate.size are required")
    spec = {"model": cfg.model, **{k: v for k, v in sim.items() if k not in ("theta", "size")}}
    paths = simulate_dataset(spec, sim["theta"], sim["size"], cfg.seed, cfg.out)
    print(json.dumps(paths))


def _sweep(args):
    cfg = _load(args)
    spec = dict(cfg.svgd.pop("sweep", None) or {})
    axis = args.axis or spec.get("axis")
    raw = args.values.split(",") if args.values else spec.get("values")
    if axis is None or not raw:
        raise ConfigError("sweep needs --axis and --values (or svgd.sweep in the config)")
    values = [v if axis == "threshold" else int(v) for v in raw]
    reports = sweep(cfg, axis, values)
    failed = sum(r is None for r in reports)
    print(f"{len(reports) - failed} of {len(reports)} runs succeeded; see {Path(cfg.out) / 'sweep.csv'}")


def _summarize(args):
    out = args.out
    if out is None and args.config is not None:
        out = Path(_load(args).out)
    src = args.input or (out / "particles.csv" if out else None)
    if src is None:
        raise ConfigError("summarize needs --input, --out or --config")
    try:
        samples = read_particles(src)
    except (OSError, ValueError) as exc:
        raise DataError(str(exc)) from None
    rows = summarize(samples, args.prob)
    dest = (out or src.parent) / "summary.csv"
    dest.parent.mkdir(parents=True, exist_ok=True)
    write_summary_csv(rows, dest)
    for r in rows:
        print(f"theta_{r.coordinate}: mean {r.mean:.4f}  HPD ({r.hpd_low:.4f}, {r.hpd_high:.4f})")


def _fail(code, kind, exc):
    msg = str(exc).replace("\n", " ")
    print(json.dumps({"error": kind, "message": msg}), file=sys.stderr)
    return code


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    handler = {"run": _run, "simulate": _simulate, "sweep": _sweep, "summarize": _summarize}[args.verb]
    try:
        with np.errstate(over="ignore"):
            handler(args)
    except ConfigError as exc:
        return _fail(EXIT_CONFIG, "config", exc)
    except DataError as exc:
        return _fail(EXIT_DATA, "data", exc)
    except (NumericalError, SimulationError, FloatingPointError, np.linalg.LinAlgError) as exc:
        return _fail(EXIT_NUMERIC, "numerical", exc)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
