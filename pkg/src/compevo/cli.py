"""Command-line entry point: ``compevo run | plot | pareto | serve``.

Exit codes: 0 success, 2 configuration error, 3 data error.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from pydantic import ValidationError

from .errors import ConfigError, DataError

EXIT_OK, EXIT_CONFIG, EXIT_DATA = 0, 2, 3

# flag name -> ExperimentSpec field
_OVERRIDES = {
    "experiment": "experiment",
    "data": "data",
    "task": "task",
    "target": "target",
    "reps": "repetitions",
    "seed_base": "seed_base",
    "out": "out",
    "time_limit": "time_limit",
    "generations": "generations",
    "workers": "workers",
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="compevo", description="Evolutionary search for composite ML pipelines.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run an experiment and write traces, fronts and a summary")
    run.add_argument("--config", type=Path, help="JSON experiment spec; flags override its values")
    run.add_argument("--experiment", choices=["exp1", "exp2", "exp3", "baseline"])
    run.add_argument("--data", help="CSV path or synth:kind:n:noise[:seed]")
    run.add_argument("--task", help="regression or binary_classification (CSV sources)")
    run.add_argument("--target", help="target column name or index (CSV sources)")
    run.add_argument("--reps", type=int)
    run.add_argument("--seed-base", type=int)
    run.add_argument("--out", type=str)
    run.add_argument("--time-limit", type=float, metavar="SECS")
    run.add_argument("--generations", type=int)
    run.add_argument("--workers", type=int, help="threads for fitness evaluation")

    plot = sub.add_parser("plot", help="render SVG charts for an output directory")
    plot.add_argument("--in", dest="in_dir", type=Path, required=True)

    pareto = sub.add_parser("pareto", help="print a stored Pareto front")
    pareto.add_argument("--in", dest="in_dir", type=Path, required=True)
    pareto.add_argument("--variant", required=True)
    pareto.add_argument("--rep", type=int, default=0)

    serve = sub.add_parser("serve", help="start the HTTP service")
    serve.add_argument("--host", default="127.0.0.1")
    serve.add_argument("--port", type=int, default=8000)
    return parser


def load_spec(args: argparse.Namespace):
    from .bench import ExperimentSpec

    base: dict = {}
    if args.config is not None:
        try:
            base = json.loads(args.config.read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {args.config}: {exc}") from None
        if not isinstance(base, dict):
            raise ConfigError("config must be a JSON object")
    for flag, name in _OVERRIDES.items():
        value = getattr(args, flag)
        if value is not None:
            base[name] = value
    if "repetitions" in base and "seeds" in base and args.reps is not None:
        base.pop("seeds")  # flags win over a stale seed list
    return ExperimentSpec.model_validate(base)


def _cmd_run(args) -> int:
    from .bench import run_experiment

    spec = load_spec(args)
    if spec.out is None:
        raise ConfigError("an output directory is required (--out)")
    report = run_experiment(spec, progress=lambda msg: print(msg, file=sys.stderr))
    print(f"{'variant':<22} {'quality':>10} {'Gs;Gd':>9} {'HV':>8} {'N_f':>5} spread")
    for r in report.rows:
        hv = "" if r.hv is None else f"{r.hv:.4f}"
        nf = "" if r.n_front is None else f"{r.n_front:g}"
        flag = " >5%" if r.spread_flag else ""
        print(f"{r.variant:<22} {r.quality:>10.4f} {r.gs_gd:>9} {hv:>8} {nf:>5} {r.spread:.3f}{flag}")
    print(f"outputs written to {spec.out}")
    return EXIT_OK


def _cmd_plot(args) -> int:
    from .plots import render_plots

    traces = args.in_dir / "traces"
    if not traces.is_dir() or not any(traces.glob("*.csv")):
        raise ConfigError(f"{args.in_dir} has no trace CSVs to plot")
    for p in render_plots(args.in_dir):
        print(p)
    return EXIT_OK


def _cmd_pareto(args) -> int:
    path = args.in_dir / "pareto" / f"{args.variant}_rep{args.rep}.csv"
    if not path.is_file():
        raise ConfigError(f"no stored front at {path}")
    sys.stdout.write(path.read_text())
    return EXIT_OK


def _cmd_serve(args) -> int:
    import uvicorn

    uvicorn.run("compevo.api.app:app", host=args.host, port=args.port)
    return EXIT_OK


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    handler = {"run": _cmd_run, "plot": _cmd_plot, "pareto": _cmd_pareto, "serve": _cmd_serve}[args.command]
    try:
        return handler(args)
    except (ConfigError, ValidationError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (DataError, FileNotFoundError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
