"""Command-line front end: scenario runs, sweeps, optimisation, selfcheck."""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .configfile import ConfigError, apply_overrides, parse_config_text, read_config_text
from .experiments import (
    ALIASES,
    OPTIMIZE_KEYS,
    SCENARIO_KEYS,
    SWEEP_KEYS,
    emit,
    optimize_from_config,
    optimize_scenario,
    run_scenario,
    scenario_from_config,
    sweep,
    sweep_from_config,
    write_sweep_csv,
)
from .selfcheck import run_selfcheck


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="qcat",
        description=(
            "Exact simulator of noisy partitioned quantum cellular automata "
            "for excitation transfer on a 1-d qubit lattice."
        ),
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p, with_config=True):
        if with_config:
            p.add_argument(
                "--config",
                required=True,
                help="config file path, or the name of a packaged scenario",
            )
            p.add_argument(
                "--override",
                action="append",
                default=[],
                metavar="KEY=VALUE",
                help="override a config key (repeatable)",
            )
        p.add_argument("--out", default="out", help="output directory (default: out)")

    p_run = sub.add_parser("run", help="run one scenario, emit per-series CSVs")
    add_common(p_run)
    p_run.add_argument("--svg", action="store_true", help="also emit an SVG line plot")
    p_run.add_argument(
        "--debug-psd",
        action="store_true",
        dest="debug_psd",
        help="assert positive semidefiniteness after every step (slow)",
    )

    p_sweep = sub.add_parser("sweep", help="evaluate a reducer over a parameter grid")
    add_common(p_sweep)
    p_sweep.add_argument(
        "--threads", type=int, default=1, help="worker processes for sweep cells"
    )

    p_opt = sub.add_parser("optimize", help="exhaustive search over one parameter axis")
    add_common(p_opt)

    p_check = sub.add_parser("selfcheck", help="run the fast invariant suite")
    add_common(p_check, with_config=False)

    return parser


def _load(args, known_keys) -> tuple[dict, str]:
    text, source = read_config_text(args.config)
    data = parse_config_text(text, source)
    data = apply_overrides(data, args.override, known_keys, ALIASES)
    return data, source


def _cmd_run(args) -> int:
    data, source = _load(args, SCENARIO_KEYS)
    scenario = scenario_from_config(data, source)
    records = run_scenario(scenario, debug_psd=args.debug_psd)
    svg = args.svg or "svg" in scenario.outputs
    written = emit(records, args.out, scenario.name, svg=svg)
    for label, record in records.items():
        final = record.p_tot[-1] if len(record) else 0.0
        print(f"{scenario.name} {label}: P_tot(t={scenario.t_max}) = {final:.6f}")
    for path in written:
        print(f"wrote {path}")
    return 0


def _cmd_sweep(args) -> int:
    data, source = _load(args, SWEEP_KEYS)
    grid = sweep_from_config(data, source)
    rows = sweep(grid, workers=max(1, args.threads))
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    path = out / f"{grid.base.name}_sweep.csv"
    write_sweep_csv(rows, grid.axis_names, path)
    print(f"{grid.base.name}: evaluated {len(rows)} cells with reducer {grid.reducer}")
    print(f"wrote {path}")
    return 0


def _cmd_optimize(args) -> int:
    data, source = _load(args, OPTIMIZE_KEYS)
    spec = optimize_from_config(data, source)
    best, rows = optimize_scenario(spec.base, spec.axis, spec.values, spec.objective)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    path = out / f"{spec.base.name}_optimize.csv"
    write_sweep_csv(rows, (spec.axis,), path)
    best_value = next(row["value"] for row in rows if row[spec.axis] == best)
    print(f"best {spec.axis} = {best:g} ({spec.objective} = {best_value:.6f})")
    print(f"wrote {path}")
    return 0


def _cmd_selfcheck(args) -> int:
    return 0 if run_selfcheck() else 1


def dispatch(args) -> int:
    if args.command == "run":
        return _cmd_run(args)
    if args.command == "sweep":
        return _cmd_sweep(args)
    if args.command == "optimize":
        return _cmd_optimize(args)
    return _cmd_selfcheck(args)


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        return dispatch(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (RuntimeError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    raise SystemExit(main())
