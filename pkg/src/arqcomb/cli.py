"""Command-line driver.

``sim run <config> [--frames N] [--seed S] [--out PATH] [--workers W]``
    Run the Monte Carlo sweep described by a config file and write the CSV.
``sim verify``
    Run the built-in property checks (exit 3 on failure).
``sim presets``
    List the packaged scenario presets.

Exit codes: 0 ok, 1 config error, 2 I/O error, 3 verification failure.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import replace
from importlib import resources

from .harness import ConfigError, SweepInterrupted, emit_records, parse_config, run_sweep

__all__ = ["main", "preset_names", "load_preset"]


def preset_names() -> list[str]:
    root = resources.files("arqcomb").joinpath("presets")
    return sorted(p.name[: -len(".cfg")] for p in root.iterdir() if p.name.endswith(".cfg"))


def preset_text(name: str) -> str:
    path = resources.files("arqcomb").joinpath("presets", f"{name}.cfg")
    return path.read_text(encoding="utf-8")


def load_preset(name: str):
    return parse_config(preset_text(name))


def _cmd_run(args) -> int:
    try:
        with open(args.config, "r", encoding="utf-8") as fh:
            text = fh.read()
    except OSError as err:
        print(f"sim: cannot read {args.config}: {err}", file=sys.stderr)
        return 2
    try:
        scenario = parse_config(text)
        overrides = {}
        if args.frames is not None:
            overrides["n_frames"] = args.frames
        if args.seed is not None:
            overrides["seed"] = args.seed
        if args.out is not None:
            overrides["out"] = args.out
        if overrides:
            scenario = replace(scenario, **overrides)
        if scenario.n_frames < 1 or scenario.seed < 0:
            raise ConfigError("frames must be positive and seed non-negative")
    except ConfigError as err:
        print(f"sim: config error: {err}", file=sys.stderr)
        return 1

    interrupted = False
    try:
        records = run_sweep(scenario, workers=args.workers, progress=True)
    except SweepInterrupted as stop:
        print("sim: interrupted, flushing partial results", file=sys.stderr)
        records = stop.records
        interrupted = True
    try:
        emit_records(records, scenario.out)
    except OSError as err:
        print(f"sim: cannot write {scenario.out}: {err}", file=sys.stderr)
        return 2
    print(f"wrote {len(records)} records to {scenario.out}", file=sys.stderr)
    return 130 if interrupted else 0


def _cmd_verify(_args) -> int:
    from .verify import run_all

    return 0 if run_all() else 3


def _cmd_presets(_args) -> int:
    for name in preset_names():
        first = preset_text(name).splitlines()[0].lstrip("# ").strip()
        print(f"{name}: {first}")
    return 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="sim", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="run a Monte Carlo BLER sweep")
    run_p.add_argument("config", help="scenario config path")
    run_p.add_argument("--frames", type=int, default=None, help="override n_frames")
    run_p.add_argument("--seed", type=int, default=None, help="override seed")
    run_p.add_argument("--out", default=None, help="override output path")
    run_p.add_argument("--workers", type=int, default=1, help="parallel workers")
    run_p.set_defaults(fn=_cmd_run)

    verify_p = sub.add_parser("verify", help="run the built-in property checks")
    verify_p.set_defaults(fn=_cmd_verify)

    presets_p = sub.add_parser("presets", help="list packaged scenario presets")
    presets_p.set_defaults(fn=_cmd_presets)

    args = parser.parse_args(argv)
    return args.fn(args)


if __name__ == "__main__":
    raise SystemExit(main())
