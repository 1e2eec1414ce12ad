"""Command-line driver: one subcommand per sweep mode, plus `validate`.

    trilevel compare --config run.json --out rows.csv --threads 2
    trilevel semiclassical --kind xi --detuning d21=0 --detuning d32=0 \
        --na 40 --grid mu12=0:3:0.05 --grid mu23=0:3:0.05 --out surface.csv

CLI flags override fields of the JSON config file.  Exit codes: 0 success,
1 validation failure, 2 runtime failure (rows carry their error markers).
"""

from __future__ import annotations

import argparse
import sys

from .errors import ConfigError, TrilevelError
from .sweep import (
    MODES,
    GridAxis,
    RunConfig,
    load_config_file,
    run,
    validate,
    write_csv,
)
from .model import AtomConfig, Detunings
from . import semiclassical


def _parse_kv(text: str, flag: str) -> tuple[str, float]:
    if "=" not in text:
        raise ConfigError(f"{flag} expects key=value, got {text!r}")
    key, _, val = text.partition("=")
    try:
        return key.strip(), float(val)
    except ValueError as exc:
        raise ConfigError(f"{flag} {key}: not a number: {val!r}") from exc


def _parse_grid(text: str) -> GridAxis:
    if "=" not in text:
        raise ConfigError(f"--grid expects axis=min:max:step, got {text!r}")
    name, _, rng = text.partition("=")
    parts = rng.split(":")
    if len(parts) != 3:
        raise ConfigError(f"--grid {name}: expected min:max:step, got {rng!r}")
    try:
        lo, hi, step = (float(p) for p in parts)
    except ValueError as exc:
        raise ConfigError(f"--grid {name}: not numeric: {rng!r}") from exc
    return GridAxis(name.strip(), lo, hi, step)


def _add_common(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--config", metavar="FILE", help="JSON run configuration")
    sub.add_argument("--out", metavar="FILE", help="CSV output path (default stdout)")
    sub.add_argument("--threads", type=int, metavar="K", help="worker processes (default 1)")
    sub.add_argument("--kind", choices=["xi", "lambda", "v"], help="atomic configuration")
    sub.add_argument("--na", type=int, metavar="N", help="atom count")
    sub.add_argument("--omega", type=float, metavar="X", help="field frequency Omega")
    sub.add_argument("--omega1", type=float, metavar="X", help="lowest level energy")
    sub.add_argument(
        "--detuning", action="append", default=[], metavar="KEY=VAL",
        help="detuning component, e.g. d21=0.2 (repeatable)",
    )
    sub.add_argument(
        "--mu", action="append", default=[], metavar="KEY=VAL",
        help="fixed coupling, e.g. mu23=0.5 (repeatable)",
    )
    sub.add_argument(
        "--grid", action="append", default=[], metavar="AXIS=MIN:MAX:STEP",
        help="swept coupling axis (repeatable, at most 2)",
    )
    sub.add_argument(
        "--lattice", action="append", default=[], metavar="KEY=VAL",
        help="lattice search override: rho_max, cells, iterations",
    )
    sub.add_argument("--m-cap", type=int, dest="m_cap", help="excitation scan cap")
    sub.add_argument("--m-max", type=int, dest="m_max", help="distribution length")


def _build_config(args: argparse.Namespace, mode: str) -> RunConfig:
    if args.config:
        rc = load_config_file(args.config)
    else:
        if not args.kind:
            raise ConfigError("--kind is required when no --config file is given")
        rc = RunConfig(config=AtomConfig.from_kind(args.kind), mode=mode)
    if mode != "validate":
        rc.mode = mode
    if args.kind and args.config:
        rc.config = AtomConfig.from_kind(args.kind)
    if args.na is not None:
        rc.Na = args.na
    if args.omega is not None:
        rc.Omega = args.omega
    if args.omega1 is not None:
        rc.omega1 = args.omega1
    if args.detuning:
        keys = rc.config.detuning_keys
        vals = dict(zip(keys, rc.detunings.values)) if rc.detunings else {}
        for item in args.detuning:
            k, v = _parse_kv(item, "--detuning")
            if k not in keys:
                raise ConfigError(
                    f"--detuning {k}: invalid for {rc.config.kind.value} (expected {list(keys)})"
                )
            vals[k] = v
        rc.detunings = Detunings((vals.get(keys[0], 0.0), vals.get(keys[1], 0.0)))
        rc.omegas = None
    if args.mu:
        for item in args.mu:
            k, v = _parse_kv(item, "--mu")
            rc.mu[k] = v
    if args.grid:
        axes = {ax.name: ax for ax in rc.grid}
        for item in args.grid:
            ax = _parse_grid(item)
            axes[ax.name] = ax
        rc.grid = list(axes.values())
    if args.lattice:
        kw = {
            "rho_max": rc.lattice.rho_max,
            "cells": rc.lattice.cells,
            "iterations": rc.lattice.iterations,
            "max_expansions": rc.lattice.max_expansions,
        }
        for item in args.lattice:
            k, v = _parse_kv(item, "--lattice")
            if k not in kw:
                raise ConfigError(f"--lattice {k}: unknown field")
            kw[k] = v if k == "rho_max" else int(v)
        rc.lattice = semiclassical.LatticeSearch(**kw)
    if args.m_cap is not None:
        rc.m_cap = args.m_cap
    if args.m_max is not None:
        rc.m_max = args.m_max
    if args.threads is not None:
        rc.threads = args.threads
    if args.out is not None:
        rc.out = args.out
    return rc


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="trilevel",
        description="Ground states of three-level atoms in a one-mode cavity",
    )
    subs = parser.add_subparsers(dest="command", required=True)
    for mode in MODES:
        sub = subs.add_parser(mode, help=f"run a {mode} sweep")
        _add_common(sub)
    sub = subs.add_parser("validate", help="check a run configuration without running")
    _add_common(sub)
    args = parser.parse_args(argv)

    try:
        rc = _build_config(args, args.command)
    except (ConfigError, TrilevelError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1

    diags = validate(rc)
    if args.command == "validate":
        for d in diags:
            print(str(d))
        return 1 if any(d.severity == "error" for d in diags) else 0
    errors = [d for d in diags if d.severity == "error"]
    if errors:
        for d in diags:
            print(str(d), file=sys.stderr)
        return 1
    for d in diags:  # surface warnings, keep running
        print(str(d), file=sys.stderr)

    try:
        result = run(rc)
    except TrilevelError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2

    if rc.out:
        with open(rc.out, "w", encoding="utf-8", newline="") as fh:
            write_csv(result, fh)
        print(result.summary)
        print(f"wrote {len(result.rows)} rows to {rc.out}")
    else:
        write_csv(result, sys.stdout)
        print(result.summary, file=sys.stderr)
    return result.exit_code


if __name__ == "__main__":
    sys.exit(main())
