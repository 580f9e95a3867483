"""Command-line entry point: ``entrofv <command> [flags]``."""

from __future__ import annotations

import argparse
import dataclasses
import logging
import math
import sys
from pathlib import Path

from . import experiments as ex
from .mesh import export_mesh, regularity_report

COMMANDS = tuple(ex.RUNNERS) + ("mesh",)

# flags whose default differs per command
_DEFAULTS = {
    "convergence": {"mesh": "tri:0"},
    "decay-tpfa": {"mesh": "tri:0", "dt": 1e-4, "tfinal": 2.0, "case": "tpfa_mixed"},
    "decay-ddfv": {"mesh": "cart:32", "dt": 2e-3, "tfinal": 10.0, "case": "ddfv_eps"},
    "check-inequalities": {"mesh": "cart:4"},
    "validate-case": {"case": "tpfa_mixed"},
}


def _parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="entrofv", description="Entropy-dissipative finite volume experiments.")
    ap.add_argument("command", choices=COMMANDS)
    ap.add_argument("action", nargs="?", default=None, help="for 'mesh': info | generate | export")
    ap.add_argument("--config", help="key = value file; explicit flags override it")
    ap.add_argument("--mesh", help="tri:LEVEL | cart:N[xM] | quad:N[:AMP] | file:PATH")
    ap.add_argument("--mean", help="arithmetic | logarithmic | sqrtsquare | max")
    ap.add_argument("--means", help="comma list for the convergence table")
    ap.add_argument("--combiner", help="max | arithmetic (DDFV)")
    ap.add_argument("--dt", type=float)
    ap.add_argument("--tfinal", type=float)
    ap.add_argument("--case", help="tpfa_mixed | ddfv_eps")
    ap.add_argument("--eps", type=float)
    ap.add_argument("--lambda11", type=float)
    ap.add_argument("--p", help="comma list of entropy exponents")
    ap.add_argument("--seed", type=int)
    ap.add_argument("--out", help="output directory")
    ap.add_argument("--levels", type=int)
    ap.add_argument("--dt0", type=float, help="coarsest time step of the convergence table")
    ap.add_argument("--sampling", help="initial data: centroid | center | average")
    ap.add_argument("--draws", type=int)
    ap.add_argument("--jobs", type=int)
    ap.add_argument("--sign", type=float, default=-1.0, help="validate-case: sign of the potential slope")
    ap.add_argument("-v", "--verbose", action="store_true")
    return ap


def build_config(args: argparse.Namespace) -> ex.RunConfig:
    values = dict(_DEFAULTS.get(args.command, {}))
    if args.config:
        values.update(ex.parse_config_text(Path(args.config).read_text()))
    names = {f.name for f in dataclasses.fields(ex.RunConfig)}
    for name in names:
        v = getattr(args, name, None)
        if v is not None:
            values[name] = ex.coerce(name, v) if isinstance(v, str) else v
    if args.command == "decay-ddfv":
        values["scheme"] = "ddfv"
    return ex.RunConfig(**values)


def _show(results: dict, indent: str = "") -> None:
    for k, v in results.items():
        if k == "series":
            continue
        if isinstance(v, dict):
            print(f"{indent}{k}:")
            _show(v, indent + "  ")
        elif isinstance(v, list):
            for row in v:
                print(indent + "  ".join(f"{kk}={_short(vv)}" for kk, vv in row.items()))
        else:
            print(f"{indent}{k} = {_short(v)}")


def _short(v):
    if isinstance(v, float):
        return "nan" if math.isnan(v) else f"{v:.6g}"
    return v


def _mesh_command(action: str | None, config: ex.RunConfig) -> int:
    mesh = ex.build_mesh(config.mesh)
    if action in (None, "info"):
        for k, v in regularity_report(mesh).items():
            print(f"{k} = {v}")
        return 0
    if action in ("generate", "export"):
        text = export_mesh(mesh)
        if config.out:
            path = Path(config.out)
            if path.suffix == "":
                path.mkdir(parents=True, exist_ok=True)
                path = path / "mesh.txt"
            path.write_text(text)
            print(path)
        else:
            sys.stdout.write(text)
        return 0
    print(f"unknown mesh action {action!r}", file=sys.stderr)
    return 2


def main(argv: list[str] | None = None) -> int:
    args = _parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING)
    try:
        config = build_config(args)
    except ValueError as err:
        print(f"error: {err}", file=sys.stderr)
        return 2
    if args.command == "mesh":
        return _mesh_command(args.action, config)
    if args.command == "validate-case":
        results = ex.run_validate_case(config, sign=args.sign)
    else:
        results = ex.RUNNERS[args.command](config)
    _show(results)
    return 0


if __name__ == "__main__":
    sys.exit(main())
