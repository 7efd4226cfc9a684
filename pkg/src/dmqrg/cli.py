"""Batch command line: ``dmqrg {sweep,flow,scaling,surface,oracle,plot}``.

Exit codes: 0 success, 2 invalid arguments (nothing is computed or written),
3 numerical failure (the error class name goes to stderr).
"""

from __future__ import annotations

import argparse
import ast
import json
import math
import operator
import os
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from .block_rg import Couplings, flow
from .config import TOL
from .errors import MalformedResultFile, NumericalError

EXIT_OK, EXIT_INVALID, EXIT_NUMERICAL = 0, 2, 3
WORKERS_ENV = "DMQRG_WORKERS"

_BINOPS = {ast.Add: operator.add, ast.Sub: operator.sub, ast.Mult: operator.mul, ast.Div: operator.truediv,
           ast.Pow: operator.pow}
_UNARY = {ast.USub: operator.neg, ast.UAdd: operator.pos}
_FUNCS = {"sqrt": math.sqrt}
_NAMES = {"pi": math.pi, "e": math.e}


def parse_number(text: str) -> float:
    """Evaluate a numeric literal or a small expression such as ``sqrt(2)`` or ``sqrt(1+0.5**2)``."""

    def ev(node):
        if isinstance(node, ast.Expression):
            return ev(node.body)
        if isinstance(node, ast.Constant) and isinstance(node.value, (int, float)) and not isinstance(node.value, bool):
            return float(node.value)
        if isinstance(node, ast.BinOp) and type(node.op) in _BINOPS:
            return _BINOPS[type(node.op)](ev(node.left), ev(node.right))
        if isinstance(node, ast.UnaryOp) and type(node.op) in _UNARY:
            return _UNARY[type(node.op)](ev(node.operand))
        if isinstance(node, ast.Name) and node.id in _NAMES:
            return _NAMES[node.id]
        if (isinstance(node, ast.Call) and isinstance(node.func, ast.Name) and node.func.id in _FUNCS
                and len(node.args) == 1 and not node.keywords):
            return _FUNCS[node.func.id](ev(node.args[0]))
        raise ValueError
    try:
        value = ev(ast.parse(text.strip(), mode="eval"))
    except (SyntaxError, ValueError, TypeError, ZeroDivisionError, OverflowError):
        raise argparse.ArgumentTypeError(f"not a number or supported expression: {text!r}") from None
    if not math.isfinite(value):
        raise argparse.ArgumentTypeError(f"value is not finite: {text!r}")
    return value


def number_list(text: str) -> list[float]:
    return [parse_number(t) for t in text.split(",") if t.strip()]


def int_list(text: str) -> list[int]:
    try:
        return [int(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers: {text!r}") from None


def step_range(text: str) -> list[int]:
    """``"2:7"`` -> [2..7] inclusive; a plain integer or comma list is also accepted."""
    try:
        if ":" in text:
            lo, hi = text.split(":")
            return list(range(int(lo), int(hi) + 1))
        return [int(t) for t in text.split(",")]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a:b or comma-separated integers: {text!r}") from None


@dataclass
class RunConfig:
    command: str
    couplings: Couplings
    n_steps: list[int] = field(default_factory=list)
    output_path: Optional[Path] = None
    format: str = "csv"
    workers: int = 1
    options: dict = field(default_factory=dict)


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="dmqrg", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, fmt=True):
        sp.add_argument("--j", type=parse_number, default=1.0, help="overall coupling J (default 1)")
        sp.add_argument("-o", "--output", type=Path, help="output file (default: stdout)")
        if fmt:
            sp.add_argument("--format", choices=("csv", "json"), default=None)
        sp.add_argument("--workers", type=int, default=None,
                        help=f"worker processes (default: ${WORKERS_ENV} or all cores)")

    s = sub.add_parser("sweep", help="observable along one coupling")
    s.add_argument("--axis", choices=("delta", "d", "Delta", "D"), required=True)
    s.add_argument("--min", type=parse_number, required=True)
    s.add_argument("--max", type=parse_number, required=True)
    s.add_argument("--points", type=int, required=True)
    s.add_argument("--delta", type=number_list, default=None, help="fixed Delta value(s) for --axis d")
    s.add_argument("--d", type=number_list, default=None, help="fixed D value(s) for --axis delta")
    s.add_argument("--steps", type=int_list, default=[0], help="RG step count(s), comma-separated")
    s.add_argument("--observable", default="C13")
    common(s)

    f = sub.add_parser("flow", help="coupling flow under repeated RG steps")
    f.add_argument("--delta", type=parse_number, required=True)
    f.add_argument("--d", type=parse_number, required=True)
    f.add_argument("--steps", type=int, required=True)
    common(f)

    sc = sub.add_parser("scaling", help="D_m and |dC/dDelta|_min scaling fits")
    sc.add_argument("--delta", type=parse_number, default=math.sqrt(2.0))
    sc.add_argument("--steps", type=step_range, default=list(range(2, 8)), help="RG steps, e.g. 2:7")
    sc.add_argument("--coarse-points", type=int, default=401)
    common(sc, fmt=False)

    sf = sub.add_parser("surface", help="dC/dDelta over a (D, Delta) grid")
    sf.add_argument("--delta-min", type=parse_number, default=1.0)
    sf.add_argument("--delta-max", type=parse_number, default=2.5)
    sf.add_argument("--delta-points", type=int, default=60)
    sf.add_argument("--d-min", type=parse_number, default=0.0)
    sf.add_argument("--d-max", type=parse_number, default=2.0)
    sf.add_argument("--d-points", type=int, default=60)
    sf.add_argument("--steps", type=int, default=6)
    sf.add_argument("--observable", default="dC13_dDelta")
    common(sf)

    o = sub.add_parser("oracle", help="exact diagonalization of a short chain")
    o.add_argument("--sites", type=int, default=3)
    o.add_argument("--delta", type=parse_number, required=True)
    o.add_argument("--d", type=parse_number, required=True)
    o.add_argument("--boundary", choices=("open", "periodic"), default="open")
    o.add_argument("--pairs", default=None, help="site pairs like '1,2;1,3' (default: (1,2) and (1,3))")
    common(o, fmt=False)

    pl = sub.add_parser("plot", help="write a matplotlib script for a result file")
    pl.add_argument("result", type=Path)
    pl.add_argument("--kind", choices=("sweep", "flow", "scaling", "surface"), required=True)
    return p


def _workers(requested: Optional[int]) -> int:
    if requested is not None:
        return max(1, requested)
    env = os.environ.get(WORKERS_ENV)
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            raise ValueError(f"{WORKERS_ENV} must be an integer, got {env!r}") from None
    return os.cpu_count() or 1


def _format(args, default="csv") -> str:
    if getattr(args, "format", None):
        return args.format
    if args.output is not None and args.output.suffix.lower() == ".json":
        return "json"
    return default


def _check_output(path: Optional[Path]) -> None:
    if path is not None and not (path.parent if str(path.parent) else Path(".")).is_dir():
        raise ValueError(f"output directory {path.parent} does not exist")


def _check_steps(steps) -> None:
    for n in steps:
        if not 0 <= n <= TOL.max_steps:
            raise ValueError(f"steps must be in [0, {TOL.max_steps}], got {n}")


def _pairs(text: Optional[str], n_sites: int) -> list[tuple[int, int]]:
    if text is None:
        return [p for p in ((1, 2), (1, 3)) if p[1] <= n_sites]
    out = []
    for chunk in text.split(";"):
        a, b = (int(t) for t in chunk.split(","))
        if a == b or not (1 <= a <= n_sites and 1 <= b <= n_sites):
            raise ValueError(f"invalid site pair {chunk!r} for {n_sites} sites")
        out.append((a, b))
    return out


def validate(args) -> RunConfig:
    """Turn parsed arguments into a RunConfig; raises ValueError before any computation."""
    cmd = args.command
    if cmd == "plot":
        return RunConfig("plot", Couplings(), options={"result": args.result, "kind": args.kind})
    _check_output(args.output)
    workers = _workers(args.workers)
    if cmd == "sweep":
        from .scaling import canonical_axis, canonical_observable

        axis = canonical_axis(args.axis)
        if args.points < 1:
            raise ValueError("--points must be at least 1")
        if args.points > 1 and not args.max > args.min:
            raise ValueError("--max must exceed --min")
        _check_steps(args.steps)
        fixed_vals = (args.d if axis == "Delta" else args.delta) or [0.0 if axis == "Delta" else 1.0]
        grid = np.linspace(args.min, args.max, args.points) if args.points > 1 else np.array([args.min])
        series = []
        for val in fixed_vals:
            base = Couplings(J=args.j, Delta=val, D=0.0) if axis == "D" else Couplings(J=args.j, Delta=0.0, D=val)
            for x in (grid[0], grid[-1]):
                base.with_(**{axis: float(x)})
            series.append(base)
        return RunConfig(cmd, series[0], args.steps, args.output, _format(args), workers,
                         {"axis": axis, "grid": grid, "bases": series,
                          "observable": canonical_observable(args.observable)})
    if cmd == "flow":
        _check_steps([args.steps])
        return RunConfig(cmd, Couplings(J=args.j, Delta=args.delta, D=args.d), [args.steps], args.output,
                         _format(args), workers)
    if cmd == "scaling":
        _check_steps(args.steps)
        if len(args.steps) < 3:
            raise ValueError("scaling needs at least three RG step values")
        if args.delta <= 1.0:
            raise ValueError("scaling along D needs Delta > 1 so that D_c = sqrt(Delta^2 - 1) exists")
        if args.coarse_points < 3:
            raise ValueError("--coarse-points must be at least 3")
        return RunConfig(cmd, Couplings(J=args.j, Delta=args.delta, D=0.0), args.steps, args.output, "json",
                         workers, {"coarse_points": args.coarse_points})
    if cmd == "surface":
        from .scaling import canonical_observable

        _check_steps([args.steps])
        if args.delta_points < 1 or args.d_points < 1:
            raise ValueError("grid point counts must be positive")
        dg = np.linspace(args.delta_min, args.delta_max, args.delta_points)
        Dg = np.linspace(args.d_min, args.d_max, args.d_points)
        for x in (dg[0], dg[-1]):
            for d in (Dg[0], Dg[-1]):
                Couplings(J=args.j, Delta=x, D=d)
        return RunConfig(cmd, Couplings(J=args.j), [args.steps], args.output, _format(args), workers,
                         {"delta_grid": dg, "d_grid": Dg, "observable": canonical_observable(args.observable)})
    if cmd == "oracle":
        from .ed_oracle import ChainSpec

        spec = ChainSpec(args.sites, Couplings(J=args.j, Delta=args.delta, D=args.d), args.boundary)
        return RunConfig(cmd, spec.couplings, [], args.output, "json", workers,
                         {"spec": spec, "pairs": _pairs(args.pairs, args.sites)})
    raise ValueError(f"unknown command {cmd!r}")


def run(cfg: RunConfig) -> str:
    """Execute a validated configuration and return the serialized result."""
    from . import results_io as rio

    if cfg.command == "sweep":
        from .scaling import sweep

        results = [
            sweep(base, cfg.options["axis"], cfg.options["grid"], n, cfg.options["observable"], cfg.workers)
            for base in cfg.options["bases"]
            for n in cfg.n_steps
        ]
        return rio.sweeps_to_json(results) if cfg.format == "json" else rio.sweeps_to_csv(results)
    if cfg.command == "flow":
        trace = flow(cfg.couplings, cfg.n_steps[0])
        return rio.flow_to_json(trace) if cfg.format == "json" else rio.flow_to_csv(trace)
    if cfg.command == "scaling":
        from .scaling import default_coarse_grid, scaling_analysis

        grid = default_coarse_grid(cfg.couplings.Delta)
        grid = np.linspace(grid[0], grid[-1], cfg.options["coarse_points"])
        report = scaling_analysis(cfg.couplings.Delta, cfg.n_steps, cfg.couplings.J, grid, cfg.workers)
        return rio.scaling_to_json(report)
    if cfg.command == "surface":
        from .scaling import singularity_surface

        s = singularity_surface(cfg.options["delta_grid"], cfg.options["d_grid"], cfg.n_steps[0],
                                cfg.options["observable"], cfg.couplings.J, cfg.workers)
        return rio.surface_to_json(s, cfg.couplings.J) if cfg.format == "json" else rio.surface_to_csv(s, cfg.couplings.J)
    if cfg.command == "oracle":
        from .ed_oracle import ground_state_ed, pair_concurrence_ed

        spec = cfg.options["spec"]
        energy, states = ground_state_ed(spec)
        pairs = [pair_concurrence_ed(spec, a, b) for a, b in cfg.options["pairs"]]
        doc = {
            "kind": "oracle",
            "n_sites": spec.n_sites,
            "boundary": spec.boundary,
            "J": spec.couplings.J,
            "delta": spec.couplings.Delta,
            "D": spec.couplings.D,
            "energy": energy,
            "degeneracy": int(states.shape[1]),
            "pairs": [
                {"sites": list(p.sites), "sz": list(p.sz), "values": list(p.values), "gauge_value": p.gauge_value}
                for p in pairs
            ],
        }
        return json.dumps(doc, indent=2, allow_nan=False) + "\n"
    if cfg.command == "plot":
        return str(rio.emit_plot_script(cfg.options["result"], cfg.options["kind"])) + "\n"
    raise ValueError(cfg.command)


def main(argv: Optional[list[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code in (0, None) else EXIT_INVALID
    try:
        cfg = validate(args)
    except (ValueError, argparse.ArgumentTypeError) as exc:
        print(f"dmqrg: error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    try:
        text = run(cfg)
    except MalformedResultFile as exc:
        print(f"MalformedResultFile: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except NumericalError as exc:
        print(f"{type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except ValueError as exc:
        # e.g. a fit whose minima fall past the critical point
        print(f"{type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except OSError as exc:
        print(f"dmqrg: error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    if cfg.command != "plot" and cfg.output_path is not None:
        from .results_io import atomic_write

        atomic_write(cfg.output_path, text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
