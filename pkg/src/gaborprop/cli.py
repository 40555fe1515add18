"""Command-line entry point.

Exit codes: 0 success (verify: pass), 1 verify found a violation,
2 malformed input, 3 resolution violation, 4 Hamiltonian outside the
implemented propagator family, 5 verify was inconclusive.
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import harness, quadham
from .cones import circle_directions, cubed_sphere_directions
from .propagators import UnsupportedHamiltonian, propagate
from .quadham import QuadraticHamiltonian, RuleError, hamilton_matrix
from .serialization import dumps
from .signals import SignalFormatError, builtin, read_signal, write_signal
from .tfa import PhaseGrid, ResolutionError, WindowSpec, decay_order, estimate_from_report, write_spectrogram_csv

EXIT_OK, EXIT_VIOLATION, EXIT_INPUT, EXIT_RESOLUTION, EXIT_UNSUPPORTED, EXIT_INCONCLUSIVE = 0, 1, 2, 3, 4, 5


class InputError(ValueError):
    pass


def _emit(obj, output: str | None) -> None:
    text = dumps(obj)
    if output:
        Path(output).write_text(text)
    else:
        sys.stdout.write(text)


def _load_signal(path: str, args) -> object:
    p = Path(path)
    if not p.exists():
        raise InputError(f"{path}: no such file")
    if args.grid_n is None and args.extent is None:
        return read_signal(p)
    # grid overrides only make sense for builtin signals
    try:
        header = json.loads(p.read_text())
    except json.JSONDecodeError as exc:
        raise SignalFormatError(f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}") from exc
    if not isinstance(header, dict) or "builtin" not in header:
        raise InputError(f"{path}: --grid-n/--extent apply to builtin signals only")
    N = int(args.grid_n if args.grid_n is not None else header.get("N"))
    L = float(args.extent if args.extent is not None else header.get("L"))
    return builtin(header["builtin"], N, L, int(header.get("d", 1)))


def _load_hamiltonian(spec: str, args) -> QuadraticHamiltonian:
    """A JSON file, a preset name (heat, free_schrodinger, harmonic) or random:normal / random:generic."""
    d = getattr(args, "dim", None) or 1
    named = {"heat": quadham.heat, "free_schrodinger": quadham.free_schrodinger, "harmonic": quadham.harmonic}
    if spec in named:
        return named[spec](d)
    if spec.startswith("random:"):
        rng = np.random.default_rng(args.seed)
        kind = spec.split(":", 1)[1]
        if kind == "normal":
            return quadham.random_normal_hamiltonian(d, rng)
        if kind == "generic":
            return quadham.random_hamiltonian(d, rng)
        raise InputError(f"unknown random Hamiltonian kind {kind!r}")
    p = Path(spec)
    if not p.exists():
        raise InputError(f"{spec}: no such file or preset")
    try:
        obj = json.loads(p.read_text())
    except json.JSONDecodeError as exc:
        raise InputError(f"{spec}:{exc.lineno}:{exc.colno}: {exc.msg}") from exc
    if not isinstance(obj, dict):
        raise InputError(f"{spec}:1: Hamiltonian must be a JSON object")
    return QuadraticHamiltonian.from_dict(obj)


def _directions(d: int, n: int | None):
    if n is None:
        return None
    return circle_directions(n) if d == 1 else cubed_sphere_directions(4, n)


def _grid(u, args, strict: bool = True) -> PhaseGrid:
    return PhaseGrid.for_signal(
        u,
        r_min=args.r_min,
        r_max=args.r_max,
        rho=args.rho,
        directions=_directions(u.d, args.directions),
        strict=strict,
    )


def _set_dict(dirs) -> dict:
    return {"count": len(dirs), "directions": dirs.to_list()}


# -- subcommands -------------------------------------------------------------

def cmd_analyze(args) -> int:
    u = _load_signal(args.signal, args)
    w = WindowSpec(args.window)
    grid = _grid(u, args)
    rep = decay_order(u, w, grid)
    out = {
        "signal": {"d": u.d, "N": u.N, "L": u.L},
        "report": rep.to_dict(),
        "margin": args.margin,
        "estimates": [
            {"s": float(s), **_set_dict(estimate_from_report(rep, s, args.margin))} for s in args.orders
        ],
    }
    _emit(out, args.output)
    if args.spectrogram:
        write_spectrogram_csv(u, w, grid, args.spectrogram)
    return EXIT_OK


def cmd_propagate(args) -> int:
    u = _load_signal(args.signal, args)
    args.dim = u.d
    q = _load_hamiltonian(args.hamiltonian, args)
    v, path = propagate(u, q, args.time)
    if not args.output:
        raise InputError("propagate needs --output (header path; payload goes next to it)")
    write_signal(v, args.output, extra={"propagator": path, "time": float(args.time)})
    return EXIT_OK


def cmd_predict(args) -> int:
    u = _load_signal(args.signal, args)
    args.dim = u.d
    q = _load_hamiltonian(args.hamiltonian, args)
    h = hamilton_matrix(q)
    rule = args.rule or quadham.default_rule(h)
    w = WindowSpec(args.window)
    grid = _grid(u, args)
    tol = grid.directions.angular_resolution if args.tolerance_angle is None else args.tolerance_angle
    rep = decay_order(u, w, grid)
    rows = []
    for t in args.times:
        for s in args.orders:
            budget = quadham.order_budget(h, rule, s)
            dirs = estimate_from_report(rep, s, args.margin)
            pred = quadham.predicted_set(h, t, dirs, budget, tol_angle=tol)
            rows.append({"t": float(t), "s": float(s), "r": budget.r_out, "input": _set_dict(dirs), "predicted": _set_dict(pred)})
    _emit({"rule": rule, "hamiltonian": q.to_dict(), "tolerance_angle": tol, "predictions": rows}, args.output)
    return EXIT_OK


def cmd_singular_space(args) -> int:
    q = _load_hamiltonian(args.hamiltonian, args)
    out = quadham.describe(hamilton_matrix(q))
    out["hamiltonian"] = q.to_dict()
    _emit(out, args.output)
    return EXIT_OK


def cmd_verify(args) -> int:
    path = Path(args.experiment)
    if not path.exists():
        raise InputError(f"{args.experiment}: no such file")
    e = harness.load_experiment(path)
    e = harness.with_overrides(
        e,
        N=args.grid_n,
        L=args.extent,
        window=args.window_override,
        tolerance_angle=args.tolerance_angle,
        r_min=args.r_min,
        r_max=args.r_max,
    )
    report = harness.run_experiment(e)
    _emit(report.to_dict(), args.output)
    if args.margins_csv:
        Path(args.margins_csv).write_text(report.margins_csv())
    return {"pass": EXIT_OK, "violation": EXIT_VIOLATION, "inconclusive": EXIT_INCONCLUSIVE}[report.verdict]


# -- parser ------------------------------------------------------------------

def _positive_int(text: str) -> int:
    v = int(text)
    if v <= 0:
        raise argparse.ArgumentTypeError("must be a positive integer")
    return v


def _positive_float(text: str) -> float:
    v = float(text)
    if not v > 0:
        raise argparse.ArgumentTypeError("must be positive")
    return v


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--grid-n", type=_positive_int, help="override N for builtin signals (power of two)")
    common.add_argument("--extent", type=_positive_float, help="override the half extent L for builtin signals")
    common.add_argument("--directions", type=_positive_int, help="d=1: directions on the circle; d=2: cube subdivisions")
    common.add_argument("--tolerance-angle", type=_positive_float, help="angular tolerance in radians")
    common.add_argument("--output", "-o", help="output path (default: stdout)")
    common.add_argument("--seed", type=int, default=0, help="seed for random:* Hamiltonians")
    common.add_argument("--r-min", type=_positive_float)
    common.add_argument("--r-max", type=_positive_float)
    common.add_argument("--rho", type=_positive_float, default=2**0.25)
    common.add_argument("--margin", type=float, default=0.25, help="order margin of the thresholded estimates")

    p = argparse.ArgumentParser(prog="gaborprop", description="Gabor wave front sets under quadratic propagators")
    sub = p.add_subparsers(dest="command", required=True)

    a = sub.add_parser("analyze", parents=[common], help="estimate decay orders and WF_s of a signal")
    a.add_argument("signal")
    a.add_argument("--window", default="gaussian")
    a.add_argument("--orders", type=float, nargs="+", default=[1.0])
    a.add_argument("--spectrogram", help="also write the ray STFT samples as CSV")
    a.set_defaults(func=cmd_analyze)

    pr = sub.add_parser("propagate", parents=[common], help="apply e^{-tq^w} on the grid")
    pr.add_argument("signal")
    pr.add_argument("hamiltonian", help="JSON file, heat, free_schrodinger, harmonic, or random:normal|generic")
    pr.add_argument("--time", "-t", type=float, required=True)
    pr.set_defaults(func=cmd_propagate)

    pd = sub.add_parser("predict", parents=[common], help="predicted WF cone after propagation")
    pd.add_argument("signal")
    pd.add_argument("hamiltonian")
    pd.add_argument("--times", type=float, nargs="+", default=[0.5])
    pd.add_argument("--orders", type=float, nargs="+", default=[1.0])
    pd.add_argument("--rule", choices=quadham.RULES)
    pd.add_argument("--window", default="gaussian")
    pd.set_defaults(func=cmd_predict)

    s = sub.add_parser("singular-space", parents=[common], help="singular space, Ker Re F and applicable rules")
    s.add_argument("hamiltonian")
    s.add_argument("--dim", type=int, choices=(1, 2), default=1, help="d for presets and random Hamiltonians")
    s.set_defaults(func=cmd_singular_space)

    v = sub.add_parser("verify", parents=[common], help="run an inclusion experiment")
    v.add_argument("experiment")
    v.add_argument("--window", dest="window_override")
    v.add_argument("--margins-csv")
    v.set_defaults(func=cmd_verify)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ResolutionError as exc:
        print(f"resolution error: {exc}", file=sys.stderr)
        return EXIT_RESOLUTION
    except UnsupportedHamiltonian as exc:
        print(f"unsupported Hamiltonian: {exc}", file=sys.stderr)
        return EXIT_UNSUPPORTED
    except (InputError, SignalFormatError, harness.ExperimentError, RuleError, ValueError, KeyError, TypeError) as exc:
        print(f"malformed input: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
