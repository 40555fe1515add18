"""End-to-end inclusion experiments.

For every time t and input order s the harness estimates WF_s(u0), maps it
through the predicted cone of the chosen rule, estimates WF_r(e^{-tq^w}u0) at
the budgeted output order r, and checks observed ⊆ predicted up to the
angular tolerance.  Both cones are closed by one step on the direction grid
before the comparison, so a line that falls between two grid directions is
treated the same way on either side.
"""
from __future__ import annotations

import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from . import quadham
from .cones import DirectionSet, default_directions
from .propagators import propagate
from .quadham import QuadraticHamiltonian, hamilton_matrix, order_budget, predicted_set
from .signals import builtin
from .tfa import DEFAULT_MARGIN, PhaseGrid, WavefrontReport, WindowSpec, decay_order, estimate_from_report

UNRELIABLE_LIMIT = 0.25
PRESETS = ("heat", "free_schrodinger", "harmonic", "damping", "custom")
_GRID_DEFAULTS = {1: (4096, 64.0), 2: (256, 16.0)}


class ExperimentError(ValueError):
    """Malformed experiment description."""


@dataclass(frozen=True, eq=False)
class Experiment:
    q: QuadraticHamiltonian
    signal: dict
    times: tuple
    orders: tuple
    rule: str
    name: str = "custom"
    N: int | None = None
    L: float | None = None
    window: str = "gaussian"
    r_min: float | None = None
    r_max: float | None = None
    rho: float = 2**0.25
    tolerance_angle: float | None = None
    margin: float = DEFAULT_MARGIN
    predicted_override: str | None = None

    def __post_init__(self):
        d = self.q.dim_d
        if d not in _GRID_DEFAULTS:
            raise ExperimentError(f"only d in (1, 2) is supported, got {d}")
        N, L = _GRID_DEFAULTS[d]
        object.__setattr__(self, "N", N if self.N is None else int(self.N))
        object.__setattr__(self, "L", L if self.L is None else float(self.L))
        object.__setattr__(self, "times", tuple(float(t) for t in self.times))
        object.__setattr__(self, "orders", tuple(float(s) for s in self.orders))
        if not self.times or not self.orders:
            raise ExperimentError("experiment needs at least one time and one order")
        quadham.check_rule(hamilton_matrix(self.q), self.rule)
        if self.predicted_override not in (None, "empty"):
            raise ExperimentError("predicted_override must be 'empty' when given")
        WindowSpec(self.window)

    @property
    def d(self) -> int:
        return self.q.dim_d

    def to_dict(self) -> dict:
        out = {
            "name": self.name,
            "hamiltonian": self.q.to_dict(),
            "signal": self.signal,
            "times": list(self.times),
            "orders": list(self.orders),
            "rule": self.rule,
            "grid": {"N": self.N, "L": self.L, "r_min": self.r_min, "r_max": self.r_max, "rho": self.rho},
            "window": self.window,
            "tolerance_angle": self.tolerance_angle,
            "margin": self.margin,
        }
        if self.predicted_override:
            out["predicted_override"] = self.predicted_override
        return out


def preset(name: str, *, d: int = 1, A=None, Q=None, **overrides) -> Experiment:
    """Experiment with the default signal, times, orders and rule of a named preset."""
    if name == "heat":
        base = dict(
            q=quadham.heat(d),
            signal={"name": "sum", "terms": [{"name": "delta"}, {"name": "constant"}]},
            times=(0.25, 0.5, 1.0),
            rule="equal",
        )
    elif name == "harmonic":
        base = dict(q=quadham.harmonic(d), signal={"name": "delta"}, times=(np.pi / 8, np.pi / 4), rule="exact")
    elif name == "free_schrodinger":
        base = dict(q=quadham.free_schrodinger(d), signal={"name": "chirp", "a": 1.0}, times=(0.5,), rule="exact")
    elif name == "damping":
        A = np.diag([1.0, 0.0]) if A is None else A
        base = dict(q=quadham.damping(A), signal={"name": "constant"}, times=(1.0,), rule="equal")
    elif name == "custom":
        if Q is None:
            raise ExperimentError("custom preset needs Q")
        q = Q if isinstance(Q, QuadraticHamiltonian) else QuadraticHamiltonian(Q)
        base = dict(q=q, signal={"name": "delta"}, times=(0.5,), rule=quadham.default_rule(hamilton_matrix(q)))
    else:
        raise ExperimentError(f"unknown preset {name!r}; expected one of {PRESETS}")
    base.update(orders=(1.0,), name=name)
    base.update(overrides)
    return Experiment(**base)


@dataclass(frozen=True, eq=False)
class InclusionResult:
    t: float
    s: float
    r: float
    observed: DirectionSet
    predicted: DirectionSet
    violations: list
    tolerance: float
    verdict: str

    @property
    def passed(self) -> bool:
        return self.verdict == "pass"

    @property
    def margin(self) -> float:
        """tolerance minus the worst observed distance (inf when nothing is observed)."""
        if len(self.observed) == 0:
            return float("inf")
        return float(self.tolerance - np.max(self.predicted.distance_to(self.observed.dirs)))

    def to_dict(self) -> dict:
        return {
            "t": self.t,
            "s": self.s,
            "r": self.r,
            "observed": self.observed.to_list(),
            "predicted": self.predicted.to_list(),
            "violations": [{"direction": list(v), "distance": dist} for v, dist in self.violations],
            "margin": self.margin,
            "verdict": self.verdict,
        }


@dataclass(frozen=True, eq=False)
class InclusionReport:
    experiment: Experiment
    results: list
    input_report: WavefrontReport
    output_reports: dict = field(default_factory=dict)
    paths: dict = field(default_factory=dict)

    @property
    def verdict(self) -> str:
        verdicts = {r.verdict for r in self.results}
        if "inconclusive" in verdicts:
            return "inconclusive"
        if "violation" in verdicts:
            return "violation"
        return "pass"

    @property
    def passed(self) -> bool:
        return self.verdict == "pass"

    def result(self, t: float, s: float) -> InclusionResult:
        for r in self.results:
            if np.isclose(r.t, t) and np.isclose(r.s, s):
                return r
        raise KeyError((t, s))

    def to_dict(self) -> dict:
        return {
            "experiment": self.experiment.to_dict(),
            "verdict": self.verdict,
            "results": [r.to_dict() for r in self.results],
            "input_orders": _order_map(self.input_report),
            "output_orders": [
                {"t": t, "path": self.paths[t], "orders": _order_map(rep)} for t, rep in sorted(self.output_reports.items())
            ],
        }

    def margins_csv(self) -> str:
        lines = ["t,s,direction,distance"]
        for r in self.results:
            dist = r.predicted.distance_to(r.observed.dirs) if len(r.observed) else []
            for v, dv in zip(r.observed.dirs, dist):
                comp = " ".join("%.17g" % c for c in v)
                lines.append("%.17g,%.17g,%s,%.17g" % (r.t, r.s, comp, dv))
        return "\n".join(lines) + "\n"


def _order_map(rep: WavefrontReport) -> dict:
    return {
        "center": rep.center.tolist(),
        "unreliable_fraction": rep.unreliable_fraction,
        "orders": [float(s) for s in rep.orders],
        "reliable": [bool(b) for b in rep.reliable],
    }


def run_experiment(e: Experiment, workers: int | None = None) -> InclusionReport:
    h = hamilton_matrix(e.q)
    u0 = builtin(e.signal, e.N, e.L, e.d)
    w = WindowSpec(e.window)
    grid = PhaseGrid.for_signal(u0, r_min=e.r_min, r_max=e.r_max, rho=e.rho, directions=default_directions(e.d))
    tol = grid.directions.angular_resolution if e.tolerance_angle is None else float(e.tolerance_angle)
    rep_in = decay_order(u0, w, grid)

    def evolve(t):
        ut, path = propagate(u0, e.q, t)
        return t, path, decay_order(ut, w, grid)

    with ThreadPoolExecutor(max_workers=workers) as pool:
        evolved = sorted(pool.map(evolve, sorted(set(e.times))), key=lambda item: item[0])
    paths = {t: path for t, path, _ in evolved}
    reps = {t: rep for t, _, rep in evolved}

    results = []
    for t in e.times:
        rep_out = reps[t]
        unreliable = max(rep_in.unreliable_fraction, rep_out.unreliable_fraction) > UNRELIABLE_LIMIT
        for s in e.orders:
            budget = order_budget(h, e.rule, s)
            if e.predicted_override == "empty":
                predicted = DirectionSet.empty(2 * e.d, grid.directions.angular_resolution)
            else:
                input_dirs = estimate_from_report(rep_in, s, e.margin)
                predicted = predicted_set(h, t, input_dirs, budget, tol_angle=tol)
                # close the predicted cone on the direction grid, as estimates are
                predicted = predicted.dilate(grid.directions, 1.0)
            observed = estimate_from_report(rep_out, budget.r_out, e.margin)
            dist = predicted.distance_to(observed.dirs) if len(observed) else np.zeros(0)
            violations = [(v.tolist(), float(dv)) for v, dv in zip(observed.dirs, dist) if dv > tol + 1e-9]
            verdict = "inconclusive" if unreliable else ("violation" if violations else "pass")
            results.append(InclusionResult(t, s, budget.r_out, observed, predicted, violations, tol, verdict))
    return InclusionReport(e, results, rep_in, reps, paths)


# -- experiment files --------------------------------------------------------

def experiment_from_dict(obj: dict) -> Experiment:
    """Build an Experiment from its JSON description.

    ``{"preset": name, ...overrides}``; ``custom`` takes a ``hamiltonian``
    object, ``damping`` an optional ``A`` matrix, and ``grid`` may set
    N, L, r_min, r_max, rho.
    """
    if not isinstance(obj, dict):
        raise ExperimentError("experiment must be a JSON object")
    obj = dict(obj)
    name = obj.pop("preset", "custom")
    kwargs: dict = {}
    try:
        if "hamiltonian" in obj:
            q = QuadraticHamiltonian.from_dict(obj.pop("hamiltonian"))
            if name == "custom":
                kwargs["Q"] = q
            else:
                kwargs["q"] = q
        if "A" in obj:
            kwargs["A"] = np.atleast_2d(np.asarray(obj.pop("A"), dtype=float))
        if "d" in obj:
            kwargs["d"] = int(obj.pop("d"))
        grid = obj.pop("grid", {}) or {}
        for key in ("N", "L", "r_min", "r_max", "rho"):
            if grid.get(key) is not None:
                kwargs[key] = grid[key]
        for key in ("signal", "times", "orders", "rule", "window", "tolerance_angle", "margin", "predicted_override"):
            if key in obj:
                kwargs[key] = obj.pop(key)
    except (TypeError, ValueError) as exc:
        raise ExperimentError(str(exc)) from exc
    if obj:
        raise ExperimentError(f"unknown experiment keys: {sorted(obj)}")
    return preset(name, **kwargs)


def load_experiment(path) -> Experiment:
    path = Path(path)
    try:
        obj = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ExperimentError(f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}") from exc
    return experiment_from_dict(obj)


def with_overrides(e: Experiment, **kw) -> Experiment:
    kw = {k: v for k, v in kw.items() if v is not None}
    return replace(e, **kw) if kw else e
