import json

import numpy as np
import pytest

from conftest import BUILTINS_1D
from gaborprop import quadham
from gaborprop.harness import (
    ExperimentError,
    experiment_from_dict,
    load_experiment,
    preset,
    run_experiment,
    with_overrides,
)
from gaborprop.propagators import propagate
from gaborprop.quadham import RuleError
from gaborprop.signals import builtin, rel_l2_error
from gaborprop.tfa import PhaseGrid, WindowSpec, wavefront_estimate


@pytest.fixture(scope="module")
def heat_report():
    return run_experiment(preset("heat", times=(0.25, 0.5, 1.0)))


def test_heat_preset_passes(heat_report):
    assert heat_report.verdict == "pass"
    assert all(r.violations == [] for r in heat_report.results)


def test_heat_is_absorbing(heat_report):
    # after any t > 0 the set is the same horizontal pair
    sets = [heat_report.result(t, 1.0).observed for t in (0.25, 0.5, 1.0)]
    for a in sets[1:]:
        assert a.matches(sets[0], tol=1e-12)
    x_axis = np.abs(sets[0].dirs[:, 1]) <= np.sin(sets[0].angular_resolution) + 1e-9
    assert np.all(x_axis)


def test_report_serializes(heat_report):
    d = heat_report.to_dict()
    assert d["verdict"] == "pass"
    assert [r["t"] for r in d["results"]] == [0.25, 0.5, 1.0]
    assert {o["path"] for o in d["output_orders"]} == {"fourier_multiplier"}
    assert heat_report.margins_csv().startswith("t,s,direction,distance\n")


@pytest.mark.parametrize("name", ["harmonic", "free_schrodinger"])
def test_presets_pass(name):
    rep = run_experiment(preset(name))
    assert rep.verdict == "pass", [r.violations for r in rep.results]


@pytest.mark.parametrize("name", ["heat", "harmonic", "free_schrodinger"])
@pytest.mark.parametrize("signal", sorted(BUILTINS_1D))
def test_every_builtin_passes(name, signal):
    rep = run_experiment(preset(name, signal=BUILTINS_1D[signal], times=(0.5,)))
    assert rep.verdict == "pass"


def test_free_schrodinger_round_trip():
    e = preset("free_schrodinger", times=(0.5,))
    rep = run_experiment(e)
    assert rep.passed
    u0 = builtin(e.signal, e.N, e.L)
    there, _ = propagate(u0, e.q, 0.5)
    back, _ = propagate(there, e.q, -0.5)
    assert rel_l2_error(back.values, u0.values) <= 1e-10
    grid = PhaseGrid.for_signal(u0)
    assert wavefront_estimate(back, WindowSpec(), grid, 1.0).matches(wavefront_estimate(u0, WindowSpec(), grid, 1.0))


def test_damping_at_zero_time_is_identity():
    # the inclusion is a statement for t > 0; at t = 0 the flow is the identity
    rep = run_experiment(preset("damping", times=(0.0,)))
    assert rep.paths[0.0] == "multiplication"
    np.testing.assert_array_equal(rep.output_reports[0.0].orders, rep.input_report.orders)


def test_damping_leaves_only_kernel_directions():
    rep = run_experiment(preset("damping", times=(1.0,)))
    assert rep.passed
    observed = rep.results[0].observed.dirs
    # A = diag(1, 0): nothing survives with an x1 component
    assert np.all(np.abs(observed[:, 0]) <= np.sin(rep.results[0].tolerance) + 1e-9)


def test_empty_prediction_is_a_violation():
    rep = run_experiment(preset("heat", times=(0.5,), predicted_override="empty"))
    assert rep.verdict == "violation"
    assert rep.results[0].violations


def test_undersized_grid_is_inconclusive():
    rep = run_experiment(preset("heat", N=64, L=8.0, times=(0.5,)))
    assert rep.verdict == "inconclusive"


def test_custom_preset_uses_default_rule():
    e = preset("custom", Q=quadham.harmonic(1).Q)
    assert e.rule == quadham.default_rule(quadham.hamilton_matrix(e.q))
    with pytest.raises(ExperimentError):
        preset("custom")


def test_preset_validation():
    with pytest.raises(ExperimentError):
        preset("nope")
    with pytest.raises(ExperimentError):
        preset("heat", times=())
    with pytest.raises(RuleError):
        preset("heat", rule="exact")
    with pytest.raises(ValueError):
        preset("heat", window="hann")


def test_experiment_round_trip(tmp_path):
    e = preset("damping", d=2, A=np.diag([1.0, 0.0]))
    obj = {"preset": "damping", "A": [[1.0, 0.0], [0.0, 0.0]], "grid": {"N": 256, "L": 16.0}, "times": [1.0]}
    p = tmp_path / "e.json"
    p.write_text(json.dumps(obj))
    f = load_experiment(p)
    assert f.to_dict() == e.to_dict()


@pytest.mark.parametrize(
    "obj",
    [{"preset": "heat", "colour": 1}, {"preset": "heat", "times": "soon"}, [1, 2], {"preset": "custom"}],
)
def test_bad_experiments(obj):
    with pytest.raises((ExperimentError, ValueError, TypeError)):
        experiment_from_dict(obj)


def test_experiment_json_error_location(tmp_path):
    p = tmp_path / "e.json"
    p.write_text('{"preset": "heat",\n "times": [0.5,]}')
    with pytest.raises(ExperimentError, match=":2:"):
        load_experiment(p)


def test_overrides():
    e = preset("heat")
    assert with_overrides(e) is e
    f = with_overrides(e, N=1024, L=None)
    assert f.N == 1024 and f.L == e.L


def test_translated_signal_still_passes():
    rep = run_experiment(preset("heat", signal={"name": "delta", "shift": [8.0, 4.0]}, times=(0.5,)))
    assert rep.verdict == "pass"
