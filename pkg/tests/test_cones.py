import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gaborprop.cones import DirectionSet, circle_directions, cubed_sphere_directions, default_directions
from gaborprop.symplectic import Subspace


def test_circle_directions_spacing():
    c = circle_directions(64)
    assert len(c) == 64
    assert c.angular_resolution == pytest.approx(2 * np.pi / 64)
    np.testing.assert_allclose(np.linalg.norm(c.dirs, axis=1), 1, atol=1e-12)


def test_cubed_sphere_contains_axes():
    s = cubed_sphere_directions(4, 4)
    assert len(s) == 544
    for i in range(4):
        e = np.eye(4)[i]
        assert s.distance_to(e)[0] == pytest.approx(0, abs=1e-12)
        assert s.distance_to(-e)[0] == pytest.approx(0, abs=1e-12)
    assert s.angular_resolution == pytest.approx(np.arctan(0.5))


def test_default_directions_dimension_guard():
    with pytest.raises(ValueError):
        default_directions(3)


def test_duplicates_removed_within_half_step():
    res = 0.1
    s = DirectionSet(np.array([[1.0, 0], [np.cos(0.04), np.sin(0.04)], [0, 1.0]]), res)
    assert len(s) == 2


def test_zero_vector_rejected():
    with pytest.raises(ValueError):
        DirectionSet(np.array([[0.0, 0.0]]), 0.1)


def test_subspace_cone_membership():
    c = circle_directions(64)
    horizontal = Subspace.span(np.array([1.0, 0.0]))
    inside = c.restrict_to(horizontal)
    ang = np.degrees(np.arctan2(inside.dirs[:, 1], inside.dirs[:, 0]))
    # axis plus the neighbours exactly one step away
    assert sorted(np.round(np.abs(ang), 3)) == sorted(np.round([0, 5.625, 5.625, 180, 174.375, 174.375], 3))


def test_apply_drops_directions_mapped_to_zero():
    c = DirectionSet(np.array([[1.0, 0.0], [0.0, 1.0]]), 0.1)
    P = np.array([[1.0, 0.0], [0.0, 0.0]])
    assert len(c.apply(P)) == 1


def test_matches_is_hausdorff_within_tolerance():
    c = circle_directions(64)
    a = c.subset(np.arange(64) == 0)
    b = c.subset(np.arange(64) == 1)
    assert a.matches(b)
    assert not a.matches(c.subset(np.arange(64) == 2))
    assert a.hausdorff(b) == pytest.approx(c.angular_resolution)


def test_empty_set_behaviour():
    e = DirectionSet.empty(2, 0.1)
    c = circle_directions(8)
    assert e.is_subset(c)
    assert not c.is_subset(e)
    assert np.all(np.isinf(e.distance_to(c.dirs)))
    assert e.hausdorff(DirectionSet.empty(2, 0.1)) == 0.0


@settings(max_examples=50, deadline=None)
@given(st.lists(st.integers(0, 63), min_size=1, max_size=20), st.floats(0.5, 3))
def test_dilate_contains_original_and_is_monotone(idx, steps):
    c = circle_directions(64)
    mask = np.zeros(64, bool)
    mask[idx] = True
    s = c.subset(mask)
    d1 = s.dilate(c, steps)
    d2 = s.dilate(c, steps + 1)
    assert s.is_subset(d1, tol=1e-12)
    assert d1.is_subset(d2, tol=1e-12)
