import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from confspace import Ball, Configuration, NumericError, UsageError
from confspace.space import (
    BUMP_MAX_SLOPE,
    CompactVectorField,
    affine_field,
    bump_field,
    bump_profile,
    bump_profile_derivative,
    distance_to_boundary,
    flow_point,
    ground_distance,
    nearest_boundary_point,
    plateau_field,
    pushforward,
    smooth_step,
    sup_norm_bound,
    zero_field,
)

coords = st.floats(-10, 10, allow_nan=False)


def test_ground_distance_examples():
    assert ground_distance([0.0], [0.0]) == 0.0
    assert ground_distance(0.0, 1.0) == 1.0
    assert ground_distance([0, 0], [3, 4]) == 5.0


def test_ground_distance_dimension_mismatch():
    with pytest.raises(UsageError):
        ground_distance([0.0], [0.0, 1.0])


@given(st.lists(coords, min_size=6, max_size=6))
def test_ground_distance_metric_axioms(v):
    x, y, z = np.array(v[:2]), np.array(v[2:4]), np.array(v[4:])
    assert ground_distance(x, y) == ground_distance(y, x)
    assert ground_distance(x, z) <= ground_distance(x, y) + ground_distance(y, z) + 1e-12
    assert ground_distance(x, x) == 0.0


def test_distance_to_boundary_examples():
    B = Ball([0.0, 0.0], 2.0)
    assert distance_to_boundary([0.0, 0.0], B) == 2.0
    assert distance_to_boundary([2.0, 0.0], B) == 0.0
    assert distance_to_boundary([1.5], Ball([0.0], 2.0)) == 0.5


def test_nearest_boundary_point_lies_on_sphere():
    B = Ball([1.0, 1.0], 2.0)
    p = nearest_boundary_point([1.5, 1.0], B)
    assert np.allclose(p, [3.0, 1.0])


def test_ball_is_open():
    B = Ball([0.0], 1.0)
    assert not B.contains([1.0])[0]
    assert B.closure_contains([1.0])[0]


def test_bump_profile_and_slope():
    s = np.linspace(-1.2, 1.2, 20001)
    assert bump_profile(np.array([0.0]))[0] == 1.0
    assert np.all(bump_profile(np.array([1.0, -1.0, 1.5])) == 0.0)
    slope = np.max(np.abs(bump_profile_derivative(s)))
    assert slope <= BUMP_MAX_SLOPE
    assert slope > BUMP_MAX_SLOPE * 0.999
    # derivative matches finite differences
    h = 1e-6
    s0 = np.linspace(-0.9, 0.9, 37)
    fd = (bump_profile(s0 + h) - bump_profile(s0 - h)) / (2 * h)
    assert np.allclose(fd, bump_profile_derivative(s0), atol=1e-6)


def test_smooth_step_limits():
    assert smooth_step(np.array([0.0]))[0] == 0.0
    assert smooth_step(np.array([1.0]))[0] == 1.0
    assert smooth_step(np.array([0.5]))[0] == pytest.approx(0.5)


def test_field_vanishes_outside_support():
    V = bump_field([0.0, 0.0], 1.0, [1.0, 0.0])
    assert np.all(V(np.array([[1.0, 0.0], [3.0, 3.0]])) == 0.0)


def test_field_non_finite_raises():
    V = CompactVectorField(lambda x: np.full_like(x, np.nan), Ball([0.0], 1.0), 1.0, 1.0)
    with pytest.raises(NumericError):
        V(np.array([[0.0]]))


def test_flow_zero_field_is_identity():
    assert np.array_equal(flow_point(zero_field(2), [0.3, -0.2], 1.0), [0.3, -0.2])


def test_flow_constant_field_translates():
    V = plateau_field([0.0, 0.0], 5.0, 6.0, [1.0, 0.0])
    assert np.allclose(flow_point(V, [0.0, 0.0], 1.0), [1.0, 0.0], atol=1e-12)


def test_flow_linear_field_matches_exponential():
    V = affine_field([[-1.0]], [0.0], [0.0], 5.0, 6.0)
    assert flow_point(V, [1.0], 1.0)[0] == pytest.approx(math.exp(-1.0), abs=1e-12)


def test_pushforward_examples():
    V = plateau_field([0.0, 0.0], 10.0, 11.0, [1.0, 0.0])
    g = Configuration([[0.0, 0.0], [2.0, 1.0]])
    assert pushforward(V, g, 1.0).allclose(Configuration([[1.0, 0.0], [3.0, 1.0]]), 1e-12)
    assert pushforward(zero_field(2), g, 1.0) == g


def test_points_outside_support_fixed():
    V = bump_field([0.0], 1.0, [2.0])
    g = Configuration([[0.0], [5.0]])
    out = pushforward(V, g, 3.0)
    assert out.points[1, 0] == 5.0
    assert len(out) == 2


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10_000))
def test_flow_reversibility(seed):
    gen = np.random.default_rng(seed)
    V = bump_field(gen.uniform(-1, 1, 2), 1.5, gen.normal(size=2))
    g = Configuration(gen.uniform(-2, 2, (5, 2)))
    back = pushforward(V, pushforward(V, g, 0.7), -0.7)
    assert back.allclose(g, 1e-9)


def test_rk4_order_by_step_halving():
    V = bump_field([0.0, 0.0], 2.0, [1.0, 0.5])
    x = [0.2, -0.1]
    ref = flow_point(V, x, 1.0, 1e-4)
    e1 = np.linalg.norm(flow_point(V, x, 1.0, 0.1) - ref)
    e2 = np.linalg.norm(flow_point(V, x, 1.0, 0.05) - ref)
    assert 12 < e1 / e2 < 20


def test_sup_norm_bound_dominates_samples():
    V = bump_field([0.0, 0.0], 1.0, [1.0, 1.0]) - bump_field([0.5, 0.0], 1.0, [0.0, 1.0])
    pts = np.random.default_rng(0).uniform(-1.5, 1.5, (5000, 2))
    assert np.max(np.linalg.norm(V(pts), axis=1)) <= sup_norm_bound(V)
