import math
import warnings

import numpy as np
import pytest

from confspace import Box, Configuration, UsageError, rho
from confspace.analysis import (
    CylinderFunction,
    TangentVector,
    bump_test_function,
    constant_outer,
    directional_derivative_fd,
    dirichlet_energy_mc,
    ergodic_average,
    eval_cylinder,
    exp_neg_outer,
    field_on,
    gradient_cylinder,
    intrinsic_metric_gap,
    linear_outer,
    lipschitz_audit,
    localized_clip,
    mcshane_extend,
    poisson_exp_mean,
    radial_integral,
    richardson_check,
    saturated_square_outer,
    tanh_outer,
)
from confspace.configuration import shift
from confspace.coupling import clipped_set_distance
from confspace.measures import sample_poisson
from confspace.space import bump_field, bump_profile, bump_profile_derivative


def cfg(*pts):
    return Configuration(list(pts), dim=1)


def test_test_function_gradient_matches_fd():
    f = bump_test_function([0.2, -0.1], 1.3, 0.8)
    x = np.random.default_rng(0).uniform(-1.5, 1.5, (200, 2))
    h = 1e-6
    fd = np.stack([(f(x + h * e) - f(x - h * e)) / (2 * h) for e in np.eye(2)], axis=1)
    assert np.allclose(fd, f.gradient(x), atol=1e-6)
    far = np.array([[5.0, 5.0]])
    assert f(far)[0] == 0.0 and np.all(f.gradient(far) == 0.0)


def test_eval_cylinder_examples():
    f = bump_test_function([0.0], 1.0, 0.7)
    u = CylinderFunction([f], tanh_outer([1.0]))
    assert eval_cylinder(u, Configuration([], dim=1)) == 0.0
    assert eval_cylinder(u, cfg(0.0)) == pytest.approx(math.tanh(0.7))
    g1 = bump_test_function([-3.0], 1.0)
    g2 = bump_test_function([3.0], 1.0)
    lin = CylinderFunction([g1, g2], linear_outer([1.0, 1.0]))
    both = cfg(-3.0, 3.2)
    assert lin(both) == pytest.approx(lin(cfg(-3.0)) + lin(cfg(3.2)))


def test_gradient_examples():
    f = bump_test_function([0.0, 0.0], 1.0)
    u = CylinderFunction([f], tanh_outer([1.0]))
    far = Configuration([[4.0, 4.0], [-3.0, 0.0]])
    assert np.all(gradient_cylinder(u, far).vectors == 0.0)
    x0 = np.array([[0.3, 0.2]])
    g = gradient_cylinder(u, Configuration(x0))
    s = f(x0)[0]
    assert np.allclose(g.vectors, f.gradient(x0) / math.cosh(s) ** 2)


def test_tangent_vector():
    v = TangentVector(np.array([[3.0, 0.0], [0.0, 4.0]]))
    assert v.norm() == 5.0
    assert v.inner(v) == 25.0
    with pytest.raises(UsageError):
        v.inner(np.zeros((1, 2)))


def test_directional_derivative_examples():
    V = bump_field([0.0], 2.0, [1.0])
    g = cfg(0.1, 0.5)
    assert directional_derivative_fd(lambda c: 3.0, g, V) == 0.0
    with pytest.raises(UsageError):
        directional_derivative_fd(lambda c: 3.0, g, V, h=0.0)


def test_richardson_on_random_cylinders():
    gen = np.random.default_rng(1)
    outers = [tanh_outer([0.6, -0.8]), saturated_square_outer(2)]
    for k in range(30):
        d = int(gen.integers(1, 4))
        g = Configuration(gen.uniform(-1.5, 1.5, (int(gen.integers(1, 13)), d)), dim=d)
        fs = [bump_test_function(gen.uniform(-1, 1, d), float(gen.uniform(0.8, 2)), 1.0) for _ in range(2)]
        u = CylinderFunction(fs, outers[k % 2])
        a = gen.normal(size=d)
        V = bump_field(gen.uniform(-1, 1, d), 2.0, a / max(1.0, np.linalg.norm(a)))
        rep = richardson_check(u, g, V)
        assert rep.passes(1e-4), rep


def test_rademacher_bound_for_clipped_distance():
    gen = np.random.default_rng(2)
    for _ in range(20):
        n = int(gen.integers(1, 5))
        g = Configuration(gen.uniform(-1, 1, (n, 2)))
        A = [Configuration(gen.uniform(-1, 1, (n, 2))) for _ in range(2)]
        V = bump_field([0.0, 0.0], 2.0, gen.normal(size=2))
        deriv = directional_derivative_fd(lambda c: clipped_set_distance(c, A, 1.0), g, V)
        assert abs(deriv) <= field_on(V, g).norm() * 1.01 + 1e-3


def test_lipschitz_audit_examples():
    gen = np.random.default_rng(3)
    pairs = [(Configuration(gen.uniform(-1, 1, (3, 2))), Configuration(gen.uniform(-1, 1, (3, 2))))
             for _ in range(30)]
    A = [Configuration(gen.uniform(-1, 1, (3, 2)))]
    u = lambda c: clipped_set_distance(c, A, 2.0)  # noqa: E731
    base = lipschitz_audit(u, pairs)
    assert base.value <= 1 + 1e-9
    assert lipschitz_audit(lambda c: 1.0, pairs).value == 0.0
    scaled = lipschitz_audit(lambda c: 2.5 * u(c), pairs)
    assert scaled.value == pytest.approx(2.5 * base.value)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        rep = lipschitz_audit(u, pairs + [(cfg(0.0), cfg(0.0, 1.0))])
    assert rep.skipped == 1 and caught


def test_mcshane_examples():
    w = cfg(0.0)
    assert mcshane_extend([(w, 1.0)], 1.0, cfg(0.25)) == pytest.approx(0.75)
    samples = [(cfg(0.0), 2.0), (cfg(1.0), 1.5)]
    assert mcshane_extend(samples, 1.0, cfg(0.0)) == 2.0
    assert mcshane_extend(samples, 1.0, cfg(0.0, 1.0)) == 0.0
    with pytest.raises(UsageError):
        mcshane_extend([], 1.0, w)


def test_mcshane_is_c_lipschitz_and_interpolates():
    gen = np.random.default_rng(4)
    base = [Configuration(gen.uniform(-1, 1, (3, 2))) for _ in range(8)]
    A = [base[0]]
    C = 1.5
    samples = [(b, C * clipped_set_distance(b, A, 5.0)) for b in base]
    ext = lambda c: mcshane_extend(samples, C, c)  # noqa: E731
    for b, v in samples:
        assert ext(b) == pytest.approx(v, abs=1e-12)
    pairs = [(Configuration(gen.uniform(-1, 1, (3, 2))), Configuration(gen.uniform(-1, 1, (3, 2))))
             for _ in range(40)]
    assert lipschitz_audit(ext, pairs).value <= C + 1e-9


def test_intrinsic_examples():
    g = Configuration([[0.0, 0.0], [1.0, 0.5]])
    same = intrinsic_metric_gap(g, g, [0.5, 2.0], 3.0, rng=0)
    assert same.values == (0.0, 0.0) and same.gap == 0.0
    w = Configuration([[0.2, 0.1], [1.5, -0.5]])
    full = rho(g, w)[0].value
    rep = intrinsic_metric_gap(g, w, [0.5, 1.0, 10.0], full + 1.0, rng=0)
    assert abs(rep.gap) <= 1e-9
    assert all(a <= b + 1e-12 for a, b in zip(rep.values, rep.values[1:]))
    clipped = intrinsic_metric_gap(g, w, [10.0], 0.5 * full, rng=0)
    assert clipped.supremum == 0.5 * full
    assert clipped.gap == pytest.approx(0.5 * full)
    with pytest.raises(UsageError):
        intrinsic_metric_gap(g, w, [2.0, 1.0], 1.0)


def test_localized_clip_vanishes_at_omega():
    w = Configuration([[0.0, 0.0], [0.5, 0.5]])
    assert localized_clip(w, 1.0, 2.0)(w) == 0.0


def test_dirichlet_energy_examples():
    box = Box([0.0, 0.0], [2.0, 2.0])
    sampler = lambda gen: sample_poisson(3.0, box, gen)  # noqa: E731
    f = bump_test_function([1.0, 1.0], 0.8)
    const = CylinderFunction([f], constant_outer(2.0, 1))
    assert dirichlet_energy_mc(const, sampler, 100, 0) == (0.0, 0.0)
    away = CylinderFunction([bump_test_function([9.0, 9.0], 1.0)], tanh_outer([1.0]))
    assert dirichlet_energy_mc(away, sampler, 100, 0)[0] == 0.0
    # Campbell: E sum |grad f(x)|^2 = z * integral |grad f|^2
    lin = CylinderFunction([f], linear_outer([1.0]))
    est, se = dirichlet_energy_mc(lin, sampler, 4000, 1)
    target = 3.0 * radial_integral(lambda r: (bump_profile_derivative(r / 0.8) / 0.8) ** 2, 0.8, 2)
    assert abs(est - target) <= 3 * se


def test_radial_integral_volume():
    assert radial_integral(lambda r: np.ones_like(r), 1.0, 2) == pytest.approx(math.pi)
    assert radial_integral(lambda r: np.ones_like(r), 1.0, 3) == pytest.approx(4 * math.pi / 3)


def test_poisson_exp_mean_by_simulation():
    f = bump_test_function([0.0], 1.0)
    box = Box([-1.0], [1.0])
    vals = [math.exp(-float(np.sum(f(sample_poisson(1.0, box, np.random.default_rng([9, k])).points))))
            for k in range(8000)]
    se = np.std(vals) / math.sqrt(len(vals))
    assert abs(np.mean(vals) - poisson_exp_mean(f, 1.0)) <= 3 * se


def test_ergodic_constant_and_margin():
    f = bump_test_function([0.0], 1.0)
    const = CylinderFunction([f], constant_outer(0.3, 1))
    box = Box([-12.0], [12.0])
    g = sample_poisson(1.0, box, 0)
    assert ergodic_average(g, box, const, [2, 5, 10], 0.1) == pytest.approx([0.3] * 3)
    with pytest.raises(UsageError):
        ergodic_average(g, box, const, [11.5], 0.1)


def test_ergodic_shift_invariance_bound():
    f = bump_test_function([0.0], 1.0)
    u = CylinderFunction([f], exp_neg_outer([1.0]))
    box = Box([-30.0], [30.0])
    g = sample_poisson(1.0, box, 3)
    for n in (5, 10, 20):
        a = ergodic_average(g, box, u, [n], 0.01)[0]
        b = ergodic_average(shift(g, [2.0]), box, u, [n], 0.01)[0]
        # shifting by 2 swaps two bands of width 2 in and out of V_n; |u| <= 1
        assert abs(a - b) <= 2 * 2.0 / (2 * n) + 1e-9


def test_ergodic_nested_boxes_stabilize():
    f = bump_test_function([0.0], 1.0)
    u = CylinderFunction([f], exp_neg_outer([1.0]))
    target = poisson_exp_mean(f, 1.0)
    box = Box([-70.0], [70.0])
    devs = np.array([np.abs(np.array(ergodic_average(sample_poisson(1.0, box, np.random.default_rng([5, k])),
                                                     box, u, [4, 16, 64], 0.05)) - target)
                     for k in range(15)])
    med = np.median(devs, axis=0)
    assert med[2] < med[0]
