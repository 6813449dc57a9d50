import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from confspace import INFINITE, Ball, Configuration, Finite, UsageError
from confspace._assignment import solve_assignment
from confspace.coupling import (
    clipped_set_distance,
    rho,
    rho_bruteforce,
    rho_localized,
    rho_localized_bruteforce,
    rho_localized_to_set,
    rho_to_set,
)


def cfg(*pts):
    return Configuration(list(pts), dim=1)


def test_extended_distance_ordering():
    assert Finite(1e300) < INFINITE
    assert not INFINITE < INFINITE
    assert INFINITE.clip(2.0) == 2.0
    assert Finite(0.5).clip(2.0) == 0.5
    assert float(INFINITE) == math.inf
    assert INFINITE.to_json() == "inf"
    with pytest.raises(ValueError):
        Finite(-1.0)


def test_rho_examples():
    assert rho(cfg(0.5), cfg(0.5))[0] == Finite(0.0)
    assert rho(cfg(0.0), cfg(1.0))[0] == Finite(1.0)
    d, m = rho(cfg(0.0, 1.0), cfg(2.0))
    assert d == INFINITE and m is None
    d, m = rho(cfg(0.0, 3.0), cfg(1.0, 2.0))
    assert d.value == pytest.approx(math.sqrt(2.0), abs=1e-15)
    assert m.pairs == ((0, 0), (1, 1))
    assert m.squared_cost == 2.0


def test_rho_dimension_mismatch():
    with pytest.raises(UsageError):
        rho(cfg(0.0), Configuration([[0.0, 0.0]]))


def test_bruteforce_cap():
    big = Configuration(np.zeros((9, 1)))
    with pytest.raises(UsageError):
        rho_bruteforce(big, big)


def test_tie_break_is_lexicographic():
    # four points on a square: two optimal matchings, the identity wins
    sq = Configuration([[0, 0], [1, 1]], dim=2)
    other = Configuration([[1, 0], [0, 1]], dim=2)
    _, m = rho(sq, other)
    assert m.pairs == ((0, 0), (1, 1))


def test_assignment_lexicographic_against_enumeration():
    gen = np.random.default_rng(11)
    for _ in range(300):
        n = int(gen.integers(1, 6))
        cost = gen.integers(0, 3, (n, n)).astype(float)
        cost[gen.random((n, n)) < 0.15] = np.inf
        perms = list(itertools.permutations(range(n)))
        totals = [sum(cost[i, p[i]] for i in range(n)) for p in perms]
        best = min(totals)
        if not math.isfinite(best):
            continue
        expected = min(p for p, t in zip(perms, totals) if t == best)
        assign, total = solve_assignment(cost)
        assert tuple(assign) == expected and total == best


def test_localized_examples():
    B = Ball([0.0], 2.0)
    d, m = rho_localized(cfg(0.5, 1.5), cfg(0.0), B)
    assert d.value == pytest.approx(math.sqrt(0.5), abs=1e-15)
    assert m.pairs == ((0, 0),)
    assert m.exits == ((1, (2.0,)),)
    # omega_B contained in gamma and nothing else inside B
    assert rho_localized(cfg(0.0, 5.0), cfg(0.0, 9.0), B)[0] == Finite(0.0)
    # deficit: two omega points in B, one gamma point
    assert rho_localized(cfg(0.0), cfg(0.0, 1.0), B)[0] == INFINITE


def test_localized_bruteforce_examples():
    B = Ball([0.0], 2.0)
    assert rho_localized_bruteforce(cfg(5.0), cfg(7.0), B)[0] == Finite(0.0)
    d, _ = rho_localized_bruteforce(cfg(1.25), cfg(), B)
    assert d.value == pytest.approx(0.75)


def test_set_distances():
    g = cfg(0.0, 1.0)
    A = [cfg(0.0), cfg(0.0, 2.0), cfg(0.0, 1.0)]
    assert rho_to_set(g, A) == Finite(0.0)
    assert rho_to_set(g, [cfg(0.0, 2.0)]) == rho(g, cfg(0.0, 2.0))[0]
    assert rho_to_set(g, [cfg(0.0), cfg(0.0, 3.0)]) == Finite(2.0)
    assert clipped_set_distance(g, [cfg(0.0)], 0.7) == 0.7
    with pytest.raises(UsageError):
        rho_to_set(g, [])
    B = Ball([0.0], 1.5)
    assert rho_localized_to_set(g, [g], B) == Finite(0.0)
    assert rho_localized_to_set(g, [cfg(0.3)], B) == rho_localized(g, cfg(0.3), B)[0]


def _random_pair(gen, n, m, d):
    return (Configuration(gen.uniform(-2, 2, (n, d)), dim=d),
            Configuration(gen.uniform(-2, 2, (m, d)), dim=d))


@settings(max_examples=150, deadline=None)
@given(st.integers(0, 7), st.integers(0, 7), st.integers(1, 3), st.integers(0, 2**32 - 1))
def test_oracle_equivalence_property(n, m, d, seed):
    gen = np.random.default_rng(seed)
    g, w = _random_pair(gen, n, n if seed % 3 else m, d)
    a, ma = rho(g, w)
    b, _ = rho_bruteforce(g, w)
    assert a.is_finite == b.is_finite
    if a.is_finite:
        assert abs(a.value - b.value) <= 1e-9
        assert abs(ma.recompute_cost(g, w) - ma.squared_cost) <= 1e-12
    B = Ball(gen.uniform(-1, 1, d), float(gen.uniform(0.2, 3)))
    a, ma = rho_localized(g, w, B)
    b, _ = rho_localized_bruteforce(g, w, B)
    assert a.is_finite == b.is_finite
    if a.is_finite:
        assert abs(a.value - b.value) <= 1e-9
        assert abs(ma.recompute_cost(g, w) - a.value ** 2) <= 1e-9


@settings(max_examples=100, deadline=None)
@given(st.integers(1, 6), st.integers(1, 3), st.integers(0, 2**32 - 1))
def test_localized_monotone_and_limit(n, d, seed):
    gen = np.random.default_rng(seed)
    g, w = _random_pair(gen, n, n, d)
    radii = sorted(gen.uniform(0.1, 4, 5))
    vals = [rho_localized(g, w, Ball(np.zeros(d), r))[0] for r in radii]
    for a, b in zip(vals, vals[1:]):
        assert not (b < a) or (a.value - b.value) <= 1e-9
    big = rho_localized(g, w, Ball(np.zeros(d), 10.0))[0]
    assert abs(big.value - rho(g, w)[0].value) <= 1e-9


@settings(max_examples=50, deadline=None)
@given(st.integers(1, 5), st.integers(0, 2**32 - 1))
def test_localized_continuity(n, seed):
    gen = np.random.default_rng(seed)
    g, w = _random_pair(gen, n, n, 2)
    B = Ball([0.0, 0.0], 1.5)
    base = float(rho_localized(g, w, B)[0])
    changes = []
    for eps in (1e-2, 1e-4, 1e-6):
        moved = Configuration(g.points + eps * gen.uniform(-1, 1, g.points.shape), dim=2)
        changes.append(abs(float(rho_localized(moved, w, B)[0]) - base))
    assert changes[-1] <= 1e-4


@settings(max_examples=100, deadline=None)
@given(st.integers(1, 6), st.integers(0, 2**32 - 1))
def test_clipped_distance_is_one_lipschitz(n, seed):
    gen = np.random.default_rng(seed)
    A = [Configuration(gen.uniform(-2, 2, (k, 2)), dim=2) for k in (n, n, n + 1)]
    g, h = _random_pair(gen, n, n, 2)
    lhs = abs(clipped_set_distance(g, A, 1.5) - clipped_set_distance(h, A, 1.5))
    assert lhs <= rho(g, h)[0].value + 1e-12


def test_infinite_distance_survives_as_tag():
    d, _ = rho(cfg(0.0), cfg())
    assert d.value is None and not d.is_finite
