"""The transport distance rho between finite configurations, its localized
and set-valued variants, and brute-force oracles for all of them."""

from __future__ import annotations

import functools
import itertools
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from ._assignment import solve_assignment
from ._errors import UsageError
from .configuration import Configuration
from .space import Ball, nearest_boundary_point, squared_distances

BRUTEFORCE_MAX_POINTS = 8
BRUTEFORCE_MAX_LOCAL = 7


@functools.total_ordering
@dataclass(frozen=True)
class ExtendedDistance:
    """A distance in [0, inf]; ``value is None`` encodes the infinite case.

    Infinite never travels as a float inside the library. ``float(d)`` gives
    ``math.inf`` for interop only.
    """

    value: float | None = None

    def __post_init__(self):
        if self.value is not None:
            v = float(self.value)
            if not (v >= 0 and math.isfinite(v)):
                raise ValueError(f"finite distance must be a nonnegative real, got {self.value}")
            object.__setattr__(self, "value", v)

    @property
    def is_finite(self) -> bool:
        return self.value is not None

    def __float__(self) -> float:
        return math.inf if self.value is None else self.value

    def __lt__(self, other):
        if not isinstance(other, ExtendedDistance):
            return NotImplemented
        if self.value is None:
            return False
        return other.value is None or self.value < other.value

    def clip(self, c: float) -> float:
        """min(c, self) as a real number."""
        return c if self.value is None else min(c, self.value)

    def to_json(self):
        return "inf" if self.value is None else self.value

    def __repr__(self) -> str:
        return "Infinite" if self.value is None else f"Finite({self.value!r})"


def Finite(x: float) -> ExtendedDistance:
    return ExtendedDistance(x)


INFINITE = ExtendedDistance(None)


@dataclass(frozen=True)
class Matching:
    """Witness coupling: (gamma index, omega index) pairs plus exits of gamma points to a target."""

    pairs: tuple[tuple[int, int], ...]
    squared_cost: float
    exits: tuple[tuple[int, tuple[float, ...]], ...] = field(default=())

    def recompute_cost(self, gamma: Configuration, omega: Configuration) -> float:
        total = 0.0
        for i, j in self.pairs:
            diff = gamma.points[i] - omega.points[j]
            total += float(diff @ diff)
        for i, target in self.exits:
            diff = gamma.points[i] - np.asarray(target)
            total += float(diff @ diff)
        return total

    def as_permutation(self, n: int) -> np.ndarray:
        perm = np.full(n, -1, dtype=np.int64)
        for i, j in self.pairs:
            perm[i] = j
        return perm

    def is_perfect(self, n_gamma: int, n_omega: int) -> bool:
        gs = {i for i, _ in self.pairs}
        ws = {j for _, j in self.pairs}
        return not self.exits and len(self.pairs) == n_gamma == n_omega \
            and len(gs) == n_gamma and len(ws) == n_omega


def result_to_json(distance: ExtendedDistance, matching: Matching | None) -> dict:
    return {
        "distance": distance.to_json(),
        "pairs": [list(p) for p in matching.pairs] if matching else [],
        "exits": [[i, list(t)] for i, t in matching.exits] if matching else [],
    }


def _check(gamma: Configuration, omega: Configuration) -> None:
    if gamma.dim != omega.dim:
        raise UsageError(f"dimension mismatch: {gamma.dim} vs {omega.dim}")


def _from_squared(sq: float) -> ExtendedDistance:
    return Finite(math.sqrt(max(sq, 0.0)))


def rho(gamma: Configuration, omega: Configuration):
    """Exact transport distance and an optimal witness matching.

    Returns ``(INFINITE, None)`` when the point counts differ. Otherwise the
    minimal perfect matching under squared Euclidean cost is found exactly;
    among optimal matchings the lexicographically smallest pair list wins.
    """
    _check(gamma, omega)
    n = len(gamma)
    if n != len(omega):
        return INFINITE, None
    if n == 0:
        return Finite(0.0), Matching((), 0.0)
    cost = squared_distances(gamma.points, omega.points)
    assign, _ = solve_assignment(cost)
    pairs = tuple((i, int(assign[i])) for i in range(n))
    # fsum is order independent, which keeps rho exactly symmetric
    sq = math.fsum(cost[np.arange(n), assign].tolist())
    return _from_squared(sq), Matching(pairs, sq)


def rho_bruteforce(gamma: Configuration, omega: Configuration):
    """Exhaustive minimum over all bijections (at most 8 points per side)."""
    _check(gamma, omega)
    n = len(gamma)
    if max(n, len(omega)) > BRUTEFORCE_MAX_POINTS:
        raise UsageError(f"brute force is capped at {BRUTEFORCE_MAX_POINTS} points per side")
    if n != len(omega):
        return INFINITE, None
    if n == 0:
        return Finite(0.0), Matching((), 0.0)
    cost = squared_distances(gamma.points, omega.points)
    perms = np.array(list(itertools.permutations(range(n))), dtype=np.int64)
    totals = cost[np.arange(n)[None, :], perms].sum(axis=1)
    k = int(np.argmin(totals))
    pairs = tuple((i, int(perms[k, i])) for i in range(n))
    sq = float(totals[k])
    return _from_squared(sq), Matching(pairs, sq)


def _local_problem(gamma: Configuration, omega: Configuration, B: Ball):
    if B.dim != gamma.dim:
        raise UsageError(f"dimension mismatch: ball {B.dim}, configuration {gamma.dim}")
    omega_idx = np.flatnonzero(B.contains(omega.points)) if len(omega) else np.zeros(0, np.int64)
    inside = B.contains(gamma.points) if len(gamma) else np.zeros(0, bool)
    if len(gamma):
        radial = np.sqrt(np.sum((gamma.points - B.center) ** 2, axis=1))
        personal = np.where(inside, (B.radius - radial) ** 2, 0.0)
    else:
        personal = np.zeros(0)
    pair_cost = squared_distances(gamma.points, omega.points[omega_idx])
    return omega_idx, inside, personal, pair_cost


def _local_matching(gamma, omega_idx, inside, B, matched) -> Matching:
    """Build the witness from ``matched``: dict gamma index -> local omega column."""
    pairs = tuple(sorted((i, int(omega_idx[c])) for i, c in matched.items()))
    exits = tuple(
        (i, tuple(nearest_boundary_point(gamma.points[i], B).tolist()))
        for i in range(len(gamma)) if inside[i] and i not in matched
    )
    m = Matching(pairs, 0.0, exits)
    return m


def rho_localized(gamma: Configuration, omega: Configuration, B: Ball):
    """Distance from ``gamma`` to the configurations agreeing with ``omega`` inside ``B``.

    Every point of omega in the open ball B is matched to a distinct point of
    gamma; each remaining gamma point inside B exits to its nearest boundary
    point, and the remaining points outside B stay put at no cost.

    Returns
    -------
    (ExtendedDistance, Matching or None)
        Infinite exactly when gamma has fewer points than omega has in B.
    """
    _check(gamma, omega)
    omega_idx, inside, personal, pair_cost = _local_problem(gamma, omega, B)
    m, k = len(gamma), len(omega_idx)
    if m < k:
        return INFINITE, None
    size = m + k
    cost = np.full((size, size), np.inf)
    cost[:m, :k] = pair_cost
    cost[np.arange(m), k + np.arange(m)] = personal
    cost[m:, k:] = 0.0
    assign, _ = solve_assignment(cost)
    matched = {i: int(assign[i]) for i in range(m) if assign[i] < k}
    witness = _local_matching(gamma, omega_idx, inside, B, matched)
    sq = witness.recompute_cost(gamma, omega)
    witness = Matching(witness.pairs, sq, witness.exits)
    return _from_squared(sq), witness


def rho_localized_bruteforce(gamma: Configuration, omega: Configuration, B: Ball):
    """Exhaustive minimum over all injections of omega_B into gamma."""
    _check(gamma, omega)
    omega_idx, inside, personal, pair_cost = _local_problem(gamma, omega, B)
    m, k = len(gamma), len(omega_idx)
    if k > BRUTEFORCE_MAX_LOCAL or m > BRUTEFORCE_MAX_POINTS:
        raise UsageError(
            f"brute force is capped at {BRUTEFORCE_MAX_LOCAL} ball points and "
            f"{BRUTEFORCE_MAX_POINTS} configuration points"
        )
    if m < k:
        return INFINITE, None
    total_personal = float(personal.sum())
    if k == 0:
        best_perm = np.zeros(0, dtype=np.int64)
    else:
        inj = np.array(list(itertools.permutations(range(m), k)), dtype=np.int64)
        totals = pair_cost[inj, np.arange(k)[None, :]].sum(axis=1) \
            + total_personal - personal[inj].sum(axis=1)
        best_perm = inj[int(np.argmin(totals))]
    matched = {int(best_perm[c]): c for c in range(k)}
    witness = _local_matching(gamma, omega_idx, inside, B, matched)
    sq = witness.recompute_cost(gamma, omega)
    return _from_squared(sq), Matching(witness.pairs, sq, witness.exits)


def rho_to_set(gamma: Configuration, A: Sequence[Configuration]) -> ExtendedDistance:
    """inf over omega in A of rho(omega, gamma)."""
    if not A:
        raise UsageError("the set A must be nonempty")
    return min(rho(gamma, omega)[0] for omega in A)


def rho_localized_to_set(gamma: Configuration, K: Sequence[Configuration], B: Ball) -> ExtendedDistance:
    if not K:
        raise UsageError("the set K must be nonempty")
    return min(rho_localized(gamma, omega, B)[0] for omega in K)


def clipped_set_distance(gamma: Configuration, A: Sequence[Configuration], c: float) -> float:
    """min(c, rho_A(gamma)); an infinite distance clips to ``c``."""
    if not c > 0:
        raise UsageError("clip level must be positive")
    return rho_to_set(gamma, A).clip(c)
