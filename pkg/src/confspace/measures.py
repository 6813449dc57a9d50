"""Pair potentials, conditional energies and their diagnostics, Poisson
samplers and the grand-canonical Gibbs specification with an MCMC sampler."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from ._errors import UsageError
from .configuration import (
    Box,
    Configuration,
    CubeUnion,
    _nonzero_cube_counts,
    configuration_from_obj,
    restrict,
)
from .space import bump_profile, bump_profile_derivative


def as_generator(rng) -> np.random.Generator:
    """Accept a Generator, a seed, or None."""
    if isinstance(rng, np.random.Generator):
        return rng
    return np.random.default_rng(rng)


# -- potentials ------------------------------------------------------------


class PairPotential:
    """An even pair interaction phi(x), optionally with a hard core.

    ``radial`` maps distances |x| to values; it is only consulted for
    hard_core_radius <= |x| <= support_radius. Inside the hard core the
    potential is +inf, beyond the support it is 0.
    """

    def __init__(self, radial: Callable[[np.ndarray], np.ndarray], support_radius: float,
                 hard_core_radius: float = 0.0, radial_derivative=None,
                 kind: str = "custom", params: dict | None = None):
        if not support_radius > 0:
            raise UsageError("support_radius must be positive")
        if not 0 <= hard_core_radius <= support_radius:
            raise UsageError("need 0 <= hard_core_radius <= support_radius")
        self._radial = radial
        self._radial_derivative = radial_derivative
        self.support_radius = float(support_radius)
        self.hard_core_radius = float(hard_core_radius)
        self.kind = kind
        self.params = dict(params or {})

    def of_distance(self, r) -> np.ndarray:
        r = np.asarray(r, dtype=float)
        out = np.zeros_like(r)
        active = r <= self.support_radius
        if active.any():
            out[active] = self._radial(r[active])
        out[r < self.hard_core_radius] = np.inf
        return out

    def __call__(self, displacements) -> np.ndarray:
        x = np.asarray(displacements, dtype=float)
        return self.of_distance(np.sqrt(np.sum(x * x, axis=-1)))

    @property
    def has_gradient(self) -> bool:
        return self._radial_derivative is not None

    def gradient(self, displacements) -> np.ndarray:
        """grad phi(x) away from the hard core and the origin."""
        if self._radial_derivative is None:
            raise UsageError(f"potential {self.kind!r} has no gradient rule")
        x = np.asarray(displacements, dtype=float)
        r = np.sqrt(np.sum(x * x, axis=-1))
        dr = np.zeros_like(r)
        active = (r <= self.support_radius) & (r > 0)
        dr[active] = self._radial_derivative(r[active])
        safe = np.where(r > 0, r, 1.0)
        return (dr / safe)[..., None] * x

    def to_dict(self) -> dict:
        return {"kind": self.kind, **self.params}


def zero_potential() -> PairPotential:
    return PairPotential(lambda r: np.zeros_like(r), 1.0, 0.0, lambda r: np.zeros_like(r),
                         kind="zero")


def hard_core_potential(radius: float) -> PairPotential:
    """+inf below ``radius``, 0 elsewhere."""
    return PairPotential(lambda r: np.zeros_like(r), radius, radius, lambda r: np.zeros_like(r),
                         kind="hardcore", params={"radius": radius})


def well_potential(epsilon: float = 1.0, r1: float = 0.5, r2: float = 1.0, c0: float = 0.5,
                   hard_core: float = 0.25) -> PairPotential:
    """epsilon * (bump(|x|/r1) - c0 * bump(|x|/r2)): repulsive core, attractive shell.

    Compactly supported on |x| <= max(r1, r2) and smooth outside the hard
    core. The soft part alone is not stable for the default shape (clusters
    of points at mutual distance ~0.6 have unbounded negative energy), so
    the default keeps a hard core of radius 0.25; pass ``hard_core=0`` for
    the purely smooth well.
    """
    if not (r1 > 0 and r2 > 0 and c0 >= 0):
        raise UsageError("well potential needs r1, r2 > 0 and c0 >= 0")

    def radial(r):
        return epsilon * (bump_profile(r / r1) - c0 * bump_profile(r / r2))

    def radial_derivative(r):
        return epsilon * (bump_profile_derivative(r / r1) / r1
                          - c0 * bump_profile_derivative(r / r2) / r2)

    params = {"epsilon": epsilon, "r1": r1, "r2": r2, "c0": c0, "hard_core": hard_core}
    return PairPotential(radial, max(r1, r2), hard_core, radial_derivative, kind="well",
                         params=params)


def potential_from_dict(obj: dict) -> PairPotential:
    kind = obj.get("kind")
    params = {k: v for k, v in obj.items() if k != "kind"}
    try:
        if kind == "zero":
            return zero_potential()
        if kind == "hardcore":
            return hard_core_potential(float(params["radius"]))
        if kind == "well":
            return well_potential(**{k: float(v) for k, v in params.items()})
    except (KeyError, TypeError) as exc:
        raise UsageError(f"bad parameters for potential {kind!r}: {exc}") from exc
    raise UsageError(f"unknown potential kind {kind!r}")


# -- energies --------------------------------------------------------------


def _pair_sum(phi: PairPotential, xs: np.ndarray, ys: np.ndarray) -> float:
    if len(xs) == 0 or len(ys) == 0:
        return 0.0
    vals = phi(xs[:, None, :] - ys[None, :, :])
    return float(np.sum(vals))


def conditional_energy(gamma: Configuration, region, phi: PairPotential) -> float:
    """Ordered double sum of phi(x - y) over x in gamma restricted to ``region``, y in gamma, x != y.

    Pairs with both points in the region are counted twice and pairs with
    one point outside once. Points are distinguished by identity, so a
    repeated point does interact with its copy.
    """
    pts = gamma.points
    n = len(pts)
    if n < 2:
        return 0.0
    inside = np.flatnonzero(region.contains(pts))
    if inside.size == 0:
        return 0.0
    vals = phi(pts[inside][:, None, :] - pts[None, :, :])
    vals[np.arange(inside.size), inside] = 0.0
    return float(np.sum(vals))


def interaction_energy(gamma1: Configuration, gamma2: Configuration, phi: PairPotential) -> float:
    """W(gamma1 | gamma2): sum of phi(x - y) over x in gamma1, y in gamma2, each pair once."""
    if gamma1.dim != gamma2.dim:
        raise UsageError("dimension mismatch")
    return _pair_sum(phi, gamma1.points, gamma2.points)


@dataclass(frozen=True)
class BoundReport:
    lhs: float
    rhs: float
    holds: bool

    @property
    def slack(self) -> float:
        return self.lhs - self.rhs


def superstability_report(gamma: Configuration, N: int, A: float, B: float,
                          phi: PairPotential) -> BoundReport:
    """Compare E_{Lambda_N}(gamma_{Lambda_N}) with sum_r [A n_r^2 - B n_r]."""
    box = Box.cube(N, gamma.dim)
    local = restrict(gamma, box)
    lhs = conditional_energy(local, box, phi)
    counts = _nonzero_cube_counts(local)
    rhs = float(sum(A * c * c - B * c for c in counts.values()))
    return BoundReport(lhs, rhs, lhs >= rhs)


def lower_regularity_report(gamma: Configuration, cubes1: Sequence, cubes2: Sequence,
                            a: Callable[[int], float], phi: PairPotential) -> BoundReport:
    """Compare W(gamma_L1 | gamma_L2) with -sum a(|r1 - r2|_inf) n_r1 n_r2.

    ``cubes1`` and ``cubes2`` are disjoint lists of lattice indices.
    """
    u1, u2 = CubeUnion(cubes1), CubeUnion(cubes2)
    if u1.indices & u2.indices:
        raise UsageError("the two cube unions must be disjoint")
    g1, g2 = restrict(gamma, u1), restrict(gamma, u2)
    lhs = interaction_energy(g1, g2, phi)
    c1, c2 = _nonzero_cube_counts(g1), _nonzero_cube_counts(g2)
    bound = 0.0
    for r1, n1 in c1.items():
        for r2, n2 in c2.items():
            bound -= a(max(abs(p - q) for p, q in zip(r1, r2))) * n1 * n2
    return BoundReport(lhs, bound, lhs >= bound)


# -- Poisson samplers ------------------------------------------------------


def sample_poisson(z: float, box: Box, rng=None) -> Configuration:
    """Poisson process of intensity ``z`` (times Lebesgue) in ``box``."""
    if not z > 0:
        raise UsageError("intensity must be positive")
    gen = as_generator(rng)
    n = gen.poisson(z * box.volume)
    pts = box.lo + box.sides * gen.random((n, box.dim))
    return Configuration(pts, dim=box.dim)


def _check_mixture(mixture):
    if not mixture:
        raise UsageError("mixture must be nonempty")
    s = np.array([float(m[0]) for m in mixture])
    w = np.array([float(m[1]) for m in mixture])
    if np.any(s < 0) or np.any(w < 0):
        raise UsageError("mixture intensities and weights must be nonnegative")
    if not math.isclose(float(w.sum()), 1.0, rel_tol=0, abs_tol=1e-9):
        raise UsageError("mixture weights must sum to 1")
    if float(w[s == 0].sum()) >= 1.0:
        raise UsageError("the mixture must not put all its mass on intensity 0")
    return s, w / w.sum()


def sample_mixed_poisson(mixture: Sequence[tuple[float, float]], box: Box, rng=None) -> Configuration:
    """Draw an intensity s from the discrete ``mixture`` [(s, weight), ...], then a Poisson(s) sample."""
    s, w = _check_mixture(mixture)
    gen = as_generator(rng)
    level = float(s[gen.choice(len(s), p=w)])
    if level == 0.0:
        return Configuration([], dim=box.dim)
    return sample_poisson(level, box, gen)


# -- Gibbs specification ---------------------------------------------------


@dataclass(frozen=True)
class GibbsSpec:
    window: Box
    z: float
    potential: PairPotential
    boundary: Configuration | None = None

    def __post_init__(self):
        if not self.z > 0:
            raise UsageError("activity z must be positive")
        b = self.boundary if self.boundary is not None else Configuration([], dim=self.window.dim)
        if b.dim != self.window.dim:
            raise UsageError("boundary dimension does not match the window")
        if len(b) and self.window.contains(b.points).any():
            raise UsageError("boundary configuration must lie outside the window")
        object.__setattr__(self, "boundary", b)

    @property
    def dim(self) -> int:
        return self.window.dim

    @property
    def mean_count(self) -> float:
        return self.z * self.window.volume

    def energy(self, inner: Configuration) -> float:
        """E_Lambda(boundary + inner)."""
        return conditional_energy(self.boundary + inner, self.window, self.potential)

    def to_dict(self) -> dict:
        return {
            "dim": self.dim,
            "window": [[float(a), float(b)] for a, b in zip(self.window.lo, self.window.hi)],
            "z": self.z,
            "potential": self.potential.to_dict(),
            "boundary": {"dim": self.dim, "points": self.boundary.points.tolist()},
        }

    @classmethod
    def from_dict(cls, obj: dict) -> "GibbsSpec":
        try:
            dim = int(obj["dim"])
            window = np.asarray(obj["window"], dtype=float).reshape(dim, 2)
            boundary = obj.get("boundary") or {"dim": dim, "points": []}
            return cls(Box(window[:, 0], window[:, 1]), float(obj["z"]),
                       potential_from_dict(obj.get("potential", {"kind": "zero"})),
                       configuration_from_obj(boundary))
        except (KeyError, TypeError, ValueError) as exc:
            if isinstance(exc, UsageError):
                raise
            raise UsageError(f"malformed Gibbs spec: {exc}") from exc


@dataclass
class ChainState:
    current: np.ndarray
    energy: float
    steps: int = 0
    proposed: dict = field(default_factory=lambda: {"birth": 0, "death": 0, "move": 0})
    accepted: dict = field(default_factory=lambda: {"birth": 0, "death": 0, "move": 0})
    seed: object = None

    def acceptance_rates(self) -> dict:
        return {k: (self.accepted[k] / self.proposed[k] if self.proposed[k] else math.nan)
                for k in self.proposed}


class GibbsChain:
    """Birth/death/move Metropolis chain targeting the Gibbs specification.

    The stationary law has density exp(-E_Lambda(boundary + omega)) with
    respect to the Poisson process of intensity z in the window. The chain
    starts from the empty configuration and tracks the energy incrementally.
    """

    def __init__(self, spec: GibbsSpec, rng=None, move_probs=(1 / 3, 1 / 3, 1 / 3),
                 move_scale: float = 0.1):
        probs = np.asarray(move_probs, dtype=float)
        if probs.shape != (3,) or np.any(probs < 0) or not math.isclose(probs.sum(), 1.0):
            raise UsageError("move_probs must be three nonnegative numbers summing to 1")
        if not math.isclose(probs[0], probs[1]):
            raise UsageError("birth and death must be proposed with equal probability")
        self.spec = spec
        self.rng = as_generator(rng)
        self.cum_probs = np.cumsum(probs)
        self.move_sd = move_scale * spec.window.sides
        self._volume = spec.window.volume
        self._bd = spec.boundary.points
        self.state = ChainState(np.zeros((0, spec.dim)), 0.0, seed=rng if not
                                isinstance(rng, np.random.Generator) else None)

    def _local(self, x: np.ndarray, others: np.ndarray) -> float:
        phi = self.spec.potential
        inner = float(np.sum(phi(x - others))) if len(others) else 0.0
        outer = float(np.sum(phi(x - self._bd))) if len(self._bd) else 0.0
        return 2.0 * inner + outer

    def step(self) -> None:
        st = self.state
        pts = st.current
        n = len(pts)
        u = self.rng.random()
        zv = self.spec.z * self._volume
        win = self.spec.window
        if u < self.cum_probs[0]:
            st.proposed["birth"] += 1
            x = win.lo + win.sides * self.rng.random(self.spec.dim)
            dE = self._local(x, pts)
            if math.isfinite(dE):
                ratio = zv / (n + 1) * math.exp(-dE) if dE > -700 else math.inf
                if self.rng.random() < ratio:
                    st.current = np.vstack([pts, x])
                    st.energy += dE
                    st.accepted["birth"] += 1
        elif u < self.cum_probs[1]:
            st.proposed["death"] += 1
            if n > 0:
                k = int(self.rng.integers(n))
                rest = np.delete(pts, k, axis=0)
                dE = -self._local(pts[k], rest)
                ratio = n / zv * math.exp(-dE) if dE > -700 else math.inf
                if self.rng.random() < ratio:
                    st.current = rest
                    st.energy += dE
                    st.accepted["death"] += 1
        else:
            st.proposed["move"] += 1
            if n > 0:
                k = int(self.rng.integers(n))
                x = pts[k] + self.move_sd * self.rng.standard_normal(self.spec.dim)
                if win.contains(x)[0]:
                    rest = np.delete(pts, k, axis=0)
                    dE = self._local(x, rest) - self._local(pts[k], rest)
                    if math.isfinite(dE):
                        ratio = math.exp(-dE) if dE > -700 else math.inf
                        if self.rng.random() < ratio:
                            new = pts.copy()
                            new[k] = x
                            st.current = new
                            st.energy += dE
                            st.accepted["move"] += 1
        st.steps += 1

    def configuration(self) -> Configuration:
        return Configuration(self.state.current, dim=self.spec.dim)

    def run(self, steps: int, burn_in: int = 0, thin: int = 1) -> list[Configuration]:
        if not steps > burn_in >= 0:
            raise UsageError("need steps > burn_in >= 0")
        if thin < 1:
            raise UsageError("thin must be at least 1")
        out = []
        for s in range(1, steps + 1):
            self.step()
            if s > burn_in and (s - burn_in) % thin == 0:
                out.append(self.configuration())
        return out


def gibbs_mcmc(spec: GibbsSpec, steps: int, burn_in: int = 0, thin: int = 1, rng=None,
               **chain_options) -> list[Configuration]:
    """Thinned samples from a fresh :class:`GibbsChain`."""
    return GibbsChain(spec, rng, **chain_options).run(steps, burn_in, thin)


def partition_function_mc(spec: GibbsSpec, n_samples: int, rng=None) -> tuple[float, float]:
    """Monte-Carlo estimate (mean, standard error) of Z_Lambda(boundary)."""
    if n_samples < 100:
        raise UsageError("n_samples must be at least 100")
    gen = as_generator(rng)
    vals = np.empty(n_samples)
    for k in range(n_samples):
        omega = sample_poisson(spec.z, spec.window, gen)
        e = spec.energy(omega)
        vals[k] = math.exp(-e) if e > -700 else math.inf
    return float(vals.mean()), float(vals.std(ddof=1) / math.sqrt(n_samples))


@dataclass(frozen=True)
class EmptyProbabilityReport:
    frequency: float
    stderr: float
    bound: float
    poisson_void: float
    holds: bool
    n: int


def empty_probability_check(spec: GibbsSpec, chain: Sequence[Configuration]) -> EmptyProbabilityReport:
    """Empirical frequency of the empty configuration against 1 / (1 + z |Lambda|)."""
    if not chain:
        raise UsageError("chain must be nonempty")
    if len(spec.boundary):
        raise UsageError("the empty-configuration bound needs an empty boundary")
    n = len(chain)
    freq = sum(1 for c in chain if len(c) == 0) / n
    se = math.sqrt(freq * (1 - freq) / n)
    bound = 1.0 / (1.0 + spec.mean_count)
    return EmptyProbabilityReport(freq, se, bound, math.exp(-spec.mean_count),
                                  freq <= bound + 3 * se, n)
