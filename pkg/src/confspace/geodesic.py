"""Displacement interpolation, the 1D staged flow construction, curve and
flow energies, and the flow-comparison (Gronwall) bound."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from scipy.integrate import simpson

from ._errors import NumericError, UsageError
from .configuration import Configuration
from .coupling import Matching, rho
from .space import (
    DEFAULT_STEP,
    SMOOTH_STEP_MAX_SLOPE,
    Ball,
    CompactVectorField,
    flow_points,
    pushforward,
    smooth_step,
    sup_norm_bound,
)


class ConfigurationPath:
    """A path t -> Configuration on [a, b], evaluated lazily."""

    def __init__(self, sampler: Callable[[float], Configuration], a: float = 0.0, b: float = 1.0):
        if not a < b:
            raise UsageError("path interval needs a < b")
        self._sampler = sampler
        self.a = float(a)
        self.b = float(b)

    def __call__(self, t: float) -> Configuration:
        return self._sampler(float(t))

    def at_times(self, times: Sequence[float]) -> list[Configuration]:
        return [self._sampler(float(t)) for t in times]


class FlowPath(ConfigurationPath):
    """t -> psi_t^* gamma, integrated once across sorted sample times."""

    def __init__(self, V: CompactVectorField, gamma: Configuration, a: float = 0.0,
                 b: float = 1.0, step: float = DEFAULT_STEP):
        super().__init__(lambda t: pushforward(V, gamma, t, step), a, b)
        self.V = V
        self.gamma = gamma
        self.step = step

    def at_times(self, times):
        times = [float(t) for t in times]
        if any(t1 < t0 for t0, t1 in zip(times, times[1:])):
            return super().at_times(times)
        pts = flow_points(self.V, self.gamma.points, times, self.step)
        return [Configuration(p, dim=self.gamma.dim) for p in pts]


def geodesic_path(gamma: Configuration, omega: Configuration, matching: Matching) -> ConfigurationPath:
    return ConfigurationPath(lambda t: interpolate(gamma, omega, matching, t))


def interpolate(gamma: Configuration, omega: Configuration, matching: Matching, t: float) -> Configuration:
    """Move each gamma point a fraction ``t`` along the segment to its partner.

    Point ``i`` of the result is ``(1 - t) x_i + t y_{M(i)}``; t = 0 and t = 1
    reproduce ``gamma`` and ``omega`` (the latter reordered by the matching).
    """
    if not matching.is_perfect(len(gamma), len(omega)):
        raise UsageError("interpolation needs a perfect matching between gamma and omega")
    if gamma.dim != omega.dim:
        raise UsageError("dimension mismatch")
    if len(gamma) == 0:
        return gamma
    perm = matching.as_permutation(len(gamma))
    x, y = gamma.points, omega.points[perm]
    if t == 0:
        return gamma
    if t == 1:
        return Configuration(y, dim=gamma.dim)
    return Configuration((1.0 - t) * x + t * y, dim=gamma.dim)


def monotone_matching_1d(gamma: Configuration, omega: Configuration) -> Matching:
    """Order-preserving matching of two equal-size configurations on the line."""
    if gamma.dim != 1 or omega.dim != 1:
        raise UsageError("monotone matching is only defined for d = 1")
    if len(gamma) != len(omega):
        raise UsageError("monotone matching needs equal point counts")
    gi = np.argsort(gamma.points[:, 0], kind="stable")
    wi = np.argsort(omega.points[:, 0], kind="stable")
    pairs = tuple(sorted((int(a), int(b)) for a, b in zip(gi, wi)))
    diff = gamma.points[gi, 0] - omega.points[wi, 0]
    return Matching(pairs, float(np.sum(diff * diff)))


# -- 1D staged flows -------------------------------------------------------


@dataclass(frozen=True)
class _Stage:
    starts: np.ndarray
    velocities: np.ndarray
    duration: float


def _exact_stages(x: np.ndarray, y: np.ndarray, cap: int) -> list[_Stage]:
    """Piecewise-constant stages of the straight-line motion x -> y over unit time.

    A stage ends as soon as a moving point reaches the starting position of
    another point, so within a stage the velocity field is time independent.
    """
    scale = 1.0 + float(np.max(np.abs(np.concatenate([x, y]))))
    tol = 1e-12 * scale
    v = y - x  # constant speeds of the straight-line interpolation
    moving = np.abs(v) > tol
    p = x.copy()
    elapsed = 0.0
    stages = []
    while moving.any() and elapsed < 1.0 - 1e-12:
        remaining = 1.0 - elapsed
        tau = remaining
        for i in np.flatnonzero(moving):
            hits = (p - p[i]) / v[i]
            hits[i] = np.inf
            hits = hits[hits > 1e-12]
            if hits.size:
                tau = min(tau, float(hits.min()))
        stages.append(_Stage(p.copy(), v.copy(), tau))
        if len(stages) > cap:
            raise NumericError(f"staged construction exceeded the cap of {cap} stages")
        elapsed += tau
        p = y.copy() if remaining - tau <= 1e-12 else p + tau * v
    return stages


def _stage_field(stage: _Stage, width_factor: float, eps: float):
    """Smooth stage field: each mover's speed on its traversed segment."""
    p, v, tau = stage.starts, stage.velocities, stage.duration
    scale = 1.0 + float(np.max(np.abs(p)) + np.max(np.abs(v)))
    tol = 1e-10 * scale
    movers = np.flatnonzero(np.abs(v) > 1e-12 * scale)
    ends = p + tau * v
    lo = np.minimum(p, ends)
    hi = np.maximum(p, ends)
    # touching pairs: mover i ends where mover j starts
    touch = {}
    for i in movers:
        for j in movers:
            if i != j and abs(ends[i] - p[j]) <= tol:
                touch[int(i)] = int(j)

    # gap between objects that must not interact
    objects = [(lo[i], hi[i], int(i)) for i in movers]
    objects += [(p[k], p[k], int(k)) for k in range(len(p)) if k not in set(movers.tolist())]
    gap = min((hi[i] - lo[i] for i in movers), default=math.inf)
    for a in range(len(objects)):
        for b in range(a + 1, len(objects)):
            la, ha, ia = objects[a]
            lb, hb, ib = objects[b]
            if touch.get(ia) == ib or touch.get(ib) == ia:
                continue
            gap = min(gap, max(lb - ha, la - hb))
    if not gap > 0:
        raise NumericError("stage segments overlap; configurations must be simple")
    w = min(eps, gap / 2.0) / 4.0 * width_factor

    left = {int(i): lo[i] - w for i in movers}
    right = {int(i): hi[i] + w for i in movers}
    for i, j in touch.items():
        P = p[j]
        slower_is_j = abs(v[i]) >= abs(v[j])
        rightward = v[i] > 0
        # zone [z0, z0 + w] sits inside the slower mover's segment
        if rightward:
            z0 = P if slower_is_j else P - w
            right[i] = z0 + w
            left[j] = z0
        else:
            z0 = P - w if slower_is_j else P
            left[i] = z0
            right[j] = z0 + w

    mv = [(left[int(i)], right[int(i)], float(v[i])) for i in movers]
    rise_at = np.array([a for a, _, _ in mv])
    fall_at = np.array([b - w for _, b, _ in mv])
    speeds = np.array([vel for _, _, vel in mv])

    def func(x):
        s = x[:, :1]
        weight = smooth_step((s - rise_at) / w) * (1.0 - smooth_step((s - fall_at) / w))
        return weight @ speeds[:, None]

    lip = 0.0
    vmax = float(np.max(np.abs(v))) if len(v) else 0.0
    for i in movers:
        lip = max(lip, abs(v[i]) * SMOOTH_STEP_MAX_SLOPE / w)
    for i, j in touch.items():
        lip = max(lip, abs(v[i] - v[j]) * SMOOTH_STEP_MAX_SLOPE / w)
    span_lo = min(a for a, _, _ in mv) - w
    span_hi = max(b for _, b, _ in mv) + w
    support = Ball([0.5 * (span_lo + span_hi)], 0.5 * (span_hi - span_lo))
    return CompactVectorField(func, support, lip, vmax), w


def run_stages(stages, gamma: Configuration, step: float | None = None) -> Configuration:
    """Compose the flows of a staged construction starting from ``gamma``."""
    current = gamma
    for V, duration in stages:
        h = step if step is not None else getattr(V, "suggested_step", DEFAULT_STEP)
        current = pushforward(V, current, duration, h)
    return current


def staged_flow_1d(gamma: Configuration, omega: Configuration, eps: float,
                   max_refinements: int = 30):
    """Piecewise flows carrying ``gamma`` to within ``eps`` of ``omega`` on the line.

    Returns a list of ``(CompactVectorField, duration)`` with durations summing
    to 1. Each field is a mollified version of the piecewise-constant field
    moving every point at its constant geodesic speed. The mollification width
    is shrunk until executing the flows lands within ``eps`` of ``omega``.
    """
    if gamma.dim != 1 or omega.dim != 1:
        raise UsageError("staged flows are implemented for d = 1 only")
    if len(gamma) != len(omega):
        raise UsageError("staged flows need equal point counts")
    if not (gamma.is_simple() and omega.is_simple()):
        raise UsageError("staged flows need simple configurations")
    if not eps > 0:
        raise UsageError("eps must be positive")
    M = monotone_matching_1d(gamma, omega)
    perm = M.as_permutation(len(gamma))
    x = gamma.points[:, 0].copy()
    y = omega.points[perm, 0].copy()
    n = len(gamma)
    stages = _exact_stages(x, y, cap=max(4 * n * n, 1))
    if not stages:
        return []
    factor = 1.0
    for _ in range(max_refinements):
        built = []
        for st in stages:
            V, w = _stage_field(st, factor, eps)
            vmax = max(float(np.max(np.abs(st.velocities))), 1e-12)
            V.suggested_step = min(DEFAULT_STEP, w / (4.0 * vmax))
            built.append((V, st.duration))
        end = run_stages(built, gamma)
        dist = rho(end, omega)[0]
        if dist.is_finite and dist.value < eps:
            return built
        factor /= 2.0
    raise NumericError("staged flow did not reach the eps-neighbourhood of omega")


# -- energies --------------------------------------------------------------


@dataclass(frozen=True)
class CurveEnergy:
    value: float
    increment: float
    depth: int


def _partition_sum(samples, times) -> float:
    total = 0.0
    for k in range(1, len(samples)):
        d, _ = rho(samples[k], samples[k - 1])
        if not d.is_finite:
            return math.inf
        total += d.value**2 / (times[k] - times[k - 1])
    return 0.5 * total


def curve_energy(path, a: float, b: float, depth: int) -> CurveEnergy:
    """Energy sum of ``path`` on the dyadic partition of [a, b] with 2**depth cells.

    ``increment`` is the change from depth - 1 and serves as a convergence
    indicator. Any infinite step distance makes the energy infinite.
    """
    if depth < 1:
        raise UsageError("depth must be a positive integer")
    if not a < b:
        raise UsageError("need a < b")
    times = np.linspace(a, b, 2**depth + 1)
    if isinstance(path, ConfigurationPath):
        samples = path.at_times(times)
    else:
        samples = [path(float(t)) for t in times]
    fine = _partition_sum(samples, times)
    coarse = _partition_sum(samples[::2], times[::2])
    inc = fine - coarse if math.isfinite(fine) and math.isfinite(coarse) else math.nan
    return CurveEnergy(fine, inc, depth)


def tangent_norm_squared(V: CompactVectorField, gamma: Configuration) -> float:
    """||V||_gamma^2 = sum over points of |V(x)|^2."""
    if len(gamma) == 0:
        return 0.0
    vals = V(gamma.points)
    return float(np.sum(vals * vals))


def flow_energy(V: CompactVectorField, gamma: Configuration, a: float, b: float,
                quad_points: int = 257, step: float = DEFAULT_STEP) -> float:
    """(1/2) integral over [a, b] of ||V||^2 along t -> psi_t^* gamma (Simpson rule)."""
    if quad_points < 2:
        raise UsageError("quad_points must be at least 2")
    times = np.linspace(a, b, quad_points)
    pts = flow_points(V, gamma.points, times, step)
    vals = np.array([float(np.sum(V(p) ** 2)) if len(p) else 0.0 for p in pts])
    if quad_points == 2:
        return 0.5 * float(np.trapezoid(vals, times))
    return 0.5 * float(simpson(vals, x=times))


@dataclass(frozen=True)
class GronwallGap:
    lhs: float
    rhs: float
    constant: float
    sup_difference: float
    count_in_support: int

    @property
    def holds(self) -> bool:
        return self.lhs <= self.rhs

    @property
    def ratio(self) -> float:
        return self.lhs / self.rhs if self.rhs > 0 else (0.0 if self.lhs == 0 else math.inf)


def gronwall_gap(V: CompactVectorField, W: CompactVectorField, gamma: Configuration,
                 t: float, step: float = DEFAULT_STEP) -> GronwallGap:
    """Compare the flows of V and W started from gamma against the Gronwall bound.

    lhs = rho(psi_t^* gamma, phi_t^* gamma) and
    rhs = c t e^{c t} ||V - W||_inf sqrt(gamma(A)) with c = max(1, Lip V)
    and A the union of the two supports.
    """
    if not t > 0:
        raise UsageError("t must be positive")
    a = pushforward(V, gamma, t, step)
    b = pushforward(W, gamma, t, step)
    lhs_d, _ = rho(a, b)
    in_a = 0
    if len(gamma):
        mask = V.support.closure_contains(gamma.points) | W.support.closure_contains(gamma.points)
        in_a = int(np.count_nonzero(mask))
    c = max(1.0, V.lipschitz_bound)
    sup = sup_norm_bound(V - W) if in_a else 0.0
    rhs = c * t * math.exp(c * t) * sup * math.sqrt(in_a)
    return GronwallGap(float(lhs_d), rhs, c, sup, in_a)


__all__ = [
    "ConfigurationPath", "FlowPath", "geodesic_path", "interpolate", "monotone_matching_1d",
    "staged_flow_1d", "run_stages", "CurveEnergy", "curve_energy", "flow_energy",
    "tangent_norm_squared", "GronwallGap", "gronwall_gap",
]
