"""The ground space R^d: distances, balls, lattice cubes and compactly
supported vector fields together with their flows."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from scipy.optimize import minimize_scalar

from ._errors import NumericError, UsageError

DEFAULT_STEP = 1e-3


def as_point(x, dim: int | None = None) -> np.ndarray:
    p = np.atleast_1d(np.asarray(x, dtype=float)).ravel()
    if dim is not None and p.shape[0] != dim:
        raise UsageError(f"expected a point of dimension {dim}, got {p.shape[0]}")
    if not np.all(np.isfinite(p)):
        raise UsageError("point coordinates must be finite")
    return p


def ground_distance(x, y) -> float:
    """Euclidean distance between two points of the same dimension."""
    x = as_point(x)
    y = as_point(y)
    if x.shape != y.shape:
        raise UsageError(f"dimension mismatch: {x.shape[0]} vs {y.shape[0]}")
    return float(np.sqrt(np.sum((x - y) ** 2)))


def squared_distances(xs: np.ndarray, ys: np.ndarray) -> np.ndarray:
    """Matrix of squared Euclidean distances between the rows of ``xs`` and ``ys``."""
    diff = xs[:, None, :] - ys[None, :, :]
    return np.einsum("ijk,ijk->ij", diff, diff)


@dataclass(frozen=True)
class Ball:
    """Open Euclidean ball. ``contains`` is strict; ``closure_contains`` is not."""

    center: np.ndarray
    radius: float

    def __post_init__(self):
        object.__setattr__(self, "center", as_point(self.center))
        if not (self.radius > 0 and math.isfinite(self.radius)):
            raise UsageError(f"ball radius must be positive and finite, got {self.radius}")
        object.__setattr__(self, "radius", float(self.radius))

    @property
    def dim(self) -> int:
        return self.center.shape[0]

    def _dist(self, points) -> np.ndarray:
        pts = np.asarray(points, dtype=float).reshape(-1, self.dim)
        return np.sqrt(np.sum((pts - self.center) ** 2, axis=1))

    def contains(self, points) -> np.ndarray:
        return self._dist(points) < self.radius

    def closure_contains(self, points) -> np.ndarray:
        return self._dist(points) <= self.radius

    def __eq__(self, other):
        return (
            isinstance(other, Ball)
            and self.radius == other.radius
            and np.array_equal(self.center, other.center)
        )

    def __hash__(self):
        return hash((tuple(self.center), self.radius))


def distance_to_boundary(x, ball: Ball) -> float:
    """| radius - |x - center| |, the distance from ``x`` to the sphere bounding ``ball``."""
    x = as_point(x, ball.dim)
    return abs(ball.radius - float(np.sqrt(np.sum((x - ball.center) ** 2))))


def nearest_boundary_point(x, ball: Ball) -> np.ndarray:
    """A point of the bounding sphere closest to ``x`` (any direction if x is the center)."""
    x = as_point(x, ball.dim)
    offset = x - ball.center
    norm = float(np.sqrt(offset @ offset))
    if norm == 0.0:
        direction = np.zeros(ball.dim)
        direction[0] = 1.0
    else:
        direction = offset / norm
    return ball.center + ball.radius * direction


def enclosing_ball(a: Ball, b: Ball) -> Ball:
    """Smallest ball containing both ``a`` and ``b``."""
    if a.dim != b.dim:
        raise UsageError("dimension mismatch between balls")
    gap = float(np.sqrt(np.sum((a.center - b.center) ** 2)))
    if gap + b.radius <= a.radius:
        return a
    if gap + a.radius <= b.radius:
        return b
    radius = 0.5 * (gap + a.radius + b.radius)
    direction = (b.center - a.center) / gap
    center = a.center + (radius - a.radius) * direction
    return Ball(center, radius)


@dataclass(frozen=True)
class LatticeCube:
    """Half-open unit cube Q_r = prod_i [r_i - 1/2, r_i + 1/2)."""

    index: tuple[int, ...]

    def contains(self, points) -> np.ndarray:
        pts = np.asarray(points, dtype=float).reshape(-1, len(self.index))
        return np.all(cube_index(pts) == np.asarray(self.index), axis=1)


def cube_index(points: np.ndarray) -> np.ndarray:
    """Integer index r of the half-open cube Q_r holding each point (row-wise)."""
    return np.floor(np.asarray(points, dtype=float) + 0.5).astype(np.int64)


# -- smooth profiles -------------------------------------------------------


def bump_profile(s: np.ndarray) -> np.ndarray:
    """exp(1 - 1/(1 - s^2)) on |s| < 1, zero elsewhere; equals 1 at s = 0."""
    s = np.asarray(s, dtype=float)
    out = np.zeros_like(s)
    inside = np.abs(s) < 1.0
    si = s[inside]
    out[inside] = np.exp(1.0 - 1.0 / (1.0 - si * si))
    return out


def bump_profile_derivative(s: np.ndarray) -> np.ndarray:
    s = np.asarray(s, dtype=float)
    out = np.zeros_like(s)
    inside = np.abs(s) < 1.0
    si = s[inside]
    q = 1.0 - si * si
    out[inside] = np.exp(1.0 - 1.0 / q) * (-2.0 * si / (q * q))
    return out


def _max_abs_derivative(fprime: Callable, lo: float, hi: float) -> float:
    grid = np.linspace(lo, hi, 20001)
    vals = np.abs(fprime(grid))
    k = int(np.argmax(vals))
    a, b = grid[max(k - 1, 0)], grid[min(k + 1, grid.size - 1)]
    res = minimize_scalar(lambda s: -abs(float(fprime(np.array([s]))[0])),
                          bounds=(a, b), method="bounded", options={"xatol": 1e-12})
    return max(float(vals[k]), -float(res.fun))


# Safety factor keeps the constant an upper bound despite the numerical maximisation.
BUMP_MAX_SLOPE = _max_abs_derivative(bump_profile_derivative, 0.0, 1.0) * (1 + 1e-9)


def smooth_step(u: np.ndarray) -> np.ndarray:
    """C-infinity step: 0 for u <= 0, 1 for u >= 1."""
    u = np.minimum(np.maximum(u, 0.0), 1.0)
    a = np.exp(-1.0 / np.maximum(u, 1e-300))
    b = np.exp(-1.0 / np.maximum(1.0 - u, 1e-300))
    return a / (a + b)


SMOOTH_STEP_MAX_SLOPE = 2.0 * (1 + 1e-9)


def plateau_profile(r: np.ndarray, inner: float, outer: float) -> np.ndarray:
    """1 on r <= inner, smoothly decreasing to 0 at r = outer."""
    return 1.0 - smooth_step((np.asarray(r, dtype=float) - inner) / (outer - inner))


# -- vector fields ---------------------------------------------------------


class CompactVectorField:
    """A smooth vector field vanishing outside a closed ball.

    Parameters
    ----------
    func : callable
        Maps an ``(n, d)`` array of points to an ``(n, d)`` array of vectors.
    support : Ball
        Values outside the closed ball are forced to zero.
    lipschitz_bound, sup_norm : float, optional
        Upper bounds for the Lipschitz constant and sup norm. Estimated by
        dense sampling when omitted.
    """

    def __init__(self, func, support: Ball, lipschitz_bound=None, sup_norm=None):
        self._func = func
        self.support = support
        if lipschitz_bound is None or sup_norm is None:
            est_lip, est_sup = estimate_field_bounds(self)
            lipschitz_bound = est_lip if lipschitz_bound is None else lipschitz_bound
            sup_norm = est_sup if sup_norm is None else sup_norm
        self.lipschitz_bound = float(lipschitz_bound)
        self.sup_norm = float(sup_norm)

    @property
    def dim(self) -> int:
        return self.support.dim

    def __call__(self, points) -> np.ndarray:
        pts = np.asarray(points, dtype=float)
        if pts.ndim != 2:
            pts = pts.reshape(-1, self.dim)
        out = np.array(self._func(pts), dtype=float).reshape(pts.shape)
        offset = pts - self.support.center
        outside = np.einsum("ij,ij->i", offset, offset) > self.support.radius ** 2
        if outside.any():
            out[outside] = 0.0
        if not np.isfinite(out).all():
            raise NumericError("vector field produced a non-finite value")
        return out

    def __add__(self, other: "CompactVectorField") -> "CompactVectorField":
        f, g = self, other
        return CompactVectorField(
            lambda x: f(x) + g(x),
            enclosing_ball(f.support, g.support),
            f.lipschitz_bound + g.lipschitz_bound,
            f.sup_norm + g.sup_norm,
        )

    def __neg__(self) -> "CompactVectorField":
        return self * -1.0

    def __sub__(self, other: "CompactVectorField") -> "CompactVectorField":
        return self + (-other)

    def __mul__(self, alpha: float) -> "CompactVectorField":
        f = self
        alpha = float(alpha)
        return CompactVectorField(
            lambda x: alpha * f(x), f.support,
            abs(alpha) * f.lipschitz_bound, abs(alpha) * f.sup_norm,
        )

    __rmul__ = __mul__


def _support_grid(ball: Ball, per_axis: int) -> tuple[np.ndarray, float]:
    axes = [np.linspace(c - ball.radius, c + ball.radius, per_axis) for c in ball.center]
    mesh = np.meshgrid(*axes, indexing="ij")
    pts = np.stack([m.ravel() for m in mesh], axis=1)
    spacing = 2.0 * ball.radius / (per_axis - 1)
    return pts[ball.closure_contains(pts)], spacing


def estimate_field_bounds(V: CompactVectorField, per_axis: int | None = None):
    """Sampled (Lipschitz, sup) estimates for a field; used when no bound is supplied."""
    d = V.dim
    if per_axis is None:
        per_axis = {1: 4001, 2: 161}.get(d, 41)
    pts, spacing = _support_grid(V.support, per_axis)
    vals = V._func(pts)
    vals = np.asarray(vals, dtype=float).reshape(pts.shape)
    sup = float(np.max(np.sqrt(np.sum(vals**2, axis=1)))) if len(pts) else 0.0
    lip = 0.0
    step = spacing * 1e-3
    for axis in range(d):
        shifted = pts.copy()
        shifted[:, axis] += step
        dv = np.asarray(V._func(shifted), dtype=float).reshape(pts.shape) - vals
        lip = max(lip, float(np.max(np.sqrt(np.sum(dv**2, axis=1)))) / step)
    lip *= math.sqrt(d)
    return max(lip, 1e-12), max(sup, 1e-12)


def sup_norm_bound(V: CompactVectorField, per_axis: int | None = None) -> float:
    """Upper bound on sup |V|: grid maximum plus Lipschitz slack for the grid spacing."""
    d = V.dim
    if per_axis is None:
        per_axis = {1: 20001, 2: 301}.get(d, 61)
    pts, spacing = _support_grid(V.support, per_axis)
    vals = V(pts)
    grid_max = float(np.max(np.sqrt(np.sum(vals**2, axis=1)))) if len(pts) else 0.0
    return grid_max + V.lipschitz_bound * spacing * math.sqrt(d) / 2.0


def zero_field(dim: int) -> CompactVectorField:
    return CompactVectorField(lambda x: np.zeros_like(x), Ball(np.zeros(dim), 1.0), 0.0, 0.0)


def bump_field(center, radius: float, amplitude) -> CompactVectorField:
    """``amplitude * bump(|x - center| / radius)``; the bump equals 1 at the center."""
    support = Ball(center, radius)
    a = as_point(amplitude, support.dim)
    c = support.center

    def func(x):
        s = np.sqrt(np.sum((x - c) ** 2, axis=1)) / radius
        return bump_profile(s)[:, None] * a

    norm_a = float(np.sqrt(a @ a))
    return CompactVectorField(func, support, norm_a * BUMP_MAX_SLOPE / radius, norm_a)


def plateau_field(center, inner_radius: float, radius: float, vector) -> CompactVectorField:
    """Constant ``vector`` on the ball of ``inner_radius``, smoothly cut off at ``radius``."""
    if not 0 < inner_radius < radius:
        raise UsageError("need 0 < inner_radius < radius")
    support = Ball(center, radius)
    v = as_point(vector, support.dim)
    c = support.center

    def func(x):
        r = np.sqrt(np.sum((x - c) ** 2, axis=1))
        return plateau_profile(r, inner_radius, radius)[:, None] * v

    norm_v = float(np.sqrt(v @ v))
    lip = norm_v * SMOOTH_STEP_MAX_SLOPE / (radius - inner_radius)
    return CompactVectorField(func, support, lip, norm_v)


def affine_field(matrix, offset, center, inner_radius: float, radius: float) -> CompactVectorField:
    """``matrix @ x + offset`` on the inner ball, smoothly cut off at ``radius``."""
    if not 0 < inner_radius < radius:
        raise UsageError("need 0 < inner_radius < radius")
    support = Ball(center, radius)
    d = support.dim
    A = np.asarray(matrix, dtype=float).reshape(d, d)
    b = as_point(offset, d)
    c = support.center

    def func(x):
        r = np.sqrt(np.sum((x - c) ** 2, axis=1))
        return plateau_profile(r, inner_radius, radius)[:, None] * (x @ A.T + b)

    op_norm = float(np.linalg.norm(A, 2))
    reach = float(np.sqrt(c @ c)) + radius
    sup = op_norm * reach + float(np.sqrt(b @ b))
    lip = op_norm + sup * SMOOTH_STEP_MAX_SLOPE / (radius - inner_radius)
    return CompactVectorField(func, support, lip, sup)


# -- flows -----------------------------------------------------------------


def _rk4(V: CompactVectorField, pts: np.ndarray, t: float, step: float) -> np.ndarray:
    if step <= 0:
        raise UsageError(f"step must be positive, got {step}")
    if t == 0 or len(pts) == 0:
        return pts.copy()
    n = max(1, math.ceil(abs(t) / step - 1e-9))
    h = t / n
    x = pts.copy()
    for _ in range(n):
        k1 = V(x)
        k2 = V(x + 0.5 * h * k1)
        k3 = V(x + 0.5 * h * k2)
        k4 = V(x + h * k3)
        x = x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    if not np.all(np.isfinite(x)):
        raise NumericError("flow integration diverged")
    return x


def flow_point(V: CompactVectorField, x, t: float, step: float = DEFAULT_STEP) -> np.ndarray:
    """Time-``t`` flow of ``x`` under ``V`` with the classical fixed-step RK4 scheme."""
    p = as_point(x, V.dim)
    return _rk4(V, p[None, :], float(t), step)[0]


def flow_points(V: CompactVectorField, points: np.ndarray, times: Sequence[float],
                step: float = DEFAULT_STEP) -> list[np.ndarray]:
    """Positions of ``points`` at each of the nondecreasing ``times`` (flow started at 0)."""
    pts = np.asarray(points, dtype=float).reshape(-1, V.dim)
    out = []
    current, t_prev = pts, 0.0
    for t in times:
        current = _rk4(V, current, float(t) - t_prev, step)
        t_prev = float(t)
        out.append(current)
    return out


def pushforward(V: CompactVectorField, gamma, t: float, step: float = DEFAULT_STEP):
    """Move every point of ``gamma`` along the flow of ``V`` for time ``t``."""
    from .configuration import Configuration

    if gamma.dim != V.dim:
        raise UsageError(f"dimension mismatch: configuration {gamma.dim}, field {V.dim}")
    return Configuration(_rk4(V, gamma.points, float(t), step), dim=gamma.dim)
