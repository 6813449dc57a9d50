"""Cylinder functions and their gradient, finite-difference derivative checks
along flows, Lipschitz audits, McShane extension, the localized-distance
family for the intrinsic metric, Dirichlet-energy Monte Carlo and spatial
ergodic averages."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from scipy import integrate

from ._errors import NumericError, UsageError
from .configuration import Box, Configuration
from .coupling import rho, rho_localized
from .measures import as_generator
from .space import (
    DEFAULT_STEP,
    Ball,
    CompactVectorField,
    as_point,
    bump_profile,
    bump_profile_derivative,
    pushforward,
)

DEFAULT_H = 1e-3


# -- building blocks -------------------------------------------------------


class CompactTestFunction:
    """A smooth f: R^d -> R with its gradient, vanishing outside ``support``."""

    def __init__(self, func: Callable, grad: Callable, support: Ball):
        self.func = func
        self.grad = grad
        self.support = support

    @property
    def dim(self) -> int:
        return self.support.dim

    def __call__(self, points) -> np.ndarray:
        x = np.asarray(points, dtype=float).reshape(-1, self.dim)
        out = np.asarray(self.func(x), dtype=float)
        return np.where(self.support.contains(x), out, 0.0)

    def gradient(self, points) -> np.ndarray:
        x = np.asarray(points, dtype=float).reshape(-1, self.dim)
        out = np.asarray(self.grad(x), dtype=float)
        return np.where(self.support.contains(x)[:, None], out, 0.0)


def bump_test_function(center, radius: float, amplitude: float = 1.0) -> CompactTestFunction:
    """amplitude * bump(|x - center| / radius)."""
    ball = Ball(center, radius)
    c = ball.center

    def func(x):
        return amplitude * bump_profile(np.sqrt(np.sum((x - c) ** 2, axis=1)) / radius)

    def grad(x):
        diff = x - c
        r = np.sqrt(np.sum(diff * diff, axis=1))
        dr = amplitude * bump_profile_derivative(r / radius) / radius
        return (dr / np.where(r > 0, r, 1.0))[:, None] * diff

    f = CompactTestFunction(func, grad, ball)
    f.radial = lambda r: amplitude * bump_profile(np.asarray(r) / radius)
    return f


@dataclass(frozen=True)
class OuterFunction:
    """F: R^n -> R with gradient; ``bound`` and ``grad_bound`` are sup bounds (inf if unbounded)."""

    func: Callable[[np.ndarray], float]
    grad: Callable[[np.ndarray], np.ndarray]
    bound: float
    grad_bound: float
    name: str = "custom"


def tanh_outer(weights) -> OuterFunction:
    """F(s) = tanh(w . s)."""
    w = np.atleast_1d(np.asarray(weights, dtype=float))
    return OuterFunction(lambda s: math.tanh(float(w @ s)),
                         lambda s: w / math.cosh(float(w @ s)) ** 2,
                         1.0, float(np.abs(w).sum()), "tanh")


def saturated_square_outer(n: int) -> OuterFunction:
    """F(s) = tanh(|s|^2): couples all coordinates."""
    return OuterFunction(lambda s: math.tanh(float(s @ s)),
                         lambda s: 2.0 * s / math.cosh(float(s @ s)) ** 2,
                         1.0, 2.0, "tanh_square")


def linear_outer(weights) -> OuterFunction:
    """F(s) = w . s. Unbounded; used where the inner sums are bounded (Campbell checks)."""
    w = np.atleast_1d(np.asarray(weights, dtype=float))
    return OuterFunction(lambda s: float(w @ s), lambda s: w.copy(), math.inf,
                         float(np.abs(w).sum()), "linear")


def exp_neg_outer(weights) -> OuterFunction:
    """F(s) = exp(-w . s), bounded by 1 on the orthant where w . s >= 0."""
    w = np.atleast_1d(np.asarray(weights, dtype=float))
    return OuterFunction(lambda s: math.exp(-float(w @ s)),
                         lambda s: -w * math.exp(-float(w @ s)),
                         1.0, float(np.abs(w).sum()), "exp_neg")


def constant_outer(value: float, n: int) -> OuterFunction:
    return OuterFunction(lambda s: float(value), lambda s: np.zeros(n), abs(value), 0.0, "constant")


class CylinderFunction:
    """u(gamma) = F(<f_1, gamma>, ..., <f_n, gamma>)."""

    def __init__(self, inner: Sequence[CompactTestFunction], outer: OuterFunction):
        if not inner:
            raise UsageError("a cylinder function needs at least one inner function")
        dims = {f.dim for f in inner}
        if len(dims) != 1:
            raise UsageError("inner functions must share one dimension")
        self.inner = list(inner)
        self.outer = outer

    @property
    def dim(self) -> int:
        return self.inner[0].dim

    def sums(self, gamma: Configuration) -> np.ndarray:
        if len(gamma) == 0:
            return np.zeros(len(self.inner))
        return np.array([float(np.sum(f(gamma.points))) for f in self.inner])

    def __call__(self, gamma: Configuration) -> float:
        return eval_cylinder(self, gamma)

    @property
    def reach(self) -> float:
        """max over inner supports of |center|_inf + radius."""
        return max(float(np.max(np.abs(f.support.center))) + f.support.radius for f in self.inner)


@dataclass(frozen=True)
class TangentVector:
    """Per-point vectors aligned with a configuration's points."""

    vectors: np.ndarray

    def norm(self) -> float:
        return float(np.sqrt(np.sum(self.vectors ** 2)))

    def inner(self, other) -> float:
        w = other.vectors if isinstance(other, TangentVector) else np.asarray(other, dtype=float)
        if w.shape != self.vectors.shape:
            raise UsageError("tangent vectors live on different configurations")
        return float(np.sum(self.vectors * w))

    def __len__(self) -> int:
        return len(self.vectors)


def eval_cylinder(u: CylinderFunction, gamma: Configuration) -> float:
    if len(gamma) and gamma.dim != u.dim:
        raise UsageError(f"dimension mismatch: configuration {gamma.dim}, function {u.dim}")
    return float(u.outer.func(u.sums(gamma)))


def gradient_cylinder(u: CylinderFunction, gamma: Configuration) -> TangentVector:
    """At each point x: sum_i dF_i(inner sums) * grad f_i(x)."""
    if len(gamma) and gamma.dim != u.dim:
        raise UsageError(f"dimension mismatch: configuration {gamma.dim}, function {u.dim}")
    if len(gamma) == 0:
        return TangentVector(np.zeros((0, u.dim)))
    dF = np.asarray(u.outer.grad(u.sums(gamma)), dtype=float)
    out = np.zeros((len(gamma), u.dim))
    for coef, f in zip(dF, u.inner):
        if coef != 0.0:
            out += coef * f.gradient(gamma.points)
    return TangentVector(out)


def field_on(V: CompactVectorField, gamma: Configuration) -> TangentVector:
    """The tangent vector x -> V(x) at gamma."""
    if len(gamma) == 0:
        return TangentVector(np.zeros((0, V.dim)))
    return TangentVector(V(gamma.points))


# -- derivatives along flows -----------------------------------------------


def directional_derivative_fd(u: Callable[[Configuration], float], gamma: Configuration,
                              V: CompactVectorField, h: float = DEFAULT_H,
                              step: float = DEFAULT_STEP) -> float:
    """(u(psi_h gamma) - u(psi_{-h} gamma)) / (2h)."""
    if h == 0:
        raise UsageError("h must be nonzero")
    plus = float(u(pushforward(V, gamma, h, step)))
    minus = float(u(pushforward(V, gamma, -h, step)))
    if not (math.isfinite(plus) and math.isfinite(minus)):
        raise NumericError("u is not finite along the flow")
    return (plus - minus) / (2.0 * h)


@dataclass(frozen=True)
class RichardsonReport:
    exact: float
    estimate: float
    error: float
    error_half: float
    order: float
    floor: float

    @property
    def at_roundoff(self) -> bool:
        """Both errors are below the floating-point noise floor, so no order is measurable."""
        return self.error <= self.floor and self.error_half <= self.floor

    def passes(self, tol: float = 1e-4, min_order: float = 1.95) -> bool:
        if self.error > tol:
            return False
        return self.at_roundoff or self.order >= min_order


def richardson_check(u: CylinderFunction, gamma: Configuration, V: CompactVectorField,
                     h: float = DEFAULT_H, step: float = DEFAULT_STEP) -> RichardsonReport:
    """Compare central differences at h and h/2 with <grad u, V>_gamma.

    The observed order is log2(err(h) / err(h/2)). Errors below the
    roundoff floor ~ 1e-12 / h carry no order information.
    """
    exact = gradient_cylinder(u, gamma).inner(field_on(V, gamma)) if len(gamma) else 0.0
    d1 = directional_derivative_fd(u, gamma, V, h, step)
    d2 = directional_derivative_fd(u, gamma, V, h / 2, step)
    e1, e2 = abs(d1 - exact), abs(d2 - exact)
    floor = 1e-12 * (1.0 + abs(exact)) / h
    if e1 <= floor or e2 <= floor:
        order = math.inf if e2 <= floor else math.nan
    else:
        order = math.log2(e1 / e2)
    return RichardsonReport(exact, d1, e1, e2, order, floor)


# -- Lipschitz audits and McShane extension --------------------------------


@dataclass(frozen=True)
class LipschitzAudit:
    value: float
    worst_pair: int | None
    skipped: int


def lipschitz_audit(u: Callable[[Configuration], float],
                    pairs: Sequence[tuple[Configuration, Configuration]]) -> LipschitzAudit:
    """max |u(g) - u(w)| / rho(g, w) over pairs at finite, positive distance."""
    best, worst, skipped = 0.0, None, 0
    for k, (g, w) in enumerate(pairs):
        d, _ = rho(g, w)
        if not d.is_finite:
            skipped += 1
            continue
        diff = abs(float(u(g)) - float(u(w)))
        if d.value == 0.0:
            if diff > 0.0:
                return LipschitzAudit(math.inf, k, skipped)
            continue
        q = diff / d.value
        if q > best or worst is None:
            best, worst = max(best, q), k
    if skipped:
        warnings.warn(f"{skipped} pair(s) at infinite distance skipped", RuntimeWarning, stacklevel=2)
    return LipschitzAudit(best, worst, skipped)


def mcshane_extend(samples: Sequence[tuple[Configuration, float]], C: float,
                   gamma: Configuration) -> float:
    """max over samples (w, v) of v - C rho(w, gamma); infinite distances dropped, 0 if none remain."""
    if not samples:
        raise UsageError("samples must be nonempty")
    if not C > 0:
        raise UsageError("C must be positive")
    vals = []
    for w, v in samples:
        d, _ = rho(w, gamma)
        if d.is_finite:
            vals.append(float(v) - C * d.value)
    return max(vals) if vals else 0.0


# -- intrinsic metric ------------------------------------------------------


def localized_clip(omega: Configuration, radius: float, c: float, center=None):
    """The function gamma -> min(c, rho_{omega, r}(gamma)) over the ball B(center, r)."""
    if center is None:
        center = np.zeros(omega.dim)
    B = Ball(center, radius)

    def u(gamma: Configuration) -> float:
        return rho_localized(gamma, omega, B)[0].clip(c)

    return u


def _random_perturbation(gamma: Configuration, scale: float, gen) -> Configuration:
    return Configuration(gamma.points + scale * gen.standard_normal(gamma.points.shape),
                         dim=gamma.dim)


@dataclass(frozen=True)
class IntrinsicReport:
    radii: tuple
    values: tuple
    lipschitz: tuple
    rho: float
    supremum: float
    gap: float
    c: float


def intrinsic_metric_gap(gamma: Configuration, omega: Configuration, radii: Sequence[float],
                         c: float, center=None, audit_pairs: int = 20, rng=None) -> IntrinsicReport:
    """Evaluate u_r = c ∧ rho_{omega,r} at gamma for each radius.

    Since u_r(omega) = 0, u_r(gamma) - u_r(omega) = u_r(gamma). Each u_r is
    audited for its Lipschitz constant on ``audit_pairs`` random pairs near
    gamma and omega. The gap is rho(gamma, omega) - max_r u_r(gamma).
    """
    radii = [float(r) for r in radii]
    if not radii or any(r <= 0 for r in radii) or radii != sorted(radii):
        raise UsageError("radii must be positive and increasing")
    if not c > 0:
        raise UsageError("c must be positive")
    gen = as_generator(rng)
    full = rho(gamma, omega)[0]
    pairs = []
    for k in range(audit_pairs):
        base = gamma if k % 2 == 0 else omega
        a = _random_perturbation(base, 0.3, gen)
        b = _random_perturbation(a, 0.5 * gen.random() + 0.05, gen)
        pairs.append((a, b))
    values, lips = [], []
    for r in radii:
        u = localized_clip(omega, r, c, center)
        values.append(u(gamma))
        lips.append(lipschitz_audit(u, pairs).value if pairs else 0.0)
    sup = max(values)
    gap = float(full) - sup if full.is_finite else math.inf
    return IntrinsicReport(tuple(radii), tuple(values), tuple(lips), float(full), sup, gap, c)


# -- Monte Carlo ------------------------------------------------------------


def dirichlet_energy_mc(u: CylinderFunction, sampler: Callable, n: int, rng=None) -> tuple[float, float]:
    """Mean and standard error of ||grad u(gamma)||^2 over n draws gamma = sampler(rng)."""
    if n < 100:
        raise UsageError("n must be at least 100")
    gen = as_generator(rng)
    vals = np.empty(n)
    for k in range(n):
        g = gradient_cylinder(u, sampler(gen)).vectors
        vals[k] = float(np.sum(g * g))
    return float(vals.mean()), float(vals.std(ddof=1) / math.sqrt(n))


def radial_integral(g: Callable[[np.ndarray], np.ndarray], radius: float, dim: int) -> float:
    """Integral over R^d of a radial function g(|x|) supported in |x| <= radius."""
    surface = 2.0 * math.pi ** (dim / 2) / math.gamma(dim / 2)
    val, _ = integrate.quad(lambda r: float(g(np.array([r]))[0]) * r ** (dim - 1), 0.0, radius,
                            limit=200, epsabs=1e-13, epsrel=1e-12)
    return surface * val


def poisson_exp_mean(f: CompactTestFunction, z: float, weight: float = 1.0) -> float:
    """E exp(-weight <f, gamma>) under Poisson(z): exp(-z * integral (1 - e^{-weight f}))."""
    radial = getattr(f, "radial", None)
    if radial is None:
        raise UsageError("closed form needs a radial test function")
    integral = radial_integral(lambda r: 1.0 - np.exp(-weight * radial(r)), f.support.radius, f.dim)
    return math.exp(-z * integral)


def ergodic_average(gamma: Configuration, window: Box, u: CylinderFunction,
                    box_sizes: Sequence[float], grid_step: float) -> list[float]:
    """Midpoint-rule averages of u(shift(gamma, -x)) over x in V_n = [-n, n]^d.

    ``window`` is the box gamma was sampled in; it must contain every V_n
    enlarged by the reach of the inner supports.
    """
    if not grid_step > 0:
        raise UsageError("grid_step must be positive")
    if window.dim != u.dim or (len(gamma) and gamma.dim != u.dim):
        raise UsageError("dimension mismatch")
    reach = u.reach
    out = []
    for n in box_sizes:
        n = float(n)
        if np.any(window.lo > -n - reach) or np.any(window.hi < n + reach):
            raise UsageError(f"window too small for V_n with n={n} (needs margin {reach})")
        k = max(1, int(round(2 * n / grid_step)))
        axis = -n + (np.arange(k) + 0.5) * (2 * n / k)
        grid = np.stack(np.meshgrid(*([axis] * u.dim), indexing="ij"), axis=-1).reshape(-1, u.dim)
        sums = _shifted_sums(gamma, u, grid)
        vals = np.array([u.outer.func(s) for s in sums])
        out.append(float(vals.mean()))
    return out


def _shifted_sums(gamma: Configuration, u: CylinderFunction, grid: np.ndarray,
                  chunk: int = 4096) -> np.ndarray:
    """sums[g, i] = sum over y in gamma of f_i(y - grid[g])."""
    sums = np.zeros((len(grid), len(u.inner)))
    if len(gamma) == 0:
        return sums
    pts = gamma.points
    for i, f in enumerate(u.inner):
        lo = f.support.center - f.support.radius
        hi = f.support.center + f.support.radius
        for s in range(0, len(grid), chunk):
            g = grid[s:s + chunk]
            # only points inside the bounding box of the shifted support matter
            glo, ghi = g.min(axis=0) + lo, g.max(axis=0) + hi
            near = pts[np.all((pts >= glo) & (pts <= ghi), axis=1)]
            if len(near) == 0:
                continue
            diff = near[None, :, :] - g[:, None, :]
            sums[s:s + chunk, i] = f(diff.reshape(-1, u.dim)).reshape(len(g), len(near)).sum(axis=1)
    return sums


__all__ = [
    "CompactTestFunction", "bump_test_function", "OuterFunction", "tanh_outer",
    "saturated_square_outer", "linear_outer", "exp_neg_outer", "constant_outer",
    "CylinderFunction", "TangentVector", "eval_cylinder", "gradient_cylinder", "field_on",
    "directional_derivative_fd", "RichardsonReport", "richardson_check", "LipschitzAudit",
    "lipschitz_audit", "mcshane_extend", "localized_clip", "IntrinsicReport",
    "intrinsic_metric_gap", "dirichlet_energy_mc", "radial_integral", "poisson_exp_mean",
    "ergodic_average",
]
