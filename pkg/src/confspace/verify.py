"""Reproducible verification suites.

Each ``check_*`` function runs one property or oracle comparison on seeded
random instances and returns a :class:`CheckResult` with the measured
values. The CLI ``verify`` command and the acceptance tests both call these.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np

from .analysis import (
    CylinderFunction,
    bump_test_function,
    directional_derivative_fd,
    ergodic_average,
    exp_neg_outer,
    field_on,
    intrinsic_metric_gap,
    poisson_exp_mean,
    richardson_check,
    saturated_square_outer,
    tanh_outer,
)
from .configuration import Box, Configuration, count
from .coupling import (
    clipped_set_distance,
    rho,
    rho_bruteforce,
    rho_localized,
    rho_localized_bruteforce,
)
from .geodesic import (
    FlowPath,
    curve_energy,
    flow_energy,
    geodesic_path,
    gronwall_gap,
    monotone_matching_1d,
)
from .measures import (
    GibbsChain,
    GibbsSpec,
    empty_probability_check,
    hard_core_potential,
    partition_function_mc,
    well_potential,
    zero_potential,
)
from .space import Ball, bump_field


@dataclass
class CheckResult:
    key: str
    title: str
    passed: bool
    measured: dict = field(default_factory=dict)
    seconds: float = 0.0

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        brief = ", ".join(f"{k}={_fmt(v)}" for k, v in self.measured.items())
        return f"[{status}] {self.key} {self.title}: {brief} ({self.seconds:.1f}s)"

    def to_json(self) -> dict:
        return {"key": self.key, "title": self.title, "passed": bool(self.passed),
                "measured": {k: _jsonable(v) for k, v in self.measured.items()},
                "seconds": self.seconds}


def _fmt(v) -> str:
    if isinstance(v, float):
        return f"{v:.3g}"
    if isinstance(v, (list, tuple)):
        return "[" + ", ".join(_fmt(x) for x in v) + "]"
    return str(v)


def _jsonable(v):
    if isinstance(v, (np.floating, float)):
        v = float(v)
        return v if math.isfinite(v) else str(v)
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, (np.bool_,)):
        return bool(v)
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    return v


def _timed(fn):
    def wrapper(*args, **kwargs):
        t0 = time.perf_counter()
        res = fn(*args, **kwargs)
        res.seconds = time.perf_counter() - t0
        return res
    wrapper.__name__ = fn.__name__
    wrapper.__doc__ = fn.__doc__
    return wrapper


def _config(gen, n, d, spread=2.0):
    return Configuration(gen.uniform(-spread, spread, (n, d)), dim=d)


def _same(a, b, tol=1e-9) -> bool:
    if a.is_finite != b.is_finite:
        return False
    return not a.is_finite or abs(a.value - b.value) <= tol


# -- metric core -------------------------------------------------------------


@_timed
def check_oracle_equivalence(seed=0, per_dim=500, max_points=7) -> CheckResult:
    """rho and rho_localized against exhaustive enumeration."""
    gen = np.random.default_rng(seed)
    mism = worst = 0
    worst = 0.0
    total = 0
    for d in (1, 2, 3):
        for _ in range(per_dim):
            n = int(gen.integers(0, max_points + 1))
            m = n if gen.random() < 0.8 else int(gen.integers(0, max_points + 1))
            g, w = _config(gen, n, d), _config(gen, m, d)
            a, b = rho(g, w)[0], rho_bruteforce(g, w)[0]
            if not _same(a, b):
                mism += 1
            elif a.is_finite:
                worst = max(worst, abs(a.value - b.value))
            B = Ball(gen.uniform(-1, 1, d), float(gen.uniform(0.3, 3.0)))
            a, b = rho_localized(g, w, B)[0], rho_localized_bruteforce(g, w, B)[0]
            if not _same(a, b):
                mism += 1
            elif a.is_finite:
                worst = max(worst, abs(a.value - b.value))
            total += 2
    return CheckResult("C1", "oracle equivalence", mism == 0,
                       {"comparisons": total, "mismatches": mism, "max_abs_diff": worst})


@_timed
def check_metric_axioms(seed=0, triples=500, max_points=7) -> CheckResult:
    gen = np.random.default_rng(seed)
    asym = tri = inf_bad = 0
    worst_excess = 0.0
    for _ in range(triples):
        d = int(gen.integers(1, 4))
        n = int(gen.integers(1, max_points + 1))
        a, b, c = (_config(gen, n, d) for _ in range(3))
        ab, ba = rho(a, b)[0], rho(b, a)[0]
        if ab.value != ba.value:
            asym += 1
        ac, bc = rho(a, c)[0], rho(b, c)[0]
        excess = ac.value - (ab.value + bc.value)
        worst_excess = max(worst_excess, excess)
        if excess > 1e-9:
            tri += 1
        # Infinite exactly when the counts differ
        k = int(gen.integers(0, max_points + 1))
        e = _config(gen, k, d)
        if rho(a, e)[0].is_finite != (k == n):
            inf_bad += 1
    ok = asym == 0 and tri == 0 and inf_bad == 0
    return CheckResult("C2", "metric axioms", ok,
                       {"triples": triples, "asymmetric": asym, "triangle_violations": tri,
                        "max_triangle_excess": worst_excess, "infinite_rule_violations": inf_bad})


@_timed
def check_localization(seed=0, instances=300, max_points=7) -> CheckResult:
    gen = np.random.default_rng(seed)
    mono = limit = fin = 0
    worst = 0.0
    for _ in range(instances):
        d = int(gen.integers(1, 4))
        n = int(gen.integers(0, max_points + 1))
        m = n if gen.random() < 0.7 else int(gen.integers(0, max_points + 1))
        g, w = _config(gen, n, d), _config(gen, m, d)
        center = gen.uniform(-0.5, 0.5, d)
        allpts = np.vstack([g.points, w.points]) if n + m else np.zeros((0, d))
        enclose = float(np.max(np.linalg.norm(allpts - center, axis=1))) + 0.1 if n + m else 1.0
        radii = sorted(gen.uniform(0.05, enclose, 6).tolist()) + [enclose, 2 * enclose]
        prev = None
        for r in radii:
            B = Ball(center, r)
            val = rho_localized(g, w, B)[0]
            if val.is_finite != (n >= count(w, B)):
                fin += 1
            if prev is not None and val < prev and not (prev.is_finite and val.is_finite
                                                        and prev.value - val.value <= 1e-9):
                mono += 1
            prev = val
        full = rho(g, w)[0]
        at_limit = rho_localized(g, w, Ball(center, 2 * enclose))[0]
        if n == m:
            if not _same(full, at_limit):
                limit += 1
            else:
                worst = max(worst, abs(full.value - at_limit.value))
    ok = mono == 0 and limit == 0 and fin == 0
    return CheckResult("C3", "localization", ok,
                       {"instances": instances, "monotonicity_violations": mono,
                        "limit_mismatches": limit, "finiteness_violations": fin,
                        "max_limit_diff": worst})


@_timed
def check_noncrossing(seed=0, instances=500, max_points=7) -> CheckResult:
    gen = np.random.default_rng(seed)
    wrong = improving = 0
    for _ in range(instances):
        n = int(gen.integers(1, max_points + 1))
        if gen.random() < 0.2:  # integer points exercise ties
            g = Configuration(gen.integers(-3, 4, n).astype(float), dim=1)
            w = Configuration(gen.integers(-3, 4, n).astype(float), dim=1)
        else:
            g, w = _config(gen, n, 1), _config(gen, n, 1)
        m = monotone_matching_1d(g, w)
        cost = m.recompute_cost(g, w)
        best = rho_bruteforce(g, w)[1].squared_cost
        if abs(cost - best) > 1e-9 * (1 + best):
            wrong += 1
        x, y = g.points[:, 0], w.points[:, 0]
        perm = m.as_permutation(n)
        for i in range(n):
            for j in range(i + 1, n):
                before = (x[i] - y[perm[i]]) ** 2 + (x[j] - y[perm[j]]) ** 2
                after = (x[i] - y[perm[j]]) ** 2 + (x[j] - y[perm[i]]) ** 2
                if after < before - 1e-12 * (1 + before):
                    improving += 1
    return CheckResult("C4", "1D non-crossing optimality", wrong == 0 and improving == 0,
                       {"instances": instances, "cost_mismatches": wrong,
                        "improving_transpositions": improving})


# -- energies and flows -------------------------------------------------------


def _random_bump_field(gen, d, scale=1.0, unit=False):
    a = gen.normal(size=d)
    if unit:  # sup norm at most 1; finite-difference error grows like |a|^3
        a /= max(1.0, float(np.linalg.norm(a)))
    return bump_field(gen.uniform(-1, 1, d), float(gen.uniform(1.0, 2.5)), scale * a)


@_timed
def check_energy_identity(seed=0, flows=50, geodesics=50, depth=8) -> CheckResult:
    gen = np.random.default_rng(seed)
    bad = 0
    worst = 0.0
    for _ in range(flows):
        d = int(gen.integers(1, 4))
        g = _config(gen, int(gen.integers(1, 11)), d, 1.5)
        V = _random_bump_field(gen, d)
        a, b = 0.0, float(gen.uniform(0.2, 1.0))
        ce = curve_energy(FlowPath(V, g, a, b), a, b, depth).value
        fe = flow_energy(V, g, a, b)
        err = abs(ce - fe) / (1 + fe)
        worst = max(worst, err)
        bad += err > 1e-3
    gbad = 0
    gworst = 0.0
    for _ in range(geodesics):
        d = int(gen.integers(1, 4))
        n = int(gen.integers(1, 11))
        g, w = _config(gen, n, d), _config(gen, n, d)
        dist, m = rho(g, w)
        ce = curve_energy(geodesic_path(g, w, m), 0.0, 1.0, depth).value
        target = 0.5 * dist.value ** 2
        err = abs(ce - target) / (1 + target)
        gworst = max(gworst, err)
        gbad += err > 1e-3
    return CheckResult("C5", "energy identity", bad == 0 and gbad == 0,
                       {"flows": flows, "flow_failures": bad, "max_rel_err": worst,
                        "geodesics": geodesics, "geodesic_failures": gbad,
                        "max_geodesic_rel_err": gworst})


@_timed
def check_gronwall(seed=0, instances=100) -> CheckResult:
    gen = np.random.default_rng(seed)
    bad = 0
    worst = 0.0
    for _ in range(instances):
        d = int(gen.integers(1, 4))
        g = _config(gen, int(gen.integers(1, 9)), d, 1.5)
        V = _random_bump_field(gen, d)
        W = V + _random_bump_field(gen, d, float(gen.uniform(0.01, 0.5)))
        t = float(gen.uniform(0.05, 1.0))
        gap = gronwall_gap(V, W, g, t)
        worst = max(worst, gap.ratio)
        bad += not gap.holds
    return CheckResult("C6", "Gronwall bound", bad == 0,
                       {"instances": instances, "violations": bad, "max_lhs_over_rhs": worst})


# -- analysis ---------------------------------------------------------------------


def _random_cylinder(gen, d, k):
    fs = [bump_test_function(gen.uniform(-1, 1, d), float(gen.uniform(0.8, 2.0)),
                             float(gen.uniform(0.5, 1.5))) for _ in range(2)]
    outer = tanh_outer(gen.uniform(-1, 1, 2)) if k % 2 == 0 else saturated_square_outer(2)
    return CylinderFunction(fs, outer)


@_timed
def check_gradient(seed=0, cylinders=50, rademacher=100, h=1e-3) -> CheckResult:
    gen = np.random.default_rng(seed)
    rich_bad = 0
    worst_err = 0.0
    min_order = math.inf
    for k in range(cylinders):
        d = int(gen.integers(1, 4))
        g = _config(gen, int(gen.integers(1, 13)), d, 1.5)
        u = _random_cylinder(gen, d, k)
        rep = richardson_check(u, g, _random_bump_field(gen, d, unit=True), h)
        worst_err = max(worst_err, rep.error)
        if not rep.at_roundoff:
            min_order = min(min_order, rep.order)
        rich_bad += not rep.passes(1e-4)
    rad_bad = 0
    worst_ratio = 0.0
    for _ in range(rademacher):
        d = int(gen.integers(1, 4))
        n = int(gen.integers(1, 7))
        g = _config(gen, n, d, 1.5)
        A = [_config(gen, n, d, 1.5) for _ in range(3)]
        V = _random_bump_field(gen, d)
        deriv = directional_derivative_fd(lambda c: clipped_set_distance(c, A, 1.0), g, V, h)
        norm = field_on(V, g).norm()
        if abs(deriv) > norm * 1.01 + 1e-3:
            rad_bad += 1
        if norm > 0:
            worst_ratio = max(worst_ratio, abs(deriv) / norm)
    return CheckResult("C7", "gradient and Rademacher", rich_bad == 0 and rad_bad == 0,
                       {"cylinders": cylinders, "richardson_failures": rich_bad,
                        "max_fd_error": worst_err, "min_observed_order": min_order,
                        "rademacher_trials": rademacher, "rademacher_violations": rad_bad,
                        "max_deriv_over_norm": worst_ratio})


@_timed
def check_intrinsic(seed=0, pairs=20) -> CheckResult:
    gen = np.random.default_rng(seed)
    gap_bad = lip_bad = 0
    worst_gap = worst_lip = 0.0
    for _ in range(pairs):
        d = int(gen.integers(1, 4))
        n = int(gen.integers(1, 7))
        g, w = _config(gen, n, d), _config(gen, n, d)
        full = rho(g, w)[0].value
        reach = float(np.max(np.linalg.norm(np.vstack([g.points, w.points]), axis=1))) + 0.1
        rep = intrinsic_metric_gap(g, w, [0.25 * reach, 0.5 * reach, reach, 2 * reach],
                                   c=2 * full + 1, rng=gen)
        worst_gap = max(worst_gap, abs(rep.gap))
        worst_lip = max(worst_lip, max(rep.lipschitz))
        gap_bad += abs(rep.gap) > 1e-9
        lip_bad += max(rep.lipschitz) > 1 + 1e-9
    return CheckResult("C8", "intrinsic metric", gap_bad == 0 and lip_bad == 0,
                       {"pairs": pairs, "gap_failures": gap_bad, "max_abs_gap": worst_gap,
                        "lipschitz_failures": lip_bad, "max_audited_lipschitz": worst_lip})


# -- Gibbs sampler -----------------------------------------------------------------


def _batch_stderr(values: np.ndarray, batches: int = 50) -> float:
    """Standard error of the mean by batch means (accounts for chain correlation)."""
    usable = len(values) - len(values) % batches
    means = values[:usable].reshape(batches, -1).mean(axis=1)
    return float(means.std(ddof=1) / math.sqrt(batches))


@_timed
def check_gibbs(seed=0, samples=10_000, thin=20, burn_in=2_000) -> CheckResult:
    gen = np.random.default_rng(seed)
    measured = {}
    ok = True
    # zero potential: the Gibbs kernel is the Poisson law itself
    z, window = 1.5, Box([0.0, 0.0], [1.0, 1.0])
    spec = GibbsSpec(window, z, zero_potential())
    chain = GibbsChain(spec, gen).run(burn_in + samples * thin, burn_in, thin)
    counts = np.array([len(c) for c in chain], dtype=float)
    lam = z * window.volume
    mean_se = _batch_stderr(counts)
    var_se = _batch_stderr((counts - counts.mean()) ** 2)
    mean_ok = abs(counts.mean() - lam) <= 3 * mean_se
    var_ok = abs(counts.var(ddof=1) - lam) <= 3 * var_se
    empty = (counts == 0).astype(float)
    empty_se = max(_batch_stderr(empty), 1e-12)
    report = empty_probability_check(spec, chain)
    bound_ok = report.frequency <= report.bound + 3 * empty_se
    void_ok = abs(report.frequency - math.exp(-lam)) <= 3 * empty_se
    measured.update(count_mean=float(counts.mean()), count_var=float(counts.var(ddof=1)),
                    target=lam, mean_se=mean_se, var_se=var_se,
                    empty_freq=report.frequency, empty_bound=report.bound,
                    poisson_void=report.poisson_void, empty_se=empty_se)
    ok &= mean_ok and var_ok and bound_ok and void_ok
    # hard core: no emitted sample violates the core
    r0 = 0.3
    hc = GibbsSpec(Box([0.0, 0.0], [2.0, 2.0]), 3.0, hard_core_potential(r0))
    hc_chain = GibbsChain(hc, gen).run(40_000, 1_000, 20)
    closest = math.inf
    for c in hc_chain:
        if len(c) > 1:
            p = c.points
            dist = np.sqrt(((p[:, None, :] - p[None, :, :]) ** 2).sum(-1))
            closest = min(closest, float(dist[np.triu_indices(len(p), 1)].min()))
    measured.update(hardcore_min_distance=closest)
    ok &= closest >= r0
    # partition function lower bound with empty boundary
    wz = GibbsSpec(Box([0.0, 0.0], [1.0, 1.0]), 1.0, well_potential())
    est, se = partition_function_mc(wz, 4000, gen)
    lower = math.exp(-wz.mean_count) * (1 + wz.mean_count)
    measured.update(partition_estimate=est, partition_se=se, partition_lower=lower)
    ok &= est >= lower - 3 * se
    return CheckResult("C9", "Gibbs sampler sanity", bool(ok), measured)


# -- ergodic averages and the lattice example -------------------------------------


@_timed
def check_ergodic(seed=0, replications=20, sizes=(2, 8, 32, 128), grid_step=0.05,
                  z=1.0) -> CheckResult:
    from .measures import sample_poisson

    f = bump_test_function([0.0], 1.0)
    u = CylinderFunction([f], exp_neg_outer([1.0]))
    target = poisson_exp_mean(f, z)
    half = max(sizes) + u.reach + 1.0
    window = Box([-half], [half])
    avgs = np.array([ergodic_average(sample_poisson(z, window, np.random.default_rng([seed, k])),
                                     window, u, sizes, grid_step)
                     for k in range(replications)])
    last = avgs[:, -1]
    se = float(last.std(ddof=1) / math.sqrt(replications))
    close = abs(float(last.mean()) - target) <= 3 * se
    medians = np.median(np.abs(avgs - target), axis=0)
    monotone = bool(np.all(np.diff(medians) <= 0))
    return CheckResult("C10", "ergodic averages", close and monotone,
                       {"target": target, "mean_largest": float(last.mean()), "stderr": se,
                        "median_deviation": [float(x) for x in medians]})


@_timed
def check_lattice(max_N=50) -> CheckResult:
    """omega = {-N..N-1}, gamma = {-N..N} minus {0}: cost^2 must equal N."""
    bad = 0
    costs = []
    for N in range(1, max_N + 1):
        omega = Configuration(np.arange(-N, N, dtype=float), dim=1)
        gamma = Configuration(np.array([k for k in range(-N, N + 1) if k != 0], dtype=float), dim=1)
        c2 = monotone_matching_1d(gamma, omega).recompute_cost(gamma, omega)
        if 2 * N <= 8:
            bad += abs(c2 - rho_bruteforce(gamma, omega)[1].squared_cost) > 1e-9
        bad += abs(c2 - N) > 1e-9
        costs.append(c2)
    increasing = all(b > a for a, b in zip(costs, costs[1:]))
    slope = float(np.polyfit(np.arange(1, max_N + 1), costs, 1)[0])
    return CheckResult("C11", "lattice divergence", bad == 0 and increasing,
                       {"max_N": max_N, "cost2_at_max": costs[-1], "slope": slope,
                        "mismatches": bad})


SUITES = {
    "metric": (check_oracle_equivalence, check_metric_axioms, check_localization,
               check_noncrossing, check_lattice),
    "energy": (check_energy_identity, check_gronwall),
    "gradient": (check_gradient, check_intrinsic),
    "gibbs-poisson": (check_gibbs,),
    "ergodic": (check_ergodic,),
}
SUITES["all"] = tuple(fn for name in ("metric", "energy", "gradient", "gibbs-poisson", "ergodic")
                      for fn in SUITES[name])


def run_suite(name: str, seed: int = 0) -> list[CheckResult]:
    from ._errors import UsageError

    if name not in SUITES:
        raise UsageError(f"unknown suite {name!r}; choose from {sorted(SUITES)}")
    out = []
    for fn in SUITES[name]:
        out.append(fn() if fn is check_lattice else fn(seed=seed))
    return out
