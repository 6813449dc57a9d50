"""Command-line entry point.

Every command that writes to ``--out`` also writes ``<out>.manifest.json``
recording the command, its parameters, the seed and the tool version.

Exit codes: 0 success, 1 usage or parse error, 2 numeric failure,
3 verification suite failure.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import __version__
from ._errors import NumericError, UsageError
from .configuration import Box, Configuration, load
from .coupling import result_to_json, rho, rho_localized
from .space import Ball

EXIT_OK, EXIT_USAGE, EXIT_NUMERIC, EXIT_SUITE = 0, 1, 2, 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _floats(text: str) -> list[float]:
    try:
        return [float(x) for x in text.replace(" ", "").split(",") if x]
    except ValueError as exc:
        raise UsageError(f"expected comma-separated numbers, got {text!r}") from exc


def _read_json(path: str) -> dict:
    try:
        return json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise UsageError(f"{path}: invalid JSON ({exc})") from exc


def _load_pair(args):
    a = load(args.a, args.dim)
    b = load(args.b, args.dim)
    return a, b


def _config_rows(cfg: Configuration, label) -> list[list]:
    return [[label, *p.tolist()] for p in cfg.points]


# -- commands ---------------------------------------------------------------
# each returns (json_result, csv_header, csv_rows)


def cmd_dist(args):
    a, b = _load_pair(args)
    d, m = rho(a, b)
    res = result_to_json(d, m)
    rows = [[i, j, res["distance"]] for i, j in res["pairs"]] or [["", "", res["distance"]]]
    return res, ["gamma_index", "omega_index", "distance"], rows


def cmd_localdist(args):
    a, b = _load_pair(args)
    center = _floats(args.center) if args.center else [0.0] * a.dim
    d, m = rho_localized(a, b, Ball(center, args.radius))
    res = result_to_json(d, m)
    res["ball"] = {"center": center, "radius": args.radius}
    rows = [[i, j, ""] for i, j in res["pairs"]] + [[i, "", " ".join(map(repr, t))]
                                                    for i, t in res["exits"]]
    return res, ["gamma_index", "omega_index", "exit_target"], rows


def cmd_geodesic(args):
    from .geodesic import interpolate, monotone_matching_1d

    a, b = _load_pair(args)
    d, m = rho(a, b)
    if not d.is_finite:
        raise NumericError("no geodesic: the configurations have different cardinalities")
    if a.dim == 1:
        m = monotone_matching_1d(a, b)
    times = _floats(args.times)
    frames = [interpolate(a, b, m, t) for t in times]
    res = {"distance": d.to_json(), "times": times,
           "configurations": [{"dim": f.dim, "points": f.points.tolist()} for f in frames]}
    rows = [row for t, f in zip(times, frames) for row in _config_rows(f, t)]
    return res, ["t"] + [f"x{k}" for k in range(a.dim)], rows


def cmd_sample(args):
    from .measures import GibbsChain, GibbsSpec, sample_mixed_poisson, sample_poisson

    obj = _read_json(args.spec)
    seed = obj.get("seed", args.seed)
    args.seed = seed  # the manifest records the seed actually used
    kind = obj.get("sampler", "gibbs")
    spec = GibbsSpec.from_dict(obj)
    gen = np.random.default_rng(seed)
    if kind == "gibbs":
        chain = GibbsChain(spec, gen)
        samples = chain.run(int(obj.get("steps", 10_000)), int(obj.get("burn_in", 0)),
                            int(obj.get("thin", 1)))
        stats = {"acceptance": chain.state.acceptance_rates()}
    elif kind == "poisson":
        samples = [sample_poisson(spec.z, spec.window, gen) for _ in range(int(obj.get("n_samples", 1000)))]
        stats = {}
    elif kind == "mixed":
        mix = obj.get("mixture")
        samples = [sample_mixed_poisson(mix, spec.window, gen) for _ in range(int(obj.get("n_samples", 1000)))]
        stats = {}
    else:
        raise UsageError(f"unknown sampler {kind!r}")
    lines = [json.dumps({"dim": s.dim, "points": s.points.tolist()}) for s in samples]
    res = {"sampler": kind, "seed": seed, "samples": len(samples), **stats}
    return res, None, lines


def cmd_energy(args):
    from .measures import GibbsSpec, conditional_energy

    obj = _read_json(args.spec)
    spec = GibbsSpec.from_dict(obj)
    inner = load(args.config, spec.dim)
    if inner.dim != spec.dim:
        raise UsageError(f"configuration has dimension {inner.dim}, spec has {spec.dim}")
    if len(inner) and spec.window.contains(inner.points).sum() != len(inner):
        raise UsageError("the configuration must lie inside the window")
    total = spec.boundary + inner
    e = conditional_energy(total, spec.window, spec.potential)
    res = {"energy": e if math.isfinite(e) else "inf", "points_in_window": len(inner),
           "boundary_points": len(spec.boundary)}
    return res, ["energy"], [[res["energy"]]]


def cmd_ergodic(args):
    from .analysis import CylinderFunction, bump_test_function, ergodic_average, \
        exp_neg_outer, poisson_exp_mean
    from .measures import sample_poisson

    d = args.dim or 1
    sizes = _floats(args.sizes)
    f = bump_test_function([0.0] * d, args.radius)
    u = CylinderFunction([f], exp_neg_outer([1.0]))
    half = max(sizes) + u.reach + 1.0
    window = Box([-half] * d, [half] * d)
    reps = []
    for k in range(args.replications):
        gamma = sample_poisson(args.z, window, np.random.default_rng([args.seed, k]))
        reps.append(ergodic_average(gamma, window, u, sizes, args.grid_step))
    reps = np.array(reps)
    target = poisson_exp_mean(f, args.z)
    mean = reps.mean(axis=0)
    se = reps.std(axis=0, ddof=1) / math.sqrt(len(reps)) if len(reps) > 1 else np.zeros(len(sizes))
    res = {"target": target, "sizes": sizes, "mean": mean.tolist(), "stderr": se.tolist(),
           "replications": reps.tolist()}
    rows = [[n, m, s] for n, m, s in zip(sizes, mean, se)]
    return res, ["n", "average", "stderr"], rows


def cmd_intrinsic(args):
    from .analysis import intrinsic_metric_gap

    a, b = _load_pair(args)
    center = _floats(args.center) if args.center else None
    rep = intrinsic_metric_gap(a, b, _floats(args.radii), args.c, center=center, rng=args.seed)
    res = {"rho": rep.rho, "supremum": rep.supremum, "gap": rep.gap, "c": rep.c,
           "radii": list(rep.radii), "values": list(rep.values), "lipschitz": list(rep.lipschitz)}
    rows = [[r, v, l] for r, v, l in zip(rep.radii, rep.values, rep.lipschitz)]
    return res, ["r", "value", "audited_lipschitz"], rows


def cmd_verify(args):
    from .verify import run_suite

    results = run_suite(args.suite, args.seed)
    res = {"suite": args.suite, "seed": args.seed, "passed": all(r.passed for r in results),
           "checks": [r.to_json() for r in results]}
    rows = [[r.key, r.title, r.passed] for r in results]
    return res, ["key", "title", "passed"], rows


# -- plumbing ---------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--out", help="output file (default: stdout)")
    common.add_argument("--format", choices=["json", "csv"], default="json")
    common.add_argument("--dim", type=int, help="point dimension for CSV inputs")

    p = _Parser(prog="confspace", description="Distances, geodesics and samplers for point configurations.")
    p.add_argument("--version", action="version", version=f"confspace {__version__}")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("dist", parents=[common], help="transport distance and optimal matching")
    s.add_argument("a"); s.add_argument("b")
    s.set_defaults(func=cmd_dist)

    s = sub.add_parser("localdist", parents=[common], help="localized distance on a ball")
    s.add_argument("a"); s.add_argument("b")
    s.add_argument("--center", help="comma-separated ball center (default: origin)")
    s.add_argument("--radius", type=float, required=True)
    s.set_defaults(func=cmd_localdist)

    s = sub.add_parser("geodesic", parents=[common], help="displacement interpolation")
    s.add_argument("a"); s.add_argument("b")
    s.add_argument("--times", default="0,0.25,0.5,0.75,1")
    s.set_defaults(func=cmd_geodesic)

    s = sub.add_parser("sample", parents=[common], help="sample from a spec file (JSON lines)")
    s.add_argument("spec")
    s.set_defaults(func=cmd_sample)

    s = sub.add_parser("energy", parents=[common], help="conditional energy of a configuration")
    s.add_argument("config")
    s.add_argument("--spec", required=True, help="Gibbs spec file giving window, potential and boundary")
    s.set_defaults(func=cmd_energy)

    s = sub.add_parser("ergodic", parents=[common], help="spatial averages of a cylinder function")
    s.add_argument("--z", type=float, default=1.0)
    s.add_argument("--sizes", default="2,8,32")
    s.add_argument("--grid-step", type=float, default=0.05)
    s.add_argument("--radius", type=float, default=1.0)
    s.add_argument("--replications", type=int, default=20)
    s.set_defaults(func=cmd_ergodic)

    s = sub.add_parser("intrinsic", parents=[common], help="c ∧ rho_{omega,r} family values")
    s.add_argument("a"); s.add_argument("b")
    s.add_argument("--radii", required=True)
    s.add_argument("--c", type=float, default=10.0)
    s.add_argument("--center")
    s.set_defaults(func=cmd_intrinsic)

    s = sub.add_parser("verify", parents=[common], help="run a verification suite")
    s.add_argument("suite")
    s.set_defaults(func=cmd_verify)
    return p


def _render(result, header, rows, fmt: str, command: str) -> str:
    if command == "sample":
        return "\n".join(rows) + ("\n" if rows else "")
    if fmt == "json":
        return json.dumps(result, indent=2) + "\n"
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def _manifest(args, out_path: str, payload: str) -> dict:
    params = {k: v for k, v in vars(args).items() if k != "func"}
    inputs = [params[k] for k in ("a", "b", "spec", "config") if params.get(k)]
    return {"command": args.command, "parameters": params, "seed": args.seed,
            "version": __version__, "inputs": inputs, "output": out_path,
            "output_sha256": hashlib.sha256(payload.encode()).hexdigest()}


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        result, header, rows = args.func(args)
        text = _render(result, header, rows, args.format, args.command)
        if args.out:
            Path(args.out).write_text(text)
            Path(args.out + ".manifest.json").write_text(
                json.dumps(_manifest(args, args.out, text), indent=2) + "\n")
            if args.command == "sample":
                print(json.dumps(result))
        else:
            sys.stdout.write(text)
    except UsageError as exc:
        print(f"confspace: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (OSError, ValueError, KeyError) as exc:
        print(f"confspace: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (NumericError, ArithmeticError) as exc:
        print(f"confspace: numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    if args.command == "verify" and not result["passed"]:
        return EXIT_SUITE
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
