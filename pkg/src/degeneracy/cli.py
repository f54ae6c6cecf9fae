"""Command-line interface: ``degeneracy {gen,detect,expect,table,mc}``.

Exit codes: 0 success, 2 usage / validation error, 3 I/O error, 4 exhaustive
cap exceeded.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from typing import Any, Callable, Optional, Sequence

import numpy as np

from degeneracy import analytics as an
from degeneracy import montecarlo as mc
from degeneracy import samplers as sm
from degeneracy.errors import CapExceededError, InvalidInputError
from degeneracy.geometry import (
    LineManifold,
    PlaneManifold,
    PointCloud,
    SphereManifold,
    ToleranceSpec,
    fit_sphere,
    is_nearly_spherical,
    sphere_residuals,
)
from degeneracy.io import format_xyz, make_envelope, read_xyz, to_jsonable
from degeneracy.rng import SeededRng

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_IO = 3
EXIT_CAP = 4

TABLE_N = (1000, 5000, 10000, 20000)


def _version() -> str:
    from degeneracy import __version__

    return __version__


# ---------------------------------------------------------------------------
# argument types
# ---------------------------------------------------------------------------

def _floats(count: Optional[int] = None) -> Callable[[str], tuple[float, ...]]:
    def parse(text: str) -> tuple[float, ...]:
        try:
            values = tuple(float(x) for x in text.split(","))
        except ValueError:
            raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None
        if count is not None and len(values) != count:
            raise argparse.ArgumentTypeError(f"expected {count} comma-separated numbers, got {len(values)}")
        if not all(math.isfinite(v) for v in values):
            raise argparse.ArgumentTypeError(f"non-finite value in {text!r}")
        return values

    return parse


def _ints(text: str) -> tuple[int, ...]:
    try:
        return tuple(int(x) for x in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _seed(text: str) -> int:
    try:
        value = int(text, 0)
    except ValueError:
        raise argparse.ArgumentTypeError(f"seed must be an integer, got {text!r}") from None
    if not 0 <= value < 2**64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return value


def _positive_int(text: str) -> int:
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text!r}") from None
    if value < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {value}")
    return value


def _quantize_steps(text: str) -> tuple[float, float, float]:
    values = _floats()(text)
    if len(values) == 1:
        return values * 3
    if len(values) != 3:
        raise argparse.ArgumentTypeError("--quantize takes one step or dx,dy,dz")
    return values


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=_seed, default=0, help="64-bit seed for every random stream (default 0)")
    common.add_argument("--format", choices=("json", "csv", "text"), default="json")
    common.add_argument("--out", default=None, help="output path (default: stdout)")
    common.add_argument("--threads", type=_positive_int, default=1)

    parser = argparse.ArgumentParser(prog="degeneracy", description="Point-cloud degeneracy analysis.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {_version()}")
    sub = parser.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen", parents=[common], help="generate a synthetic XYZ point cloud")
    g.add_argument("kind", choices=("uniform", "plane", "sphere", "line", "scene"))
    g.add_argument("--n", type=int, default=100, help="point count (per surface for scene)")
    g.add_argument("--dim", type=int, default=3)
    g.add_argument("--normal", type=_floats(3), default=(0.0, 0.0, 1.0))
    g.add_argument("--offset", type=float, default=0.0)
    g.add_argument("--extent", type=_floats(4), default=(-1.0, 1.0, -1.0, 1.0), help="u_min,u_max,v_min,v_max")
    g.add_argument("--center", type=_floats(), default=(0.0, 0.0, 0.0))
    g.add_argument("--radius", type=float, default=1.0)
    g.add_argument("--base", type=_floats(), default=(0.0, 0.0, 0.0))
    g.add_argument("--direction", type=_floats(), default=(1.0, 0.0, 0.0))
    g.add_argument("--t-range", type=_floats(2), default=(0.0, 1.0))
    g.add_argument("--surface-sigma", type=float, default=0.0, help="noise added by the surface sampler")
    g.add_argument("--R", dest="cyl_radius", type=float, default=10.0)
    g.add_argument("--h", dest="cyl_height", type=float, default=5.0)
    g.add_argument("--plane-area", type=float, default=20.0)
    g.add_argument("--plane", action="append", type=_floats(4), default=[], help="scene plane a,b,c,d")
    g.add_argument("--line", action="append", type=_floats(6), default=[], help="scene line bx,by,bz,vx,vy,vz")
    g.add_argument("--sphere", type=_floats(4), default=None, help="scene sphere cx,cy,cz,r")
    g.add_argument("--n-background", type=int, default=0)
    g.add_argument("--quantize", type=_quantize_steps, default=None, help="floor-quantise: step or dx,dy,dz")
    g.add_argument("--noise", type=float, default=0.0, help="Gaussian sigma applied after quantisation")

    d = sub.add_parser("detect", parents=[common], help="count degenerate subsets in an XYZ file")
    d.add_argument("input")
    d.add_argument("--mode", choices=("collinear", "coplanar", "sphere"), default="collinear")
    d.add_argument("--epsilon", type=float, default=1e-9)
    d.add_argument("--delta", type=float, default=1e-9)
    d.add_argument("--sampled", action="store_true", help="estimate from random subsets instead of enumerating")
    d.add_argument("--samples", type=_positive_int, default=100_000)
    d.add_argument("--cap", type=_positive_int, default=None, help="override the exhaustive point cap")

    e = sub.add_parser("expect", parents=[common], help="evaluate an analytic formula")
    e.add_argument(
        "model",
        choices=(
            "random-collinear",
            "random-coplanar",
            "random-general",
            "structured-coplanar",
            "structured-sphere",
            "composite",
        ),
    )
    e.add_argument("--n", type=int, default=1000)
    e.add_argument("--dim", type=int, default=3)
    e.add_argument("--k", type=int, default=3)
    e.add_argument("--epsilon", type=float, default=1e-6)
    e.add_argument("--C", dest="proportionality", type=float, default=1.0)
    e.add_argument("--plane-area", type=float, default=20.0)
    e.add_argument("--delta", type=float, default=0.1)
    e.add_argument("--R", dest="cyl_radius", type=float, default=10.0)
    e.add_argument("--h", dest="cyl_height", type=float, default=5.0)
    e.add_argument("--radius", type=float, default=1.0, help="sphere radius r")
    e.add_argument("--factors", type=_floats(), default=None, help="composite: comma-separated P_i")
    e.add_argument("--multiplicity", type=_floats(), default=None, help="composite: per-factor multiplicities")

    t = sub.add_parser("table", parents=[common], help="random vs quantised expected-count table")
    t.add_argument("--n", type=_ints, default=TABLE_N, help="comma-separated N values")
    t.add_argument("--eps-collinear", type=float, default=1e-6)
    t.add_argument("--eps-coplanar", type=float, default=1e-3)
    t.add_argument("--amp-collinear", type=float, default=10.0)
    t.add_argument("--amp-coplanar", type=float, default=3.0)

    m = sub.add_parser("mc", parents=[common], help="paired raw / quantised Monte Carlo experiment")
    m.add_argument("--n", type=int, default=200)
    m.add_argument("--epsilon", type=float, default=1e-6)
    m.add_argument("--quantize", type=_quantize_steps, default=(0.1, 0.1, 0.1))
    m.add_argument("--noise", type=float, default=0.0, help="Gaussian sigma applied after quantisation")
    m.add_argument("--repeats", type=_positive_int, default=100, help="number of paired clouds")
    m.add_argument("--kind", choices=("collinear", "coplanar"), default="collinear")
    m.add_argument("--sampled", action="store_true")
    m.add_argument("--samples", type=_positive_int, default=100_000)
    m.add_argument("--cap", type=_positive_int, default=None)
    m.add_argument("--bootstrap", type=_positive_int, default=2000)
    m.add_argument("--amp-collinear", type=float, default=10.0)
    m.add_argument("--amp-coplanar", type=float, default=3.0)
    return parser


def _params(args: argparse.Namespace) -> dict[str, Any]:
    return {k: v for k, v in sorted(vars(args).items()) if k not in ("format", "out")}


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------

def generate_cloud(args: argparse.Namespace) -> PointCloud:
    """Sampler, then optional quantisation, then optional post-quantisation noise."""
    rng = SeededRng(args.seed)
    surface_noise = sm.NoiseModel(args.surface_sigma)
    if args.kind == "uniform":
        cloud = sm.sample_uniform_hypercube(args.n, args.dim, rng)
    elif args.kind == "plane":
        cloud = sm.sample_plane_patch(PlaneManifold(args.normal, args.offset), args.extent, args.n, surface_noise, rng)
    elif args.kind == "sphere":
        cloud = sm.sample_sphere_surface(SphereManifold(args.center, args.radius), args.n, surface_noise, rng)
    elif args.kind == "line":
        line = LineManifold(args.base, args.direction)
        cloud = sm.sample_line_segment(line, args.t_range[0], args.t_range[1], args.n, surface_noise, rng)
    else:
        scene = sm.SceneModel(
            args.cyl_radius,
            args.cyl_height,
            args.plane_area,
            sphere=SphereManifold(args.sphere[:3], args.sphere[3]) if args.sphere else None,
            planes=[PlaneManifold(p[:3], p[3]) for p in args.plane],
            lines=[LineManifold(ln[:3], ln[3:]) for ln in args.line],
        )
        cloud = sm.sample_scene(scene, args.n_background, args.n, surface_noise, rng)
    if args.quantize is not None:
        cloud = sm.quantize(cloud, sm.QuantizationGrid(*args.quantize))
    if args.noise:
        cloud = sm.add_noise(cloud, sm.NoiseModel(args.noise), rng.child("gen/noise"))
    return cloud


def cmd_gen(args: argparse.Namespace) -> str:
    cloud = generate_cloud(args)
    header = f"degeneracy {_version()} gen " + json.dumps(to_jsonable(_params(args)), sort_keys=True)
    return format_xyz(cloud, header)


def _count(cloud: PointCloud, kind: str, epsilon: float, args: argparse.Namespace, rng: SeededRng) -> mc.CountResult:
    k = 3 if kind == "collinear" else 4
    if args.sampled:
        return mc.count_degenerate_sampled(cloud, k, epsilon, args.samples, rng, threads=args.threads)
    if kind == "collinear":
        cap = args.cap or mc.COLLINEAR_CAP
        return mc.count_collinear_exhaustive(cloud, epsilon, cap=cap, threads=args.threads)
    cap = args.cap or mc.COPLANAR_CAP
    return mc.count_coplanar_exhaustive(cloud, epsilon, cap=cap, threads=args.threads)


def cmd_detect(args: argparse.Namespace) -> dict:
    cloud = read_xyz(args.input)
    payload: dict[str, Any] = {"mode": args.mode, "n_points": len(cloud)}
    if args.mode == "sphere":
        tol = ToleranceSpec(delta=args.delta)
        sphere = fit_sphere(cloud)
        res = sphere_residuals(cloud, sphere)
        payload.update(
            center=sphere.center,
            radius=sphere.radius,
            delta=tol.delta,
            max_residual=float(res.max()),
            n_within_delta=int(np.count_nonzero(res <= tol.delta)),
            nearly_spherical=is_nearly_spherical(cloud, sphere, tol),
        )
        return payload
    ToleranceSpec(epsilon=args.epsilon)
    result = _count(cloud, args.mode, args.epsilon, args, SeededRng(args.seed))
    payload.update(result.to_dict())
    return payload


def cmd_expect(args: argparse.Namespace) -> dict:
    model = args.model
    if model == "random-collinear":
        return {"model": model, "formula": "eps*N^2/6", "value": an.expected_collinear(args.n, args.epsilon)}
    if model == "random-coplanar":
        return {"model": model, "formula": "eps*N/24", "value": an.expected_coplanar(args.n, args.epsilon)}
    if model == "random-general":
        p = an.RandomModelParams(args.n, args.dim, args.k, args.epsilon, args.proportionality)
        pk = an.single_subset_probability(p)
        return {
            "model": model,
            "formula": "eps*N^(2k-d)/k!",
            "value": an.expected_degenerate_subsets(p),
            "single_subset_probability": pk,
            "subset_count": an.subset_count(args.n, args.k),
            "overall_probability": an.overall_probability([(pk, an.subset_count(args.n, args.k))]),
        }
    if model in ("structured-coplanar", "structured-sphere"):
        p = an.StructuredModelParams(
            plane_area=args.plane_area,
            shell_thickness=args.delta,
            cyl_radius=args.cyl_radius,
            cyl_height=args.cyl_height,
            sphere_radius=args.radius,
            dim=args.dim,
        )
        if model == "structured-coplanar":
            return {
                "model": model,
                "formula": "A_plane*delta/(pi*R^2*h)",
                "value": an.structured_coplanar_probability(p),
                "total_volume": p.total_volume,
            }
        return {
            "model": model,
            "formula": "delta*d*r^(d-1)/(pi*R^2*h)",
            "value": an.near_spherical_probability(p),
            "total_volume": p.total_volume,
        }
    factors = args.factors or ()
    mult = args.multiplicity or (1.0,) * len(factors)
    if len(mult) != len(factors):
        raise InvalidInputError("--multiplicity must have one entry per factor")
    return {
        "model": model,
        "formula": "1-prod(1-P_i)^m_i",
        "value": an.overall_probability(zip(factors, mult)),
        "exp_approx": an.overall_probability_exp_approx(sum(p * m for p, m in zip(factors, mult))),
    }


def cmd_table(args: argparse.Namespace) -> an.ExpectationTable:
    amp = an.AmplificationFactors(args.amp_collinear, args.amp_coplanar)
    return an.build_expectation_table(args.n, args.eps_collinear, args.eps_coplanar, amp)


def _bootstrap_ratio(raw: np.ndarray, quant: np.ndarray, reps: int, g: np.random.Generator):
    n = len(raw)
    idx = g.integers(0, n, size=(reps, n))
    num = quant[idx].sum(axis=1)
    den = raw[idx].sum(axis=1)
    ok = den > 0
    if not ok.any():
        return None, None
    ratios = num[ok] / den[ok]
    lo, hi = np.quantile(ratios, [0.025, 0.975])
    return float(lo), float(hi)


def cmd_mc(args: argparse.Namespace) -> dict:
    rng = SeededRng(args.seed)
    grid = sm.QuantizationGrid(*args.quantize)
    noise = sm.NoiseModel(args.noise)
    ToleranceSpec(epsilon=args.epsilon)
    if args.n < 4:
        raise InvalidInputError(f"n must be >= 4, got {args.n}")
    raw_counts, quant_counts = [], []
    for r in range(args.repeats):
        raw = sm.sample_uniform_hypercube(args.n, 3, rng.child("mc/cloud", r))
        q = sm.add_noise(sm.quantize(raw, grid), noise, rng.child("mc/noise", r))
        raw_counts.append(_count(raw, args.kind, args.epsilon, args, rng.child("mc/sample-raw", r)).degenerate_count)
        quant_counts.append(_count(q, args.kind, args.epsilon, args, rng.child("mc/sample-quant", r)).degenerate_count)
    raw_a = np.array(raw_counts)
    q_a = np.array(quant_counts)
    ratio = float(q_a.sum() / raw_a.sum()) if raw_a.sum() > 0 else None
    lo, hi = _bootstrap_ratio(raw_a, q_a, args.bootstrap, rng.stream("mc/bootstrap"))
    if args.kind == "collinear":
        analytic = an.expected_collinear(args.n, args.epsilon)
        postulated = args.amp_collinear
    else:
        analytic = an.expected_coplanar(args.n, args.epsilon)
        postulated = args.amp_coplanar
    k = 3 if args.kind == "collinear" else 4
    total = an.subset_count(args.n, k)
    mean_raw = float(raw_a.mean())
    raw_summary = mc.CountResult(mean_raw, total, "mean", mean_raw, mean_raw, 0, k, args.epsilon)
    comparison = mc.compare_analytic_empirical({"n": args.n, "seed": args.seed}, args.epsilon, analytic, raw_summary)
    return {
        "kind": args.kind,
        "n": args.n,
        "epsilon": args.epsilon,
        "quantize": list(args.quantize),
        "noise_sigma": args.noise,
        "repeats": args.repeats,
        "raw_counts": raw_counts,
        "quantized_counts": quant_counts,
        "mean_raw": mean_raw,
        "mean_quantized": float(q_a.mean()),
        "quantized_ge_raw": int(np.count_nonzero(q_a >= raw_a)),
        "measured_amplification": ratio,
        "measured_amplification_ci": [lo, hi],
        "postulated_amplification": postulated,
        "analytic_random": analytic,
        "analytic_quantized": postulated * analytic,
        "raw_vs_analytic": comparison.to_dict(),
    }


# ---------------------------------------------------------------------------
# output
# ---------------------------------------------------------------------------

def _flatten(obj: Any, prefix: str = "") -> list[tuple[str, Any]]:
    if isinstance(obj, dict):
        out = []
        for k, v in obj.items():
            out.extend(_flatten(v, f"{prefix}{k}."))
        return out
    return [(prefix.rstrip("."), obj)]


def _render(args: argparse.Namespace, payload: Any) -> str:
    params = _params(args)
    if args.format == "json":
        body = payload.to_dict() if isinstance(payload, an.ExpectationTable) else payload
        env = make_envelope(_version(), args.command, params, body)
        return json.dumps(env, indent=2, sort_keys=True, allow_nan=False) + "\n"
    if isinstance(payload, an.ExpectationTable):
        return payload.to_csv() if args.format == "csv" else payload.to_text()
    rows = _flatten(to_jsonable(payload))
    if args.format == "csv":
        return "key,value\n" + "".join(f"{k},{json.dumps(v)}\n" for k, v in rows)
    return "".join(f"{k}: {v}\n" for k, v in rows)


COMMANDS = {"detect": cmd_detect, "expect": cmd_expect, "table": cmd_table, "mc": cmd_mc}


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        text = cmd_gen(args) if args.command == "gen" else _render(args, COMMANDS[args.command](args))
        if args.out:
            with open(args.out, "w", encoding="utf-8") as fh:
                fh.write(text)
        else:
            sys.stdout.write(text)
    except CapExceededError as exc:
        print(f"degeneracy: {exc}", file=sys.stderr)
        return EXIT_CAP
    except (InvalidInputError, ValueError) as exc:
        print(f"degeneracy: {args.command}: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"degeneracy: {args.command}: {exc}", file=sys.stderr)
        return EXIT_IO
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
