"""Command-line surface.

Subcommands: ``eigen`` (cross-section eigenvalue queries), ``bound``
(closed-form lifespan bounds), ``simulate`` (one blowup run), ``sweep``
(epsilon sweep with fits), ``verify`` (property suites).  Exit codes:
0 success, 1 validation failure (bad inputs or a failed property verdict),
2 runtime fault.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys

import numpy as np

from blowlab import cone_geometry as cg
from blowlab import cutoffs as co
from blowlab import lifespan_bounds as lb
from blowlab.config import (
    ConfigError,
    emit_record,
    emit_snapshots,
    emit_sweep,
    emit_trace,
    parse_config,
)
from blowlab.experiments import regime_verdict
from blowlab.experiments import sweep as run_sweep
from blowlab.solvers import (
    domain_for_grid,
    functional_trace,
    grid_coordinates,
    run_until_blowup,
)


def _spec_from_args(args) -> cg.CrossSectionSpec:
    if args.spec_json:
        raw = json.loads(args.spec_json)
        return cg.CrossSectionSpec(
            kind=raw["kind"],
            dim=raw["N"],
            omega=raw.get("omega"),
            theta0=raw.get("theta0"),
            k=raw.get("k"),
        )
    if args.kind is None or args.dim is None:
        raise ValueError("eigen needs --kind and --N (or --spec-json)")
    return cg.CrossSectionSpec(
        kind=args.kind, dim=args.dim, omega=args.omega, theta0=args.theta0, k=args.k
    )


def _cmd_eigen(args) -> int:
    spec = _spec_from_args(args)
    dom = cg.make_domain(spec)
    print(f"kind: {spec.kind}")
    print(f"N: {spec.dim}")
    print(f"lambda_sigma: {dom.lambda_sigma!r}")
    print(f"gamma: {dom.gamma!r}")
    print(f"fujita_threshold(alpha=0): {cg.fujita_threshold(spec.dim, dom.gamma, 0.0)!r}")
    return 0


def _cmd_bound(args) -> int:
    b = lb.BoundInputs(delta=args.delta, c0=args.c0, r1=args.r1, theta=args.theta, p=args.p)
    closed = lb.lifespan_upper_bound(b)
    tag = "theta>0 branch" if b.theta > 0 else "theta=0 branch"
    print(f"bound ({tag}): {closed!r}")
    critical = lb.lifespan_upper_bound(
        lb.BoundInputs(delta=args.delta, c0=args.c0, r1=args.r1, theta=0.0, p=args.p)
    )
    print(f"bound (theta=0 branch): {critical!r}")
    if args.oracle:
        print(f"saturation oracle: {lb.ode_saturation_oracle(b)!r}")
    return 0


def _cmd_simulate(args) -> int:
    cfg = parse_config(args.config)
    out_dir = args.out_dir or cfg.out_dir or "."
    os.makedirs(out_dir, exist_ok=True)
    result = run_until_blowup(cfg.problem, cfg.controls)
    rec = result.record
    emit_record(rec, os.path.join(out_dir, "record.csv"))
    print(f"status: {rec.status}")
    print(f"T_extrapolated: {rec.t_extrapolated!r}")
    print(f"boundary_max: {rec.boundary_max!r}")
    if cfg.trace_radii:
        fam = co.CutoffFamily(
            R=cfg.trace_radii[0], p=cfg.problem.coeff.p, alpha=cfg.problem.coeff.alpha
        )
        trace = functional_trace(result, fam, np.asarray(cfg.trace_radii))
        emit_trace(trace, os.path.join(out_dir, "trace.csv"))
        print(f"trace: {len(cfg.trace_radii)} radii written")
    if len(result.snapshot_times) > 2:
        n_nodes = int(np.asarray(result.snapshots[0]).size)
        time_stride = max(1, len(result.snapshot_times) // 50)
        node_stride = max(1, n_nodes // 2000)
        emit_snapshots(
            result.snapshot_times,
            result.snapshots,
            grid_coordinates(cfg.problem.grid),
            os.path.join(out_dir, "snapshots.csv"),
            time_stride=time_stride,
            node_stride=node_stride,
        )
    return 0


def _cmd_sweep(args) -> int:
    cfg = parse_config(args.config)
    if cfg.sweep_epsilons is None:
        raise ConfigError(["sweep.epsilons: required for the sweep command"])
    out_dir = args.out_dir or cfg.out_dir or "."
    result = run_sweep(
        cfg.problem,
        cfg.sweep_epsilons,
        cfg.controls,
        jobs=args.jobs,
        problem_id=os.path.basename(args.config),
    )
    grid, coeff = cfg.problem.grid, cfg.problem.coeff
    dom = domain_for_grid(grid)
    try:
        predicted = lb.regime_bound(
            2 if grid.geometry == "polar-sector" else grid.dim,
            dom.gamma,
            coeff.alpha,
            coeff.p,
            cfg.sweep_epsilons[0],
        )
        regime_verdict(result, predicted, slope_tolerance=cfg.slope_tolerance)
    except ValueError:
        result.verdict = "no prediction: exponent above the blowup threshold"
    summary = emit_sweep(result, out_dir)
    print(json.dumps(summary, indent=2))
    return 0


def _report(checks) -> int:
    width = max(len(name) for name, _ in checks)
    ok = True
    for name, passed in checks:
        ok &= passed
        print(f"{'PASS' if passed else 'FAIL'}  {name.ljust(width)}")
    print("all checks passed" if ok else "SOME CHECKS FAILED")
    return 0 if ok else 1


def _verify_cutoff(args) -> int:
    checks = []
    fam = co.CutoffFamily(R=8.0, p=2.0)
    support = (
        float(co.psi(fam, np.zeros(1), 0.0)) == 1.0
        and float(co.psi_star(fam, np.zeros(1), 0.0)) == 0.0
        and float(co.psi(fam, np.array([3.0]), 0.0)) == 0.0
    )
    checks.append(("support identities exact", support))
    margins = co.log2_inequality_margins(fam, np.linspace(0.0, 1.2, 100))
    checks.append(("log-2 tail inequality at 100 sigmas", bool(np.all(margins >= -1e-10))))
    stable = True
    for p in (1.5, 2.0, 3.0):
        for alpha in (0.0, 0.5, 1.0):
            vals = [
                co.bound_constants(co.CutoffFamily(R=R, p=p, alpha=alpha), dim=2)
                for R in (10.0, 100.0, 1000.0)
            ]
            for name in ("c1", "c2", "c3"):
                v = np.array([getattr(b, name) for b in vals])
                mean = float(v.mean())
                if np.max(np.abs(v - mean)) > 0.10 * mean:
                    stable = False
    checks.append(("bound constants stable (10%) across R", stable))
    try:
        co.bound_constants(
            co.CutoffFamily(R=10.0, p=2.0, profile=co.PolynomialProfile(1), power=1.0), dim=1
        )
        negative = False
    except ValueError:
        negative = True
    checks.append(("negative control (power 1) diverges", negative))
    return _report(checks)


def _verify_hardy(args) -> int:
    from blowlab.cone_geometry import BumpField

    rng = np.random.default_rng(args.seed)
    checks = []
    count = args.count
    specs = [
        (cg.CrossSectionSpec("full-sphere", 3), "full-sphere N=3"),
        (cg.CrossSectionSpec("half-space-product", 2, k=2), "quarter-plane"),
        (cg.CrossSectionSpec("half-line", 1), "half-line"),
    ]
    for spec, label in specs:
        dom = cg.make_domain(spec)
        bound = cg.hardy_constant(dom)
        worst = math.inf
        for _ in range(count):
            if spec.kind == "full-sphere":
                direction = rng.normal(size=3)
                direction /= np.linalg.norm(direction)
                dist = rng.uniform(0.5, 2.0)
                center = direction * dist
                radius = dist * rng.uniform(0.25, 0.6)
            elif spec.kind == "half-space-product":
                center = rng.uniform(0.8, 3.0, size=2)
                radius = float(np.min(center)) * rng.uniform(0.3, 0.7)
            else:
                c = rng.uniform(1.0, 4.0)
                center = np.array([c])
                radius = c * rng.uniform(0.3, 0.7)
            f = BumpField(center=center, radius=radius, amplitude=rng.uniform(0.5, 2.0))
            n = 24 if spec.kind == "full-sphere" else 48
            worst = min(worst, cg.hardy_ratio(dom, f, n=n))
        checks.append((f"{label}: {count} fields above {bound:.4g}", worst >= bound - 1e-6))
    return _report(checks)


def _verify_harmonic(args) -> int:
    checks = []
    w = cg.WeightPhi(cg.make_domain(cg.CrossSectionSpec("half-space-product", 2, k=2)))
    lap, euler = cg.harmonic_residual(w, np.array([1.0, 2.0]), 0.01)
    checks.append(("quarter-plane product weight exactly discrete-harmonic", lap < 1e-10))
    wh = cg.WeightPhi(cg.make_domain(cg.CrossSectionSpec("half-line", 1)))
    _, euler_h = cg.harmonic_residual(wh, np.array([2.0]), 0.25)
    checks.append(("half-line Euler identity exact", euler_h < 1e-12))
    for spec, point, h0 in (
        (cg.CrossSectionSpec("planar-sector", 2, omega=3 * math.pi / 4), (0.96, 0.61), 1e-2),
        (cg.CrossSectionSpec("spherical-cap", 3, theta0=1.0), (0.25, 0.1, 0.9), 2e-2),
    ):
        dom = cg.make_domain(spec)
        wp = cg.WeightPhi(dom)
        x = np.asarray(point, dtype=float)
        lap_c, euler_c = cg.harmonic_residual(wp, x, h0)
        lap_f, euler_f = cg.harmonic_residual(wp, x, h0 / 2)
        order_ok = lap_c / lap_f >= 2.0**1.8 and euler_c / euler_f >= 2.0**1.8
        checks.append((f"{spec.kind}: residuals converge at order >= 1.8", order_ok))
    return _report(checks)


def _verify_lemma_oracle(args) -> int:
    checks = []
    spot0 = lb.lifespan_upper_bound(lb.BoundInputs(1.0, 1.0, 1.0, 0.0, 2.0))
    spot1 = lb.lifespan_upper_bound(lb.BoundInputs(1.0, 1.0, 1.0, 1.0, 2.0))
    checks.append(("spot value theta=0 equals 2", abs(spot0 - 2.0) < 1e-14))
    checks.append(("spot value theta=1 equals 1+log2", abs(spot1 - 1.0 - math.log(2.0)) < 1e-14))
    rng = np.random.default_rng(args.seed)
    worst = 0.0
    for _ in range(100):
        b = lb.BoundInputs(
            delta=rng.uniform(0.1, 10.0),
            c0=rng.uniform(0.5, 2.0),
            r1=rng.uniform(0.5, 2.0),
            theta=rng.uniform(0.0, 2.0),
            p=rng.uniform(1.2, 4.0),
        )
        closed = lb.lifespan_upper_bound(b)
        worst = max(worst, abs(closed - lb.ode_saturation_oracle(b)) / closed)
    checks.append((f"oracle agrees to 1e-6 on 100 points (worst {worst:.2e})", worst <= 1e-6))
    return _report(checks)


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON run configuration")
    common.add_argument("--out-dir", help="output directory")
    common.add_argument("--seed", type=int, default=0, help="seed for randomized suites")
    common.add_argument("--jobs", type=int, default=1, help="parallel workers")

    parser = argparse.ArgumentParser(prog="blowlab", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    eig = sub.add_parser("eigen", parents=[common], help="cross-section eigenvalue queries")
    eig.add_argument("--kind", choices=cg.VALID_KINDS)
    eig.add_argument("--N", dest="dim", type=int)
    eig.add_argument("--omega", type=float)
    eig.add_argument("--theta0", type=float)
    eig.add_argument("--k", type=int)
    eig.add_argument("--spec-json", help='JSON like {"kind": ..., "N": ...}')
    eig.set_defaults(func=_cmd_eigen)

    bnd = sub.add_parser("bound", parents=[common], help="closed-form lifespan bounds")
    bnd.add_argument("--delta", type=float, required=True)
    bnd.add_argument("--c0", type=float, required=True)
    bnd.add_argument("--r1", type=float, required=True)
    bnd.add_argument("--theta", type=float, required=True)
    bnd.add_argument("--p", type=float, required=True)
    bnd.add_argument("--oracle", action="store_true", help="also run the saturation oracle")
    bnd.set_defaults(func=_cmd_bound)

    sim = sub.add_parser("simulate", parents=[common], help="run one problem to blowup")
    sim.set_defaults(func=_cmd_simulate)

    swp = sub.add_parser("sweep", parents=[common], help="epsilon sweep with scaling fits")
    swp.set_defaults(func=_cmd_sweep)

    ver = sub.add_parser("verify", parents=[common], help="property verification suites")
    ver.add_argument(
        "suite", choices=("cutoff", "hardy", "harmonic", "lemma-oracle"))
    ver.add_argument("--count", type=int, default=200, help="fields per domain (hardy)")
    ver.set_defaults(func=None)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "verify":
            runner = {
                "cutoff": _verify_cutoff,
                "hardy": _verify_hardy,
                "harmonic": _verify_harmonic,
                "lemma-oracle": _verify_lemma_oracle,
            }[args.suite]
            return runner(args)
        if args.command == "simulate" or args.command == "sweep":
            if not args.config:
                print("error: --config is required", file=sys.stderr)
                return 1
        return args.func(args)
    except (ConfigError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # runtime fault
        print(f"fault: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
