"""Command-line interface.

One subcommand per capability: kernel tables, dimension constants, series
expansion, brute-force enumeration, Bruggeman root and comparison, duality
checks, the Monte Carlo oracle, and `reproduce`, which reruns the headline
numbers with tolerances and emits a machine-readable pass/fail report.

Exit codes: 1 usage error, 2 invalid input, 3 numerical failure.
JSON is the canonical output; `--format csv` flattens the tabular commands
(oracle, reproduce).  Kernel tables are cached on disk keyed by (d, N, R)
under $HOMOGENIZE_CACHE_DIR (default ~/.cache/homogenize); `--no-cache`
bypasses the cache.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
import time

import numpy as np

from .bruggeman import bruggeman_series, compare, solve_bruggeman
from .constants import dimension_constants, h_strictly_decreasing, k5_via_H
from .distributions import (
    DistributionSpec,
    DualityProbe,
    duality_residual_series,
    load_distribution,
    moments,
    recover_relations_order4,
    recover_relations_order6,
    three_value,
    two_component,
)
from .enumerator import A_k, enumerate_order
from .errors import CapacityError, SolverError
from .expansion import coefficients, max_order, sigma_e_series
from .kernel import channel_array, gamma, get_kernel_table, lattice_power_sum
from .resistor import estimate_sigma_e


class _Parser(argparse.ArgumentParser):
    """argparse with usage failures mapped to exit code 1."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _sig_key(sig) -> str:
    return ",".join(str(s) for s in sig)


def _poly_dict(poly) -> dict:
    return {_sig_key(sig): poly.terms[sig] for sig in poly.signatures()}


# ---------------------------------------------------------------------------
# subcommand handlers
# ---------------------------------------------------------------------------

def cmd_constants(args) -> dict:
    consts, table = dimension_constants(
        args.dim, N=args.resolution, R=args.radius, cache=not args.no_cache
    )
    return {
        "d": consts.d,
        "H": consts.H,
        "I1": consts.I1,
        "I2": consts.I2,
        "I": consts.I,
        "K5": consts.K5,
        "K5_via_H": k5_via_H(consts),
        "err": consts.err,
        "N": table.N,
        "R": table.R,
    }


def cmd_kernel(args) -> dict:
    table = get_kernel_table(
        args.dim, N=args.resolution, R=args.radius, cache=not args.no_cache
    )
    d = table.d
    row = [lattice_power_sum(table, 1, a, 2) for a in range(1, d + 1)]
    row_value = sum(p.value for p in row)
    row_tail = sum(p.tail for p in row)
    norm = 0.0
    for a in range(1, d + 1):
        for b in range(1, d + 1):
            p = lattice_power_sum(table, min(a, b), max(a, b), 2)
            norm += p.value + p.tail
    odd = lattice_power_sum(table, 1, 1, 3, include_origin=False)
    out = {
        "d": d,
        "N": table.N,
        "R": table.R,
        "gamma11_origin": gamma(table, 1, 1, (0,) * d),
        "row_square_sum": row_value,
        "row_square_sum_tail": row_tail,
        "row_square_target": 1.0 / d,
        "normalization_sum": norm,
        "offorigin_cube_sum": odd.value + odd.tail,
        "quad_defect": table.quad_defect,
        "est_tail": table.est_tail,
    }
    if d == 2:
        arr = channel_array(table, 1, 1)
        folded = arr + arr.T
        folded[table.R, table.R] = 0.0  # the origin carries the trace
        out["antisymmetry_max"] = float(np.max(np.abs(folded)))
    return out


def _load_dist(args) -> DistributionSpec:
    if args.dist is None:
        raise ValueError("this command requires --dist FILE")
    return load_distribution(args.dist)


def _series_dict(s) -> dict:
    return {
        "sigma_e": s.sigma_e,
        "mean_sigma": s.mean_sigma,
        "terms": {str(k): v for k, v in sorted(s.terms.items())},
        "remainder": s.remainder_bound,
        "order": s.order,
        "valid": s.valid,
    }


def cmd_expand(args) -> dict:
    dist = _load_dist(args)
    consts, _ = dimension_constants(args.dim, cache=not args.no_cache)
    series = sigma_e_series(dist, args.dim, args.order, consts)
    return {"d": args.dim} | _series_dict(series)


def cmd_enumerate(args) -> dict:
    table = get_kernel_table(
        args.dim, N=args.resolution, R=args.radius, cache=not args.no_cache
    )
    eo = enumerate_order(args.k, table)
    out = {
        "d": args.dim,
        "k": args.k,
        "families": [
            {
                "pattern": list(f.pattern),
                "multiplicities": list(f.multiplicities),
                "direction_pinned": f.direction_pinned,
            }
            for f in eo.families
        ],
        "polynomial": _poly_dict(eo.polynomial),
        "error": _poly_dict(eo.error),
    }
    if not args.symbolic:
        dist = _load_dist(args)
        mom = moments(dist, args.k)
        out["value"] = A_k(args.k, table, moments=mom)
    return out


def cmd_bruggeman(args) -> dict:
    dist = _load_dist(args)
    root = solve_bruggeman(dist, args.dim)
    out = {
        "d": args.dim,
        "sigma_B": root.sigma_B,
        "xi": root.xi,
        "residual": root.residual,
        "iterations": root.iterations,
    }
    if args.series_order:
        out["series"] = _series_dict(bruggeman_series(dist, args.dim, args.series_order))
    return out


def cmd_compare(args) -> dict:
    dist = _load_dist(args)
    consts, _ = dimension_constants(args.dim, cache=not args.no_cache)
    report = compare(dist, args.dim, consts)
    return {
        "d": args.dim,
        "sigma_e_series": _series_dict(report.sigma_e_series),
        "sigma_B": report.sigma_B.sigma_B,
        "leading_difference": report.leading_difference,
        "leading_order": report.leading_order,
        "predicted_sign": report.predicted_sign,
        "case": report.case,
    }


def cmd_duality_check(args) -> dict:
    consts, _ = dimension_constants(2, cache=not args.no_cache)
    coeffs = coefficients(2, 6, consts)
    probe = DualityProbe(p=args.p, alpha_ratio=args.alpha, order=args.order)
    res = duality_residual_series(probe, coeffs)
    even = {k: float(abs(res[k])) for k in range(2, args.order + 1, 2)}
    determined = [k for k in even if k <= coeffs.order]
    return {
        "p": args.p,
        "alpha": args.alpha,
        "order": args.order,
        "residual_coefficients": [float(c) for c in res],
        "abs_even_residuals": {str(k): v for k, v in even.items()},
        "max_determined_residual": max(even[k] for k in determined),
        "informational_orders": [k for k in even if k > coeffs.order],
    }


def cmd_oracle(args) -> dict:
    dist = _load_dist(args)
    est = estimate_sigma_e(
        args.dim,
        args.L,
        dist,
        samples=args.samples,
        seed=args.seed,
        tol=args.tol,
        keep_per_sample=bool(args.per_sample_csv),
        threads=args.threads,
    )
    if args.per_sample_csv:
        with open(args.per_sample_csv, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh)
            w.writerow(["sample", "estimate"])
            for i, v in enumerate(est.per_sample):
                w.writerow([i, repr(v)])
    return {
        "d": args.dim,
        "L": est.L,
        "samples": est.samples,
        "skipped": est.skipped,
        "seed": args.seed,
        "mean": est.mean,
        "stderr": est.stderr,
    }


# ---------------------------------------------------------------------------
# reproduce
# ---------------------------------------------------------------------------

def _check(checks, name, value, target, tol, **extra):
    entry = {
        "name": name,
        "value": float(value),
        "target": float(target),
        "tol": float(tol),
        "pass": bool(abs(value - target) <= tol),
    }
    entry.update(extra)
    checks.append(entry)


def _coef_tol(ref: float, pure: bool) -> float:
    # relative for sizeable references, absolute floor near zero
    if pure:
        return 1e-6
    return 1e-4 * abs(ref) if abs(ref) > 1e-3 else 1e-4


def cmd_reproduce(args) -> dict:
    seed = args.seed
    cache = not args.no_cache
    checks: list[dict] = []

    tables = {d: get_kernel_table(d, cache=cache) for d in (2, 3, 4, 5)}
    consts = {d: dimension_constants(table=tables[d])[0] for d in (2, 3, 4, 5)}

    # kernel identities
    _check(checks, "gamma11_origin_d2", gamma(tables[2], 1, 1, (0, 0)), -0.5, 1e-6)
    _check(checks, "gamma11_origin_d3", gamma(tables[3], 1, 1, (0, 0, 0)), -1.0 / 3, 1e-6)
    for d in (2, 3):
        ps = [lattice_power_sum(tables[d], 1, a, 2) for a in range(1, d + 1)]
        _check(
            checks,
            f"row_square_sum_d{d}",
            sum(p.value + p.tail for p in ps),
            1.0 / d,
            1e-4,
        )
    odd = lattice_power_sum(tables[2], 1, 1, 3, include_origin=False)
    _check(checks, "offorigin_cube_sum_d2", odd.value + odd.tail, 0.0, 1e-5)

    # published constants
    _check(checks, "H2", consts[2].H, 1.0, 1e-3)
    _check(checks, "H3", consts[3].H, 0.923, 5e-3)
    _check(checks, "H4", consts[4].H, 0.874, 5e-3)
    _check(checks, "H5", consts[5].H, 0.846, 5e-3)
    _check(checks, "I1_d2", consts[2].I1, 0.06391, 5e-4)
    _check(checks, "I2_d2", consts[2].I2, 0.00439, 5e-4)
    _check(checks, "I_d2", consts[2].I, 0.0683, 1e-3)
    hs = [consts[d].H for d in (2, 3, 4, 5)]
    checks.append(
        {
            "name": "H_strictly_decreasing",
            "value": 1.0 if h_strictly_decreasing(hs) else 0.0,
            "target": 1.0,
            "tol": 0.0,
            "pass": h_strictly_decreasing(hs),
            "H_values": hs,
        }
    )
    for d in (2, 3, 4, 5):
        _check(
            checks,
            f"K5_two_routes_d{d}",
            consts[d].K5,
            k5_via_H(consts[d]),
            max(2.0 * consts[d].err["K5"], 1e-9),
        )

    # enumerator vs closed form
    for d in (2, 3):
        table, cst = tables[d], consts[d]
        ref = coefficients(d, max_order(d), cst)
        enums = {k: enumerate_order(k, table) for k in (2, 3, 4, 5)}
        for k, eo in enums.items():
            for sig in (s for s in sorted(ref.a) if sum(s) == k):
                refval = ref.a[sig]
                pure = len(sig) == 1
                tol = max(
                    _coef_tol(refval, pure),
                    eo.error.coefficient(sig) + ref.err.get(sig, 0.0),
                )
                _check(
                    checks,
                    f"enum_d{d}_k{k}_a[{_sig_key(sig)}]",
                    eo.polynomial.coefficient(sig),
                    refval,
                    tol,
                )

    # duality residual suite
    coeffs2 = coefficients(2, 6, consts[2])
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(10):
        p = float(rng.uniform(0.05, 0.45))
        alpha = float(rng.uniform(-3.0, 3.0))
        res = duality_residual_series(DualityProbe(p=p, alpha_ratio=alpha, order=6), coeffs2)
        worst = max(worst, max(abs(res[2]), abs(res[4]), abs(res[6])))
    _check(checks, "duality_residual_max", worst, 0.0, 1e-8)

    for a3 in (0.25, 0.4):
        rel4 = recover_relations_order4(a3)
        dev4 = max(
            abs(rel4[(2, 2)] - (1.5 * a3 - 0.375)), abs(rel4[(4,)] - (0.25 - 1.5 * a3))
        )
        _check(checks, f"relations_order4_a3={a3}", dev4, 0.0, 1e-8)
    ival = consts[2].I
    rel6 = recover_relations_order6(0.25, 1.0 / 16, ival)
    dev6 = max(
        abs(rel6[(2, 2, 2)] - (1.5 * ival - 1.0 / 16)),
        abs(rel6[(3, 3)] - (1.0 / 32 - ival)),
        abs(rel6[(2, 4)] - (1.0 / 32 - 1.5 * ival)),
        abs(rel6[(6,)] - (-1.0 / 32)),
    )
    _check(checks, "relations_order6", dev6, 0.0, 1e-8)

    # Keller-Dykhne closure
    for eps in (0.1, 0.2, 0.4):
        dist = two_component(1.0 - eps, 1.0 + eps)
        exact = float(np.sqrt(1.0 - eps**2))
        series = sigma_e_series(dist, 2, 6, consts[2]).sigma_e
        _check(checks, f"kd_series_eps={eps}", series, exact, 2.0 * eps**8)
        root = solve_bruggeman(dist, 2).sigma_B
        _check(checks, f"kd_bruggeman_eps={eps}", root, exact, 1e-10)

    # Monte Carlo oracle
    kd = two_component(0.6, 1.4)
    est = estimate_sigma_e(2, args.L, kd, samples=args.samples, seed=seed, threads=args.threads)
    target = float(np.sqrt(0.6 * 1.4))
    _check(checks, "mc_kd_mean", est.mean, target, 3.0 * est.stderr, stderr=est.stderr)
    _check(checks, "mc_kd_stderr", est.stderr, 0.0, 3e-3)
    sd = two_component(2.0, 0.5)
    est_sd = estimate_sigma_e(2, args.L, sd, samples=args.samples, seed=seed + 1, threads=args.threads)
    _check(checks, "mc_selfdual_mean", est_sd.mean, 1.0, 3.0 * est_sd.stderr, stderr=est_sd.stderr)
    series_kd = sigma_e_series(kd, 2, 6, consts[2]).sigma_e
    _check(checks, "mc_vs_series", series_kd, est.mean, 3.0 * est.stderr)

    # remainder-bound honesty on random laws
    violations = 0
    total = 0
    for dist in _random_laws(rng, count=20, u0_max=0.4):
        results = {
            n: sigma_e_series(dist, 2, n, consts[2]) for n in range(2, 7)
        }
        for n in range(2, 6):
            total += 1
            step = abs(results[n].sigma_e - results[n + 1].sigma_e)
            if step > results[n].remainder_bound:
                violations += 1
    _check(checks, "remainder_honesty_violations", violations, 0.0, 0.0, cases=total)

    # comparison signs
    sign_fail = 0
    sign_total = 0
    for eps in (0.05, 0.1, 0.2):
        rep = compare(two_component(1 - eps, 1 + eps), 3, consts[3])
        sign_total += 1
        sign_fail += rep.predicted_sign != "positive"
    for eps in (0.05, 0.15):
        for p1 in (0.6, 0.7):
            up = compare(two_component(1 - eps, 1 + eps, p1), 2, consts[2])
            down = compare(two_component(1 + eps, 1 - eps, p1), 2, consts[2])
            sign_total += 2
            sign_fail += up.predicted_sign != "positive"
            sign_fail += down.predicted_sign != "negative"
    for eps in (0.1, 0.2):
        for p in (0.2, 0.3, 0.4):
            rep = compare(three_value(eps, -1.0, p), 2, consts[2])
            sign_total += 1
            sign_fail += rep.predicted_sign != "negative"
    _check(checks, "comparison_sign_failures", sign_fail, 0.0, 0.0, cases=sign_total)

    failed = sum(1 for c in checks if not c["pass"])
    return {
        "command": "reproduce",
        "seed": seed,
        "timestamp": time.strftime("%Y-%m-%dT%H:%M:%S%z"),
        "L": args.L,
        "samples": args.samples,
        "checks": checks,
        "passed": len(checks) - failed,
        "failed": failed,
        "all_pass": failed == 0,
    }


def _random_laws(rng, count, u0_max):
    laws = []
    while len(laws) < count:
        n = int(rng.integers(2, 5))
        values = 1.0 + rng.uniform(-0.3, 0.3, size=n)
        probs = rng.dirichlet(np.ones(n))
        try:
            dist = DistributionSpec(atoms=tuple(zip(values, probs)))
        except ValueError:
            continue
        if moments(dist, 2).u0 < u0_max:
            laws.append(dist)
    return laws


# ---------------------------------------------------------------------------
# entry point
# ---------------------------------------------------------------------------

def build_parser() -> _Parser:
    parser = _Parser(prog="homogenize", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, dist=False, table=False):
        p.add_argument("--no-cache", action="store_true", help="bypass the kernel table cache")
        p.add_argument("--output", help="write the report to a file instead of stdout")
        p.add_argument("--format", choices=("json", "csv"), default="json")
        p.add_argument("--threads", type=int, default=1)
        if dist:
            p.add_argument("--dist", help="distribution JSON file")
        if table:
            p.add_argument("--resolution", type=int, default=None, metavar="N")
            p.add_argument("--radius", type=int, default=None, metavar="R")

    p = sub.add_parser("constants", help="dimension constants H, I1, I2, K5")
    p.add_argument("--dim", type=int, required=True)
    common(p, table=True)
    p.set_defaults(func=cmd_constants)

    p = sub.add_parser("kernel", help="build a kernel table and report its identities")
    p.add_argument("--dim", type=int, required=True)
    common(p, table=True)
    p.set_defaults(func=cmd_kernel)

    p = sub.add_parser("expand", help="truncated effective-conductivity expansion")
    p.add_argument("--dim", type=int, required=True)
    p.add_argument("--order", type=int, required=True)
    common(p, dist=True)
    p.set_defaults(func=cmd_expand)

    p = sub.add_parser("enumerate", help="brute-force per-order term")
    p.add_argument("--dim", type=int, required=True)
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--symbolic", action="store_true")
    common(p, dist=True, table=True)
    p.set_defaults(func=cmd_enumerate)

    p = sub.add_parser("bruggeman", help="effective-medium root (and series)")
    p.add_argument("--dim", type=int, required=True)
    p.add_argument("--series-order", type=int, default=None)
    common(p, dist=True)
    p.set_defaults(func=cmd_bruggeman)

    p = sub.add_parser("compare", help="exact expansion vs Bruggeman")
    p.add_argument("--dim", type=int, required=True)
    common(p, dist=True)
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("duality-check", help="2D duality residual on the three-value family")
    p.add_argument("--p", type=float, required=True)
    p.add_argument("--alpha", type=float, required=True)
    p.add_argument("--order", type=int, default=6)
    common(p)
    p.set_defaults(func=cmd_duality_check)

    p = sub.add_parser("oracle", help="Monte Carlo torus estimate")
    p.add_argument("--dim", type=int, required=True)
    p.add_argument("--L", type=int, required=True)
    p.add_argument("--samples", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--tol", type=float, default=1e-10)
    p.add_argument("--per-sample-csv", default=None)
    common(p, dist=True)
    p.set_defaults(func=cmd_oracle)

    p = sub.add_parser("reproduce", help="rerun the headline numbers with tolerances")
    p.add_argument("--seed", type=int, default=7)
    p.add_argument("--L", type=int, default=64)
    p.add_argument("--samples", type=int, default=200)
    common(p)
    p.set_defaults(func=cmd_reproduce)

    return parser


def _emit(payload: dict, args) -> None:
    if args.format == "csv":
        buf = io.StringIO()
        w = csv.writer(buf)
        if "checks" in payload:
            w.writerow(["name", "value", "target", "tol", "pass"])
            for c in payload["checks"]:
                w.writerow([c["name"], repr(c["value"]), repr(c["target"]), repr(c["tol"]), c["pass"]])
        elif "mean" in payload:
            w.writerow(["field", "value"])
            for key, val in payload.items():
                w.writerow([key, val])
        else:
            raise ValueError("csv output is only available for tabular commands")
        text = buf.getvalue()
    else:
        text = json.dumps(payload, indent=2) + "\n"
    if args.output:
        with open(args.output, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # argparse exits; surface the code to callers
        return exc.code if isinstance(exc.code, int) else 1
    try:
        payload = args.func(args)
        _emit(payload, args)
    except (CapacityError, SolverError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except (ValueError, OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    if payload.get("all_pass") is False:
        return 3
    return 0


if __name__ == "__main__":
    sys.exit(main())
