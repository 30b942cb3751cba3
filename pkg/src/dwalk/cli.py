"""Command-line front end.

Verbs: gen, stationary, mix, cover, returns, geomlaw, ztest, degrees,
predict, formula, hit, contract, experiment, rerun.  Exit codes: 0 ok,
1 validation error, 2 runtime/compute error, 3 invariant breach.
JSON outputs carry n, seed provenance, residuals, and effective thresholds.
"""

from __future__ import annotations

import argparse
import json
import math
import sys

import numpy as np

from . import __version__
from .chain import (
    chain_from,
    contract,
    contracted_index,
    hitting_time,
    mixing,
    point_mass,
    stationary,
    step,
)
from .degree_theory import (
    cover_coefficient,
    cover_formula,
    degree_profile,
    predict_pi,
    v_star_count,
    v_star_floor,
)
from .digraph import GenParams, degrees, generate, is_strongly_connected, load, save, small_vertices, structural_report
from .errors import DwalkError, ValidationError
from .lab import fmt_num, parse_spec, rerun_row, run_experiment
from .seeds import seed_fingerprint
from .trees import z_lower_report, z_upper_report
from .walker import cover_time_mc, geometric_law_check, min_modulus_scan, return_poly, return_sum


def _emit(obj):
    print(json.dumps(obj, indent=2, sort_keys=True, default=_jsonable))


def _jsonable(v):
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, (np.floating,)):
        return float(v)
    if isinstance(v, np.ndarray):
        return v.tolist()
    if isinstance(v, complex):
        return {"re": v.real, "im": v.imag}
    return str(v)


def _add_graph_arg(p):
    p.add_argument("file", help="edge-list file ('n m' header, then 'u v' lines)")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="dwalk", description=__doc__)
    ap.add_argument("--version", action="version", version=f"dwalk {__version__}")
    sub = ap.add_subparsers(dest="cmd", required=True)

    p = sub.add_parser("gen", help="sample D(n, p) and write an edge-list file")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--p", type=float, required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--method", choices=("naive", "geometric-jump"), default="geometric-jump")
    p.add_argument("--out", required=True)

    p = sub.add_parser("stationary", help="stationary distribution by power iteration")
    _add_graph_arg(p)
    p.add_argument("--tol", type=float, default=1e-12)
    p.add_argument("--json", action="store_true")

    p = sub.add_parser("mix", help="mixing time to an entrywise threshold")
    _add_graph_arg(p)
    p.add_argument("--threshold", type=float, default=None, help="default min(n^-3, 1e-9)")
    p.add_argument("--pairs", default="all", help="'all' or a source sample size")
    p.add_argument("--seed", type=int, default=0, help="seed for source sampling")

    p = sub.add_parser("cover", help="Monte Carlo cover times")
    _add_graph_arg(p)
    p.add_argument("--runs", type=int, default=20)
    p.add_argument("--start-policy", default="random", help="random | fixed:V | sampled:K")
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--json", action="store_true", help="summary JSON instead of per-run CSV")

    p = sub.add_parser("returns", help="return polynomial of a vertex")
    _add_graph_arg(p)
    p.add_argument("--v", type=int, required=True)
    p.add_argument("--T", type=int, required=True)
    p.add_argument("--K", type=float, default=10.0, help="scan radius constant: |z| = 1 + 1/(K T)")

    p = sub.add_parser("geomlaw", help="exact avoidance vs geometric prediction")
    _add_graph_arg(p)
    p.add_argument("--v", type=int, required=True)
    p.add_argument("--T", type=int, default=None, help="default: measured mixing time")
    p.add_argument("--u", type=int, default=0, help="walk start vertex")
    p.add_argument("--tmax", type=int, default=None)
    p.add_argument("--grid", default=None, help="comma list of step counts; default n/2,n,2n capped at tmax")

    p = sub.add_parser("ztest", help="tree path-weight estimator vs exact transition probability")
    _add_graph_arg(p)
    p.add_argument("--pairs", type=int, default=20)
    p.add_argument("--mode", choices=("low", "up"), default="low")
    p.add_argument("--eta", type=float, default=1.0 / 250.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--np", dest="np_value", type=float, default=None, help="np for the depth formula; default m/n")
    p.add_argument("--json", action="store_true")

    p = sub.add_parser("degrees", help="degree profile, buckets, and structural report")
    _add_graph_arg(p)
    p.add_argument("--np", dest="np_value", type=float, required=True)
    p.add_argument("--json", action="store_true")

    p = sub.add_parser("predict", help="stationary prediction from degrees")
    _add_graph_arg(p)
    p.add_argument("--p", type=float, default=None, help="generation probability; default: m-based fallback")
    p.add_argument("--exact", action="store_true", help="also solve the chain and report errors")
    p.add_argument("--json", action="store_true")

    p = sub.add_parser("formula", help="asymptotic cover-time value")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--d", type=float, required=True)

    p = sub.add_parser("hit", help="expected hitting times of a target vertex")
    _add_graph_arg(p)
    p.add_argument("--target", type=int, required=True)

    p = sub.add_parser("contract", help="merge two vertices into a supernode chain")
    _add_graph_arg(p)
    p.add_argument("--v", type=int, required=True)
    p.add_argument("--w", type=int, required=True)
    p.add_argument("--out", required=True, help="JSON chain file")

    p = sub.add_parser("experiment", help="run a sweep declared in a key=value spec file")
    p.add_argument("specfile")
    p.add_argument("--out-dir", default=".")

    p = sub.add_parser("rerun", help="recompute one CSV row of a sweep")
    p.add_argument("specfile")
    p.add_argument("--row", type=int, required=True)

    return ap


def _load_chain(path):
    g = load(path)
    return g, chain_from(g)


def cmd_gen(args) -> int:
    g = generate(GenParams(n=args.n, p=args.p, seed=args.seed, method=args.method))
    save(g, args.out)
    print(f"wrote {args.out}: n={g.n} m={g.edge_count} seed={seed_fingerprint(args.seed)} method={args.method}")
    return 0


def cmd_stationary(args) -> int:
    g, c = _load_chain(args.file)
    pi = stationary(c, tol=args.tol)
    res = float(np.abs(step(c, pi) - pi).sum())
    if args.json:
        _emit({"n": g.n, "m": g.edge_count, "file": args.file, "tol": args.tol, "residual": res, "pi": pi.tolist()})
    else:
        print(f"n={g.n} residual={fmt_num(res)}")
        print(" ".join(fmt_num(x) for x in pi))
    return 0


def cmd_mix(args) -> int:
    g, c = _load_chain(args.file)
    pi = stationary(c, tol=1e-12)
    pairs = "all" if args.pairs == "all" else int(args.pairs)
    rep = mixing(c, pi, threshold=args.threshold, sample_pairs=pairs, seed=args.seed)
    _emit(
        {
            "n": g.n,
            "file": args.file,
            "T": rep.T,
            "threshold_effective": rep.threshold,
            "sampled": rep.sampled,
            "sources": len(rep.sources),
            "sample_seed": seed_fingerprint(args.seed),
            "d_trace": rep.d_trace.tolist(),
            "dbar_trace": rep.dbar_trace.tolist(),
        }
    )
    return 0


def cmd_cover(args) -> int:
    g = load(args.file)
    pol = args.start_policy
    if pol == "random":
        policy = "uniform-random"
    elif pol.startswith("fixed:"):
        policy = ("fixed", int(pol.split(":", 1)[1]))
    elif pol.startswith("sampled:"):
        policy = ("all-sampled", int(pol.split(":", 1)[1]))
    else:
        raise ValidationError(f"unknown start policy {pol!r}")
    summary = cover_time_mc(g, policy, args.runs, args.seed)
    if args.json:
        _emit(
            {
                "n": g.n,
                "file": args.file,
                "runs": summary.runs,
                "policy": summary.policy,
                "master_seed": seed_fingerprint(args.seed),
                "mean": summary.mean,
                "stddev": summary.stddev,
                "ci95": list(summary.ci95),
                "max_over_starts": summary.max_over_starts,
                "step_cap": summary.step_cap,
            }
        )
    else:
        print("run_id,seed,start,cover_time")
        for i in range(summary.runs):
            print(f"{i},{int(summary.run_seeds[i])},{int(summary.starts[i])},{int(summary.cover_times[i])}")
    return 0


def cmd_returns(args) -> int:
    g, c = _load_chain(args.file)
    rp = return_poly(c, args.v, args.T)
    scan = min_modulus_scan(rp, K=args.K)
    _emit(
        {
            "n": g.n,
            "v": args.v,
            "T": args.T,
            "coeffs": rp.coeffs.tolist(),
            "R_at_1": return_sum(rp),
            "scan": {
                "K": scan.K,
                "lambda": scan.lam,
                "radius": scan.radius,
                "min_modulus": scan.min_modulus,
                "argmin": {"re": scan.argmin.real, "im": scan.argmin.imag},
                "points": scan.points,
            },
        }
    )
    return 0


def cmd_geomlaw(args) -> int:
    g, c = _load_chain(args.file)
    pi = stationary(c, tol=1e-12)
    if args.T is None:
        T = mixing(c, pi, sample_pairs="all" if g.n <= 5000 else 64).T
    else:
        T = args.T
    if args.grid:
        grid = [T + int(x) for x in args.grid.split(",")]
    else:
        grid = [T + t for t in (g.n // 2, g.n, 2 * g.n)]
    if args.tmax is not None:
        grid = [t for t in grid if t <= args.tmax] or [args.tmax]
    table = geometric_law_check(c, pi, args.v, T, grid, u=args.u)
    _emit(
        {
            "n": g.n,
            "v": table.vertex,
            "u": table.start,
            "T": table.T,
            "pi_v": table.pi_v,
            "R_v": table.R_v,
            "p_v": table.p_v,
            "rows": [
                {
                    "t": r.t,
                    "exact_avoid": r.exact_avoid,
                    "geometric_pred": r.geometric_pred,
                    "ratio": r.ratio,
                    "degenerate": r.degenerate,
                }
                for r in table.rows
            ],
        }
    )
    return 0


def cmd_ztest(args) -> int:
    from .seeds import derive_rng

    g = load(args.file)
    c = chain_from(g)
    np_value = args.np_value if args.np_value is not None else g.edge_count / g.n
    rng = derive_rng(args.seed)
    indeg = g.in_degrees()
    m = float(g.edge_count)
    rows = []
    for _ in range(args.pairs):
        x, y = (int(v) for v in rng.integers(0, g.n, size=2))
        if args.mode == "low":
            rep = z_lower_report(g, x, y, np_value=np_value)
            q = point_mass(g.n, x)
            for _ in range(2 * rep.ell + 1):
                q = step(c, q)
            exact = float(q[y])
            rows.append(
                {
                    "x": x,
                    "y": y,
                    "mode": "low",
                    "depth": rep.ell,
                    "Z": rep.value,
                    "exact": exact,
                    "ratio": rep.value / exact if exact > 0 else math.nan,
                    "scaled": rep.value * m / indeg[y] if indeg[y] else math.nan,
                    "in_tree_ok": rep.in_tree_ok,
                    "out_tree_ok": rep.out_tree_ok,
                }
            )
        else:
            rep = z_upper_report(g, x, y, args.eta, np_value=np_value, chain=c)
            rows.append(
                {
                    "x": x,
                    "y": y,
                    "mode": "up",
                    "depths": {"ell0": rep.depths.ell0, "ell1": rep.depths.ell1, "ell2": rep.depths.ell2},
                    "Z_up": rep.z_up,
                    "exact": rep.exact,
                    "remainder": rep.remainder,
                    "alpha_sum": rep.alpha_sum,
                    "in_tree_ok": rep.in_tree_ok,
                    "out_tree_ok": rep.out_tree_ok,
                }
            )
    _emit({"n": g.n, "file": args.file, "seed": seed_fingerprint(args.seed), "np": np_value, "rows": rows})
    return 0


def cmd_degrees(args) -> int:
    g = load(args.file)
    prof = degree_profile(g.n, args.np_value / g.n)
    indeg, outdeg = degrees(g)
    counts = np.bincount(indeg, minlength=int(prof.ks[-1]) + 1 if prof.ks.size else 1)
    rep = structural_report(g, args.np_value)
    _emit(
        {
            "n": g.n,
            "m": g.edge_count,
            "np": args.np_value,
            "d": prof.d,
            "delta0": prof.delta0,
            "k_star": prof.k_star,
            "k_dagger": prof.k_dagger,
            "gamma_d": prof.gamma_d,
            "buckets": {k: v.tolist() for k, v in
                        (("K0", prof.K0), ("K1", prof.K1), ("K2", prof.K2), ("K3", prof.K3))},
            "claims": {
                "premise": prof.claims.premise,
                "k1_empty": prof.claims.k1_empty,
                "k2_min_ok": prof.claims.k2_min_ok,
                "k2_size": prof.claims.k2_size,
            },
            "v_star": {"count": v_star_count(g, prof), "floor": v_star_floor(prof)},
            "structure": {
                "small_count": rep.small_count,
                "small": rep.small.tolist(),
                "ell10": rep.ell10,
                "pair_check_ok": rep.pair_check_ok,
                "cycle_check_ok": rep.cycle_check_ok,
                "max_in_degree": rep.max_in_degree,
                "max_out_degree": rep.max_out_degree,
                "degree_check_ok": rep.degree_check_ok,
            },
            "degree_counts": {int(k): int(counts[k]) for k in prof.ks if k < len(counts) and counts[k]},
        }
    )
    return 0


def cmd_predict(args) -> int:
    g = load(args.file)
    pred = predict_pi(g, p=args.p)
    out = {
        "n": g.n,
        "m": g.edge_count,
        "m_used": pred.m_used,
        "fallback_m": pred.fallback_m,
        "raw": pred.raw.tolist(),
        "normalized": pred.normalized.tolist(),
    }
    if args.exact:
        pi = stationary(chain_from(g), tol=1e-12)
        out["max_rel_err"] = float(np.abs(pi / pred.normalized - 1.0).max())
        out["mean_rel_err"] = float(np.abs(pi / pred.normalized - 1.0).mean())
    _emit(out)
    return 0


def cmd_formula(args) -> int:
    val = cover_formula(args.n, args.d)
    print(f"coefficient={fmt_num(cover_coefficient(args.d))} value={fmt_num(val)}")
    return 0


def cmd_hit(args) -> int:
    g, c = _load_chain(args.file)
    ht = hitting_time(c, args.target)
    _emit(
        {
            "n": g.n,
            "target": args.target,
            "residual": ht.residual,
            "finite": ht.finite.tolist(),
            "expected": [None if not f else x for f, x in zip(ht.finite, ht.expected)],
        }
    )
    return 0


def cmd_contract(args) -> int:
    g, c = _load_chain(args.file)
    cc = contract(c, args.v, args.w)
    rows = []
    for u in range(cc.n_states):
        t, p = cc.row(u)
        rows.append([[int(a), float(b)] for a, b in zip(t, p)])
    payload = {
        "n_states": cc.n_states,
        "origin": list(cc.origin),
        "supernode": contracted_index(g.n, args.v, args.w, args.v),
        "rows": rows,
    }
    with open(args.out, "w", newline="\n") as fh:
        json.dump(payload, fh, indent=2)
        fh.write("\n")
    print(f"wrote {args.out}: {cc.n_states} states, supernode index {payload['supernode']}")
    return 0


def cmd_experiment(args) -> int:
    with open(args.specfile) as fh:
        spec = parse_spec(fh.read())
    result = run_experiment(spec, write=True, out_dir=args.out_dir)
    print(f"wrote {result.csv_path} ({len(result.rows)} rows) and {result.sidecar_path}")
    for agg in result.points:
        bits = " ".join(f"{k}={fmt_num(v)}" for k, v in agg.items() if k != "point_index")
        print(f"point {agg['point_index']}: {bits}")
    if result.errors:
        print(f"{len(result.errors)} task error(s):", file=sys.stderr)
        for e in result.errors:
            print(f"  {e}", file=sys.stderr)
        return 2
    return 0


def cmd_rerun(args) -> int:
    with open(args.specfile) as fh:
        spec = parse_spec(fh.read())
    header, line = rerun_row(spec, args.row)
    print(header)
    print(line)
    return 0


_HANDLERS = {
    "gen": cmd_gen,
    "stationary": cmd_stationary,
    "mix": cmd_mix,
    "cover": cmd_cover,
    "returns": cmd_returns,
    "geomlaw": cmd_geomlaw,
    "ztest": cmd_ztest,
    "degrees": cmd_degrees,
    "predict": cmd_predict,
    "formula": cmd_formula,
    "hit": cmd_hit,
    "contract": cmd_contract,
    "experiment": cmd_experiment,
    "rerun": cmd_rerun,
}


def main(argv=None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        # argparse exits 2 on bad usage; that is a validation failure here
        return 0 if exc.code in (0, None) else 1
    try:
        return _HANDLERS[args.cmd](args)
    except ValidationError as exc:
        print(f"dwalk: {exc}", file=sys.stderr)
        return exc.exit_code
    except DwalkError as exc:
        print(f"dwalk: {exc}", file=sys.stderr)
        return exc.exit_code
    except FileNotFoundError as exc:
        print(f"dwalk: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
