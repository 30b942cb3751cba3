"""Seeded experiment sweeps over (n, d) grids, reproducing the asymptotic
claims as convergence tables.

A sweep is declared in a flat key=value text file, executed over a work
pool, and written as a run-level CSV (12-significant-digit, locale-free)
plus a JSON sidecar carrying provenance and per-point aggregates.  Every
row derives its seed as f(master_seed, point_index, run_index), so any row
can be recomputed alone.
"""

from __future__ import annotations

import hashlib
import json
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import __version__
from .chain import (
    avoid_prob,
    chain_from,
    contract,
    contracted_index,
    default_mixing_threshold,
    mixing,
    point_mass,
    stationary,
    step,
)
from .degree_theory import (
    cover_formula,
    cover_upper_bound_estimate,
    median_indegree_vertices,
    predict_pi,
)
from .digraph import GenParams, generate, is_strongly_connected
from .errors import ComputeError, ValidationError
from .seeds import derive_rng, derive_seed
from .trees import z_lower_report, z_upper_report
from .walker import simulate_cover

KINDS = (
    "pi-convergence",
    "cover-convergence",
    "mixing-scan",
    "z-ratio",
    "contraction",
    "connectivity-threshold",
)

_KNOWN_KEYS = (
    "kind",
    "grid",
    "runs_per_point",
    "master_seed",
    "out",
    "epsilon",
    "threshold",
    "pairs_per_run",
    "mode",
    "eta",
)


@dataclass
class ExperimentSpec:
    kind: str
    grid: list                      # [(n, d), ...]
    runs_per_point: int
    master_seed: int
    out: str = "experiment.csv"
    epsilon: float = 0.1
    threshold: Optional[float] = None
    pairs_per_run: int = 20
    mode: str = "low"
    eta: float = 1.0 / 250.0
    tolerances: dict = field(default_factory=dict)

    def canonical_text(self) -> str:
        lines = [
            f"kind = {self.kind}",
            "grid = " + " ".join(f"{n}:{fmt_num(d)}" for n, d in self.grid),
            f"runs_per_point = {self.runs_per_point}",
            f"master_seed = {self.master_seed}",
            f"out = {self.out}",
            f"epsilon = {fmt_num(self.epsilon)}",
            f"threshold = {fmt_num(self.threshold) if self.threshold is not None else 'default'}",
            f"pairs_per_run = {self.pairs_per_run}",
            f"mode = {self.mode}",
            f"eta = {fmt_num(self.eta)}",
        ]
        for k in sorted(self.tolerances):
            lines.append(f"{k} = {fmt_num(self.tolerances[k])}")
        return "\n".join(lines) + "\n"

    def spec_hash(self) -> str:
        return hashlib.sha256(self.canonical_text().encode()).hexdigest()[:16]


def fmt_num(x) -> str:
    """12-significant-digit, locale-free numeric formatting; integers stay
    integral, inf/nan are spelled literally."""
    if isinstance(x, (bool, np.bool_)):
        return "1" if x else "0"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    x = float(x)
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    if x == int(x) and abs(x) < 1e15:
        return str(int(x))
    return format(x, ".12g")


def validate_spec_text(text: str) -> list:
    """All diagnostics for a spec file, each naming its line and key; empty
    means the text parses cleanly."""
    _, diags = _parse(text)
    return diags


def parse_spec(text: str) -> ExperimentSpec:
    spec, diags = _parse(text)
    if diags:
        raise ValidationError("invalid experiment spec:\n  " + "\n  ".join(diags))
    return spec


def _parse(text: str):
    diags = []
    seen = {}
    values = {}
    tolerances = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            diags.append(f"line {lineno}: expected 'key = value', got {raw!r}")
            continue
        key, _, val = line.partition("=")
        key = key.strip()
        val = val.split("#", 1)[0].strip()
        if key in seen:
            diags.append(f"line {lineno}: duplicate key {key!r} (first defined at line {seen[key]})")
            continue
        seen[key] = lineno
        if key.startswith("tol_"):
            try:
                tolerances[key] = float(val)
            except ValueError:
                diags.append(f"line {lineno}: key {key!r}: expected a number, got {val!r}")
            continue
        if key not in _KNOWN_KEYS:
            diags.append(f"line {lineno}: unknown key {key!r}")
            continue
        values[key] = (lineno, val)

    def take(key, conv, default=None, required=False):
        if key not in values:
            if required:
                diags.append(f"missing required key {key!r}")
            return default
        lineno, val = values[key]
        try:
            return conv(val)
        except (ValueError, ValidationError) as exc:
            diags.append(f"line {lineno}: key {key!r}: {exc}")
            return default

    def conv_kind(v):
        if v not in KINDS:
            raise ValueError(f"unknown kind {v!r}; expected one of {', '.join(KINDS)}")
        return v

    def conv_grid(v):
        pts = []
        entries = v.replace(",", " ").split()
        if not entries:
            raise ValueError("grid must be nonempty")
        for ent in entries:
            if ":" not in ent:
                raise ValueError(f"grid entry {ent!r} must look like n:d")
            ns, ds = ent.split(":", 1)
            n, d = int(ns), float(ds)
            if n < 3:
                raise ValueError(f"grid entry {ent!r}: n must be >= 3")
            if d <= 1:
                raise ValueError(f"grid entry {ent!r}: d must exceed 1 (the cover-time coefficient d*ln(d/(d-1)) needs d > 1)")
            pts.append((n, d))
        return pts

    def conv_runs(v):
        r = int(v)
        if r < 1:
            raise ValueError("runs_per_point must be >= 1")
        return r

    def conv_mode(v):
        if v not in ("low", "up"):
            raise ValueError(f"mode must be 'low' or 'up', got {v!r}")
        return v

    kind = take("kind", conv_kind, required=True)
    grid = take("grid", conv_grid, required=True)
    runs = take("runs_per_point", conv_runs, required=True)
    master_seed = take("master_seed", int, required=True)
    out = take("out", str, default="experiment.csv")
    epsilon = take("epsilon", float, default=0.1)
    threshold = take("threshold", float, default=None)
    pairs = take("pairs_per_run", int, default=20)
    mode = take("mode", conv_mode, default="low")
    eta = take("eta", float, default=1.0 / 250.0)
    if diags:
        return None, diags
    return (
        ExperimentSpec(
            kind=kind,
            grid=grid,
            runs_per_point=runs,
            master_seed=master_seed,
            out=out,
            epsilon=epsilon,
            threshold=threshold,
            pairs_per_run=pairs,
            mode=mode,
            eta=eta,
            tolerances=tolerances,
        ),
        [],
    )


# -- row computation -----------------------------------------------------------

_COLUMNS = {
    "pi-convergence": [
        "point_index", "run_index", "n", "d", "seed", "status",
        "max_rel_err", "mean_rel_err", "max_rel_err_indeg", "max_rel_err_uniform",
    ],
    "cover-convergence": [
        "point_index", "run_index", "n", "d", "seed", "status",
        "start", "cover_time", "theory", "ratio", "t0", "t1", "t0_bound",
    ],
    "mixing-scan": [
        "point_index", "run_index", "n", "d", "seed", "status",
        "T", "threshold", "sampled", "log2_limit", "ratio", "submult_ok",
    ],
    "z-ratio": [
        "point_index", "run_index", "n", "d", "seed", "status",
        "mode", "pairs", "ratio_mean", "ratio_min", "ratio_max",
        "bound_violations", "fail_count",
    ],
    "contraction": [
        "point_index", "run_index", "n", "d", "seed", "status",
        "v", "w", "u", "T", "t1", "pi_gap_rel", "factor_gap_rel",
        "avoid_v", "avoid_w", "avoid_sigma",
    ],
    "connectivity-threshold": [
        "point_index", "run_index", "n", "d", "seed", "status",
        "np_hi", "np_lo", "sc_hi", "sc_lo",
    ],
}


def _edge_prob(n: int, d: float) -> float:
    return d * math.log(n) / n


def _gen_connected(n: int, d: float, seed: int):
    g = generate(GenParams(n=n, p=_edge_prob(n, d), seed=seed))
    if not is_strongly_connected(g):
        raise ComputeError(f"generated digraph (n={n}, d={d}) is not strongly connected")
    return g


def compute_row(spec: ExperimentSpec, point_index: int, run_index: int) -> dict:
    n, d = spec.grid[point_index]
    seed = derive_seed(spec.master_seed, point_index, run_index)
    row = {
        "point_index": point_index,
        "run_index": run_index,
        "n": n,
        "d": d,
        "seed": seed,
        "status": "ok",
    }
    fn = _ROW_FNS[spec.kind]
    fn(spec, n, d, seed, row)
    return row


def _row_pi(spec, n, d, seed, row):
    p = _edge_prob(n, d)
    g = _gen_connected(n, d, seed)
    pi = stationary(chain_from(g), tol=1e-12)
    pred = predict_pi(g, p)
    for name, vec in (
        ("max_rel_err", pred.normalized),
        ("max_rel_err_indeg", pred.indeg_normalized),
        ("max_rel_err_uniform", pred.uniform),
    ):
        row[name] = float(np.abs(pi / vec - 1.0).max())
    row["mean_rel_err"] = float(np.abs(pi / pred.normalized - 1.0).mean())


def _row_cover(spec, n, d, seed, row):
    g = _gen_connected(n, d, seed)
    start = int(derive_rng(seed, 2).integers(0, n))
    run = simulate_cover(g, start, derive_seed(seed, 1))
    theory = cover_formula(n, d)
    t0 = (1.0 + spec.epsilon) * theory
    m = n * (n - 1) * _edge_prob(n, d)
    row.update(
        start=start,
        cover_time=run.cover_time,
        theory=theory,
        ratio=run.cover_time / theory,
        t0=t0,
        t1=(1.0 - spec.epsilon) * theory,
        t0_bound=cover_upper_bound_estimate(g, t0, m=m),
    )


def _submultiplicative(dbar: np.ndarray, slack: float = 1e-9) -> bool:
    T = len(dbar)
    for s in range(1, T + 1):
        for t in range(s, T + 1 - s):
            if dbar[s + t - 1] > dbar[s - 1] * dbar[t - 1] * (1.0 + slack):
                return False
    return True


def _row_mixing(spec, n, d, seed, row):
    g = _gen_connected(n, d, seed)
    c = chain_from(g)
    pi = stationary(c, tol=1e-12)
    sample = "all" if n <= 5000 else 64
    rep = mixing(c, pi, threshold=spec.threshold, sample_pairs=sample, seed=seed)
    limit = math.log(n) ** 2
    row.update(
        T=rep.T,
        threshold=rep.threshold,
        sampled=rep.sampled,
        log2_limit=limit,
        ratio=rep.T / limit,
        submult_ok=_submultiplicative(rep.dbar_trace),
    )


def _row_z(spec, n, d, seed, row):
    p = _edge_prob(n, d)
    g = _gen_connected(n, d, seed)
    c = chain_from(g)
    m = n * (n - 1) * p
    indeg = g.in_degrees()
    rng = derive_rng(seed, 3)
    ratios = []
    violations = 0
    failures = 0
    for _ in range(spec.pairs_per_run):
        x, y = (int(v) for v in rng.integers(0, n, size=2))
        if spec.mode == "low":
            rep = z_lower_report(g, x, y, np_value=n * p)
            if not (rep.in_tree_ok and rep.out_tree_ok):
                failures += 1
                continue
            q = point_mass(n, x)
            for _ in range(2 * rep.ell + 1):
                q = step(c, q)
            if rep.value > q[y] + 1e-12:
                violations += 1
            if indeg[y] > 0:
                ratios.append(rep.value * m / indeg[y])
        else:
            rep = z_upper_report(g, x, y, spec.eta, np_value=n * p, chain=c)
            if not (rep.in_tree_ok and rep.out_tree_ok):
                failures += 1
                continue
            if rep.remainder < -1e-12:
                violations += 1
            if rep.exact > 0:
                ratios.append(rep.remainder / rep.exact)
    row.update(
        mode=spec.mode,
        pairs=spec.pairs_per_run,
        ratio_mean=float(np.mean(ratios)) if ratios else math.nan,
        ratio_min=float(np.min(ratios)) if ratios else math.nan,
        ratio_max=float(np.max(ratios)) if ratios else math.nan,
        bound_violations=violations,
        fail_count=failures,
    )


def _row_contraction(spec, n, d, seed, row):
    g = _gen_connected(n, d, seed)
    c = chain_from(g)
    pi = stationary(c, tol=1e-12)
    pool = median_indegree_vertices(g, 16)
    rng = derive_rng(seed, 4)
    v, w, u = sample_contraction_triple(g, pool, rng)
    cc = contract(c, v, w)
    pi_star = stationary(cc, tol=1e-12)
    sigma = contracted_index(n, v, w, v)
    hat = pi[v] + pi[w]
    pi_gap_rel = abs(pi_star[sigma] - hat) / hat
    threshold = spec.threshold if spec.threshold is not None else default_mixing_threshold(n)
    T = max(
        mixing(c, pi, threshold=threshold, sample_pairs=64, seed=seed).T,
        mixing(cc, pi_star, threshold=threshold, sample_pairs=64, seed=seed).T,
    )
    t1 = int(round((1.0 - spec.epsilon) * cover_formula(n, d)))
    a_v = avoid_prob(c, point_mass(n, u), v, T, t1)
    a_w = avoid_prob(c, point_mass(n, u), w, T, t1)
    u_c = contracted_index(n, v, w, u)
    a_sigma = avoid_prob(cc, point_mass(n - 1, u_c), sigma, T, t1)
    row.update(
        v=v,
        w=w,
        u=u,
        T=T,
        t1=t1,
        pi_gap_rel=pi_gap_rel,
        factor_gap_rel=abs(a_sigma - a_v * a_w) / (a_v * a_w),
        avoid_v=a_v,
        avoid_w=a_w,
        avoid_sigma=a_sigma,
    )


def sample_contraction_triple(g, pool, rng, tries: int = 64):
    """Draw (v, w, u) from a typical-degree pool with v, w not weakly
    adjacent.  The near-independence of the two avoidance events is a
    statement about well-separated vertex pairs; merging an adjacent pair
    creates a supernode self-loop that visibly distorts its return rate, so
    adjacent draws are rejected."""
    for _ in range(tries):
        v, w, u = (int(x) for x in rng.choice(pool, size=3, replace=False))
        if w not in set(int(t) for t in g.weak_neighbors(v)):
            return v, w, u
    raise ComputeError("could not find a non-adjacent pair in the sampling pool")


def _row_connectivity(spec, n, d, seed, row):
    ln, lnln = math.log(n), math.log(math.log(n))
    np_hi, np_lo = ln + 2 * lnln, ln - 2 * lnln
    g_hi = generate(GenParams(n=n, p=np_hi / n, seed=derive_seed(seed, 0)))
    g_lo = generate(GenParams(n=n, p=np_lo / n, seed=derive_seed(seed, 1)))
    row.update(
        np_hi=np_hi,
        np_lo=np_lo,
        sc_hi=int(is_strongly_connected(g_hi)),
        sc_lo=int(is_strongly_connected(g_lo)),
    )


_ROW_FNS = {
    "pi-convergence": _row_pi,
    "cover-convergence": _row_cover,
    "mixing-scan": _row_mixing,
    "z-ratio": _row_z,
    "contraction": _row_contraction,
    "connectivity-threshold": _row_connectivity,
}


# -- sweep execution -----------------------------------------------------------


@dataclass
class ExperimentResult:
    spec: ExperimentSpec
    rows: list
    columns: list
    errors: list
    points: list
    csv_path: Optional[str] = None
    sidecar_path: Optional[str] = None

    def csv_text(self) -> str:
        lines = [",".join(self.columns)]
        for row in self.rows:
            lines.append(",".join(_cell(row.get(c)) for c in self.columns))
        return "\n".join(lines) + "\n"


def _cell(v) -> str:
    if v is None:
        return ""
    if isinstance(v, str):
        return v
    return fmt_num(v)


def _aggregate(spec: ExperimentSpec, rows: list) -> list:
    points = []
    numeric_cols = [
        c
        for c in _COLUMNS[spec.kind]
        if c not in ("point_index", "run_index", "n", "d", "seed", "status", "mode")
    ]
    for pi_, (n, d) in enumerate(spec.grid):
        mine = [r for r in rows if r["point_index"] == pi_ and r["status"] == "ok"]
        agg = {"point_index": pi_, "n": n, "d": d, "runs_ok": len(mine)}
        for col in numeric_cols:
            vals = [float(r[col]) for r in mine if isinstance(r.get(col), (int, float, np.floating, np.integer))]
            vals = [v for v in vals if not math.isnan(v)]
            if vals:
                agg[f"{col}_mean"] = float(np.mean(vals))
                if len(vals) > 1:
                    agg[f"{col}_stderr"] = float(np.std(vals, ddof=1) / math.sqrt(len(vals)))
        points.append(agg)
    return points


def thread_count() -> int:
    raw = os.environ.get("DWALK_THREADS", "1")
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


def run_experiment(spec: ExperimentSpec, write: bool = True, out_dir: Optional[str] = None) -> ExperimentResult:
    """Execute the sweep over all (point, run) tasks; results are assembled
    in (point_index, run_index) order regardless of completion order, and a
    failed task marks its whole point aborted while the sweep continues."""
    tasks = [(p, r) for p in range(len(spec.grid)) for r in range(spec.runs_per_point)]
    results = {}
    errors = []

    def work(task):
        p, r = task
        try:
            return task, compute_row(spec, p, r), None
        except Exception as exc:  # recorded, sweep continues
            return task, None, f"point {p} run {r}: {exc}"

    workers = thread_count()
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            outcomes = list(pool.map(work, tasks))
    else:
        outcomes = [work(t) for t in tasks]

    failed_points = set()
    for task, row, err in outcomes:
        if err is not None:
            failed_points.add(task[0])
            errors.append(err)
        results[task] = row

    rows = []
    for p, r in tasks:
        row = results[(p, r)]
        if row is None:
            n, d = spec.grid[p]
            row = {
                "point_index": p,
                "run_index": r,
                "n": n,
                "d": d,
                "seed": derive_seed(spec.master_seed, p, r),
                "status": "error",
            }
        elif p in failed_points:
            row = dict(row)
            row["status"] = "point-aborted"
        rows.append(row)

    result = ExperimentResult(
        spec=spec,
        rows=rows,
        columns=_COLUMNS[spec.kind],
        errors=errors,
        points=_aggregate(spec, [r for r in rows if r["status"] == "ok"]),
    )
    if write:
        base = out_dir if out_dir is not None else "."
        csv_path = os.path.join(base, spec.out)
        os.makedirs(os.path.dirname(csv_path) or ".", exist_ok=True)
        with open(csv_path, "w", newline="\n") as fh:
            fh.write(result.csv_text())
        sidecar = {
            "tool": "dwalk",
            "version": __version__,
            "kind": spec.kind,
            "master_seed": spec.master_seed,
            "spec_hash": spec.spec_hash(),
            "spec": spec.canonical_text(),
            "rng": "pcg64; row seed = seedseq(master_seed, spawn_key=(point_index, run_index))",
            "threads": thread_count(),
            "columns": result.columns,
            "points": result.points,
            "errors": errors,
            "csv": os.path.basename(csv_path),
        }
        sidecar_path = csv_path + ".json"
        with open(sidecar_path, "w", newline="\n") as fh:
            json.dump(sidecar, fh, indent=2, sort_keys=True, default=float)
            fh.write("\n")
        result.csv_path = csv_path
        result.sidecar_path = sidecar_path
    return result


def rerun_row(spec: ExperimentSpec, row_index: int) -> tuple:
    """Recompute a single CSV row (0-based, header excluded) from the spec;
    returns (header_line, row_line)."""
    total = len(spec.grid) * spec.runs_per_point
    if not (0 <= row_index < total):
        raise ValidationError(f"row {row_index} out of range; sweep has {total} rows")
    p, r = divmod(row_index, spec.runs_per_point)
    row = compute_row(spec, p, r)
    cols = _COLUMNS[spec.kind]
    return ",".join(cols), ",".join(_cell(row.get(c)) for c in cols)
