"""Monte Carlo walk simulation: cover times, first-visit records, the
return polynomial R_T(z), and the geometric avoidance-law comparison.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from typing import Optional, Sequence, Union

import numpy as np

from .chain import Chain, avoid_curve, point_mass, step
from .digraph import Digraph
from .errors import ComputeError, ValidationError
from .seeds import derive_rng, derive_seed

_BUF = 1 << 14


class CoverCapError(ComputeError):
    def __init__(self, msg, visited_count):
        super().__init__(msg)
        self.visited_count = visited_count


@dataclass
class WalkRun:
    """One seeded trajectory run until every vertex has been visited."""

    start: int
    seed: int
    cover_time: int
    last_vertex: int
    first_visit: np.ndarray

    def __post_init__(self):
        assert self.first_visit[self.start] == 0
        assert self.cover_time == int(self.first_visit.max())


def default_step_cap(n: int) -> int:
    return int(1e4 * n * max(math.log(max(n, 2)), 1.0))


def simulate_cover(g: Digraph, start: int, seed: int, step_cap: Optional[int] = None) -> WalkRun:
    """Walk from ``start`` until all vertices are visited; deterministic per
    (graph, start, seed).  Each step draws a uniform index into the current
    vertex's out-neighbour list."""
    n = g.n
    if not (0 <= start < n):
        raise ValidationError("start vertex out of range")
    if step_cap is None:
        step_cap = default_step_cap(n)
    indptr = g.out_indptr.tolist()
    indices = g.out_indices.tolist()
    deg = g.out_degrees().tolist()
    if 0 in deg:
        raise ValidationError(f"walk undefined at sink vertex {deg.index(0)}")
    rng = derive_rng(seed)
    first_visit = np.full(n, -1, dtype=np.int64)
    first_visit[start] = 0
    remaining = n - 1
    cur = start
    last = start
    t = 0
    fv = first_visit  # local alias for the hot loop
    buf = rng.random(_BUF)
    bi = 0
    while remaining:
        if t >= step_cap:
            raise CoverCapError(
                f"cover walk exceeded step cap {step_cap} with {n - remaining} of {n} visited",
                n - remaining,
            )
        if bi == _BUF:
            buf = rng.random(_BUF)
            bi = 0
        cur = indices[indptr[cur] + int(buf[bi] * deg[cur])]
        bi += 1
        t += 1
        if fv[cur] < 0:
            fv[cur] = t
            last = cur
            remaining -= 1
    return WalkRun(start=start, seed=seed, cover_time=t, last_vertex=last, first_visit=first_visit)


@dataclass
class CoverSummary:
    runs: int
    policy: str
    mean: float
    stddev: float
    ci95: tuple
    max_over_starts: float
    cover_times: np.ndarray
    starts: np.ndarray
    run_seeds: np.ndarray
    step_cap: int


def cover_time_mc(
    g: Digraph,
    starts: Union[tuple, str],
    runs: int,
    seed: int,
    step_cap: Optional[int] = None,
) -> CoverSummary:
    """Aggregate independent cover runs.

    ``starts`` is one of ``("fixed", v)``, ``"uniform-random"``, or
    ``("all-sampled", k)`` (k seeded distinct start vertices cycled over the
    runs).  Run i walks with the derived seed f(seed, i), so any row is
    reproducible on its own via ``simulate_cover(g, start, run_seed)``;
    aggregation order is fixed by run index.
    """
    if runs < 1:
        raise ValidationError("runs must be >= 1")
    n = g.n
    if step_cap is None:
        step_cap = default_step_cap(n)
    if starts == "uniform-random":
        policy = "uniform-random"
        start_of = None
    elif isinstance(starts, tuple) and starts[0] == "fixed":
        v = int(starts[1])
        if not (0 <= v < n):
            raise ValidationError("fixed start vertex out of range")
        policy = f"fixed:{v}"
        start_of = [v]
    elif isinstance(starts, tuple) and starts[0] == "all-sampled":
        k = int(starts[1])
        if not (1 <= k <= n):
            raise ValidationError("all-sampled count out of range")
        pool = np.sort(derive_rng(seed, 2**31).choice(n, size=k, replace=False))
        policy = f"all-sampled:{k}"
        start_of = [int(v) for v in pool]
    else:
        raise ValidationError(f"unknown start policy {starts!r}")

    times = np.empty(runs, dtype=np.int64)
    start_arr = np.empty(runs, dtype=np.int64)
    run_seeds = np.empty(runs, dtype=np.uint64)
    for i in range(runs):
        run_seed = derive_seed(seed, i)
        if start_of is None:
            s = int(derive_rng(run_seed, 0).integers(0, n))
        else:
            s = start_of[i % len(start_of)]
        run = simulate_cover(g, s, run_seed, step_cap)
        times[i] = run.cover_time
        start_arr[i] = s
        run_seeds[i] = run_seed
    mean = float(times.mean())
    sd = float(times.std(ddof=1)) if runs > 1 else 0.0
    se = sd / math.sqrt(runs) if runs > 1 else 0.0
    per_start = {}
    for s, t in zip(start_arr, times):
        per_start.setdefault(int(s), []).append(int(t))
    max_over_starts = max(float(np.mean(v)) for v in per_start.values())
    return CoverSummary(
        runs=runs,
        policy=policy,
        mean=mean,
        stddev=sd,
        ci95=(mean - 1.96 * se, mean + 1.96 * se),
        max_over_starts=max_over_starts,
        cover_times=times,
        starts=start_arr,
        run_seeds=run_seeds,
        step_cap=step_cap,
    )


@dataclass
class ReturnPoly:
    """Return probabilities r_0 .. r_{T-1} of the walk started at v, viewed
    as the polynomial R_T(z) = sum_j r_j z^j."""

    coeffs: np.ndarray
    T: int
    vertex: int

    def __post_init__(self):
        assert self.coeffs[0] == 1.0
        assert len(self.coeffs) == self.T


def return_poly(c: Chain, v: int, T: int) -> ReturnPoly:
    """Exact r_t = Pr(walk from v is at v after t steps), t < T."""
    if T < 1:
        raise ValidationError("T must be >= 1")
    if not (0 <= v < c.n_states):
        raise ValidationError("vertex out of range")
    coeffs = np.empty(T)
    coeffs[0] = 1.0
    x = point_mass(c.n_states, v)
    for t in range(1, T):
        x = step(c, x)
        coeffs[t] = x[v]
    return ReturnPoly(coeffs=coeffs, T=T, vertex=v)


def eval_R(rp: ReturnPoly, z: complex) -> complex:
    """Horner evaluation of R_T at z."""
    acc = 0j
    for r in rp.coeffs[::-1]:
        acc = acc * z + r
    return acc


def return_sum(rp: ReturnPoly) -> float:
    """R_T(1): expected visits to the start vertex within T steps (>= 1)."""
    return float(rp.coeffs.sum())


@dataclass
class MinModulusScan:
    radius: float
    lam: float
    K: float
    min_modulus: float
    argmin: complex
    points: int


def min_modulus_scan(rp: ReturnPoly, K: float = 10.0, points: int = 512) -> MinModulusScan:
    """Scan |R_T(z)| over the circle |z| = 1 + lambda with lambda = 1/(K T)
    and report the observed minimum (the lower-bound constant is existential,
    so the scan reports rather than asserts)."""
    if K <= 0 or points < 8:
        raise ValidationError("need K > 0 and at least 8 scan points")
    lam = 1.0 / (K * rp.T)
    radius = 1.0 + lam
    best = math.inf
    argmin = complex(radius, 0.0)
    for j in range(points):
        z = radius * cmath.exp(2j * math.pi * j / points)
        m = abs(eval_R(rp, z))
        if m < best:
            best = m
            argmin = z
    return MinModulusScan(radius=radius, lam=lam, K=K, min_modulus=best, argmin=argmin, points=points)


@dataclass
class GeomLawRow:
    t: int
    exact_avoid: float
    geometric_pred: float
    ratio: float
    degenerate: bool


@dataclass
class GeomLawTable:
    vertex: int
    start: int
    T: int
    pi_v: float
    R_v: float
    p_v: float
    rows: list


def geometric_law_check(
    c: Chain,
    pi: np.ndarray,
    v: int,
    T: int,
    t_grid: Sequence[int],
    u: int = 0,
) -> GeomLawTable:
    """Compare the exact probability of avoiding v over steps [T, t] with the
    geometric prediction (1 + p_v)^-(t - T), p_v = pi_v / R_v.

    The order-(T pi_v) correction factor is dropped; rows where the exact
    value is 0 or 1 are flagged degenerate and excluded from ratio use.
    """
    if not (0 <= v < c.n_states) or not (0 <= u < c.n_states):
        raise ValidationError("vertex out of range")
    rp = return_poly(c, v, T)
    R_v = return_sum(rp)
    p_v = float(pi[v]) / R_v
    exact = avoid_curve(c, point_mass(c.n_states, u), v, T, t_grid)
    rows = []
    for t in sorted(int(t) for t in t_grid):
        e = exact[t]
        pred = (1.0 + p_v) ** (-(t - T))
        degenerate = e <= 0.0 or e >= 1.0
        ratio = e / pred if pred > 0 else math.inf
        rows.append(GeomLawRow(t=t, exact_avoid=e, geometric_pred=pred, ratio=ratio, degenerate=degenerate))
    return GeomLawTable(vertex=v, start=u, T=T, pi_v=float(pi[v]), R_v=R_v, p_v=p_v, rows=rows)
