"""Closed-form degree-sequence machinery for D(n, p): expected in-degree
counts, the K0-K3 degree buckets, the special vertex class V*, the
stationary predictor with its correction term, and the cover-time formula.

All logarithms are natural.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .digraph import Digraph, is_strongly_connected
from .errors import ValidationError


def dbar(n: int, p: float, k: int) -> float:
    """Expected number of vertices with in-degree k:
    n * C(n-1, k) * p^k * (1-p)^(n-1-k).

    Evaluated through the saddle-point binomial pmf (log-domain internally),
    so huge binomial coefficients never overflow; relative error stays below
    1e-10 against a rational-arithmetic oracle."""
    if not (0 <= k <= n - 1):
        raise ValidationError(f"k must lie in [0, n-1], got {k}")
    return float(dbar_array(n, p, np.array([k]))[0])


def dbar_array(n: int, p: float, ks: np.ndarray) -> np.ndarray:
    ks = np.asarray(ks, dtype=np.int64)
    if ks.size == 0:
        return np.zeros(0)
    if (ks < 0).any() or (ks > n - 1).any():
        raise ValidationError("k out of range")
    if p <= 0.0:
        return np.where(ks == 0, float(n), 0.0)
    if p >= 1.0:
        return np.where(ks == n - 1, float(n), 0.0)
    from scipy.stats import binom

    return n * binom.pmf(ks, n - 1, p)


@dataclass
class BucketClaims:
    """Boolean evaluations of the asymptotic bucket claims (they hold with
    probability tending to 1 as n grows); reported, not asserted."""

    premise: bool              # d - 1 >= (ln n)^(-1/3)
    k1_empty: bool
    k2_min_ok: Optional[bool]  # min K2 >= sqrt(ln n); None when K2 empty
    k2_size: int


@dataclass
class DegreeProfile:
    """Expected-count profile of in-degrees up to Delta0 = 30 np, with the
    K0-K3 bucket partition of [1, Delta0].

    Tie rule: a degree satisfying several raw bucket conditions goes to the
    lowest-indexed bucket (K0 first), so the buckets always partition.
    """

    n: int
    p: float
    d: float
    np_value: float
    delta0: float
    k_star: int
    k_dagger: int
    gamma_d: float
    ks: np.ndarray          # 1 .. floor(Delta0)
    dbar_values: np.ndarray
    K0: np.ndarray
    K1: np.ndarray
    K2: np.ndarray
    K3: np.ndarray
    claims: BucketClaims

    def bucket_of(self, k: int) -> str:
        for name in ("K0", "K1", "K2", "K3"):
            if k in getattr(self, name):
                return name
        raise ValidationError(f"degree {k} outside [1, Delta0]")


def degree_profile(n: int, p: float) -> DegreeProfile:
    """Evaluate the profile for D(n, p) with np = d ln n, d > 1."""
    if n < 3:
        raise ValidationError("n too small for a degree profile")
    np_value = n * p
    d = np_value / math.log(n)
    if d <= 1:
        raise ValidationError(f"requires d = np/ln n > 1, got d = {d}")
    delta0 = 30.0 * np_value
    kmax = min(int(math.floor(delta0)), n - 1)
    ks = np.arange(1, kmax + 1, dtype=np.int64)
    vals = dbar_array(n, p, ks)
    ln_n = math.log(n)
    lo = ln_n ** -2.0
    in_k0 = vals <= lo
    in_k1 = (~in_k0) & (ks <= 15) & (vals >= lo) & (vals <= math.log(ln_n))
    in_k2 = (~in_k0) & (~in_k1) & (ks >= 16) & (vals >= lo) & (vals <= ln_n**2)
    in_k3 = ~(in_k0 | in_k1 | in_k2)
    K0, K1, K2, K3 = ks[in_k0], ks[in_k1], ks[in_k2], ks[in_k3]
    premise = (d - 1) >= ln_n ** (-1.0 / 3.0)
    claims = BucketClaims(
        premise=premise,
        k1_empty=K1.size == 0,
        k2_min_ok=bool(K2.min() >= math.sqrt(ln_n)) if K2.size else None,
        k2_size=int(K2.size),
    )
    return DegreeProfile(
        n=n,
        p=p,
        d=d,
        np_value=np_value,
        delta0=delta0,
        k_star=int(math.ceil((d - 1) * ln_n)),
        k_dagger=int(math.ceil(d * ln_n)),
        gamma_d=(d - 1) * math.log(d / (d - 1)),
        ks=ks,
        dbar_values=vals,
        K0=K0,
        K1=K1,
        K2=K2,
        K3=K3,
        claims=claims,
    )


def classify_buckets(profile: DegreeProfile) -> dict:
    """Bucket sets keyed K0..K3; membership per the literal set definitions
    with the lower-bucket tie rule."""
    return {"K0": profile.K0, "K1": profile.K1, "K2": profile.K2, "K3": profile.K3}


def v_star_count(g: Digraph, profile: DegreeProfile) -> int:
    """Number of vertices with in-degree exactly k* and out-degree exactly
    k-dagger."""
    indeg, outdeg = g.in_degrees(), g.out_degrees()
    return int(np.count_nonzero((indeg == profile.k_star) & (outdeg == profile.k_dagger)))


def v_star_floor(profile: DegreeProfile) -> float:
    """Lower concentration target n^gamma_d / (10 d ln n)."""
    return profile.n**profile.gamma_d / (10.0 * profile.d * math.log(profile.n))


def median_indegree_vertices(g: Digraph, count: int) -> np.ndarray:
    """The ``count`` vertices whose in-degree is closest to the median
    (ties broken by vertex id); deterministic selection pool for sampling
    typical vertices."""
    indeg = g.in_degrees()
    if count > g.n:
        raise ValidationError("count exceeds vertex count")
    med = float(np.median(indeg))
    order = np.lexsort((np.arange(g.n), np.abs(indeg - med)))
    return np.sort(order[:count])


def varsigma_star(g: Digraph, v: int) -> float:
    """max over in-neighbours w of v of indeg(w)/outdeg(w); an out-degree-0
    in-neighbour contributes +inf (surfaced, never clamped)."""
    if not (0 <= v < g.n):
        raise ValidationError("vertex out of range")
    nbrs = g.in_neighbors(v)
    if nbrs.size == 0:
        raise ValidationError(f"vertex {v} has no in-neighbours; correction term undefined")
    indeg, outdeg = g.in_degrees(), g.out_degrees()
    best = 0.0
    for w in nbrs:
        dw = outdeg[w]
        if dw == 0:
            return math.inf
        best = max(best, indeg[w] / dw)
    return float(best)


@dataclass
class PiPrediction:
    """Per-vertex stationary predictions: the corrected form
    (indeg(v) + varsigma*(v)) / m, the plain in-degree form indeg(v)/m, and
    the uniform 1/n form.  Raw predictions need not sum to 1; normalized
    variants divide by their sum for scale-fair finite-n comparison."""

    m_used: float
    fallback_m: bool
    varsigma: np.ndarray
    raw: np.ndarray
    normalized: np.ndarray
    indeg_raw: np.ndarray
    indeg_normalized: np.ndarray
    uniform: np.ndarray


def predict_pi(g: Digraph, p: Optional[float] = None) -> PiPrediction:
    """Stationary predictions for a strongly connected digraph.  ``m`` is
    n(n-1)p when the generation probability is supplied, else the actual
    edge count (recorded via ``fallback_m``)."""
    if not is_strongly_connected(g):
        raise ValidationError("prediction defined for strongly connected digraphs only")
    n = g.n
    if p is not None:
        m = n * (n - 1) * p
        fallback = False
    else:
        m = float(g.edge_count)
        fallback = True
    indeg = g.in_degrees().astype(float)
    sig = np.array([varsigma_star(g, v) for v in range(n)])
    raw = (indeg + sig) / m
    indeg_raw = indeg / m
    return PiPrediction(
        m_used=m,
        fallback_m=fallback,
        varsigma=sig,
        raw=raw,
        normalized=raw / raw.sum(),
        indeg_raw=indeg_raw,
        indeg_normalized=indeg_raw / indeg_raw.sum(),
        uniform=np.full(n, 1.0 / n),
    )


def cover_upper_bound_estimate(
    g: Digraph, t: float, T: int = 0, m: Optional[float] = None
) -> float:
    """Evaluate the tail-sum upper bound on the expected cover time,
    t + 1 + sum_v sum_{s >= t} Pr(avoid v over [T, s]), with the avoidance
    probabilities replaced by their geometric estimates (1 + p_v)^-(s - T),
    p_v = indeg(v)/m.  The inner tail sums in closed form:

        sum_{s >= t} (1+p)^-(s-T) = (1+p)^-(t-T) (1+p)/p.

    An estimator, not a certified bound: at finite n the geometric law and
    p_v are themselves asymptotic."""
    if m is None:
        m = float(g.edge_count)
    indeg = g.in_degrees().astype(float)
    if (indeg == 0).any():
        raise ValidationError("every vertex needs an in-neighbour for a finite bound")
    p = indeg / m
    tails = (1.0 + p) ** (-(t - T)) * (1.0 + p) / p
    return float(t + 1.0 + tails.sum())


def cover_coefficient(d: float) -> float:
    """d ln(d/(d-1)); limit 1 as d -> inf."""
    if d <= 1:
        raise ValidationError(f"cover-time coefficient requires d > 1, got {d}")
    if math.isinf(d):
        return 1.0
    return d * math.log(d / (d - 1.0))


def cover_formula(n: int, d: float) -> float:
    """Asymptotic cover-time value d ln(d/(d-1)) n ln n; n ln n at d = inf."""
    if n < 2:
        raise ValidationError("n must be >= 2")
    return cover_coefficient(d) * n * math.log(n)
