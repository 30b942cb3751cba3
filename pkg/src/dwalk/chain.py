"""Exact Markov-chain computations on a digraph: transition operator,
stationary distribution, mixing report, taboo (avoidance) probabilities,
hitting times, and the two-vertex supernode contraction.

Probability vectors are plain 1-D float64 arrays summing to 1.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence, Union

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .digraph import Digraph, _reaches_all
from .errors import ComputeError, ValidationError
from .seeds import derive_rng

ROW_SUM_TOL = 1e-12


class Chain:
    """Row-stochastic transition operator stored as sparse CSR.

    ``origin`` is ``("plain",)`` for a walk chain built from a digraph, or
    ``("contracted", v, w)`` after a supernode contraction.
    """

    __slots__ = ("n_states", "P", "origin", "_PT")

    def __init__(self, matrix: sp.csr_matrix, origin=("plain",), validate: bool = True):
        P = sp.csr_matrix(matrix)
        P.eliminate_zeros()
        self.n_states = P.shape[0]
        self.P = P
        self.origin = tuple(origin)
        self._PT = None
        if validate:
            if P.shape[0] != P.shape[1]:
                raise ValidationError("transition matrix must be square")
            if P.nnz and (P.data <= 0).any():
                raise ValidationError("transition probabilities must be positive")
            rows = np.asarray(P.sum(axis=1)).ravel()
            bad = np.abs(rows - 1.0) > ROW_SUM_TOL
            if bad.any():
                u = int(np.argmax(bad))
                raise ValidationError(f"row {u} sums to {rows[u]!r}, not 1")

    def row(self, u: int) -> tuple[np.ndarray, np.ndarray]:
        sl = slice(self.P.indptr[u], self.P.indptr[u + 1])
        return self.P.indices[sl], self.P.data[sl]

    def transpose_op(self) -> sp.csr_matrix:
        if self._PT is None:
            self._PT = self.P.T.tocsr()
        return self._PT

    def is_strongly_connected(self) -> bool:
        """Strong connectivity of the chain's support graph."""
        n = self.n_states
        if n == 1:
            return True
        P = self.P
        PT = self.transpose_op()
        return _reaches_all(n, P.indptr, P.indices) and _reaches_all(n, PT.indptr, PT.indices)

    def __repr__(self):
        return f"Chain(n_states={self.n_states}, origin={self.origin})"


def point_mass(n: int, v: int) -> np.ndarray:
    d = np.zeros(n)
    d[v] = 1.0
    return d


def uniform_dist(n: int) -> np.ndarray:
    return np.full(n, 1.0 / n)


def check_dist(d: np.ndarray, tol: float = ROW_SUM_TOL) -> np.ndarray:
    d = np.asarray(d, dtype=float)
    if d.ndim != 1 or (d < 0).any() or abs(d.sum() - 1.0) > tol:
        raise ValidationError("not a probability vector")
    return d


def chain_from(g: Digraph) -> Chain:
    """Simple-random-walk chain: row u uniform over out-neighbours of u."""
    outdeg = g.out_degrees()
    sinks = np.nonzero(outdeg == 0)[0]
    if sinks.size:
        raise ValidationError(f"walk undefined at sink vertex {int(sinks[0])}")
    data = np.repeat(1.0 / outdeg, outdeg)
    P = sp.csr_matrix((data, g.out_indices.copy(), g.out_indptr.copy()), shape=(g.n, g.n))
    return Chain(P, origin=("plain",))


def step(c: Chain, d: np.ndarray) -> np.ndarray:
    """One application of the transition operator to a distribution."""
    d = np.asarray(d, dtype=float)
    if d.shape != (c.n_states,):
        raise ValidationError(f"distribution has length {d.shape}, chain has {c.n_states} states")
    return c.transpose_op() @ d


def stationary(c: Chain, tol: float = 1e-12, max_iters: int = 200_000) -> np.ndarray:
    """Stationary distribution by power iteration from the uniform start.

    Each iterate is averaged with its one-step image (damping on the iterate
    sequence only, the chain itself is untouched), which removes periodicity
    while keeping the same fixed point.  Returns pi with L1 residual
    ||pi P - pi||_1 <= tol.
    """
    if not c.is_strongly_connected():
        raise ValidationError("chain is not strongly connected; stationary distribution not unique")
    PT = c.transpose_op()
    x = uniform_dist(c.n_states)
    for _ in range(max_iters):
        y = PT @ x
        res = np.abs(y - x).sum()
        if res <= tol:
            return x
        x = 0.5 * (x + y)
        x /= x.sum()
    raise ComputeError(f"stationary iteration did not reach residual {tol} in {max_iters} iterations (last residual {res})")


def stationary_dense(c: Chain) -> np.ndarray:
    """Direct dense solve of pi P = pi, sum(pi) = 1; cross-check oracle for
    small chains (n <= ~2000)."""
    n = c.n_states
    A = np.asarray((c.P.T - sp.identity(n, format="csr")).todense())
    A[-1, :] = 1.0
    b = np.zeros(n)
    b[-1] = 1.0
    return np.linalg.solve(A, b)


@dataclass
class MixReport:
    """Mixing measurement: T is the first step where the worst entrywise
    deviation from pi over the source set drops to the threshold."""

    T: int
    threshold: float
    d_trace: np.ndarray       # d_trace[t-1] = max_u max_x |P_u^(t)(x) - pi_x|
    dbar_trace: np.ndarray    # dbar_trace[t-1] = max pairwise TV distance
    sampled: bool
    sources: np.ndarray
    step_cap: int


class MixingCapError(ComputeError):
    def __init__(self, msg, d_trace, dbar_trace):
        super().__init__(msg)
        self.d_trace = np.asarray(d_trace)
        self.dbar_trace = np.asarray(dbar_trace)


def default_mixing_threshold(n: int) -> float:
    return min(n ** -3.0, 1e-9)


def _max_pairwise_tv(M: np.ndarray, s: np.ndarray) -> float:
    """Exact max over ordered row pairs of TV(M[i], M[j]) = 0.5 * L1.

    Two exact strategies, chosen by cost estimate: while the rows are still
    sparse (early steps), the min-overlap matrix is accumulated column by
    column over common supports, using TV = 1 - sum_x min; once the rows
    densify they also concentrate, and a triangle-inequality prune against
    the center (TV(i, j) <= s_i + s_j) examines only a few pairs.
    """
    k = M.shape[0]
    if k < 2:
        return 0.0
    col_nnz = np.count_nonzero(M, axis=0).astype(float)
    if float((col_nnz**2).sum()) <= 8e8 and k * k * 8 < 2e9:
        return _max_pairwise_tv_sparse(M)
    return _max_pairwise_tv_pruned(M, s)


def _max_pairwise_tv_sparse(M: np.ndarray) -> float:
    k, n = M.shape
    overlap = np.zeros((k, k))
    for x in range(n):
        col = M[:, x]
        ids = np.nonzero(col)[0]
        if ids.size < 2:
            continue
        vals = col[ids]
        overlap[np.ix_(ids, ids)] += np.minimum.outer(vals, vals)
    np.fill_diagonal(overlap, np.inf)
    return float(1.0 - overlap.min())


def _max_pairwise_tv_pruned(M: np.ndarray, s: np.ndarray) -> float:
    k = M.shape[0]
    order = np.argsort(-s)
    best = 0.5 * np.abs(M[order[0]] - M[order[1]]).sum()
    for ii in range(k - 1):
        i = order[ii]
        rest = order[ii + 1 :]
        if s[i] + s[rest[0]] <= best:
            break
        cand = rest[s[i] + s[rest] > best]
        if cand.size == 0:
            continue
        tv = 0.5 * np.abs(M[cand] - M[i]).sum(axis=1).max()
        if tv > best:
            best = float(tv)
    return float(best)


def mixing(
    c: Chain,
    pi: np.ndarray,
    threshold: Optional[float] = None,
    sample_pairs: Union[str, int] = "all",
    seed: int = 0,
    step_cap: Optional[int] = None,
) -> MixReport:
    """Propagate point masses from every source vertex (or a seeded sample)
    and record the entrywise deviation trace d(t) and the pairwise variation
    trace dbar(t) until d(T) <= threshold.
    """
    n = c.n_states
    pi = check_dist(pi)
    if threshold is None:
        threshold = default_mixing_threshold(n)
    if threshold <= 0:
        raise ValidationError("mixing threshold must be positive")
    if step_cap is None:
        step_cap = max(200, int(20 * math.log(max(n, 3)) ** 2))
    if sample_pairs == "all" or (isinstance(sample_pairs, int) and sample_pairs >= n):
        sources = np.arange(n, dtype=np.int64)
        sampled = False
    else:
        k = int(sample_pairs)
        if k < 2:
            raise ValidationError("need at least 2 source vertices")
        sources = np.sort(derive_rng(seed).choice(n, size=k, replace=False))
        sampled = True
    PT = c.transpose_op()
    M = np.zeros((len(sources), n))
    M[np.arange(len(sources)), sources] = 1.0
    d_trace, dbar_trace = [], []
    for t in range(1, step_cap + 1):
        M = (PT @ M.T).T
        dev = np.abs(M - pi)
        d_t = float(dev.max())
        s = 0.5 * dev.sum(axis=1)
        dbar_t = _max_pairwise_tv(M, s)
        d_trace.append(d_t)
        dbar_trace.append(dbar_t)
        if d_t <= threshold:
            return MixReport(t, threshold, np.array(d_trace), np.array(dbar_trace), sampled, sources, step_cap)
    raise MixingCapError(
        f"threshold {threshold} not reached within {step_cap} steps (last d(t) = {d_trace[-1]})",
        d_trace,
        dbar_trace,
    )


def avoid_prob(
    c: Chain,
    start: np.ndarray,
    taboo: Union[int, Sequence[int]],
    from_step: int,
    to_step: int,
) -> float:
    """Exact probability that the walk started from ``start`` avoids the
    taboo vertex (or every vertex of a taboo set) at every step in
    [from_step, to_step].  Computed by free propagation to from_step, then
    substochastic propagation with the taboo coordinates zeroed.

    An empty interval (to_step < from_step) has avoidance probability 1.
    """
    start = check_dist(start)
    if start.shape != (c.n_states,):
        raise ValidationError("start distribution has wrong length")
    taboo_idx = np.atleast_1d(np.asarray(taboo, dtype=np.int64))
    if taboo_idx.min() < 0 or taboo_idx.max() >= c.n_states:
        raise ValidationError("taboo vertex out of range")
    if from_step < 0:
        raise ValidationError("from_step must be nonnegative")
    if to_step < from_step:
        return 1.0
    PT = c.transpose_op()
    y = start.copy()
    for _ in range(from_step):
        y = PT @ y
    y[taboo_idx] = 0.0
    for _ in range(from_step, to_step):
        y = PT @ y
        y[taboo_idx] = 0.0
    return float(y.sum())


def avoid_curve(
    c: Chain,
    start: np.ndarray,
    taboo: Union[int, Sequence[int]],
    from_step: int,
    at_steps: Sequence[int],
) -> dict[int, float]:
    """avoid_prob evaluated at several right endpoints in one propagation."""
    at_steps = sorted(int(t) for t in at_steps)
    if not at_steps or at_steps[0] < from_step:
        raise ValidationError("evaluation steps must be >= from_step")
    start = check_dist(start)
    taboo_idx = np.atleast_1d(np.asarray(taboo, dtype=np.int64))
    PT = c.transpose_op()
    y = start.copy()
    for _ in range(from_step):
        y = PT @ y
    y[taboo_idx] = 0.0
    out = {}
    t = from_step
    if at_steps[0] == from_step:
        out[from_step] = float(y.sum())
    for target in at_steps:
        while t < target:
            y = PT @ y
            y[taboo_idx] = 0.0
            t += 1
        out[target] = float(y.sum())
    return out


@dataclass
class HittingTimes:
    """Expected steps to reach the target from each state.  ``finite`` flags
    states from which the target is hit with probability one; ``expected``
    carries +inf elsewhere for convenience, the flag is authoritative."""

    target: int
    expected: np.ndarray
    finite: np.ndarray
    residual: float


def hitting_time(c: Chain, target: int) -> HittingTimes:
    """Solve h(x) = 1 + sum_y P(x, y) h(y) with h(target) = 0 by sparse
    linear solve; states that cannot reach the target almost surely are
    flagged infinite rather than erroring."""
    n = c.n_states
    if not (0 <= target < n):
        raise ValidationError("target out of range")
    P = c.P
    # Kill the walk at the target: states that cannot reach it, and states
    # that can escape to such a state, have infinite expectation.
    mask_rows = np.ones(n, dtype=bool)
    mask_rows[target] = False
    Q = P.multiply(mask_rows[:, None]).tocsr()  # target made absorbing
    Q.eliminate_zeros()
    QT = Q.T.tocsr()
    can_reach = _reachable_set(QT, target)
    cannot = np.nonzero(~can_reach)[0]
    doomed = np.zeros(n, dtype=bool)
    if cannot.size:
        doomed = _reachable_from_any(Q, cannot)
    finite = ~doomed
    finite[target] = True
    expected = np.full(n, np.inf)
    expected[target] = 0.0
    idx = np.nonzero(finite & mask_rows)[0]
    residual = 0.0
    if idx.size:
        A = sp.identity(len(idx), format="csr") - Q[idx][:, idx]
        b = np.ones(len(idx))
        h = spla.spsolve(A.tocsc(), b)
        r = np.abs(A @ h - b).max()
        if r > 1e-9:
            h = h + spla.spsolve(A.tocsc(), b - A @ h)
            r = np.abs(A @ h - b).max()
        if r > 1e-9:
            raise ComputeError(f"hitting-time solve residual {r} exceeds 1e-9")
        residual = float(r)
        expected[idx] = h
    return HittingTimes(target, expected, finite, residual)


def _reachable_set(adjT_or_adj: sp.csr_matrix, source: int) -> np.ndarray:
    n = adjT_or_adj.shape[0]
    visited = np.zeros(n, dtype=bool)
    visited[source] = True
    frontier = [source]
    indptr, indices = adjT_or_adj.indptr, adjT_or_adj.indices
    while frontier:
        nxt = []
        for x in frontier:
            for y in indices[indptr[x] : indptr[x + 1]]:
                if not visited[y]:
                    visited[y] = True
                    nxt.append(int(y))
        frontier = nxt
    return visited


def _reachable_from_any(adj: sp.csr_matrix, sources: np.ndarray) -> np.ndarray:
    """States that can reach any of ``sources`` (reverse reachability)."""
    adjT = adj.T.tocsr()
    n = adj.shape[0]
    visited = np.zeros(n, dtype=bool)
    visited[sources] = True
    frontier = list(int(s) for s in sources)
    indptr, indices = adjT.indptr, adjT.indices
    while frontier:
        nxt = []
        for x in frontier:
            for y in indices[indptr[x] : indptr[x + 1]]:
                if not visited[y]:
                    visited[y] = True
                    nxt.append(int(y))
        frontier = nxt
    return visited


def contract(c: Chain, v: int, w: int) -> Chain:
    """Merge v and w into a supernode: the merged row is the average of the
    two old rows, incoming mass is summed, and mass between v and w folds
    into the supernode self-loop.  The supernode takes min(v, w)'s slot and
    max(v, w)'s slot is removed.
    """
    if c.origin[0] != "plain":
        raise ValidationError("contract expects a plain walk chain")
    n = c.n_states
    if not (0 <= v < n and 0 <= w < n) or v == w:
        raise ValidationError("contract needs two distinct valid vertices")
    a, b = (v, w) if v < w else (w, v)
    coo = c.P.tocoo()
    rows = coo.row.astype(np.int64)
    cols = coo.col.astype(np.int64)
    data = coo.data.copy()
    merged_row = (rows == v) | (rows == w)
    data[merged_row] *= 0.5
    rows = np.where(merged_row, a, rows)
    cols = np.where((cols == v) | (cols == w), a, cols)
    rows = rows - (rows > b)
    cols = cols - (cols > b)
    M = sp.coo_matrix((data, (rows, cols)), shape=(n - 1, n - 1))
    M.sum_duplicates()
    return Chain(M.tocsr(), origin=("contracted", v, w))


def contracted_index(n: int, v: int, w: int, x: int) -> int:
    """Index of original state x in the chain contract(c, v, w); v and w both
    map to the supernode slot."""
    a, b = (v, w) if v < w else (w, v)
    if x in (v, w):
        return a
    return x - (x > b)
