"""Layered breadth-first in-/out-trees and the path-weight estimator Z(x, y)
for multi-step transition probabilities, in a lower-bound configuration
(depth ell both sides, disjoint trees) and an upper-bound configuration
(deep out-tree, shallow in-tree, exact walk weights on the out side).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .chain import Chain, chain_from, point_mass, step
from .digraph import Digraph
from .errors import ValidationError


@dataclass
class LayeredTree:
    """BFS tree with level sets, parent links toward the root, and per-vertex
    path weights: products of reciprocal host out-degrees along the unique
    tree path (excluding the leaf vertex itself for out-trees, excluding the
    root for in-trees).

    succeeded is True when every vertex in levels 0 .. depth-1 acquired at
    least one child.
    """

    root: int
    direction: str               # "in" | "out"
    depth: int
    levels: list                 # list of int lists, ascending ids
    weights: list                # parallel float lists
    parent: dict                 # tree vertex -> its neighbour toward the root
    succeeded: bool

    def vertex_set(self) -> set:
        out = set()
        for lv in self.levels:
            out.update(lv)
        return out

    def level_weight(self, i: int) -> float:
        return float(sum(self.weights[i])) if i < len(self.levels) else 0.0

    def weight_of(self) -> dict:
        w = {}
        for lv, ws in zip(self.levels, self.weights):
            for v, x in zip(lv, ws):
                w[v] = x
        return w


def build_in_tree(g: Digraph, y: int, depth: int, avoid=frozenset()) -> LayeredTree:
    """Grow levels Y_0 = {y}, Y_1, ... by in-neighbours; level vertices are
    processed ascending by id and a new vertex attaches to the first
    processed out-neighbour; vertices already in the tree or in ``avoid``
    are skipped.  Weight of v in Y_i: product of 1/outdeg over the path
    v -> ... -> y excluding y."""
    return _build_tree(g, y, depth, avoid, direction="in")


def build_out_tree(g: Digraph, x: int, depth: int, avoid=frozenset()) -> LayeredTree:
    """Symmetric out-neighbour construction; a vertex reached from several
    level-i vertices keeps the edge from the smallest one.  Weight of u in
    X_i: product of 1/outdeg over the path x -> ... -> u excluding u."""
    return _build_tree(g, x, depth, avoid, direction="out")


def _build_tree(g: Digraph, root: int, depth: int, avoid, direction: str) -> LayeredTree:
    if not (0 <= root < g.n):
        raise ValidationError("root out of range")
    if depth < 0:
        raise ValidationError("depth must be >= 0")
    if root in avoid:
        raise ValidationError("root may not be in the avoid set")
    outdeg = g.out_degrees()
    neighbors = g.in_neighbors if direction == "in" else g.out_neighbors
    in_tree = {root}
    levels = [[root]]
    weights = [[1.0]]
    parent = {}
    children = {root: 0}
    succeeded = True
    for i in range(depth):
        cur = levels[i]
        cur_w = weights[i]
        nxt = []
        nxt_w = []
        for v, wv in zip(cur, cur_w):
            got = 0
            for u in neighbors(v):
                u = int(u)
                if u in in_tree or u in avoid:
                    continue
                in_tree.add(u)
                parent[u] = v
                children[u] = 0
                if direction == "in":
                    # path u -> v -> ... -> root, product excludes the root
                    nxt_w.append(wv / outdeg[u])
                else:
                    # path root -> ... -> v -> u, product excludes u
                    nxt_w.append(wv / outdeg[v])
                nxt.append(u)
                got += 1
            children[v] = got
            if got == 0:
                succeeded = False
        order = np.argsort(nxt)
        levels.append([nxt[j] for j in order])
        weights.append([nxt_w[j] for j in order])
    return LayeredTree(
        root=root,
        direction=direction,
        depth=depth,
        levels=levels,
        weights=weights,
        parent=parent,
        succeeded=succeeded,
    )


def default_low_depth(n: int, np_value: float) -> int:
    """floor((2/3) log_{np} n); log base np as ln n / ln np, np > 1 required."""
    if np_value <= 1:
        raise ValidationError("np_value must exceed 1 for a log base")
    return int(math.floor((2.0 / 3.0) * math.log(n) / math.log(np_value)))


@dataclass
class ZLowerResult:
    value: float
    ell: int
    in_tree_ok: bool
    out_tree_ok: bool


def z_lower(g: Digraph, x: int, y: int, ell: Optional[int] = None, np_value: Optional[float] = None) -> float:
    """Certified lower bound on the (2 ell + 1)-step transition probability
    from x to y: the in-tree to y is grown first, the out-tree from x avoids
    all of it, and Z sums alpha * beta * 1_{uv} / outdeg(u) over boundary
    pairs.  Returns 0 when either construction fails."""
    return z_lower_report(g, x, y, ell=ell, np_value=np_value).value


def z_lower_report(
    g: Digraph, x: int, y: int, ell: Optional[int] = None, np_value: Optional[float] = None
) -> ZLowerResult:
    if ell is None:
        if np_value is None:
            np_value = g.edge_count / g.n
        ell = default_low_depth(g.n, np_value)
    if ell < 0:
        raise ValidationError("ell must be >= 0")
    t_in = build_in_tree(g, y, ell)
    avoid = t_in.vertex_set()
    avoid.discard(x)  # x serves as out-root even when it sits in the in-tree
    t_out = build_out_tree(g, x, ell, avoid=avoid)
    if not (t_in.succeeded and t_out.succeeded):
        return ZLowerResult(0.0, ell, t_in.succeeded, t_out.succeeded)
    beta = {v: w for v, w in zip(t_in.levels[ell], t_in.weights[ell])}
    # each (u, v) pair identifies a distinct walk of length 2 ell + 1 (its
    # position at steps ell and ell + 1), so the sum never double-counts
    outdeg = g.out_degrees()
    z = 0.0
    for u, alpha in zip(t_out.levels[ell], t_out.weights[ell]):
        du = outdeg[u]
        if du == 0:
            continue
        acc = 0.0
        for v in g.out_neighbors(u):
            bw = beta.get(int(v))
            if bw is not None:
                acc += bw
        z += alpha * acc / du
    return ZLowerResult(float(z), ell, True, True)


@dataclass
class UpperDepths:
    eta: float
    Lam: float
    ell0: int
    ell1: int
    ell2: int


def upper_depths(n: int, np_value: float, eta: float) -> UpperDepths:
    """ell1 = round((1 - 10 eta) Lam), ell2 = ceil(11 eta Lam), ell0 their
    sum, Lam = log_{np} n."""
    if not (0.0 < eta <= 1.0 / 250.0):
        raise ValidationError("eta must lie in (0, 1/250]")
    if np_value <= 1:
        raise ValidationError("np_value must exceed 1 for a log base")
    Lam = math.log(n) / math.log(np_value)
    ell1 = int(round((1.0 - 10.0 * eta) * Lam))
    ell2 = int(math.ceil(11.0 * eta * Lam))
    if ell1 < 1 or ell2 < 1:
        raise ValidationError(f"n too small for eta: depths collapse (ell1={ell1}, ell2={ell2})")
    return UpperDepths(eta=eta, Lam=Lam, ell0=ell1 + ell2, ell1=ell1, ell2=ell2)


@dataclass
class ZUpperReport:
    z_up: float
    exact: float
    remainder: float
    depths: UpperDepths
    alpha_sum: float
    in_tree_ok: bool
    out_tree_ok: bool


def z_upper_report(
    g: Digraph,
    x: int,
    y: int,
    eta: float,
    np_value: Optional[float] = None,
    chain: Optional[Chain] = None,
) -> ZUpperReport:
    """Tree-structured share of the (ell0 + 1)-step transition probability.

    The out-tree from x is grown first (depth ell1, no avoid set) and the
    in-tree to y after it (shallow depth ell2); the out-side weight of u is
    the exact walk probability of being at u after ell1 steps, so Z_up sums
    walk measure of: reach u in X at step ell1, cross an edge into the
    in-tree boundary outside X, then follow tree edges to y.  The difference
    exact - Z_up is the walk measure of every other route and is reported as
    a single remainder.
    """
    if np_value is None:
        np_value = g.edge_count / g.n
    d = upper_depths(g.n, np_value, eta)
    if chain is None:
        chain = chain_from(g)
    t_out = build_out_tree(g, x, d.ell1)
    t_in = build_in_tree(g, y, d.ell2)
    X = t_out.vertex_set()
    # alpha: exact ell1-step occupation probabilities
    q = point_mass(g.n, x)
    for _ in range(d.ell1):
        q = step(chain, q)
    alpha_sum = float(sum(q[u] for u in X))
    boundary = {v: w for v, w in zip(t_in.levels[d.ell2], t_in.weights[d.ell2]) if v not in X}
    outdeg = g.out_degrees()
    z = 0.0
    for u in X:
        au = q[u]
        if au == 0.0:
            continue
        du = outdeg[u]
        acc = 0.0
        for v in g.out_neighbors(u):
            bw = boundary.get(int(v))
            if bw is not None:
                acc += bw
        if acc:
            z += au * acc / du
    # exact (ell0 + 1)-step probability
    p = point_mass(g.n, x)
    for _ in range(d.ell0 + 1):
        p = step(chain, p)
    exact = float(p[y])
    return ZUpperReport(
        z_up=float(z),
        exact=exact,
        remainder=exact - float(z),
        depths=d,
        alpha_sum=alpha_sum,
        in_tree_ok=t_in.succeeded,
        out_tree_ok=t_out.succeeded,
    )
