"""Independent oracles the tests check the library against.  Everything here
deliberately uses a different method than the code under test: dense matrix
powers, visited-subset dynamic programming, exact rational arithmetic."""

from fractions import Fraction

import numpy as np


def transition_dense(g) -> np.ndarray:
    P = np.zeros((g.n, g.n))
    for u in range(g.n):
        nb = g.out_neighbors(u)
        if nb.size:
            P[u, nb] = 1.0 / nb.size
    return P


def strongly_connected_by_matrix_power(g) -> bool:
    """Boolean reachability closure via repeated squaring of (I + A)."""
    n = g.n
    A = np.eye(n, dtype=bool)
    for u in range(n):
        A[u, g.out_neighbors(u)] = True
    R = A
    k = 1
    while k < n:
        R = R @ R
        k *= 2
    return bool(R.all())


def exact_cover_time(g, start: int) -> float:
    """Expected cover time by dynamic programming over (vertex, visited-set)
    states, solving one linear system per visited set in decreasing order of
    coverage.  Exponential in n; intended for n <= ~12."""
    n = g.n
    P = transition_dense(g)
    full = (1 << n) - 1
    E = {}  # (S, v) -> expected remaining time
    subsets = sorted(range(1 << n), key=lambda s: -bin(s).count("1"))
    for S in subsets:
        members = [v for v in range(n) if S >> v & 1]
        if S == full:
            for v in members:
                E[(S, v)] = 0.0
            continue
        # E(v,S) = 1 + sum_w P(v,w) E(w, S u {w}); couple the same-S unknowns
        idx = {v: i for i, v in enumerate(members)}
        k = len(members)
        A = np.eye(k)
        b = np.ones(k)
        for v in members:
            i = idx[v]
            for w in range(n):
                if P[v, w] == 0.0:
                    continue
                S2 = S | (1 << w)
                if S2 == S:
                    A[i, idx[w]] -= P[v, w]
                else:
                    b[i] += P[v, w] * E[(S2, w)]
        sol = np.linalg.solve(A, b)
        for v in members:
            E[(S, v)] = float(sol[idx[v]])
    return E[(1 << start, start)]


def hitting_time_series(g, start: int, target: int, mass_tol: float = 1e-10, cap: int = 200000):
    """sum_t t * Pr(first hit at t) by substochastic powers, truncated when
    the surviving mass drops below mass_tol.  Returns (series, leftover_mass,
    steps)."""
    P = transition_dense(g)
    Q = P.copy()
    col = P[:, target].copy()
    Q[:, target] = 0.0
    y = np.zeros(g.n)
    y[start] = 1.0
    total = 0.0
    for t in range(1, cap + 1):
        hit = float(y @ col)  # mass entering target at step t
        total += t * hit
        y = y @ Q
        if y.sum() < mass_tol:
            break
    return total, float(y.sum()), t


def binom_pmf_fraction(n: int, k: int, p: Fraction) -> Fraction:
    """Exact binomial pmf with rational arithmetic."""
    from math import comb

    return Fraction(comb(n, k)) * p**k * (1 - p) ** (n - k)
