import math

import numpy as np
import pytest

from dwalk import (
    Digraph,
    GenParams,
    ValidationError,
    complete_digraph,
    degrees,
    directed_cycle,
    from_edge_text,
    generate,
    is_strongly_connected,
    small_vertices,
    structural_report,
    to_edge_text,
    weak_distance,
)
from dwalk.seeds import derive_rng

from oracles import strongly_connected_by_matrix_power


class TestGenerate:
    def test_p_one_is_complete(self):
        g = generate(GenParams(n=3, p=1.0, seed=123))
        assert g.edge_count == 6
        indeg, outdeg = degrees(g)
        assert (indeg == 2).all() and (outdeg == 2).all()

    def test_p_zero_is_empty(self):
        g = generate(GenParams(n=5, p=0.0, seed=7))
        assert g.edge_count == 0

    def test_deterministic_per_seed(self):
        a = generate(GenParams(n=40, p=0.1, seed=99))
        b = generate(GenParams(n=40, p=0.1, seed=99))
        assert a == b
        c = generate(GenParams(n=40, p=0.1, seed=100))
        assert a != c

    def test_methods_deterministic(self):
        a = generate(GenParams(n=30, p=0.2, seed=5, method="naive"))
        b = generate(GenParams(n=30, p=0.2, seed=5, method="naive"))
        assert a == b

    def test_edge_count_moments(self):
        # 500 seeds at n=200, p=0.05: sample mean within 3 sigma of n(n-1)p
        n, p, runs = 200, 0.05, 500
        mean_target = n * (n - 1) * p
        sigma = math.sqrt(n * (n - 1) * p * (1 - p))
        counts = [generate(GenParams(n=n, p=p, seed=s)).edge_count for s in range(runs)]
        assert abs(np.mean(counts) - mean_target) <= 3 * sigma

    def test_generator_equivalence(self):
        # per-position edge frequency of both methods matches p within 4
        # standard errors, and the two methods match each other
        n, p, runs = 8, 0.3, 10_000
        npos = n * (n - 1)
        freq = {}
        for method in ("naive", "geometric-jump"):
            hits = np.zeros(npos)
            for s in range(runs):
                g = generate(GenParams(n=n, p=p, seed=s, method=method))
                e = g.edges()
                pos = e[:, 0] * (n - 1) + e[:, 1] - (e[:, 1] > e[:, 0])
                hits[pos] += 1
            freq[method] = hits / runs
        se = math.sqrt(p * (1 - p) / runs)
        for method in freq:
            assert np.abs(freq[method] - p).max() <= 4 * se
        assert np.abs(freq["naive"] - freq["geometric-jump"]).max() <= 4 * se * math.sqrt(2)

    def test_invalid_params(self):
        with pytest.raises(ValidationError):
            GenParams(n=0, p=0.5, seed=1)
        with pytest.raises(ValidationError):
            GenParams(n=5, p=1.5, seed=1)
        with pytest.raises(ValidationError):
            GenParams(n=5, p=0.5, seed=1, method="bogus")


class TestStorage:
    def test_forward_reverse_agree(self):
        g = generate(GenParams(n=60, p=0.15, seed=11))
        fwd = {(int(u), int(v)) for u, v in g.edges()}
        rev = set()
        for v in range(g.n):
            for u in g.in_neighbors(v):
                rev.add((int(u), int(v)))
        assert fwd == rev

    def test_adjacency_sorted(self):
        g = generate(GenParams(n=60, p=0.15, seed=12))
        for u in range(g.n):
            nb = g.out_neighbors(u)
            assert (np.diff(nb) > 0).all() if nb.size > 1 else True

    def test_roundtrip_identity(self):
        for seed in (1, 2, 3):
            g = generate(GenParams(n=25, p=0.2, seed=seed))
            assert from_edge_text(to_edge_text(g)) == g

    def test_rejects_self_loop_and_duplicate(self):
        with pytest.raises(ValidationError):
            Digraph.from_edges(3, [(0, 0)])
        with pytest.raises(ValidationError):
            Digraph.from_edges(3, [(0, 1), (0, 1)])

    def test_parse_errors_name_lines(self):
        with pytest.raises(ValidationError, match="line 1"):
            from_edge_text("oops\n")
        with pytest.raises(ValidationError, match="m=2"):
            from_edge_text("3 2\n0 1\n")


class TestDegrees:
    def test_cycle(self):
        indeg, outdeg = degrees(directed_cycle(3))
        assert (indeg == 1).all() and (outdeg == 1).all()

    def test_chords(self, chords3):
        indeg, outdeg = degrees(chords3)
        assert outdeg.tolist() == [1, 2, 1]
        assert indeg.tolist() == [2, 1, 1]

    def test_complete(self):
        indeg, outdeg = degrees(complete_digraph(4))
        assert (indeg == 3).all() and (outdeg == 3).all()


class TestStronglyConnected:
    def test_cycle_true(self):
        assert is_strongly_connected(directed_cycle(6))

    def test_path_false(self):
        assert not is_strongly_connected(Digraph.from_edges(3, [(0, 1), (1, 2)]))

    def test_unreachable_vertex(self):
        assert not is_strongly_connected(Digraph.from_edges(3, [(0, 1), (1, 0), (2, 0)]))

    def test_agrees_with_matrix_power_oracle(self):
        rng = derive_rng(2024)
        agree = 0
        for _ in range(10_000):
            g = generate(GenParams(n=6, p=float(rng.uniform(0.05, 0.6)), seed=int(rng.integers(2**63))))
            assert is_strongly_connected(g) == strongly_connected_by_matrix_power(g)
            agree += 1
        assert agree == 10_000


class TestSmallVertices:
    def test_complete_none(self):
        assert small_vertices(complete_digraph(4), 4.0).size == 0

    def test_threshold_one(self):
        g = Digraph.from_edges(3, [(0, 1), (1, 0), (2, 0)])
        assert small_vertices(g, 20.0).tolist() == [0, 1, 2]

    def test_threshold_below_one(self):
        g = directed_cycle(5)
        assert small_vertices(g, 10.0).size == 0  # threshold 0.5, all degrees 1


class TestWeakDistance:
    def test_same_vertex(self):
        assert weak_distance(directed_cycle(4), 2, 2) == 0

    def test_against_direction(self):
        g = Digraph.from_edges(3, [(0, 1), (1, 2)])
        assert weak_distance(g, 2, 0) == 2

    def test_unreachable(self):
        g = Digraph.from_edges(4, [(0, 1), (1, 0), (2, 3), (3, 2)])
        assert weak_distance(g, 0, 3) is None


class TestStructuralReport:
    def test_complete_all_pass(self):
        rep = structural_report(complete_digraph(10), 10.0)
        assert rep.small_count == 0
        assert rep.all_ok

    def test_small_pair_witness(self):
        # u has in-degree 0 and w out-degree 0, adjacent; the formula value
        # of ell10 is < 1 at any feasible n, so the failure path is driven
        # through an explicit threshold
        edges = [(0, 1)]
        edges += [(2 + i, 2 + (i + 1) % 10) for i in range(10)]
        edges += [(2, 0), (1, 3)]
        g = Digraph.from_edges(12, edges)
        rep = structural_report(g, 20.0, ell10=2.0)
        assert rep.pair_check_ok is False
        u, w, dist = rep.pair_witness
        small = set(rep.small.tolist())
        assert u in small and w in small and dist < 2.0

    def test_cycle_witness(self):
        # small vertex 0 adjacent to a weak triangle
        edges = [(0, 1), (1, 2), (2, 3), (3, 1)]
        g = Digraph.from_edges(4, edges)
        rep = structural_report(g, 21.0, ell10=3.0)
        assert rep.cycle_check_ok is False
        s, cyc, dist = rep.cycle_witness
        assert len(cyc) == 3

    def test_not_applicable_below_threshold(self):
        rep = structural_report(complete_digraph(4), 4.0)
        assert rep.ell10 is None
        assert rep.pair_check_ok is None and rep.cycle_check_ok is None

    def test_degree_bound(self):
        rep = structural_report(complete_digraph(10), 2.0)
        assert rep.delta0 == 60.0
        assert rep.degree_check_ok  # max degree 9 <= 60

    def test_big_random_ensemble_passes(self, big_ensemble):
        # D(n = 1e5, d = 3): the separation and degree checks should hold in
        # at least 95% of 20 seeds (they hold vacuously: no small vertices)
        _, rows = big_ensemble
        ok = sum(1 for r in rows if r["struct_all_ok"])
        assert ok >= 19
        assert all(r["small_count"] == 0 for r in rows)


@pytest.mark.xfail(
    strict=False,
    reason="the literal K3 bucket at n = 1e4 contains boundary degrees (12, 13) "
    "with expected counts ~4-9; their realized counts leave the factor-2 envelope "
    "with probability ~0.3 per seed, so 18-of-20 holds only for lucky seeds "
    "(measured 12/20 at the project seed); the bulk of K3 never fails",
)
def test_degree_envelope_n10k():
    from dwalk.degree_theory import degree_profile
    from dwalk.seeds import derive_seed
    from conftest import MASTER

    n, d = 10_000, 3.0
    p = d * math.log(n) / n
    prof = degree_profile(n, p)
    k3 = prof.K3
    db3 = prof.dbar_values[np.isin(prof.ks, k3)]
    passes = 0
    for s in range(20):
        g = generate(GenParams(n=n, p=p, seed=derive_seed(MASTER, 91, s)))
        counts = np.bincount(g.in_degrees(), minlength=int(prof.ks.max()) + 2)
        Dk = counts[k3]
        passes += bool(((Dk >= db3 / 2) & (Dk <= 2 * db3)).all())
    assert passes >= 18
