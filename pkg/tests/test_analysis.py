"""Analytics: exponent fits, independence bounds, coverage, certification."""

import io
import math
from itertools import combinations

import numpy as np
import pytest

from k4sim import (
    PairClass,
    certify_k4_free,
    fit_exponent,
    independence_lower,
    init,
    run,
    triangle_coverage,
)
from k4sim.analysis import (
    SweepRecord,
    exact_independence,
    greedy_independence,
    subset_has_triangle,
    write_sweep_csv,
)
from k4sim.process import AfterSteps

from test_triples import force_step


class TestFitExponent:
    def test_exact_power_law(self):
        pts = [(n, n ** 1.6) for n in (256, 512, 1024, 2048)]
        slope, _, err = fit_exponent(pts)
        assert abs(slope - 1.6) < 1e-9
        assert err < 1e-9

    def test_constant(self):
        slope, _, _ = fit_exponent([(n, 7.0) for n in (10, 100, 1000)])
        assert abs(slope) < 1e-12

    def test_power_with_log_factor(self):
        pts = [(2 ** e, (2 ** e) ** 1.6 * math.log(2 ** e) ** 0.2)
               for e in range(8, 14)]
        slope, _, _ = fit_exponent(pts)
        assert 1.61 <= slope <= 1.66

    def test_input_validation(self):
        with pytest.raises(ValueError):
            fit_exponent([(10, 1.0), (20, 2.0)])
        with pytest.raises(ValueError):
            fit_exponent([(10, 1.0), (20, -2.0), (30, 3.0)])
        with pytest.raises(ValueError):
            fit_exponent([(10, 1.0), (10, 2.0), (10, 3.0)])


def brute_alpha(state):
    n = state.n
    best = 0
    for r in range(n, 0, -1):
        if r <= best:
            break
        for sub in combinations(range(n), r):
            if all(not state.is_edge(a, b) for a, b in combinations(sub, 2)):
                best = max(best, r)
                break
    return best


class TestIndependence:
    def test_empty_graph(self):
        st = init(9, 0)
        greedy, exact = independence_lower(st)
        assert greedy == 9 and exact == 9

    def test_near_complete_core(self):
        # star into every other vertex plus a clique-ish core
        st = init(5, 0)
        for e in [(0, 1), (0, 2), (0, 3), (0, 4), (1, 2), (3, 4)]:
            force_step(st, *e)
        greedy, exact = independence_lower(st)
        assert exact == brute_alpha(st)
        assert greedy <= exact

    @pytest.mark.parametrize("seed", range(4))
    def test_exact_matches_brute_and_greedy_below(self, seed):
        n = 14
        st = init(n, seed)
        run(st, AfterSteps(25))
        greedy, exact = independence_lower(st)
        assert exact == brute_alpha(st)
        assert greedy <= exact

    def test_greedy_degree_bound(self):
        st = init(64, 3)
        run(st)
        greedy = greedy_independence(st, passes=8)
        assert greedy * (1 + st.max_degree) >= st.n

    def test_exact_size_guard(self):
        with pytest.raises(ValueError):
            exact_independence(init(41, 0))


class TestTriangleCoverage:
    def test_triangle_free_graph(self):
        st = init(12, 0)
        for e in [(0, 1), (2, 3), (4, 5)]:  # a matching has no triangles
            force_step(st, *e)
        rate, misses = triangle_coverage(st, 6, 40)
        assert rate == 0.0
        assert len(misses) == 40

    def test_every_subset_hits_dense_triangles(self):
        # complete tripartite-ish: every 4 consecutive vertices give triangles
        st = init(9, 0)
        for (a, b) in [(0, 3), (0, 6), (3, 6), (1, 4), (1, 7), (4, 7)]:
            force_step(st, a, b)
        rate, misses = triangle_coverage(st, 9, 10)
        assert rate == 1.0 and misses == []

    def test_subset_size_guard(self):
        with pytest.raises(ValueError):
            triangle_coverage(init(8, 0), 9, 2)

    def test_detector_matches_enumeration(self):
        st = init(12, 5)
        run(st, AfterSteps(26))
        rng = np.random.default_rng(1)
        for _ in range(30):
            sub = rng.choice(12, size=6, replace=False).tolist()
            brute = any(
                st.is_edge(a, b) and st.is_edge(a, c) and st.is_edge(b, c)
                for a, b, c in combinations(sorted(sub), 3)
            )
            assert subset_has_triangle(st, sub) == brute


class TestCertify:
    def test_terminated_n4(self):
        st = init(4, 2)
        run(st)
        cert = certify_k4_free(st, "exhaustive")
        assert cert.ok and cert.maximal

    def test_mid_run_state(self):
        st = init(32, 4)
        run(st, AfterSteps(40))
        assert certify_k4_free(st, "exhaustive").ok

    def test_sampled_mode(self):
        st = init(64, 6)
        run(st)
        cert = certify_k4_free(st, "sampled", sample_size=50_000)
        assert cert.ok and cert.maximal

    def test_exhaustive_catches_planted_k4(self):
        st = init(8, 0)
        for e in combinations(range(4), 2):
            if e == (2, 3):
                continue
            force_step(st, *e)
        # plant the forbidden edge directly, bypassing the process guard
        u, v = 2, 3
        st.adj[u, v >> 6] |= np.uint64(1 << (v & 63))
        st.adj[v, u >> 6] |= np.uint64(1 << (u & 63))
        st.edge_history.append(st.pid(u, v))
        cert = certify_k4_free(st, "exhaustive")
        assert not cert.ok
        assert cert.witness == (0, 1, 2, 3)

    def test_size_guard(self):
        with pytest.raises(ValueError):
            certify_k4_free(init(513, 0), "exhaustive")


class TestSweepRecordCSV:
    def test_header_and_row(self):
        rec = SweepRecord(n=64, seed=1, steps_to_termination=100, final_edges=100,
                          max_degree=12, min_degree=8, greedy_alpha=20,
                          exact_alpha=None, triangle_coverage_rate=None)
        buf = io.StringIO()
        write_sweep_csv([rec], buf)
        lines = buf.getvalue().splitlines()
        assert lines[0] == "n,seed,steps,edges,maxdeg,mindeg,alpha_greedy,alpha_exact,tri_cov"
        assert lines[1] == "64,1,100,100,12,8,20,,"
