"""Greedy configuration construction: branch behavior, determinism, bounds."""

import json
import math

import numpy as np
import pytest

from k4sim import ParamSet, build_sigma_star, init, make_params, run, verify_neighborhood_bounds
from k4sim.process import AfterSteps

from test_triples import force_step


def desk_U(state, params, seed=0):
    rng = np.random.default_rng(seed)
    return sorted(int(v) for v in rng.choice(state.n, size=params.u, replace=False))


class TestEmptyGraph:
    def test_branch1_lowest_ids(self):
        n = 512
        params = ParamSet.desk(n)
        st = init(n, 0)
        U = desk_U(st, params)
        res = build_sigma_star(st, U, params)
        assert res.branch == 1 and res.feasible
        assert res.I == ()
        assert math.isinf(res.ell_A)
        k = params.k
        assert list(res.sigma.A) == U[:k]
        assert list(res.sigma.B) == U[k:2 * k]
        assert list(res.sigma.C) == U[2 * k:3 * k]

    def test_wrong_size_rejected(self):
        n = 256
        params = ParamSet.desk(n)
        st = init(n, 0)
        with pytest.raises(ValueError):
            build_sigma_star(st, list(range(params.u + 1)), params)


class TestDeterminismAndBounds:
    @pytest.mark.parametrize("seed", [1, 2])
    def test_deterministic(self, seed):
        n = 256
        params = ParamSet.desk(n)
        st = init(n, seed)
        run(st, AfterSteps(params.m // 2))
        U = desk_U(st, params, seed)
        r1 = build_sigma_star(st, U, params)
        r2 = build_sigma_star(st, U, params)
        assert r1.feasible == r2.feasible
        if r1.feasible:
            assert r1.sigma == r2.sigma
        assert (r1.ell_A, r1.ell_B, r1.ell_C) == (r2.ell_A, r2.ell_B, r2.ell_C)

    @pytest.mark.parametrize("n,seed", [(128, 3), (200, 4)])
    def test_mid_process_output_verifies_or_infeasible(self, n, seed):
        params = ParamSet.desk(n)
        st = init(n, seed)
        run(st, AfterSteps(params.m))
        for us in range(5):
            U = desk_U(st, params, seed * 10 + us)
            res = build_sigma_star(st, U, params)
            if not res.feasible:
                assert res.reason
                continue
            rep = verify_neighborhood_bounds(res, st, params)
            # branch-1 classes avoid L entirely, so no violations are possible
            # from inside K; outside violations would indicate a bound breach
            assert rep.checked_outside + rep.checked_inside == n

    def test_mid_process_512_violation_rate(self):
        # frozen from 5 pilot seeds at the quarter-horizon snapshot: all
        # constructions feasible and zero degree-into-K violations; the test
        # keeps the calibrated <= 5% rate with 2 seeds x 6 subsets
        n = 512
        params = ParamSet.desk(n)
        from k4sim.rng import run_seed, stream

        checked = viol = 0
        for seed_idx in range(2):
            st = init(n, run_seed(777, seed_idx))
            run(st, AfterSteps(params.m // 4))
            for us in range(6):
                rng = stream(777, seed_idx, 100 + us)
                U = sorted(int(v) for v in rng.choice(n, size=params.u, replace=False))
                res = build_sigma_star(st, U, params)
                assert res.feasible, res.reason
                rep = verify_neighborhood_bounds(res, st, params)
                checked += rep.checked_outside
                viol += len(rep.violations_outside)
                assert rep.violations_inside == []
        assert viol / checked <= 0.05

    def test_greedy_layer_minimality(self):
        n = 256
        params = ParamSet.desk(n)
        st = init(n, 9)
        run(st, AfterSteps(params.m))
        U = desk_U(st, params, 9)
        res = build_sigma_star(st, U, params)
        if math.isinf(res.ell_A):
            return
        # re-scan: the union over the first ell_A ordered vertices reaches 2k,
        # and no shorter prefix does
        deg_u = [len(set(st.neighbors(v).tolist()) & set(U)) for v in range(n)]
        order = sorted(range(n), key=lambda v: (-deg_u[v], v))
        acc = set()
        for j, v in enumerate(order, start=1):
            acc |= set(st.neighbors(v).tolist()) & set(U)
            if len(acc) >= 2 * params.k:
                assert j == res.ell_A
                break


def build_branch2_instance():
    """Three disjoint hubs saturating U fast, with custom params making the
    layer cut generous enough for the second construction branch."""
    n = 640
    params = make_params("desk", n, epsilon=0.001, gamma=29.3)
    st = init(n, 0)
    u = params.u
    k = params.k
    assert k * params.p * n ** (-5 * params.epsilon) >= 3, "cut must admit ell_C = 3"
    U = list(range(u))
    hubs = [u, u + 1, u + 2]
    block = 2 * k + 5
    for h_i, h in enumerate(hubs):
        for v in U[h_i * block:(h_i + 1) * block]:
            force_step(st, min(h, v), max(h, v))
    return st, U, params, hubs, block


class TestBranch2:
    def test_branch2_construction(self):
        st, U, params, hubs, block = build_branch2_instance()
        res = build_sigma_star(st, U, params)
        assert res.branch == 2
        assert res.feasible
        assert (res.ell_A, res.ell_B, res.ell_C) == (1, 2, 3)
        assert set(res.I) == set(hubs[:3])
        k = params.k
        # layers are the hub neighborhoods, classes carved from them
        assert set(res.sigma.A) <= set(U[:block])
        assert set(res.sigma.B) <= set(U[block:2 * block])
        assert set(res.sigma.C) <= set(U[2 * block:3 * block])
        # disjointness guarantees
        gamma_ibc = set()
        for v in res.I[res.ell_A:]:
            gamma_ibc |= set(st.neighbors(v).tolist())
        assert not (set(res.sigma.A) & gamma_ibc)
        assert not (set(res.sigma.A) | set(res.sigma.B) | set(res.sigma.C)) & set(res.L)

    def test_branch2_inside_bound_holds(self):
        st, U, params, _, _ = build_branch2_instance()
        res = build_sigma_star(st, U, params)
        rep = verify_neighborhood_bounds(res, st, params)
        assert rep.violations_inside == []


class TestSerialization:
    def test_json_one_based(self):
        n = 256
        params = ParamSet.desk(n)
        st = init(n, 0)
        res = build_sigma_star(st, desk_U(st, params), params)
        d = json.loads(res.to_json())
        assert d["feasible"] is True
        assert d["branch"] == 1
        assert min(d["U"]) >= 1
        assert set(d["A"]) <= set(d["U"])
