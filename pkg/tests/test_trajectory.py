import json
import math
from decimal import Decimal, getcontext

import pytest

from k4sim import EnvelopeMonitor, ParamSet, error_envelope, init, make_params, open_fraction, run
from k4sim.process import AfterSteps
from k4sim.trajectory import f_chain_margins, q_chain_margins


class TestFunctions:
    def test_open_fraction_values(self):
        assert open_fraction(0.0) == 1.0
        assert math.isclose(open_fraction(0.5), math.exp(-0.5))
        assert math.isclose(open_fraction(0.5), 0.606531, rel_tol=1e-6)
        assert math.isclose(open_fraction(1.0), math.exp(-16.0))

    def test_error_envelope_values(self):
        assert error_envelope(0.0, 4.0) == 1.0
        assert math.isclose(error_envelope(1.0, 4.0), math.exp(8.0))
        assert math.isclose(error_envelope(1.0, 4.0), 2980.958, rel_tol=1e-6)

    def test_monotonicity_on_grid(self):
        ts = [j / 100 for j in range(101)]
        qs = [open_fraction(t) for t in ts]
        fs = [error_envelope(t, 4.0) for t in ts]
        assert all(a > b for a, b in zip(qs, qs[1:]))
        assert all(a < b for a, b in zip(fs, fs[1:]))
        assert qs[0] == 1.0 and fs[0] == 1.0


def decimal_params(n: int, mu: str, gamma: str):
    """High-precision recomputation of the derived step counts."""
    getcontext().prec = 60
    nn = Decimal(n)
    ln_n = nn.ln()
    p = (Decimal(-2) / 5 * ln_n).exp()
    t_max = Decimal(mu) * (ln_n ** (Decimal(1) / 5))
    m = (nn * nn * p * t_max).to_integral_value(rounding="ROUND_CEILING")
    u = (Decimal(gamma) * nn * p * t_max).to_integral_value(rounding="ROUND_CEILING")
    k = (u / 15).to_integral_value(rounding="ROUND_CEILING")
    return int(m), int(u), int(k)


class TestParamSet:
    @pytest.mark.parametrize("n", [2 ** 10, 2 ** 12])
    def test_desk_spot_check_against_decimal(self, n):
        ps = ParamSet.desk(n)
        m, u, k = decimal_params(n, "0.3", "10")
        assert (ps.m, ps.u, ps.k) == (m, u, k)

    def test_paper_mu_from_constraint(self):
        ps = ParamSet.paper(10 ** 6)
        assert math.isclose(2 * ps.W * ps.mu ** 5, ps.epsilon, rel_tol=1e-12)
        assert ps.constraint_ok

    def test_paper_mode_enforces_constraint(self):
        ParamSet.paper(10 ** 6, mu=0.01)  # well under the cap
        with pytest.raises(ValueError):
            ParamSet.paper(10 ** 6, mu=0.3)

    def test_desk_constraint_reported(self):
        ps = ParamSet.desk(1024)
        assert ps.constraint_ok  # 2*4*0.3^5 = 0.0194 <= 0.05
        assert ps.describe()["mode"] == "desk"

    def test_paper_gamma_formula(self):
        ps = ParamSet.paper(10 ** 6)
        # mu^5 = eps/(2W) = 1e-6 exactly, so mu^(5/2) = 1e-3 exactly
        assert math.isclose(ps.gamma, 5.0 / (math.sqrt(1 / 7000) * 1e-3), rel_tol=1e-12)

    def test_positive_derived(self):
        ps = ParamSet.desk(256)
        assert ps.p > 0 and ps.t_max > 0
        assert ps.m > 0 and ps.u > 0 and ps.k > 0

    def test_make_params_modes(self):
        assert make_params("desk", 128).mode == "desk"
        assert make_params("paper", 128).mode == "paper"
        assert make_params("desk", 128, epsilon=0.07).epsilon == 0.07
        with pytest.raises(ValueError):
            make_params("other", 128)


class TestChains:
    def test_q_chain_paper_mode_any_n(self):
        # 16 t^5 <= (eps/2) ln n reduces to 16 mu^5 <= eps/2, which the paper
        # profile satisfies for every n
        for n in (10 ** 3, 10 ** 6, 10 ** 9):
            m = q_chain_margins(ParamSet.paper(n))
            assert m["max_log_q"] <= 0.0
            assert m["min_log_q_minus_floor"] >= 0.0

    def test_f_chain_log_space(self):
        # f q^2 >= 1 holds for any horizon; f <= n^eps only kicks in at
        # astronomically large n, checked here in log space
        eps, W = 1e-3, 500.0
        mu = (eps / (2 * W)) ** 0.2
        small = f_chain_margins(eps, W, mu, ln_n=math.log(10 ** 6))
        assert small["min_log_fq2"] >= 0.0
        assert small["max_log_f_minus_cap"] > 0.0  # cap fails at n = 10^6
        huge = f_chain_margins(eps, W, mu, ln_n=1.0e6)
        assert huge["min_log_fq2"] >= 0.0
        assert huge["max_log_f_minus_cap"] <= 0.0  # holds once ln n ~ 1e6


class TestEnvelopeMonitor:
    def test_step_zero_quantities(self):
        # at i=0 the prediction q(0) n^2/2 differs from the true pair count by
        # n/2, well inside the band already at n=64
        n = 64
        ps = ParamSet.desk(n)
        center = ps.q(0.0) * n * n / 2
        assert abs(n * (n - 1) / 2 - center) <= 3 * ps.f(0.0) / ps.s_e * center
        assert 0 <= 3 * n * ps.p * ps.t_max  # degree bound positive at i=0

    def test_monitor_runs_and_reports(self):
        n = 128
        ps = ParamSet.desk(n)
        st = init(n, 3)
        mon = EnvelopeMonitor(ps, sample_pairs=8, stride=50)
        run(st, AfterSteps(min(400, ps.m)), [mon])
        rep = mon.report
        assert rep.steps_checked == min(400, ps.m)
        assert rep.samples_Cuv > 0
        d = json.loads(rep.to_json())
        for key in ("violations_O", "violations_deg", "violations_codeg",
                    "violations_Cuv", "violations_CC", "worst_rel_dev"):
            assert key in d
        # desk-scale early steps sit far inside the (loose) bands
        assert d["violations_deg"] == 0
        assert d["violations_O"] == 0

    def test_open_pair_deviation_window(self):
        # calibrated on 5 pilot seeds: up to scaled time 0.5 the open-pair
        # count stays within 10% of its predicted curve at n=512 (max pilot
        # deviation 7.2%); past t ~ 0.5 the asymptotic curve is no longer
        # numerically meaningful at this n and the window ends
        n = 512
        ps = ParamSet.desk(n)
        s = ps.steps_per_unit_time
        outside = total = 0
        for idx in range(2):
            from k4sim.rng import run_seed

            st = init(n, run_seed(555, idx))
            checkpoints = [int(round(s * 0.05 * j)) for j in range(1, 11)]
            ci = 0
            while st.open_count and ci < len(checkpoints):
                st.step()
                if st.i == checkpoints[ci]:
                    t = st.i / s
                    dev = st.open_count / (ps.q(t) * n * n / 2) - 1
                    total += 1
                    outside += abs(dev) > 0.10
                    ci += 1
        assert outside / total <= 0.01

    def test_codegree_tracking_exact(self):
        import numpy as np

        n = 32
        ps = ParamSet.desk(n)
        st = init(n, 5)
        mon = EnvelopeMonitor(ps, sample_pairs=2, stride=10 ** 9)
        run(st, AfterSteps(60), [mon])
        # recompute max codegree from scratch
        best = 0
        for u in range(n):
            for v in range(u + 1, n):
                best = max(best, int(np.bitwise_count(st.adj[u] & st.adj[v]).sum()))
        assert mon._max_codeg == best
