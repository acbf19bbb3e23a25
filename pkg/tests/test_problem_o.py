import math

import numpy as np
import pytest

from censornet import NetworkConfig, Scheme
from censornet.network_model import rate_probs
from censornet.performance_eval import Crt1Evaluator
from censornet.fusion_rules import AssumedModel
from censornet.problem_o import (
    InfeasibleError,
    KKTSolution,
    ProblemOSpec,
    SolverOptions,
    bisect_threshold,
    solve_crt_o,
    solve_pure_censoring_o,
)

FAST = SolverOptions(n_mc_pu=3000, coarse_n_mc=800, tau_grid=31, refine_points=5,
                     f_grid=41, f_grid_full=11, seed=0)


@pytest.fixture(scope="module")
def cfg():
    return NetworkConfig.from_snr(K=3, A=1.0, snr_c_db=10.0, snr_h_db=5.0, rho=0.5)


@pytest.fixture(scope="module")
def pure(cfg):
    return solve_pure_censoring_o(cfg, 0.4, 0.02, FAST)


class TestBisection:
    def test_contract_on_evaluator(self, cfg):
        ev = Crt1Evaluator(cfg, 0.4, -0.3,
                           AssumedModel(tau1=0.4, tau2=-0.3, rho_fc=0.5, g_fc=0.0, f_fc=1.0),
                           4000, 0)
        beta = 0.02
        t, pf, pf_se = bisect_threshold(lambda tt: ev.pm_pf(0.0, 1.0, tt)[2:], beta)
        assert pf <= beta
        assert abs(pf - beta) < max(1e-4, 2 * pf_se)

    def test_monotone_target(self):
        # deterministic smooth decreasing function: exact root
        t, pf, _ = bisect_threshold(lambda tt: (math.exp(-tt), 0.0), 0.1)
        assert t == pytest.approx(-math.log(0.1), rel=1e-6)


class TestPureCensoring:
    def test_constraints_hold(self, cfg, pure):
        pt, _ = rate_probs(cfg, pure.tau1, pure.tau2, 0.0, 1.0)
        assert pt == pytest.approx(0.4, abs=1e-9)
        assert pure.perf.pf <= 0.02
        assert abs(pure.perf.pf - 0.02) < max(1e-4, 2 * pure.perf.pf_se)
        assert pure.tau2 <= pure.tau1

    def test_full_rate_collapses_interval(self, cfg):
        d = solve_pure_censoring_o(cfg, 1.0 - 1e-9, 0.05,
                                   SolverOptions(n_mc_pu=800, coarse_n_mc=400,
                                                 tau_grid=11, refine_points=3, seed=0))
        assert d.tau1 - d.tau2 < 1e-6
        assert d.perf.pt == pytest.approx(1.0, abs=1e-6)

    def test_slack_cap_improves_miss(self, cfg, pure):
        loose = solve_pure_censoring_o(cfg, 0.4, 0.5, FAST)
        assert loose.perf.pm < pure.perf.pm
        assert loose.t < pure.t

    def test_deterministic(self, cfg, pure):
        again = solve_pure_censoring_o(cfg, 0.4, 0.02, FAST)
        assert (again.tau1, again.tau2, again.t) == (pure.tau1, pure.tau2, pure.t)
        assert again.perf.pm == pure.perf.pm


class TestCrtSolve:
    def test_crt2_feasible_and_not_worse(self, cfg, pure):
        sol = solve_crt_o(cfg, ProblemOSpec(p0=0.4, beta=0.02, scheme=Scheme.CRT2), pure, FAST)
        pt, _ = rate_probs(cfg, pure.tau1, pure.tau2, sol.g_star, sol.f_star)
        assert pt == pytest.approx(0.4, abs=1e-9)
        assert abs(sol.perf.pf - 0.02) < max(1e-4, 2 * sol.perf.pf_se)
        comb = (sol.perf.pm_se**2 + pure.perf.pm_se**2) ** 0.5
        assert sol.perf.pm <= pure.perf.pm + 3 * comb
        assert sol.kkt is not None
        assert set(sol.kkt.residuals) == {
            "stationarity", "cs_false_alarm", "violation_false_alarm",
            "cs_upper_box", "cs_lower_box",
        }

    def test_crt1_variants_run(self, cfg, pure):
        for variant in ("mismatched_fc", "full_search"):
            sol = solve_crt_o(
                cfg, ProblemOSpec(p0=0.4, beta=0.02, scheme=Scheme.CRT1, variant=variant),
                pure, FAST,
            )
            assert 0.0 <= sol.f_star <= 1.0
            assert 0.0 <= sol.g_star <= 1.0
            assert abs(sol.perf.pf - 0.02) < max(1e-4, 2 * sol.perf.pf_se)

    def test_near_independence_ties_to_pure(self):
        cfg = NetworkConfig.from_snr(K=3, A=1.0, snr_c_db=10.0, snr_h_db=5.0, rho=0.02)
        pure = solve_pure_censoring_o(cfg, 0.4, 0.02, FAST)
        sol = solve_crt_o(cfg, ProblemOSpec(p0=0.4, beta=0.02, scheme=Scheme.CRT1,
                                            variant="mismatched_fc"), pure, FAST)
        assert sol.f_star == pytest.approx(1.0)
        assert sol.g_star == pytest.approx(0.0, abs=1e-9)
        comb = (sol.perf.pm_se**2 + pure.perf.pm_se**2) ** 0.5
        assert abs(sol.perf.pm - pure.perf.pm) <= 3 * comb + 1e-9

    def test_rate_mismatch_is_infeasible(self, cfg, pure):
        # budgets below the always-transmitted upper-tail mass leave no f
        from censornet.network_model import Hypothesis, interval_probs

        p1 = interval_probs(cfg, pure.tau1, pure.tau2, Hypothesis.H0)[2]
        assert p1 > 0
        with pytest.raises(InfeasibleError):
            solve_crt_o(cfg, ProblemOSpec(p0=p1 / 2, beta=0.02, scheme=Scheme.CRT2), pure, FAST)

    def test_grid_halving_stability(self, cfg, pure):
        coarse = solve_crt_o(cfg, ProblemOSpec(p0=0.4, beta=0.02, scheme=Scheme.CRT2),
                             pure, FAST)
        import dataclasses
        fine = solve_crt_o(cfg, ProblemOSpec(p0=0.4, beta=0.02, scheme=Scheme.CRT2),
                           pure, dataclasses.replace(FAST, f_grid=81))
        assert abs(coarse.f_star - fine.f_star) <= 0.02 + 1e-9


class TestKKT:
    def test_negative_multipliers_rejected(self):
        with pytest.raises(ValueError):
            KKTSolution(f_star=0.5, g_star=0.5, t_star=1.0, lam=-1.0, mu1=0.0, mu2=0.0,
                        residuals={})

    def test_spec_validation(self):
        with pytest.raises(ValueError):
            ProblemOSpec(p0=0.0, beta=0.01, scheme=Scheme.CRT1)
        with pytest.raises(ValueError):
            ProblemOSpec(p0=0.4, beta=0.01, scheme=Scheme.CRT1, variant="bogus")
