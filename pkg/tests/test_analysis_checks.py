import math

import numpy as np
import pytest

from censornet import NetworkConfig
from censornet.analysis_checks import (
    DerivativeReport,
    check_crt1_boundary_derivatives,
    check_crt2_boundary_derivatives,
    check_interiority_conditions,
    closed_form_boundary_derivatives_crt1,
    spanning_interval_mass,
)
from censornet.correlated_gaussian import univariate_cdf
from censornet.network_model import Hypothesis
from censornet.problem_o import ProblemOSpec, PureDesign, SolverOptions, solve_crt_o, solve_pure_censoring_o

FAST = SolverOptions(n_mc_pu=3000, coarse_n_mc=800, tau_grid=21, refine_points=3, seed=4)


@pytest.fixture(scope="module")
def cfg():
    return NetworkConfig.from_snr(K=3, A=1.0, snr_c_db=10.0, snr_h_db=5.0, rho=0.5)


@pytest.fixture(scope="module")
def pure(cfg):
    return solve_pure_censoring_o(cfg, 0.4, 0.02, FAST)


class TestSpanningMass:
    def test_independent_case_matches_product_oracle(self):
        cfg = NetworkConfig(K=4, A=1.0, sigma_w2=0.5, rho=0.0, sigma_h2=1.0, sigma_v2=1.0)
        tau1, tau2 = 0.4, -0.3
        sw = math.sqrt(0.5)
        ql = univariate_cdf((tau2 - 1.0) / sw)
        qm = univariate_cdf((tau1 - 1.0) / sw) - ql
        qh = 1.0 - univariate_cdf((tau1 - 1.0) / sw)
        expect = 1.0 - (ql + qm) ** 4 - (qm + qh) ** 4 + qm**4
        got = spanning_interval_mass(cfg, tau1, tau2)
        assert got == pytest.approx(expect, abs=1e-10)

    def test_strong_correlation_contracts_mass(self):
        lo = spanning_interval_mass(
            NetworkConfig(K=4, A=1.0, sigma_w2=0.5, rho=0.1, sigma_h2=1.0, sigma_v2=1.0),
            0.4, -0.3)
        hi = spanning_interval_mass(
            NetworkConfig(K=4, A=1.0, sigma_w2=0.5, rho=0.95, sigma_h2=1.0, sigma_v2=1.0),
            0.4, -0.3)
        assert hi < lo


class TestBoundaryDerivatives:
    def test_closed_form_matches_single_seed_fd(self, cfg, pure):
        from censornet.fusion_rules import AssumedModel
        from censornet.performance_eval import Crt1Evaluator
        from censornet.network_model import g_of_f

        assumed = AssumedModel(tau1=pure.tau1, tau2=pure.tau2, rho_fc=cfg.rho,
                               g_fc=0.0, f_fc=1.0)
        ev = Crt1Evaluator(cfg, pure.tau1, pure.tau2, assumed, 4000, 77, share_pools=True)
        h = 1e-4
        vals = []
        for f in (1.0 + h, 1.0 - h):
            g, _ = g_of_f(cfg, pure.tau1, pure.tau2, 0.4, f)
            pm, _, pf, _ = ev.pm_pf(g, f, pure.t)
            vals.append((pm, pf))
        fd_pm = (vals[0][0] - vals[1][0]) / (2 * h)
        fd_pf = (vals[0][1] - vals[1][1]) / (2 * h)
        c_pm, c_pf, _, _ = closed_form_boundary_derivatives_crt1(
            cfg, pure.tau1, pure.tau2, pure.t, 0.4, 4000, 77)
        assert fd_pm == pytest.approx(c_pm, abs=5e-4)
        assert fd_pf == pytest.approx(c_pf, abs=5e-4)

    def test_fa_derivative_vanishes_identically_at_rho_zero(self):
        cfg0 = NetworkConfig.from_snr(K=3, A=1.0, snr_c_db=10.0, snr_h_db=5.0, rho=0.0)
        pure0 = solve_pure_censoring_o(cfg0, 0.4, 0.02, FAST)
        _, dpf, _, gamma_f = closed_form_boundary_derivatives_crt1(
            cfg0, pure0.tau1, pure0.tau2, pure0.t, 0.4, 3000, 5)
        # under independence the mediant ratio equals -dg/df exactly
        assert abs(dpf) < 1e-10
        from censornet.network_model import g_of_f
        _, dgdf = g_of_f(cfg0, pure0.tau1, pure0.tau2, 0.4, 1.0)
        assert gamma_f == pytest.approx(-dgdf, abs=1e-10)

    def test_fa_derivative_positive_at_positive_rho(self, cfg, pure):
        rep = check_crt1_boundary_derivatives(cfg, pure, 0.4, FAST, n_seeds=3)
        assert rep.dpf_df > 0
        assert rep.pf_positive_beyond_noise
        assert rep.gamma_fa < 0.4 / 0.6

    def test_crt2_report_runs(self, cfg, pure):
        rep = check_crt2_boundary_derivatives(cfg, pure, 0.4, FAST,
                                              n_seeds=3, n_mc_replica=1000)
        assert rep.tau2_negative == (pure.tau2 < 0)
        assert rep.noise_floor_pm > 0

    def test_report_flags(self):
        rep = DerivativeReport(dpm_df=0.001, dpf_df=0.02, noise_floor_pm=0.01,
                               noise_floor_pf=0.004, spanning_mass_h1=0.005,
                               tau2_negative=True)
        assert rep.adjacent_condition
        assert rep.pf_positive_beyond_noise
        assert not rep.pm_positive_beyond_noise
        assert rep.pm_vanishes


class TestInteriorityTable:
    def test_rows_structure(self, cfg):
        def solver(cfg_pt, point):
            pure = solve_pure_censoring_o(cfg_pt, point["p0"], 0.02, FAST)
            sol = solve_crt_o(
                cfg_pt,
                ProblemOSpec(p0=point["p0"], beta=0.02, scheme=point["scheme"]),
                pure, FAST)
            return sol, pure

        from censornet import Scheme

        rows = check_interiority_conditions(
            cfg, [{"rho": 0.05, "p0": 0.4, "scheme": Scheme.CRT2}], solver)
        assert len(rows) == 1
        row = rows[0]
        assert {"f_star", "g_star", "interior", "adjacent_condition",
                "tau2_negative", "consistent"} <= set(row)
