"""Numerical verification of the analytical boundary-derivative results.

The claims under test: along the constant-rate path g(f), at the
deterministic-mapping point f = 1,
  - randomization-unaware CRT-I: the false-alarm derivative is positive for
    every correlation, and the miss derivative vanishes when the correlation
    is strong enough that observations concentrate on two adjacent intervals;
  - draw-aware CRT-II: both derivatives are positive whenever the designed
    lower threshold is negative.
Closed-form expressions for the CRT-I derivatives (single-swap category
sums) are evaluated against central finite differences of the category
polynomials, sharing the same Monte-Carlo draws.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .correlated_gaussian import (
    auto_quad_nodes,
    conditional_interval_probs,
    gauss_hermite_rule,
    rectangle_prob_counts,
)
from .fusion_rules import AssumedModel
from .network_model import Hypothesis, NetworkConfig, g_of_f
from .performance_eval import Crt1Evaluator, Crt2Evaluator, PuSampler
from .problem_o import PureDesign, SolverOptions

__all__ = [
    "DerivativeReport",
    "spanning_interval_mass",
    "check_crt1_boundary_derivatives",
    "closed_form_boundary_derivatives_crt1",
    "check_crt2_boundary_derivatives",
    "check_interiority_conditions",
]

N_SEEDS = 5


@dataclass(frozen=True)
class DerivativeReport:
    """Finite-difference and closed-form boundary derivatives with noise floors.

    Derivatives run along the constant-rate substitution path at f = 1; the
    floors are three sample standard deviations over independent seeds.
    """

    dpm_df: float
    dpf_df: float
    noise_floor_pm: float
    noise_floor_pf: float
    spanning_mass_h1: float
    tau2_negative: bool
    dpm_df_closed: float | None = None
    dpf_df_closed: float | None = None
    gamma_miss: float | None = None
    gamma_fa: float | None = None

    @property
    def adjacent_condition(self) -> bool:
        """Strong-correlation condition: non-adjacent occupancy mass below 1%."""
        return self.spanning_mass_h1 < 0.01

    @property
    def pf_positive_beyond_noise(self) -> bool:
        return self.dpf_df > self.noise_floor_pf

    @property
    def pm_positive_beyond_noise(self) -> bool:
        return self.dpm_df > self.noise_floor_pm

    @property
    def pm_vanishes(self) -> bool:
        return abs(self.dpm_df) < 5.0 * self.noise_floor_pm


def spanning_interval_mass(cfg: NetworkConfig, tau1: float, tau2: float,
                           hypothesis=Hypothesis.H1, nodes: int | None = None) -> float:
    """Probability that the observations span both outer intervals.

    1 - P(all in lower two) - P(all in upper two) + P(all censored); used to
    quantify the two-adjacent-intervals condition.
    """
    if nodes is None:
        nodes = auto_quad_nodes(cfg.rho)
    z, w = gauss_hermite_rule(nodes)
    mean = cfg.A if hypothesis is Hypothesis.H1 else 0.0
    q = conditional_interval_probs(mean, cfg.sigma_w2, cfg.rho, tau1, tau2, z)
    low = w @ (q[:, 0] + q[:, 1]) ** cfg.K
    high = w @ (q[:, 1] + q[:, 2]) ** cfg.K
    mid = w @ q[:, 1] ** cfg.K
    return float(1.0 - low - high + mid)


def _path_fd(ev, cfg, tau1, tau2, p0, t, step):
    """Central differences of the category sums along g(f) at f = 1.

    The sums are polynomials, so evaluation just past the unit box is their
    analytic continuation.
    """
    out = []
    for f in (1.0 + step, 1.0 - step):
        g, _ = g_of_f(cfg, tau1, tau2, p0, f)
        pm, _, pf, _ = ev.pm_pf(g, f, t)
        out.append((pm, pf))
    dpm = (out[0][0] - out[1][0]) / (2 * step)
    dpf = (out[0][1] - out[1][1]) / (2 * step)
    return dpm, dpf


def _replicated(make_ev, cfg, tau1, tau2, p0, t, step, seeds):
    vals = [_path_fd(make_ev(s), cfg, tau1, tau2, p0, t, step) for s in seeds]
    dpm = float(np.mean([v[0] for v in vals]))
    dpf = float(np.mean([v[1] for v in vals]))
    floor_pm = 3.0 * float(np.std([v[0] for v in vals], ddof=1))
    floor_pf = 3.0 * float(np.std([v[1] for v in vals], ddof=1))
    return dpm, dpf, floor_pm, floor_pf


def check_crt1_boundary_derivatives(
    cfg: NetworkConfig,
    pure: PureDesign,
    p0: float,
    opts: SolverOptions = SolverOptions(),
    step: float = 1e-4,
    n_seeds: int = N_SEEDS,
) -> DerivativeReport:
    """Boundary derivatives of the randomization-unaware CRT-I curves."""
    tau1, tau2, t = pure.tau1, pure.tau2, pure.t
    assumed = AssumedModel(tau1=tau1, tau2=tau2, rho_fc=cfg.rho, g_fc=0.0, f_fc=1.0)

    def make_ev(seed):
        return Crt1Evaluator(cfg, tau1, tau2, assumed, opts.n_mc_pu, seed,
                             opts.nodes, opts.lr_nodes, share_pools=True)

    seeds = [opts.seed + 1000 * i for i in range(n_seeds)]
    dpm, dpf, floor_pm, floor_pf = _replicated(make_ev, cfg, tau1, tau2, p0, t, step, seeds)
    dpm_c, dpf_c, gamma_m, gamma_f = closed_form_boundary_derivatives_crt1(
        cfg, tau1, tau2, t, p0, opts.n_mc_pu, seeds[0], opts.nodes, opts.lr_nodes
    )
    return DerivativeReport(
        dpm_df=dpm,
        dpf_df=dpf,
        noise_floor_pm=floor_pm,
        noise_floor_pf=floor_pf,
        spanning_mass_h1=spanning_interval_mass(cfg, tau1, tau2),
        tau2_negative=tau2 < 0.0,
        dpm_df_closed=dpm_c,
        dpf_df_closed=dpf_c,
        gamma_miss=gamma_m,
        gamma_fa=gamma_f,
    )


def closed_form_boundary_derivatives_crt1(
    cfg: NetworkConfig,
    tau1: float,
    tau2: float,
    t: float,
    p0: float,
    n_mc: int,
    seed: int,
    nodes: int | None = None,
    lr_nodes: int | None = None,
) -> tuple[float, float, float, float]:
    """Single-swap closed form of the boundary derivatives.

    At f = 1 only three category families survive differentiation: the
    all-deterministic pattern and its two single-sensor swaps (one censored
    observation from the lower interval, one minus-one sent from the middle
    interval). Grouping them yields

        d pm/df = k * sum w (pu_swap - pu_base) px1_base - sum w (...) px1_low
        d pf/df = k * sum w (pu_base - pu_swap) px0_base - sum w (...) px0_low

    with k = -dg/df, and the reported gammas are the aggregated ratios of the
    low-interval to base-interval weighted sums (the mediant quantity bounded
    by p0 / (1 - p0)).
    """
    assumed = AssumedModel(tau1=tau1, tau2=tau2, rho_fc=cfg.rho, g_fc=0.0, f_fc=1.0)
    sampler = PuSampler(cfg, assumed, n_mc, seed, lr_nodes, share_pools=True)
    K = cfg.K
    _, dgdf = g_of_f(cfg, tau1, tau2, p0, 1.0)
    k = -dgdf

    def pu(symbols):
        return PuSampler.pu_from_samples(sampler.samples_for_symbols(symbols), t)[0]

    def px(counts, hyp):
        mean = cfg.A if hyp is Hypothesis.H1 else 0.0
        return rectangle_prob_counts(counts, mean, cfg.sigma_w2, cfg.rho, tau1, tau2, nodes)

    num_m = den_m = num_f = den_f = 0.0
    for a1 in range(K):
        for a5 in range(K - a1):
            a2 = K - a1 - a5 - 1
            mult = math.factorial(K) // (
                math.factorial(a1) * math.factorial(a2) * math.factorial(a5)
            )
            base_sym = (-1,) * a5 + (0,) * (a2 + 1) + (1,) * a1
            swap_sym = (-1,) * (a5 + 1) + (0,) * a2 + (1,) * a1
            d_pu = pu(swap_sym) - pu(base_sym)
            px1_base = px((a5, K - a1 - a5, a1), Hypothesis.H1)
            px1_low = px((a5 + 1, K - a1 - a5 - 1, a1), Hypothesis.H1)
            px0_base = px((a5, K - a1 - a5, a1), Hypothesis.H0)
            px0_low = px((a5 + 1, K - a1 - a5 - 1, a1), Hypothesis.H0)
            den_m += mult * d_pu * px1_base
            num_m += mult * d_pu * px1_low
            den_f += mult * (-d_pu) * px0_base
            num_f += mult * (-d_pu) * px0_low
    dpm = k * den_m - num_m
    dpf = k * den_f - num_f
    gamma_m = num_m / den_m if den_m != 0.0 else float("nan")
    gamma_f = num_f / den_f if den_f != 0.0 else float("nan")
    return dpm, dpf, gamma_m, gamma_f


def check_crt2_boundary_derivatives(
    cfg: NetworkConfig,
    pure: PureDesign,
    p0: float,
    opts: SolverOptions = SolverOptions(),
    step: float = 1e-4,
    n_seeds: int = N_SEEDS,
    n_mc_replica: int | None = None,
) -> DerivativeReport:
    """Boundary derivatives of the draw-aware CRT-II curves.

    The replicas run at a reduced per-category budget (the draw-aware sums
    enumerate far more categories); the noise floor reflects that budget.
    """
    tau1, tau2, t = pure.tau1, pure.tau2, pure.t
    n_mc = n_mc_replica if n_mc_replica is not None else max(1000, opts.n_mc_pu // 8)
    assumed = AssumedModel(tau1=tau1, tau2=tau2, rho_fc=cfg.rho, g_fc=0.0, f_fc=1.0)

    def make_ev(seed):
        return Crt2Evaluator(cfg, tau1, tau2, assumed, n_mc, seed, opts.nodes,
                             opts.lr_nodes, share_pools=True)

    seeds = [opts.seed + 1000 * i for i in range(n_seeds)]
    dpm, dpf, floor_pm, floor_pf = _replicated(make_ev, cfg, tau1, tau2, p0, t, step, seeds)
    return DerivativeReport(
        dpm_df=dpm,
        dpf_df=dpf,
        noise_floor_pm=floor_pm,
        noise_floor_pf=floor_pf,
        spanning_mass_h1=spanning_interval_mass(cfg, tau1, tau2),
        tau2_negative=tau2 < 0.0,
    )


def check_interiority_conditions(cfg_base, sweep, solve_fn, opts=None) -> list[dict]:
    """Tabulate sufficient-condition flags against observed interiority.

    `sweep` yields dicts of overrides ({'rho': ..., 'p0': ...} or
    {'rho': ..., 'alpha': ..., 'beta': ...}); `solve_fn(cfg, point)` returns
    an object with f_star/g_star. Mismatches are recorded, never asserted:
    the conditions are sufficient, not necessary.
    """
    rows = []
    for point in sweep:
        cfg = cfg_base.with_rho(point.get("rho", cfg_base.rho))
        sol, pure = solve_fn(cfg, point)
        interior = sol.f_star < 1.0 - 1e-9 or sol.g_star > 1e-9
        mass = spanning_interval_mass(cfg, pure.tau1, pure.tau2)
        rows.append(
            {
                **point,
                "f_star": sol.f_star,
                "g_star": sol.g_star,
                "interior": interior,
                "adjacent_condition": mass < 0.01,
                "spanning_mass_h1": mass,
                "tau2_negative": pure.tau2 < 0.0,
                "consistent": interior or not (mass < 0.01 or pure.tau2 < 0.0),
            }
        )
    return rows
