"""Design problem (O): minimize the miss probability subject to a
transmission-rate equality P_t = p0 and a false-alarm cap P_F <= beta.

Pure censoring optimizes the local thresholds and the fusion threshold on a
grid; the CRT schemes keep the pure-censoring thresholds, eliminate g through
the rate equality, and solve the two sub-problems sequentially: first the
randomization parameter at the inherited fusion threshold, then the fusion
threshold is re-tightened until the false-alarm cap binds.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np
from scipy.special import ndtr, ndtri

from .fusion_rules import AssumedModel
from .network_model import (
    NetworkConfig,
    Scheme,
    feasible_f_range,
    g_of_f,
    rate_probs,
)
from .performance_eval import (
    DEFAULT_N_MC_PU,
    Crt1Evaluator,
    Crt2Evaluator,
    PerfEstimate,
    Route,
)

__all__ = [
    "InfeasibleError",
    "ProblemOSpec",
    "KKTSolution",
    "PureDesign",
    "CrtSolution",
    "SolverOptions",
    "solve_pure_censoring_o",
    "solve_crt_o",
    "kkt_residuals_o",
]

VARIANT_MISMATCHED = "mismatched_fc"
VARIANT_FULL = "full_search"


class InfeasibleError(RuntimeError):
    """No design satisfies the stated constraints."""


@dataclass(frozen=True)
class ProblemOSpec:
    p0: float
    beta: float
    scheme: Scheme
    variant: str = VARIANT_MISMATCHED  # CRT-I only: mismatched_fc | full_search

    def __post_init__(self):
        if not 0.0 < self.p0 < 1.0:
            raise ValueError("p0 must lie in (0, 1)")
        if not 0.0 < self.beta < 1.0:
            raise ValueError("beta must lie in (0, 1)")
        if self.variant not in (VARIANT_MISMATCHED, VARIANT_FULL):
            raise ValueError(f"unknown variant {self.variant!r}")


@dataclass(frozen=True)
class KKTSolution:
    f_star: float
    g_star: float
    t_star: float
    lam: float
    mu1: float
    mu2: float
    residuals: dict

    def __post_init__(self):
        if min(self.lam, self.mu1, self.mu2) < 0.0:
            raise ValueError("multipliers must be non-negative")


@dataclass(frozen=True)
class PureDesign:
    tau1: float
    tau2: float
    t: float
    perf: PerfEstimate


@dataclass(frozen=True)
class CrtSolution:
    f_star: float
    g_star: float
    t_star: float
    perf: PerfEstimate
    kkt: KKTSolution | None = None


@dataclass(frozen=True)
class SolverOptions:
    """Budgets and grids; defaults reproduce the documented behaviour."""

    n_mc_pu: int = DEFAULT_N_MC_PU
    seed: int = 0
    nodes: int | None = None
    lr_nodes: int | None = None
    tau_grid: int = 201
    coarse_n_mc: int = 2_000
    refine_cells: int = 2
    refine_points: int = 9
    f_grid: int = 81
    f_grid_full: int = 21
    tie_se: float = 1.0  # tie band around the minimum, in standard errors
    fd_step: float = 1e-4
    bisect_iters: int = 80

    def scaled(self, factor: float) -> "SolverOptions":
        """Uniformly scale the Monte-Carlo budgets (used by smoke runs)."""
        return replace(
            self,
            n_mc_pu=max(200, int(self.n_mc_pu * factor)),
            coarse_n_mc=max(200, int(self.coarse_n_mc * factor)),
        )


def _unaware(cfg, tau1, tau2):
    return AssumedModel(tau1=tau1, tau2=tau2, rho_fc=cfg.rho, g_fc=0.0, f_fc=1.0)


def bisect_threshold(pf_at, beta, t_init=1.0, iters=80):
    """Find t with pf_at(t) = beta; pf_at must be non-increasing in t.

    Returns (t, pf, pf_se) at the accepted point, which satisfies
    pf <= beta whenever beta is attainable at all.
    """
    lo = hi = max(t_init, 1e-12)
    pf_lo, _ = pf_at(lo)
    for _ in range(60):
        if pf_lo >= beta:
            break
        lo /= 10.0
        pf_lo, _ = pf_at(lo)
    pf_hi, _ = pf_at(hi)
    for _ in range(60):
        if pf_hi <= beta:
            break
        hi *= 10.0
        pf_hi, _ = pf_at(hi)
    best = None
    for _ in range(iters):
        mid = math.sqrt(lo * hi)
        pf, se = pf_at(mid)
        if pf <= beta:
            hi = mid
            if best is None or beta - pf < beta - best[1]:
                best = (mid, pf, se)
        else:
            lo = mid
    if best is None:
        pf, se = pf_at(hi)
        best = (hi, pf, se)
    return best


def solve_pure_censoring_o(
    cfg: NetworkConfig, p0: float, beta: float, opts: SolverOptions = SolverOptions()
) -> PureDesign:
    """Threshold design for pure censoring under the rate equality.

    tau2 runs on a grid; tau1 follows from P(R^0 | H0) = 1 - p0; the fusion
    threshold is bisected until the false-alarm cap binds. A coarse pass
    locates the optimum, a local pass at full budget refines it.
    """
    sw = cfg.sigma_w
    lo = cfg.A / 2.0 - 4.0 * sw
    hi = cfg.A / 2.0
    # tau1 stays finite only while the lower tail leaves room for the budget
    hi = min(hi, sw * float(ndtri(p0)) - 1e-9)
    if hi <= lo:
        lo = hi - 4.0 * sw
    grid = np.linspace(lo, hi, opts.tau_grid)

    def tau1_of(tau2):
        return sw * float(ndtri(1.0 - p0 + float(ndtr(tau2 / sw))))

    def evaluate(tau2, n_mc):
        tau1 = tau1_of(tau2)
        ev = Crt1Evaluator(cfg, tau1, tau2, _unaware(cfg, tau1, tau2),
                           n_mc, opts.seed, opts.nodes, opts.lr_nodes)

        def pf_at(t):
            _, _, pf, pf_se = ev.pm_pf(0.0, 1.0, t)
            return pf, pf_se

        t, _, _ = bisect_threshold(pf_at, beta, iters=opts.bisect_iters)
        pm, pm_se, pf, pf_se = ev.pm_pf(0.0, 1.0, t)
        return tau1, t, pm, pm_se, pf, pf_se

    coarse = [evaluate(tau2, opts.coarse_n_mc) for tau2 in grid]
    pms = np.array([c[2] for c in coarse])
    i_best = int(np.argmin(pms))

    step = grid[1] - grid[0] if len(grid) > 1 else sw / 25.0
    lo_r = grid[i_best] - opts.refine_cells * step
    hi_r = min(grid[i_best] + opts.refine_cells * step, hi)
    best = None
    for tau2 in np.linspace(lo_r, hi_r, opts.refine_points):
        tau1, t, pm, pm_se, pf, pf_se = evaluate(tau2, opts.n_mc_pu)
        if best is None or pm < best[2]:
            best = (tau2, tau1, pm, pm_se, pf, pf_se, t)
    tau2, tau1, pm, pm_se, pf, pf_se, t = best
    pt, _ = rate_probs(cfg, tau1, tau2, 0.0, 1.0)
    perf = PerfEstimate(pm=pm, pf=pf, pt=pt, pm_se=pm_se, pf_se=pf_se,
                        n_samples=opts.n_mc_pu, route=Route.SEMI_ANALYTIC)
    return PureDesign(tau1=tau1, tau2=tau2, t=t, perf=perf)


class _CrtObjective:
    """pm/pf as functions of (f, t) for one scheme variant, g eliminated.

    Mismatched CRT-I and CRT-II reuse one frozen evaluator; the full CRT-I
    search rebuilds the FC belief at each f (channel pools are shared across
    f by construction, so the scan stays smooth).
    """

    def __init__(self, cfg, tau1, tau2, p0, spec, opts):
        self.cfg = cfg
        self.tau1 = tau1
        self.tau2 = tau2
        self.p0 = p0
        self.spec = spec
        self.opts = opts
        self._cache: dict = {}
        if spec.scheme is Scheme.CRT2:
            self._ev = Crt2Evaluator(cfg, tau1, tau2, _unaware(cfg, tau1, tau2),
                                     opts.n_mc_pu, opts.seed, opts.nodes, opts.lr_nodes)
        elif spec.variant == VARIANT_MISMATCHED:
            self._ev = Crt1Evaluator(cfg, tau1, tau2, _unaware(cfg, tau1, tau2),
                                     opts.n_mc_pu, opts.seed, opts.nodes, opts.lr_nodes)
        else:
            self._ev = None  # built per f

    def g_at(self, f):
        g, _ = g_of_f(self.cfg, self.tau1, self.tau2, self.p0, f)
        return min(max(g, 0.0), 1.0)

    def _evaluator(self, f):
        if self._ev is not None:
            return self._ev
        key = round(f, 12)
        ev = self._cache.get(key)
        if ev is None:
            g = self.g_at(f)
            assumed = AssumedModel.matched(self.cfg, self.tau1, self.tau2, g, f)
            ev = Crt1Evaluator(self.cfg, self.tau1, self.tau2, assumed,
                               self.opts.n_mc_pu, self.opts.seed,
                               self.opts.nodes, self.opts.lr_nodes)
            self._cache[key] = ev
        return ev

    def pm_pf(self, f, t, clip_g=True):
        g, _ = g_of_f(self.cfg, self.tau1, self.tau2, self.p0, f)
        if clip_g:
            g = min(max(g, 0.0), 1.0)
        return self._evaluator(f).pm_pf(g, f, t)

    def perf(self, f, t) -> PerfEstimate:
        return self._evaluator(f).perf(self.g_at(f), f, t)


def _golden_min(fn, lo, hi, iters=40, tol=1e-5):
    invphi = (math.sqrt(5.0) - 1.0) / 2.0
    a, b = lo, hi
    c = b - invphi * (b - a)
    d = a + invphi * (b - a)
    fc, fd = fn(c), fn(d)
    for _ in range(iters):
        if b - a < tol:
            break
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - invphi * (b - a)
            fc = fn(c)
        else:
            a, c, fc = c, d, fd
            d = a + invphi * (b - a)
            fd = fn(d)
    return c if fc < fd else d


def solve_crt_o(
    cfg: NetworkConfig,
    spec: ProblemOSpec,
    pure: PureDesign,
    opts: SolverOptions = SolverOptions(),
) -> CrtSolution:
    """Sequential sub-problem solve for a CRT scheme at fixed thresholds.

    Stage 1 scans the rate-feasible f interval at t = pure.t and refines by
    golden section; near-ties (within tie_se standard errors of the minimum)
    resolve to the largest f, so degenerate low-correlation cases return the
    deterministic mapping exactly. Stage 2 bisects t until P_F = beta.
    """
    if spec.scheme is Scheme.PURE_CENSORING:
        raise ValueError("solve_crt_o expects a CRT scheme")
    tau1, tau2, t_d = pure.tau1, pure.tau2, pure.t
    fr = feasible_f_range(cfg, tau1, tau2, spec.p0)
    if not fr.feasible:
        raise InfeasibleError(
            f"no f keeps g in [0, 1] for p0={spec.p0} at thresholds ({tau1:.4f}, {tau2:.4f})"
        )
    obj = _CrtObjective(cfg, tau1, tau2, spec.p0, spec, opts)

    joint = spec.scheme is Scheme.CRT1 and spec.variant == VARIANT_FULL
    n_grid = opts.f_grid_full if joint else opts.f_grid
    grid = np.linspace(fr.l0p, fr.l1p, n_grid) if fr.l1p > fr.l0p else np.array([fr.l0p])

    def stage1_eval(f):
        # analytical variants hold t = t_d (sequential sub-problem order);
        # the exact-FC variant searches (f, t) jointly: every f is tried at
        # its own cap-tight threshold, cheap thanks to the frozen samples
        if joint:
            t_f, _, _ = bisect_threshold(
                lambda tt: obj.pm_pf(f, tt)[2:], spec.beta, t_init=t_d,
                iters=opts.bisect_iters)
            return obj.pm_pf(f, t_f)
        return obj.pm_pf(f, t_d)

    evals = {}
    for f in grid:
        evals[f] = stage1_eval(float(f))
    tol_bind = lambda se: max(1e-4, 2.0 * se)
    feas = [f for f, (pm, _, pf, pf_se) in evals.items() if pf <= spec.beta + tol_bind(pf_se)]
    if not feas:
        raise InfeasibleError("false-alarm cap unreachable at every rate-feasible f")

    f_min = min(feas, key=lambda f: evals[f][0])
    idx = int(np.searchsorted(grid, f_min))
    lo_b = grid[max(idx - 1, 0)]
    hi_b = grid[min(idx + 1, len(grid) - 1)]
    if hi_b > lo_b:
        f_ref = _golden_min(lambda f: stage1_eval(float(f))[0], lo_b, hi_b)
        evals[float(f_ref)] = stage1_eval(float(f_ref))
        if evals[float(f_ref)][2] <= spec.beta + tol_bind(evals[float(f_ref)][3]):
            feas.append(float(f_ref))

    best_pm, best_se = min((evals[f][0], evals[f][1]) for f in feas)
    ties = [f for f in feas if evals[f][0] <= best_pm + opts.tie_se * best_se]
    f_star = max(ties)

    t_star, _, _ = bisect_threshold(
        lambda t: obj.pm_pf(f_star, t)[2:], spec.beta, t_init=t_d, iters=opts.bisect_iters
    )
    perf = obj.perf(f_star, t_star)
    g_star = obj.g_at(f_star)
    kkt = _certify_o(obj, spec, fr, f_star, t_star, opts)
    return CrtSolution(f_star=f_star, g_star=g_star, t_star=t_star, perf=perf, kkt=kkt)


def _path_derivatives(obj, f, t, step):
    """Central differences of pm and pf along the rate-equality path.

    The category polynomials extend smoothly past the unit box, so the
    difference stencil is evaluated on the polynomial continuation.
    """
    pm_hi, _, pf_hi, _ = obj.pm_pf(f + step, t, clip_g=False)
    pm_lo, _, pf_lo, _ = obj.pm_pf(f - step, t, clip_g=False)
    return (pm_hi - pm_lo) / (2 * step), (pf_hi - pf_lo) / (2 * step)


def _certify_o(obj, spec, fr, f_star, t_star, opts):
    pm, pm_se, pf, pf_se = obj.pm_pf(f_star, t_star)
    dpm, dpf = _path_derivatives(obj, f_star, t_star, opts.fd_step)
    at_hi = f_star >= fr.l1p - 1e-9
    at_lo = f_star <= fr.l0p + 1e-9
    pf_active = abs(pf - spec.beta) <= max(1e-4, 2.0 * pf_se)
    lam = mu1 = mu2 = 0.0
    if pf_active and dpf != 0.0:
        lam = max(0.0, -dpm / dpf)
    grad = dpm + lam * dpf
    if at_hi and grad < 0.0:
        mu1 = -grad
    if at_lo and grad + mu1 > 0.0 and not at_hi:
        mu2 = grad
    mu2 = max(mu2, 0.0)
    return KKTSolution(
        f_star=f_star,
        g_star=obj.g_at(f_star),
        t_star=t_star,
        lam=lam,
        mu1=mu1,
        mu2=mu2,
        residuals=kkt_residuals_o(obj, spec.beta, fr, f_star, t_star, lam, mu1, mu2, opts.fd_step),
    )


def kkt_residuals_o(obj, beta, fr, f, t, lam, mu1, mu2, step=1e-4) -> dict:
    """First-order optimality residuals of the stage-1 sub-problem.

    Keys: stationarity |dL/df|, complementary slackness of the false-alarm
    cap and the two box bounds, and the cap violation.
    """
    if min(lam, mu1, mu2) < 0.0:
        raise ValueError("multipliers must be non-negative")
    pm, _, pf, _ = obj.pm_pf(f, t)
    dpm, dpf = _path_derivatives(obj, f, t, step)
    return {
        "stationarity": abs(dpm + lam * dpf + mu1 - mu2),
        "cs_false_alarm": abs(lam * (pf - beta)),
        "violation_false_alarm": max(0.0, pf - beta),
        "cs_upper_box": abs(mu1 * (f - fr.l1p)),
        "cs_lower_box": abs(mu2 * (fr.l0p - f)),
    }


def kkt_residuals_o_at(
    cfg: NetworkConfig,
    design,
    beta: float,
    f: float,
    lam: float,
    mu1: float,
    mu2: float,
    opts: SolverOptions = SolverOptions(),
    variant: str = VARIANT_MISMATCHED,
) -> dict:
    """Design-level entry: residuals at a candidate f for given multipliers.

    The rate budget is the design's own transmission probability; the
    objective route follows the design's scheme.
    """
    p0, _ = rate_probs(cfg, design.tau1, design.tau2, design.g, design.f)
    spec = ProblemOSpec(p0=p0, beta=beta, scheme=design.scheme, variant=variant)
    obj = _CrtObjective(cfg, design.tau1, design.tau2, p0, spec, opts)
    fr = feasible_f_range(cfg, design.tau1, design.tau2, p0)
    return kkt_residuals_o(obj, beta, fr, f, design.t, lam, mu1, mu2, opts.fd_step)
