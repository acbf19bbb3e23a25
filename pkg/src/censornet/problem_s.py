"""Design problem (S): minimize the transmission rate subject to miss and
false-alarm caps.

For the CRT schemes the category sums are polynomials in (g, f) whose signed
monomial split turns the caps into differences of posynomials. Each cap is
rewritten as a ratio constraint, the denominator posynomial is condensed to
its arithmetic-geometric-mean monomial minorant at the current iterate, and
the resulting geometric program is solved in log coordinates by a damped
Newton barrier method. A substitution bound (1-x <= 1/(4x)) provides the
initial feasible point, and the fusion threshold is re-tightened between
rounds until the binding cap holds with equality.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np
from scipy.optimize import nnls

from .fusion_rules import AssumedModel
from .network_model import (
    Hypothesis,
    NetworkConfig,
    Scheme,
    interval_probs,
    rate_probs,
)
from .performance_eval import (
    DEFAULT_N_MC_PU,
    Crt1Evaluator,
    Crt2Evaluator,
    PerfEstimate,
    Route,
    SignedBivariatePolynomial,
)
from .problem_o import InfeasibleError, PureDesign, bisect_threshold

__all__ = [
    "ProblemSSpec",
    "CondensedConstraint",
    "GPIterate",
    "GpInfeasibleError",
    "SOptions",
    "CrtSolutionS",
    "solve_pure_censoring_s",
    "condense_agm",
    "solve_gp_2var",
    "solve_s_ini",
    "solve_crt_s",
    "verify_feasibility_chain",
    "kkt_residuals_s",
]

VARIANT_MISMATCHED = "mismatched_fc"
VARIANT_FULL = "full_search"


class GpInfeasibleError(RuntimeError):
    """The geometric program has no strictly feasible point in the box."""


@dataclass(frozen=True)
class ProblemSSpec:
    alpha: float
    beta: float
    scheme: Scheme
    variant: str = VARIANT_MISMATCHED
    epsilon_box: float = 1e-3  # monomials need strictly positive variables

    def __post_init__(self):
        if not (0.0 < self.alpha < 1.0 and 0.0 < self.beta < 1.0):
            raise ValueError("alpha and beta must lie in (0, 1)")
        if not 0.0 < self.epsilon_box < 0.1:
            raise ValueError("epsilon_box must be a small positive number")
        if self.variant not in (VARIANT_MISMATCHED, VARIANT_FULL):
            raise ValueError(f"unknown variant {self.variant!r}")


@dataclass(frozen=True)
class CondensedConstraint:
    """Ratio constraint with its denominator condensed to a monomial.

    numerator: posynomial terms (coeff, e_g, e_f); the denominator posynomial
    was 1 + P2/cap, replaced by coeff * g^e_g f^e_f touching it at `point`.
    """

    numerator: tuple
    mono_coeff: float
    mono_eg: float
    mono_ef: float
    point: tuple
    weights: tuple

    def gp_terms(self, cap: float):
        """Posynomial terms of numerator / (cap * monomial) <= 1."""
        return [
            (c / (cap * self.mono_coeff), eg - self.mono_eg, ef - self.mono_ef)
            for c, eg, ef in self.numerator
        ]

    def denominator_value(self, g: float, f: float) -> float:
        return self.mono_coeff * g**self.mono_eg * f**self.mono_ef


@dataclass(frozen=True)
class GPIterate:
    iteration: int
    g: float
    f: float
    t: float
    objective: float
    slack_m: float
    slack_f: float
    note: str = ""


@dataclass(frozen=True)
class CrtSolutionS:
    f_star: float
    g_star: float
    t_star: float
    perf: PerfEstimate
    trace: tuple
    kkt: dict


@dataclass(frozen=True)
class SOptions:
    n_mc_pu: int = DEFAULT_N_MC_PU
    seed: int = 0
    nodes: int | None = None
    lr_nodes: int | None = None
    tau_grid_2d: int = 25
    coarse_n_mc: int = 2_000
    refine_points: int = 5
    max_outer: int = 30
    max_inner: int = 50
    inner_tol: float = 1e-4
    t_rel_tol: float = 1e-3
    snap_rel_tol: float = 0.05
    bisect_iters: int = 80
    fd_step: float = 1e-4
    polish_steps: tuple = (0.08, 0.04, 0.02, 0.01)

    def scaled(self, factor: float) -> "SOptions":
        return replace(
            self,
            n_mc_pu=max(200, int(self.n_mc_pu * factor)),
            coarse_n_mc=max(200, int(self.coarse_n_mc * factor)),
        )


# ---------------------------------------------------------------------------
# Pure censoring
# ---------------------------------------------------------------------------


def _unaware(cfg, tau1, tau2):
    return AssumedModel(tau1=tau1, tau2=tau2, rho_fc=cfg.rho, g_fc=0.0, f_fc=1.0)


def tighten_t(pm_pf_at, alpha, beta, t_init=1.0, iters=80):
    """Adjust t so the binding cap holds with equality.

    First drives P_F to beta; if the miss cap is then violated, drives P_M to
    alpha instead (raising t relaxes P_F). Returns (t, pm, pm_se, pf, pf_se,
    feasible).
    """
    t_f, _, _ = bisect_threshold(lambda t: pm_pf_at(t)[2:], beta, t_init=t_init, iters=iters)
    pm, pm_se, pf, pf_se = pm_pf_at(t_f)
    if pm <= alpha + pm_se:
        return t_f, pm, pm_se, pf, pf_se, True
    # P_M binding: pm is non-decreasing in t, so bisect on -pm against -alpha
    t_m, _, _ = bisect_threshold(
        lambda t: (-pm_pf_at(t)[0], pm_pf_at(t)[1]), -alpha, t_init=t_f, iters=iters
    )
    pm, pm_se, pf, pf_se = pm_pf_at(t_m)
    ok = pf <= beta + max(1e-4, 2.0 * pf_se) and pm <= alpha + pm_se
    return t_m, pm, pm_se, pf, pf_se, ok


def solve_pure_censoring_s(
    cfg: NetworkConfig, alpha: float, beta: float, opts: SOptions = SOptions()
) -> PureDesign:
    """Minimal-rate threshold pair meeting both caps.

    Coarse 2-D threshold grid, then a local refinement at full budget around
    the cheapest feasible pair. The fusion threshold per pair makes the
    binding cap tight.
    """
    sw = cfg.sigma_w
    lo2, hi2 = cfg.A / 2.0 - 4.0 * sw, cfg.A / 2.0
    lo1, hi1 = cfg.A / 2.0 - 2.0 * sw, cfg.A / 2.0 + 4.0 * sw
    t2s = np.linspace(lo2, hi2, opts.tau_grid_2d)
    t1s = np.linspace(lo1, hi1, opts.tau_grid_2d)

    def evaluate(tau1, tau2, n_mc):
        ev = Crt1Evaluator(cfg, tau1, tau2, _unaware(cfg, tau1, tau2),
                           n_mc, opts.seed, opts.nodes, opts.lr_nodes)
        t, pm, pm_se, pf, pf_se, ok = tighten_t(
            lambda tt: ev.pm_pf(0.0, 1.0, tt), alpha, beta, iters=opts.bisect_iters
        )
        pt, _ = rate_probs(cfg, tau1, tau2, 0.0, 1.0)
        return t, pm, pm_se, pf, pf_se, ok, pt

    best = None
    for tau2 in t2s:
        for tau1 in t1s:
            if tau1 < tau2:
                continue
            t, pm, pm_se, pf, pf_se, ok, pt = evaluate(tau1, tau2, opts.coarse_n_mc)
            if ok and (best is None or pt < best[0]):
                best = (pt, tau1, tau2)
    if best is None:
        raise InfeasibleError(f"no threshold pair meets pm <= {alpha}, pf <= {beta}")

    _, tau1_c, tau2_c = best
    d1 = t1s[1] - t1s[0]
    d2 = t2s[1] - t2s[0]
    best_fine = None
    for tau2 in np.linspace(tau2_c - d2, tau2_c + d2, opts.refine_points):
        for tau1 in np.linspace(tau1_c - d1, tau1_c + d1, opts.refine_points):
            if tau1 < tau2:
                continue
            t, pm, pm_se, pf, pf_se, ok, pt = evaluate(tau1, tau2, opts.n_mc_pu)
            if ok and (best_fine is None or pt < best_fine[0]):
                best_fine = (pt, tau1, tau2, t, pm, pm_se, pf, pf_se)
    if best_fine is None:
        raise InfeasibleError("refinement found no feasible pair; caps too tight")
    pt, tau1, tau2, t, pm, pm_se, pf, pf_se = best_fine
    perf = PerfEstimate(pm=pm, pf=pf, pt=pt, pm_se=pm_se, pf_se=pf_se,
                        n_samples=opts.n_mc_pu, route=Route.SEMI_ANALYTIC)
    return PureDesign(tau1=tau1, tau2=tau2, t=t, perf=perf)


# ---------------------------------------------------------------------------
# Geometric-programming machinery
# ---------------------------------------------------------------------------


def condense_agm(denominator, point) -> CondensedConstraint:
    """AGM monomial minorant of a posynomial at a strictly positive point.

    With weights nu_i = u_i(x') / D(x'), prod (u_i(x)/nu_i)^nu_i <= D(x) for
    every positive x, with equality at x'. The numerator is carried along
    unchanged so callers can form the posynomial ratio constraint.
    """
    g0, f0 = point
    if g0 <= 0.0 or f0 <= 0.0:
        raise ValueError("expansion point must be strictly positive")
    terms = [(float(c), float(eg), float(ef)) for c, eg, ef in denominator if c != 0.0]
    if not terms:
        raise ValueError("denominator posynomial has no terms")
    vals = np.array([c * g0**eg * f0**ef for c, eg, ef in terms])
    total = vals.sum()
    if total <= 0.0:
        raise ZeroDivisionError("denominator vanishes at the expansion point")
    nu = vals / total
    log_coeff = float(np.sum(nu * (np.log([t[0] for t in terms]) - np.log(nu))))
    eg = float(np.sum(nu * [t[1] for t in terms]))
    ef = float(np.sum(nu * [t[2] for t in terms]))
    return CondensedConstraint(
        numerator=(),
        mono_coeff=math.exp(log_coeff),
        mono_eg=eg,
        mono_ef=ef,
        point=(g0, f0),
        weights=tuple(nu),
    )


def _lse(log_c, E, x):
    z = log_c + E @ x
    zmax = z.max()
    s = np.exp(z - zmax)
    ssum = s.sum()
    val = zmax + math.log(ssum)
    w = s / ssum
    grad = E.T @ w
    hess = E.T @ ((np.diag(w) - np.outer(w, w)) @ E)
    return val, grad, hess


def _prep(terms):
    log_c = np.array([math.log(c) for c, _, _ in terms])
    E = np.array([[eg, ef] for _, eg, ef in terms], dtype=float)
    return log_c, E


def solve_gp_2var(
    objective,
    constraints,
    box=(1e-3, 1.0),
    x0=None,
    grid=41,
    kkt_tol=1e-6,
):
    """Minimize a posynomial of (g, f) under posynomial <= 1 constraints.

    In log coordinates the problem is convex (log-sum-exp constraints);
    solved by a damped-Newton barrier with geometrically increasing weight.
    Returns (g, f, info) where info carries constraint multiplier estimates,
    slacks, and the stationarity residual in log coordinates.

    Raises GpInfeasibleError when no strictly feasible point exists in the
    box (detected on a log-space grid).
    """
    lo = math.log(box[0])
    hi = math.log(box[1])
    log_c0, E0 = _prep(objective)
    cons = [_prep(c) for c in constraints]

    def h_all(x):
        return np.array([_lse(lc, E, x)[0] for lc, E in cons])

    # strictly feasible start: max-margin point on a grid, optionally seeded
    best_x, best_m = None, np.inf
    candidates = []
    if x0 is not None:
        candidates.append(np.log(np.clip(x0, box[0], box[1])))
    gg = np.linspace(lo, hi, grid)
    for p in gg:
        for q in gg:
            candidates.append(np.array([p, q]))
    for x in candidates:
        m = h_all(x).max() if cons else -1.0
        if m < best_m:
            best_m, best_x = m, x.copy()
    if best_m >= 0.0:
        raise GpInfeasibleError(f"no strictly feasible point (best margin {best_m:.3e})")
    x = best_x
    shrink = 1e-9
    x = np.clip(x, lo + shrink, hi - shrink)

    m_total = len(cons) + 4
    t_bar = 1.0
    while True:
        for _ in range(200):
            val0, g0, H0 = _lse(log_c0, E0, x)
            grad = t_bar * g0
            hess = t_bar * H0
            feas = True
            for lc, E in cons:
                hv, hg, hh = _lse(lc, E, x)
                if hv >= 0.0:
                    feas = False
                    break
                grad += hg / (-hv)
                hess += hh / (-hv) + np.outer(hg, hg) / hv**2
            if not feas:
                raise GpInfeasibleError("iterate left the feasible region")
            for j, (w_lo, w_hi) in enumerate(((lo, hi), (lo, hi))):
                grad[j] += -1.0 / (x[j] - w_lo) + 1.0 / (w_hi - x[j])
                hess[j, j] += 1.0 / (x[j] - w_lo) ** 2 + 1.0 / (w_hi - x[j]) ** 2
            if np.abs(grad).max() / t_bar < 1e-9:
                break
            try:
                step = np.linalg.solve(hess + 1e-12 * np.eye(2), -grad)
            except np.linalg.LinAlgError:
                step = -grad
            lam2 = float(-grad @ step)
            if lam2 / 2.0 < 1e-16:
                break
            s = 1.0
            while True:
                xn = x + s * step
                if (xn > lo).all() and (xn < hi).all() and (not cons or h_all(xn).max() < 0.0):
                    v_new = t_bar * _lse(log_c0, E0, xn)[0]
                    v_new -= sum(math.log(-_lse(lc, E, xn)[0]) for lc, E in cons)
                    v_new -= sum(math.log(xn[j] - lo) + math.log(hi - xn[j]) for j in range(2))
                    v_old = t_bar * val0
                    v_old -= sum(math.log(-_lse(lc, E, x)[0]) for lc, E in cons)
                    v_old -= sum(math.log(x[j] - lo) + math.log(hi - x[j]) for j in range(2))
                    if v_new <= v_old - 0.25 * s * lam2:
                        break
                s *= 0.5
                if s < 1e-14:
                    break
            if s < 1e-14:
                break
            x = x + s * step
        if m_total / t_bar < 1e-10:
            break
        t_bar *= 20.0

    slacks = h_all(x) if cons else np.array([])
    # certify first-order optimality of the original program: fit non-negative
    # multipliers for the active constraints and box walls by least squares
    cols, labels = [], []
    for i, (lc, E) in enumerate(cons):
        if -slacks[i] < 1e-6:
            cols.append(_lse(lc, E, x)[1])
            labels.append(i)
    wall_tol = 1e-6
    for j in range(2):
        if x[j] - lo < wall_tol:
            cols.append(-np.eye(2)[j])
        if hi - x[j] < wall_tol:
            cols.append(np.eye(2)[j])
    b = -_lse(log_c0, E0, x)[1]
    if cols:
        fitted, _ = nnls(np.array(cols).T, b)
        resid = np.array(cols).T @ fitted - b
    else:
        fitted = np.array([])
        resid = -b
    lams = np.zeros(len(cons))
    for pos, i in enumerate(labels):
        lams[i] = fitted[pos]
    info = {
        "multipliers": lams,
        "slacks_log": slacks,
        "kkt_residual": float(np.abs(resid).max()),
        "barrier_weight": t_bar,
    }
    if info["kkt_residual"] > kkt_tol:
        info["warning"] = "kkt residual above tolerance"
    g, f = float(math.exp(x[0])), float(math.exp(x[1]))
    return g, f, info


def _substituted_posy(basis_terms):
    """Replace (1-g)^a -> (4g)^-a and (1-f)^c -> (4f)^-c in a basis term list."""
    out = {}
    for c, e_g, e_1mg, e_f, e_1mf in basis_terms:
        if c == 0.0:
            continue
        coeff = c / 4.0 ** (e_1mg + e_1mf)
        key = (e_g - e_1mg, e_f - e_1mf)
        out[key] = out.get(key, 0.0) + coeff
    return [(c, eg, ef) for (eg, ef), c in out.items() if c > 0.0]


def solve_s_ini(basis_m, basis_f, alpha, beta, objective, box=(1e-3, 1.0)):
    """Feasible starting point from the 1-x <= 1/(4x) substitution.

    The substituted expressions dominate the originals on (0, 1]^2, so any
    point feasible for them satisfies the true caps. Falls back to the
    near-deterministic corner when the substituted program is infeasible.
    """
    pm_terms = [(c / alpha, eg, ef) for c, eg, ef in _substituted_posy(basis_m)]
    pf_terms = [(c / beta, eg, ef) for c, eg, ef in _substituted_posy(basis_f)]
    try:
        g, f, info = solve_gp_2var(objective, [pm_terms, pf_terms], box=box)
        return g, f, info, False
    except GpInfeasibleError:
        fallback = 1.0 - 1e-3
        return fallback, fallback, {"warning": "initialization GP infeasible"}, True


def verify_feasibility_chain(point, signed_m, signed_f, cond_m, cond_f, alpha, beta):
    """Slack report for the condensed -> ratio -> signed constraint chain."""
    g, f = point
    p1_m, p2_m = signed_m.eval_parts(g, f)
    p1_f, p2_f = signed_f.eval_parts(g, f)
    dm_true = 1.0 + p2_m / alpha
    df_true = 1.0 + p2_f / beta
    dm_mono = cond_m.denominator_value(g, f)
    df_mono = cond_f.denominator_value(g, f)
    report = {
        "condensed_m": alpha * dm_mono - p1_m,
        "condensed_f": beta * df_mono - p1_f,
        "ratio_m": alpha * dm_true - p1_m,
        "ratio_f": beta * df_true - p1_f,
        "cap_m": alpha - (p1_m - p2_m),
        "cap_f": beta - (p1_f - p2_f),
        "minorant_m": dm_true - dm_mono,
        "minorant_f": df_true - df_mono,
    }
    ok = (
        report["condensed_m"] >= -1e-8
        and report["condensed_f"] >= -1e-8
        and report["cap_m"] >= -1e-9
        and report["cap_f"] >= -1e-9
        and report["minorant_m"] >= -1e-10
        and report["minorant_f"] >= -1e-10
    )
    return ok, report


# ---------------------------------------------------------------------------
# CRT outer loop
# ---------------------------------------------------------------------------


def _evaluator(cfg, tau1, tau2, scheme, opts):
    if scheme is Scheme.CRT2:
        return Crt2Evaluator(cfg, tau1, tau2, _unaware(cfg, tau1, tau2),
                             opts.n_mc_pu, opts.seed, opts.nodes, opts.lr_nodes)
    return Crt1Evaluator(cfg, tau1, tau2, _unaware(cfg, tau1, tau2),
                         opts.n_mc_pu, opts.seed, opts.nodes, opts.lr_nodes)


def _reduced_objective(cfg, tau1, tau2):
    p_m1, p_0, _ = interval_probs(cfg, tau1, tau2, Hypothesis.H0)
    return [(p_0, 1.0, 0.0), (p_m1, 0.0, 1.0)], p_0, p_m1


def solve_crt_s(
    cfg: NetworkConfig,
    spec: ProblemSSpec,
    pure: PureDesign,
    opts: SOptions = SOptions(),
) -> CrtSolutionS:
    """Signomial pipeline at the pure-censoring thresholds.

    Outer rounds: extract the signed polynomials at the current t, start from
    the substitution GP, run successive condensation to convergence, then
    re-tighten t on the binding cap. Afterwards a projection step prefers
    corner candidates (g -> 0, f -> 1) whose true evaluation stays feasible
    unless the interior point improves the rate beyond snap_rel_tol.
    """
    if spec.scheme is Scheme.PURE_CENSORING:
        raise ValueError("solve_crt_s expects a CRT scheme")
    tau1, tau2, t = pure.tau1, pure.tau2, pure.t
    ev = _evaluator(cfg, tau1, tau2, spec.scheme, opts)
    objective, p_0, p_m1 = _reduced_objective(cfg, tau1, tau2)
    box = (spec.epsilon_box, 1.0)
    alpha, beta = spec.alpha, spec.beta

    def true_caps_ok(g, f, tt):
        pm, pm_se, pf, pf_se = ev.pm_pf(g, f, tt)
        return (pm <= alpha + pm_se) and (pf <= beta + max(1e-4, 2.0 * pf_se))

    trace = []
    g_cur = f_cur = None
    note = ""
    for outer in range(opts.max_outer):
        basis_m, basis_f = ev.term_lists(t)
        signed_m = SignedBivariatePolynomial.from_basis_terms(basis_m, cfg.K)
        signed_f = SignedBivariatePolynomial.from_basis_terms(basis_f, cfg.K)
        g_cur, f_cur, ini_info, fell_back = solve_s_ini(
            basis_m, basis_f, alpha, beta, objective, box=box
        )
        note = "ini_fallback" if fell_back else "ini"
        p2_m_terms = [(1.0, 0.0, 0.0)] + [
            (c / alpha, eg, ef) for c, eg, ef in signed_m.part_terms("neg")
        ]
        p2_f_terms = [(1.0, 0.0, 0.0)] + [
            (c / beta, eg, ef) for c, eg, ef in signed_f.part_terms("neg")
        ]
        p1_m_terms = signed_m.part_terms("pos")
        p1_f_terms = signed_f.part_terms("pos")
        for inner in range(opts.max_inner):
            cond_m = condense_agm(p2_m_terms, (g_cur, f_cur))
            cond_f = condense_agm(p2_f_terms, (g_cur, f_cur))
            cons = [
                [
                    (c / (alpha * cond_m.mono_coeff), eg - cond_m.mono_eg, ef - cond_m.mono_ef)
                    for c, eg, ef in p1_m_terms
                ],
                [
                    (c / (beta * cond_f.mono_coeff), eg - cond_f.mono_eg, ef - cond_f.mono_ef)
                    for c, eg, ef in p1_f_terms
                ],
            ]
            try:
                g_new, f_new, gp_info = solve_gp_2var(
                    objective, cons, box=box, x0=(g_cur, f_cur)
                )
            except GpInfeasibleError:
                note = "gp_infeasible"
                break
            ok, chain = verify_feasibility_chain(
                (g_new, f_new), signed_m, signed_f, cond_m, cond_f, alpha, beta
            )
            obj_val = p_0 * g_new + p_m1 * f_new
            trace.append(
                GPIterate(
                    iteration=len(trace),
                    g=g_new,
                    f=f_new,
                    t=t,
                    objective=obj_val,
                    slack_m=chain["cap_m"],
                    slack_f=chain["cap_f"],
                    note=note if inner == 0 else "",
                )
            )
            moved = max(abs(g_new - g_cur), abs(f_new - f_cur))
            g_cur, f_cur = g_new, f_new
            if moved < opts.inner_tol:
                break
        t_new, pm, pm_se, pf, pf_se, ok = tighten_t(
            lambda tt: ev.pm_pf(g_cur, f_cur, tt), alpha, beta,
            t_init=t, iters=opts.bisect_iters,
        )
        rel = abs(t_new - t) / max(t, 1e-12)
        t = t_new
        if rel < opts.t_rel_tol:
            break

    # corner projection: prefer the deterministic mapping when the interior
    # gain is below the documented tolerance
    candidates = []
    for g_c, f_c, tag in (
        (g_cur, f_cur, "interior"),
        (0.0, f_cur, "g0"),
        (g_cur, 1.0, "f1"),
        (0.0, 1.0, "pure"),
    ):
        t_c, pm, pm_se, pf, pf_se, ok = tighten_t(
            lambda tt: ev.pm_pf(g_c, f_c, tt), alpha, beta, t_init=t, iters=opts.bisect_iters
        )
        if ok:
            pt, _ = rate_probs(cfg, tau1, tau2, g_c, f_c)
            candidates.append((tag, g_c, f_c, t_c, pt))
    if not candidates:
        raise InfeasibleError("no feasible point survived the final projection")
    pt_best = min(c[4] for c in candidates)
    pt_pure = next((c[4] for c in candidates if c[0] == "pure"), None)
    tol_abs = opts.snap_rel_tol * (pt_pure if pt_pure is not None else pt_best)
    for tag in ("pure", "f1", "g0", "interior"):
        hit = next((c for c in candidates if c[0] == tag), None)
        if hit is not None and hit[4] <= pt_best + tol_abs:
            _, g_cur, f_cur, t, _ = hit
            break

    if spec.scheme is Scheme.CRT1 and spec.variant == VARIANT_FULL:
        g_cur, f_cur, t = _polish_full(cfg, tau1, tau2, spec, (g_cur, f_cur, t), opts)
        ev_final = Crt1Evaluator(
            cfg, tau1, tau2,
            AssumedModel.matched(cfg, tau1, tau2, g_cur, f_cur),
            opts.n_mc_pu, opts.seed, opts.nodes, opts.lr_nodes,
        )
    else:
        ev_final = ev
    perf = ev_final.perf(g_cur, f_cur, t)
    kkt = kkt_residuals_s(ev, (g_cur, f_cur, t), alpha, beta, p_0, p_m1, opts.fd_step)
    return CrtSolutionS(
        f_star=f_cur, g_star=g_cur, t_star=t, perf=perf, trace=tuple(trace), kkt=kkt
    )


def _polish_full(cfg, tau1, tau2, spec, start, opts):
    """Pattern search on (g, f) with the draw-matched FC statistic.

    Each candidate re-tightens t on its binding cap; a move is accepted when
    it stays feasible and reduces the exact rate.
    """
    alpha, beta = spec.alpha, spec.beta
    _, p_0, p_m1 = _reduced_objective(cfg, tau1, tau2)
    cache = {}

    def eval_point(g, f, t_init):
        key = (round(g, 10), round(f, 10))
        if key in cache:
            return cache[key]
        ev = Crt1Evaluator(cfg, tau1, tau2,
                           AssumedModel.matched(cfg, tau1, tau2, g, f),
                           opts.n_mc_pu, opts.seed, opts.nodes, opts.lr_nodes)
        t_c, pm, pm_se, pf, pf_se, ok = tighten_t(
            lambda tt: ev.pm_pf(g, f, tt), alpha, beta, t_init=t_init, iters=opts.bisect_iters
        )
        pt, _ = rate_probs(cfg, tau1, tau2, g, f)
        cache[key] = (ok, pt, t_c)
        return cache[key]

    g, f, t = start
    ok0, pt, t = eval_point(g, f, t)
    if not ok0:
        return start
    for step in opts.polish_steps:
        improved = True
        while improved:
            improved = False
            for dg, df in ((-1, 0), (0, -1), (-1, -1), (1, -1), (-1, 1)):
                g_n = min(max(g + dg * step, 0.0), 1.0)
                f_n = min(max(f + df * step, 0.0), 1.0)
                if (g_n, f_n) == (g, f):
                    continue
                ok, pt_n, t_n = eval_point(g_n, f_n, t)
                if ok and pt_n < pt - 1e-12:
                    g, f, t, pt = g_n, f_n, t_n, pt_n
                    improved = True
                    break
    return g, f, t


def kkt_residuals_s_at(
    cfg: NetworkConfig,
    design,
    alpha: float,
    beta: float,
    lam1: float,
    lam2: float,
    mus: tuple,
    opts: SOptions = SOptions(),
) -> dict:
    """Residuals of the stationarity/complementarity system for given multipliers.

    mus = (mu1, mu2, mu3, mu4) for f <= 1, f >= 0, g <= 1, g >= 0. The
    objective gradient is the pair of null-hypothesis interval masses;
    performance derivatives come from central differences at fixed t.
    """
    if lam1 < 0 or lam2 < 0 or min(mus) < 0:
        raise ValueError("multipliers must be non-negative")
    ev = _evaluator(cfg, design.tau1, design.tau2, design.scheme, opts)
    _, p_0, p_m1 = _reduced_objective(cfg, design.tau1, design.tau2)
    g, f, t = design.g, design.f, design.t
    step = opts.fd_step
    d_pm_g = (ev.pm_pf(g + step, f, t)[0] - ev.pm_pf(g - step, f, t)[0]) / (2 * step)
    d_pm_f = (ev.pm_pf(g, f + step, t)[0] - ev.pm_pf(g, f - step, t)[0]) / (2 * step)
    d_pf_g = (ev.pm_pf(g + step, f, t)[2] - ev.pm_pf(g - step, f, t)[2]) / (2 * step)
    d_pf_f = (ev.pm_pf(g, f + step, t)[2] - ev.pm_pf(g, f - step, t)[2]) / (2 * step)
    pm, _, pf, _ = ev.pm_pf(g, f, t)
    mu1, mu2, mu3, mu4 = mus
    return {
        "stationarity_f": abs(p_m1 + lam1 * d_pm_f + lam2 * d_pf_f + mu1 - mu2),
        "stationarity_g": abs(p_0 + lam1 * d_pm_g + lam2 * d_pf_g + mu3 - mu4),
        "cs_miss": abs(lam1 * (pm - alpha)),
        "cs_fa": abs(lam2 * (pf - beta)),
        "cs_f_hi": abs(mu1 * (f - 1.0)),
        "cs_f_lo": abs(mu2 * f),
        "cs_g_hi": abs(mu3 * (g - 1.0)),
        "cs_g_lo": abs(mu4 * g),
        "violation_miss": max(0.0, pm - alpha),
        "violation_fa": max(0.0, pf - beta),
    }


def kkt_residuals_s(ev, point, alpha, beta, obj_g, obj_f, step=1e-4) -> dict:
    """Stationarity and complementary-slackness residuals at a candidate.

    Multipliers for the active constraints are fitted by non-negative least
    squares on the two stationarity equations; box multipliers enter only at
    their bounds.
    """
    g, f, t = point
    pm, pm_se, pf, pf_se = ev.pm_pf(g, f, t)
    d_pm_g = (ev.pm_pf(g + step, f, t)[0] - ev.pm_pf(g - step, f, t)[0]) / (2 * step)
    d_pm_f = (ev.pm_pf(g, f + step, t)[0] - ev.pm_pf(g, f - step, t)[0]) / (2 * step)
    d_pf_g = (ev.pm_pf(g + step, f, t)[2] - ev.pm_pf(g - step, f, t)[2]) / (2 * step)
    d_pf_f = (ev.pm_pf(g, f + step, t)[2] - ev.pm_pf(g, f - step, t)[2]) / (2 * step)

    cols = []
    labels = []
    if abs(pm - alpha) <= max(1e-4, 3.0 * pm_se):
        cols.append([d_pm_f, d_pm_g])
        labels.append("lambda_miss")
    if abs(pf - beta) <= max(1e-4, 3.0 * pf_se):
        cols.append([d_pf_f, d_pf_g])
        labels.append("lambda_fa")
    if f >= 1.0 - 1e-9:
        cols.append([1.0, 0.0])
        labels.append("mu_f_hi")
    if f <= 1e-9:
        cols.append([-1.0, 0.0])
        labels.append("mu_f_lo")
    if g >= 1.0 - 1e-9:
        cols.append([0.0, 1.0])
        labels.append("mu_g_hi")
    if g <= 1e-9:
        cols.append([0.0, -1.0])
        labels.append("mu_g_lo")
    b = -np.array([obj_f, obj_g])
    if cols:
        A = np.array(cols).T
        mults, _ = nnls(A, b)
        resid = A @ mults - b
    else:
        mults = np.array([])
        resid = -b
    out = {
        "stationarity_f": abs(resid[0]),
        "stationarity_g": abs(resid[1]),
        "violation_miss": max(0.0, pm - alpha),
        "violation_fa": max(0.0, pf - beta),
        "pm": pm,
        "pf": pf,
    }
    for name, val in zip(labels, mults):
        out[name] = float(val)
    return out
