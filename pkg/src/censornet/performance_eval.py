"""Miss/false-alarm/transmission evaluation by two independent routes.

Route 1 (semi-analytic): the category-occupancy sums. Conditioned on which
category every sensor falls in, the alarm probability P_u is a channel-only
quantity estimated by Monte Carlo; the outer sum over occupancy vectors is
exact (multinomial weights x joint rectangle probabilities x polynomial
weights in g and f).

Route 2 (oracle): a full end-to-end simulation of observations, randomized
mapping, fading and fusion, used to validate route 1.

The module also extracts the signed monomial expansion of the category sums
in (f, g), which the rate-minimization solver consumes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .correlated_gaussian import (
    rectangle_prob_counts,
    substream,
)
from .fusion_rules import (
    AssumedModel,
    batch_log_lr,
    crt1_emission,
    crt2_emission,
    _fc_interval_probs,
)
from .network_model import DesignPoint, Hypothesis, NetworkConfig, Scheme, rate_probs

__all__ = [
    "Route",
    "PerfEstimate",
    "CategoryVector",
    "SignedBivariatePolynomial",
    "Crt1Evaluator",
    "Crt2Evaluator",
    "estimate_pu",
    "perf_semianalytic_crt1",
    "perf_semianalytic_crt2",
    "perf_oracle",
    "extract_signed_coeffs",
]

DEFAULT_N_MC_PU = 20_000
DEFAULT_N_MC_ORACLE = 1_000_000



class Route(Enum):
    SEMI_ANALYTIC = "semi_analytic"
    ORACLE = "oracle"


@dataclass(frozen=True)
class PerfEstimate:
    """Operating-point probabilities with Monte-Carlo standard errors."""

    pm: float
    pf: float
    pt: float
    pm_se: float
    pf_se: float
    n_samples: int
    route: Route

    @property
    def pc(self) -> float:
        return 1.0 - self.pt

    def __post_init__(self):
        for name in ("pm", "pf", "pt"):
            v = getattr(self, name)
            if not -1e-9 <= v <= 1.0 + 1e-9:
                raise ValueError(f"{name}={v} outside [0, 1]")


# ---------------------------------------------------------------------------
# Category bookkeeping
# ---------------------------------------------------------------------------

# CRT-II categories: (interval d, r_f, r_g), in the fixed enumeration order.
CRT2_CATEGORIES: tuple[tuple[int, int, int], ...] = (
    (1, 1, 1),   # 1_1
    (1, 1, 0),   # 1_0
    (0, 1, 0),   # 2_1
    (0, 0, 0),   # 2_0
    (0, 1, 1),   # 3_1
    (0, 0, 1),   # 3_0
    (-1, 0, 1),  # 4_1
    (-1, 0, 0),  # 4_0
    (-1, 1, 1),  # 5_1
    (-1, 1, 0),  # 5_0
    (1, 0, 1),   # 6_1
    (1, 0, 0),   # 6_0
)


def _symbol_for(d: int, r_f: int, r_g: int) -> int:
    if d == 1:
        return 1
    if d == 0:
        return -r_g
    return -r_f


@dataclass(frozen=True)
class CategoryVector:
    """Occupancy counts of the per-sensor categories.

    CRT-I uses the 5 (interval, symbol) classes; CRT-II the 12
    (interval, r_f, r_g) classes in the CRT2_CATEGORIES order.
    """

    scheme: Scheme
    counts: tuple[int, ...]

    def __post_init__(self):
        expected = 5 if self.scheme in (Scheme.CRT1, Scheme.PURE_CENSORING) else 12
        if len(self.counts) != expected:
            raise ValueError(f"{self.scheme} expects {expected} counts")
        if min(self.counts) < 0:
            raise ValueError("counts must be non-negative")

    @property
    def K(self) -> int:
        return sum(self.counts)

    @property
    def a_g(self) -> int:
        """Number of sensors whose r_g draw fired (CRT-II only)."""
        return sum(c for c, (_, _, rg) in zip(self.counts, CRT2_CATEGORIES) if rg == 1)

    @property
    def a_f(self) -> int:
        """Number of sensors whose r_f draw fired (CRT-II only)."""
        return sum(c for c, (_, rf, _) in zip(self.counts, CRT2_CATEGORIES) if rf == 1)


def _compositions(total: int, parts: int):
    """All tuples of `parts` non-negative ints summing to `total`."""
    if parts == 1:
        yield (total,)
        return
    for head in range(total + 1):
        for tail in _compositions(total - head, parts - 1):
            yield (head,) + tail


def _multinomial(counts) -> float:
    num = math.factorial(sum(counts))
    for c in counts:
        num //= math.factorial(c)
    return float(num)


# ---------------------------------------------------------------------------
# Conditional alarm-probability sampler
# ---------------------------------------------------------------------------


class PuSampler:
    """Monte-Carlo sampler of the conditional alarm probability P(u0=1 | category).

    For each sensor-category multiset it draws a dedicated channel/noise pool
    (counter-based substream keyed by the category content, so results are
    independent of evaluation order and worker count), evaluates the fusion
    log-LR for every trial, and stores the sorted samples. The samples do not
    depend on the threshold t, so any number of threshold bisections and
    design scans reuse the same draws.
    """

    def __init__(
        self,
        cfg: NetworkConfig,
        assumed: AssumedModel,
        n_mc: int,
        seed: int,
        lr_nodes: int | None = None,
        share_pools: bool = False,
    ):
        self.cfg = cfg
        self.assumed = assumed
        self.n_mc = int(n_mc)
        self.seed = seed
        self.share_pools = share_pools
        self.q0, self.q1, self.w = _fc_interval_probs(cfg, assumed, lr_nodes)
        self._samples: dict = {}

    def _pool(self, kind: str, slots: tuple):
        # shared pools correlate the category estimates so that single-swap
        # contrasts (derivative checks) cancel the common channel noise;
        # independent pools keep the level estimates' error propagation valid
        tag = "shared" if self.share_pools else slots
        rng = substream(self.seed, "chpool", self.n_mc, kind, tag)
        z = rng.standard_normal((self.n_mc, len(slots), 4), dtype=np.float32)
        scale = np.float32(1.0 / math.sqrt(2.0))
        h = (z[..., 0] + 1j * z[..., 1]) * scale
        v = (z[..., 2] + 1j * z[..., 3]) * scale
        return h, v

    def _emission_for(self, kind: str, slots: tuple) -> np.ndarray:
        if kind == "per_slot":
            return np.stack([crt2_emission(rg, rf) for (_, rf, rg) in slots])
        K = len(slots)
        return np.broadcast_to(crt1_emission(self.assumed.g_fc, self.assumed.f_fc), (K, 3, 3))

    def prefetch(self, kind: str, slot_list, max_block_trials: int = 400_000) -> None:
        """Compute and cache log-LR samples for many categories in blocks.

        Blocking amortizes kernel overhead; results are identical to one-at-a
        time evaluation because every category keeps its own substream.
        """
        missing = [s for s in dict.fromkeys(slot_list) if (kind, s) not in self._samples]
        if not missing:
            return
        per = max(1, max_block_trials // self.n_mc)
        sh = np.float32(math.sqrt(self.cfg.sigma_h2))
        sv = np.float32(math.sqrt(self.cfg.sigma_v2))
        K = len(missing[0])
        for i in range(0, len(missing), per):
            block = missing[i : i + per]
            b = len(block)
            h = np.empty((b, self.n_mc, K), dtype=np.complex64)
            v = np.empty((b, self.n_mc, K), dtype=np.complex64)
            u = np.empty((b, 1, K), dtype=np.float32)
            em = em_cols = None
            if kind == "per_slot":
                em_cols = np.empty((b, 1, K, 3), dtype=np.int64)
            else:
                em = np.empty((b, 1, K, 3, 3))
            for j, slots in enumerate(block):
                h[j], v[j] = self._pool(kind, slots)
                if kind == "per_slot":
                    u[j, 0] = [s[0] for s in slots]
                    # one-hot emissions: column of the symbol sent per interval
                    em_cols[j, 0] = [(1 - rf, 1 - rg, 2) for (_, rf, rg) in slots]
                else:
                    u[j, 0] = slots
                    em[j, 0] = self._emission_for(kind, slots)
            h *= sh
            y = u * h + sv * v
            loglr = batch_log_lr(
                y, h, self.cfg.sigma_v2, em, self.q0, self.q1, self.w, em_cols=em_cols
            )
            for j, slots in enumerate(block):
                self._samples[(kind, slots)] = np.sort(loglr[j]).astype(np.float32)

    def samples_for_symbols(self, symbols: tuple[int, ...]) -> np.ndarray:
        """Sorted log-LR samples for the randomization-unaware FC statistic.

        `symbols` is the multiset of transmitted symbols (one per sensor).
        """
        slots = tuple(sorted(symbols))
        self.prefetch("shared_em", [slots])
        return self._samples[("shared_em", slots)]

    def samples_for_types(self, types: tuple[tuple[int, int, int], ...]) -> np.ndarray:
        """Sorted log-LR samples for the draw-aware FC statistic.

        `types` is the multiset of per-sensor (symbol, r_f, r_g) triples.
        """
        slots = tuple(sorted(types))
        self.prefetch("per_slot", [slots])
        return self._samples[("per_slot", slots)]

    @staticmethod
    def pu_from_samples(samples: np.ndarray, t: float) -> tuple[float, float]:
        n = len(samples)
        logt = np.float32(math.log(t))
        above = n - int(np.searchsorted(samples, logt, side="right"))
        p = above / n
        return p, math.sqrt(p * (1.0 - p) / n)


# ---------------------------------------------------------------------------
# Semi-analytic evaluators
# ---------------------------------------------------------------------------


class _BaseEvaluator:
    """Shared composition-sum machinery for the two CRT variants."""

    def __init__(
        self,
        cfg,
        tau1,
        tau2,
        assumed,
        n_mc,
        seed,
        nodes=None,
        lr_nodes=None,
        share_pools=False,
    ):
        self.cfg = cfg
        self.tau1 = tau1
        self.tau2 = tau2
        self.assumed = assumed
        self.nodes = nodes
        self.sampler = PuSampler(cfg, assumed, n_mc, seed, lr_nodes, share_pools)
        self._build_compositions()
        self._px()

    def _px(self):
        px1 = np.empty(len(self._ivl))
        px0 = np.empty(len(self._ivl))
        for i, counts in enumerate(self._ivl):
            px1[i] = rectangle_prob_counts(
                counts, self.cfg.A, self.cfg.sigma_w2, self.cfg.rho, self.tau1, self.tau2, self.nodes
            )
            px0[i] = rectangle_prob_counts(
                counts, 0.0, self.cfg.sigma_w2, self.cfg.rho, self.tau1, self.tau2, self.nodes
            )
        self.px1 = px1
        self.px0 = px0

    def _pu_arrays(self, t):
        self.sampler.prefetch(self._sample_kind, self._group_keys)
        pu = np.empty(self.n_groups)
        se = np.empty(self.n_groups)
        for gi, key in enumerate(self._group_keys):
            pu[gi], se[gi] = PuSampler.pu_from_samples(self._group_samples(key), t)
        return pu, se

    def _weights(self, g, f):
        return self.mult * (
            np.power(g, self.e_g)
            * np.power(1.0 - g, self.e_1mg)
            * np.power(f, self.e_f)
            * np.power(1.0 - f, self.e_1mf)
        )

    def pm_pf(self, g: float, f: float, t: float):
        """Category-sum miss and false-alarm probabilities with standard errors."""
        pu, se = self._pu_arrays(t)
        w = self._weights(g, f)
        pm = float(np.sum(w * (1.0 - pu[self.group_idx]) * self.px1[self.ivl_idx]))
        pf = float(np.sum(w * pu[self.group_idx] * self.px0[self.ivl_idx]))
        coef_m = np.bincount(self.group_idx, weights=w * self.px1[self.ivl_idx], minlength=self.n_groups)
        coef_f = np.bincount(self.group_idx, weights=w * self.px0[self.ivl_idx], minlength=self.n_groups)
        pm_se = float(np.sqrt(np.sum((coef_m * se) ** 2)))
        pf_se = float(np.sqrt(np.sum((coef_f * se) ** 2)))
        return pm, pm_se, pf, pf_se

    def perf(self, g: float, f: float, t: float) -> PerfEstimate:
        pm, pm_se, pf, pf_se = self.pm_pf(g, f, t)
        pt, _ = rate_probs(self.cfg, self.tau1, self.tau2, g, f)
        return PerfEstimate(
            pm=min(max(pm, 0.0), 1.0),
            pf=min(max(pf, 0.0), 1.0),
            pt=pt,
            pm_se=pm_se,
            pf_se=pf_se,
            n_samples=self.sampler.n_mc,
            route=Route.SEMI_ANALYTIC,
        )

    def term_lists(self, t):
        """Basis-form term lists for P_M and P_F at fixed t.

        Each term is (coeff, e_g, e_1mg, e_f, e_1mf) with coeff >= 0, i.e. the
        polynomial is sum coeff * g^e_g (1-g)^e_1mg f^e_f (1-f)^e_1mf.
        """
        pu, _ = self._pu_arrays(t)
        terms_m: dict = {}
        terms_f: dict = {}
        for i in range(len(self.mult)):
            key = (int(self.e_g[i]), int(self.e_1mg[i]), int(self.e_f[i]), int(self.e_1mf[i]))
            cm = self.mult[i] * (1.0 - pu[self.group_idx[i]]) * self.px1[self.ivl_idx[i]]
            cf = self.mult[i] * pu[self.group_idx[i]] * self.px0[self.ivl_idx[i]]
            terms_m[key] = terms_m.get(key, 0.0) + cm
            terms_f[key] = terms_f.get(key, 0.0) + cf
        to_list = lambda d: [(c, *k) for k, c in d.items() if c != 0.0]
        return to_list(terms_m), to_list(terms_f)


class Crt1Evaluator(_BaseEvaluator):
    """Category sums over the 5 (interval, symbol) classes.

    With assumed (g_fc=0, f_fc=1) this is the randomization-unaware FC
    approximation; with matched (g_fc, f_fc) it is the exact CRT-I
    performance. Pure censoring is the point (g=0, f=1) under the unaware FC.
    """

    def _build_compositions(self):
        K = self.cfg.K
        comps, ivls, groups, mult = [], [], [], []
        for a1, a2, a3, a4, a5 in _compositions(K, 5):
            comps.append((a1, a2, a3, a4, a5))
            ivls.append((a4 + a5, a2 + a3, a1))  # (R^-1, R^0, R^1)
            # transmitted-symbol multiset: a1 "+1", a2+a4 silent, a3+a5 "-1"
            groups.append((-1,) * (a3 + a5) + (0,) * (a2 + a4) + (1,) * a1)
            mult.append(_multinomial((a1, a2, a3, a4, a5)))
        self.comps = comps
        self._index_arrays(comps, ivls, groups, mult)

    def _index_arrays(self, comps, ivls, groups, mult):
        ivl_keys = sorted(set(ivls))
        group_keys = sorted(set(groups))
        ivl_pos = {k: i for i, k in enumerate(ivl_keys)}
        group_pos = {k: i for i, k in enumerate(group_keys)}
        self._ivl = ivl_keys
        self._group_keys = group_keys
        self.n_groups = len(group_keys)
        self.ivl_idx = np.array([ivl_pos[k] for k in ivls])
        self.group_idx = np.array([group_pos[k] for k in groups])
        self.mult = np.array(mult)
        arr = np.array(comps)
        self.e_g = arr[:, 2].astype(np.int64)     # g^a3
        self.e_1mg = arr[:, 1].astype(np.int64)   # (1-g)^a2
        self.e_f = arr[:, 4].astype(np.int64)     # f^a5
        self.e_1mf = arr[:, 3].astype(np.int64)   # (1-f)^a4

    _sample_kind = "shared_em"

    def _group_samples(self, key):
        return self.sampler.samples_for_symbols(key)


class Crt2Evaluator(_BaseEvaluator):
    """Category sums over the 12 (interval, r_f, r_g) classes.

    The FC knows every sensor's Bernoulli draws, so the conditional alarm
    probability depends on the multiset of (symbol, r_f, r_g) triples.
    """

    def _build_compositions(self):
        K = self.cfg.K
        comps, ivls, groups, mult, eg, ef = [], [], [], [], [], []
        for counts in _compositions(K, 12):
            comps.append(counts)
            n_ivl = [0, 0, 0]
            types = []
            a_g = a_f = 0
            for c, (d, rf, rg) in zip(counts, CRT2_CATEGORIES):
                if c == 0:
                    continue
                n_ivl[d + 1] += c
                types.extend([(_symbol_for(d, rf, rg), rf, rg)] * c)
                a_g += c * rg
                a_f += c * rf
            ivls.append(tuple(n_ivl))
            groups.append(tuple(sorted(types)))
            mult.append(_multinomial(counts))
            eg.append(a_g)
            ef.append(a_f)
        self.comps = comps
        ivl_keys = sorted(set(ivls))
        group_keys = sorted(set(groups))
        ivl_pos = {k: i for i, k in enumerate(ivl_keys)}
        group_pos = {k: i for i, k in enumerate(group_keys)}
        self._ivl = ivl_keys
        self._group_keys = group_keys
        self.n_groups = len(group_keys)
        self.ivl_idx = np.array([ivl_pos[k] for k in ivls])
        self.group_idx = np.array([group_pos[k] for k in groups])
        self.mult = np.array(mult)
        eg = np.array(eg, dtype=np.int64)
        ef = np.array(ef, dtype=np.int64)
        self.e_g = eg
        self.e_1mg = K - eg
        self.e_f = ef
        self.e_1mf = K - ef

    _sample_kind = "per_slot"

    def _group_samples(self, key):
        return self.sampler.samples_for_types(key)


# ---------------------------------------------------------------------------
# Spec-level one-shot operations
# ---------------------------------------------------------------------------





def estimate_pu(
    cfg: NetworkConfig,
    design: DesignPoint,
    cat: CategoryVector,
    assumed: AssumedModel,
    n_mc: int = DEFAULT_N_MC_PU,
    seed: int = 0,
    lr_nodes: int | None = None,
) -> tuple[float, float]:
    """Conditional alarm probability P(u0 = 1 | category) with standard error."""
    if cat.K != cfg.K:
        raise ValueError("category counts must sum to K")
    sampler = PuSampler(cfg, assumed, n_mc, seed, lr_nodes)
    if cat.scheme is Scheme.CRT2:
        types = []
        for c, (d, rf, rg) in zip(cat.counts, CRT2_CATEGORIES):
            types.extend([(_symbol_for(d, rf, rg), rf, rg)] * c)
        samples = sampler.samples_for_types(tuple(types))
    else:
        a1, a2, a3, a4, a5 = cat.counts
        symbols = (-1,) * (a3 + a5) + (0,) * (a2 + a4) + (1,) * a1
        samples = sampler.samples_for_symbols(symbols)
    return PuSampler.pu_from_samples(samples, design.t)


def perf_semianalytic_crt1(
    cfg: NetworkConfig,
    design: DesignPoint,
    assumed: AssumedModel | None = None,
    n_mc: int = DEFAULT_N_MC_PU,
    seed: int = 0,
    nodes: int | None = None,
    lr_nodes: int | None = None,
) -> PerfEstimate:
    """Category-sum performance for CRT-I or pure censoring.

    `assumed` defaults to the scheme-matched FC; pass (g_fc=0, f_fc=1) for the
    randomization-unaware FC variant.
    """
    if design.scheme is Scheme.CRT2:
        raise ValueError("use perf_semianalytic_crt2 for CRT-II designs")
    if assumed is None:
        assumed = AssumedModel.matched(cfg, design.tau1, design.tau2, design.g, design.f)
    ev = Crt1Evaluator(cfg, design.tau1, design.tau2, assumed, n_mc, seed, nodes, lr_nodes)
    return ev.perf(design.g, design.f, design.t)


def perf_semianalytic_crt2(
    cfg: NetworkConfig,
    design: DesignPoint,
    n_mc: int = DEFAULT_N_MC_PU,
    seed: int = 0,
    nodes: int | None = None,
    lr_nodes: int | None = None,
) -> PerfEstimate:
    """Category-sum performance for CRT-II (FC knows the per-sensor draws)."""
    if design.scheme is not Scheme.CRT2:
        raise ValueError("design.scheme must be CRT2")
    assumed = AssumedModel.matched(cfg, design.tau1, design.tau2, design.g, design.f)
    ev = Crt2Evaluator(cfg, design.tau1, design.tau2, assumed, n_mc, seed, nodes, lr_nodes)
    return ev.perf(design.g, design.f, design.t)


def perf_oracle(
    cfg: NetworkConfig,
    design: DesignPoint,
    assumed: AssumedModel | None = None,
    n_mc: int = DEFAULT_N_MC_ORACLE,
    seed: int = 0,
    lr_nodes: int | None = None,
    chunk: int = 100_000,
) -> PerfEstimate:
    """End-to-end Monte-Carlo simulation of the whole chain.

    Per trial: draw correlated observations, classify, draw the Bernoulli
    bits, map symbols, push through fading + AWGN, fuse with the scheme's
    statistic under `assumed`, threshold. P_t is the empirical per-sensor
    transmission fraction under the null.
    """
    if assumed is None:
        if design.scheme is Scheme.CRT1:
            assumed = AssumedModel.matched(cfg, design.tau1, design.tau2, design.g, design.f)
        else:
            assumed = AssumedModel.matched(cfg, design.tau1, design.tau2, 0.0, 1.0)
    q0, q1, w = _fc_interval_probs(cfg, assumed, lr_nodes)
    logt = math.log(design.t)
    sh = math.sqrt(cfg.sigma_h2)
    sv = math.sqrt(cfg.sigma_v2)
    em_shared = None
    if design.scheme is not Scheme.CRT2:
        g_fc = assumed.g_fc if design.scheme is Scheme.CRT1 else 0.0
        f_fc = assumed.f_fc if design.scheme is Scheme.CRT1 else 1.0
        em_shared = np.broadcast_to(crt1_emission(g_fc, f_fc), (cfg.K, 3, 3))
    em_lookup = np.stack(
        [np.stack([crt2_emission(rg, rf) for rf in (0, 1)]) for rg in (0, 1)]
    )  # [rg, rf] -> (3, 3)

    counts = {"miss": 0, "alarm": 0, "trans": 0, "n0": 0, "n1": 0}
    for hyp in (Hypothesis.H0, Hypothesis.H1):
        done = 0
        chunk_idx = 0
        while done < n_mc:
            m = min(chunk, n_mc - done)
            rng = substream(seed, "oracle", hyp.name, chunk_idx)
            z0 = rng.standard_normal((m, 1))
            eps = rng.standard_normal((m, cfg.K))
            mean = cfg.A if hyp is Hypothesis.H1 else 0.0
            x = mean + cfg.sigma_w * (
                np.sqrt(cfg.rho) * z0 + np.sqrt(1.0 - cfg.rho) * eps
            )
            d = np.where(x < design.tau2, -1, np.where(x > design.tau1, 1, 0))
            if design.scheme is Scheme.PURE_CENSORING:
                u = d.astype(float)
            else:
                r_g = (rng.random((m, cfg.K)) < design.g).astype(np.int64)
                r_f = (rng.random((m, cfg.K)) < design.f).astype(np.int64)
                u = np.where(d == 1, 1, np.where(d == 0, -r_g, -r_f)).astype(float)
            h = sh * (rng.standard_normal((m, cfg.K, 2)) @ np.array([1.0, 1.0j])) / np.sqrt(2)
            v = sv * (rng.standard_normal((m, cfg.K, 2)) @ np.array([1.0, 1.0j])) / np.sqrt(2)
            y = u * h + v
            if design.scheme is Scheme.CRT2:
                em = em_lookup[r_g, r_f]
            else:
                em = em_shared
            loglr = batch_log_lr(y, h, cfg.sigma_v2, em, q0, q1, w)
            u0 = loglr > logt
            if hyp is Hypothesis.H1:
                counts["miss"] += int(np.sum(~u0))
                counts["n1"] += m
            else:
                counts["alarm"] += int(np.sum(u0))
                counts["trans"] += int(np.sum(u != 0))
                counts["n0"] += m
            done += m
            chunk_idx += 1

    pm = counts["miss"] / counts["n1"]
    pf = counts["alarm"] / counts["n0"]
    pt = counts["trans"] / (counts["n0"] * cfg.K)
    return PerfEstimate(
        pm=pm,
        pf=pf,
        pt=pt,
        pm_se=math.sqrt(pm * (1.0 - pm) / counts["n1"]),
        pf_se=math.sqrt(pf * (1.0 - pf) / counts["n0"]),
        n_samples=n_mc,
        route=Route.ORACLE,
    )


# ---------------------------------------------------------------------------
# Signed monomial expansion
# ---------------------------------------------------------------------------


@dataclass
class SignedBivariatePolynomial:
    """Coefficients on monomials f^n g^m split into positive and negative parts.

    pos[n, m] - neg[n, m] reproduces the source polynomial; both parts are
    entrywise non-negative, as the signomial solver requires.
    """

    pos: np.ndarray
    neg: np.ndarray

    @classmethod
    def from_basis_terms(cls, terms, K: int) -> "SignedBivariatePolynomial":
        """Expand sum_i c_i g^eg (1-g)^e1mg f^ef (1-f)^e1mf by the binomial theorem."""
        coeff = np.zeros((K + 1, K + 1))
        for c, e_g, e_1mg, e_f, e_1mf in terms:
            for j in range(e_1mg + 1):
                bg = math.comb(e_1mg, j) * (-1.0) ** j
                for i in range(e_1mf + 1):
                    bf = math.comb(e_1mf, i) * (-1.0) ** i
                    coeff[e_f + i, e_g + j] += c * bg * bf
        pos = np.where(coeff > 0.0, coeff, 0.0)
        neg = np.where(coeff < 0.0, -coeff, 0.0)
        return cls(pos=pos, neg=neg)

    def evaluate(self, g: float, f: float) -> float:
        return float(self._eval_part(self.pos, g, f) - self._eval_part(self.neg, g, f))

    def eval_parts(self, g: float, f: float) -> tuple[float, float]:
        return self._eval_part(self.pos, g, f), self._eval_part(self.neg, g, f)

    @staticmethod
    def _eval_part(arr, g, f) -> float:
        n = arr.shape[0]
        fpow = np.power(float(f), np.arange(n))
        gpow = np.power(float(g), np.arange(n))
        return float(fpow @ arr @ gpow)

    def part_terms(self, part: str):
        """Non-zero (coeff, e_g, e_f) monomials of one part."""
        arr = self.pos if part == "pos" else self.neg
        ns, ms = np.nonzero(arr)
        return [(float(arr[n, m]), int(m), int(n)) for n, m in zip(ns, ms)]


def extract_signed_coeffs(
    cfg: NetworkConfig,
    tau1: float,
    tau2: float,
    t: float,
    scheme_route: str,
    n_mc: int = DEFAULT_N_MC_PU,
    seed: int = 0,
    nodes: int | None = None,
    lr_nodes: int | None = None,
) -> tuple[SignedBivariatePolynomial, SignedBivariatePolynomial]:
    """Signed (f, g) monomial expansions of P_M and P_F at fixed t.

    scheme_route is "crt1_mismatched" (randomization-unaware FC, the
    polynomial approximation used by the solvers for CRT-I) or "crt2".
    """
    if scheme_route == "crt1_mismatched":
        assumed = AssumedModel(tau1=tau1, tau2=tau2, rho_fc=cfg.rho, g_fc=0.0, f_fc=1.0)
        ev = Crt1Evaluator(cfg, tau1, tau2, assumed, n_mc, seed, nodes, lr_nodes)
    elif scheme_route == "crt2":
        assumed = AssumedModel.matched(cfg, tau1, tau2, 0.0, 1.0)
        ev = Crt2Evaluator(cfg, tau1, tau2, assumed, n_mc, seed, nodes, lr_nodes)
    else:
        raise ValueError(f"unknown scheme route {scheme_route!r}")
    terms_m, terms_f = ev.term_lists(t)
    return (
        SignedBivariatePolynomial.from_basis_terms(terms_m, cfg.K),
        SignedBivariatePolynomial.from_basis_terms(terms_f, cfg.K),
    )
