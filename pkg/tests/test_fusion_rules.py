import math
from itertools import product

import numpy as np
import pytest

from censornet import (
    AssumedModel,
    ChannelRealization,
    NetworkConfig,
    fuse,
    lr_crt1,
    lr_crt2,
    lr_pure_censoring,
    symbol_likelihood,
)
from censornet.correlated_gaussian import IntervalAssignment, rectangle_prob
from censornet.fusion_rules import batch_log_lr, crt1_emission, _fc_interval_probs
from censornet.network_model import Hypothesis

from conftest import draw_channel

NODES = 48  # fixed rule shared by implementation and literal oracles


def density(y, u, h, sigma_v2):
    return math.exp(-abs(y - u * h) ** 2 / sigma_v2) / (math.pi * sigma_v2)


def literal_lr_crt1(real, cfg, assumed, g, f, nodes=NODES):
    """Category double sum over the 5^K (interval, symbol) classes.

    Checks the per-sensor mixture collapse; rectangle probabilities provide
    the interval weights under the FC's correlation belief.
    """
    K = len(real.y)
    cats = [(1, 1, None), (0, 0, "1-g"), (0, -1, "g"), (-1, 0, "1-f"), (-1, -1, "f")]
    wmap = {None: 1.0, "1-g": 1.0 - g, "g": g, "1-f": 1.0 - f, "f": f}
    num = den = 0.0
    for combo in product(range(5), repeat=K):
        ivl = [cats[c][0] for c in combo]
        w = 1.0
        for k, c in enumerate(combo):
            w *= wmap[cats[c][2]] * density(real.y[k], cats[c][1], real.h[k], cfg.sigma_v2)
        a = IntervalAssignment.from_indices(ivl)
        px1 = rectangle_prob(cfg, assumed.tau1, assumed.tau2, a, Hypothesis.H1,
                             nodes=nodes, rho=assumed.rho_fc)
        px0 = rectangle_prob(cfg, assumed.tau1, assumed.tau2, a, Hypothesis.H0,
                             nodes=nodes, rho=assumed.rho_fc)
        num += w * px1
        den += w * px0
    return num / den


def literal_lr_crt2(real, cfg, assumed, r_f, r_g, nodes=NODES):
    """Indicator sum over the 12^K (interval, r_f, r_g) classes."""
    K = len(real.y)
    cats = []
    for d in (1, 0, -1):
        for rf in (0, 1):
            for rg in (0, 1):
                u = d if d == 1 else (-rg if d == 0 else -rf)
                cats.append((d, rf, rg, u))
    num = den = 0.0
    for combo in product(range(12), repeat=K):
        w = 1.0
        ivl = []
        for k, c in enumerate(combo):
            d, rf, rg, u = cats[c]
            if rf != r_f[k] or rg != r_g[k]:
                w = 0.0
                break
            ivl.append(d)
            w *= density(real.y[k], u, real.h[k], cfg.sigma_v2)
        if w == 0.0:
            continue
        a = IntervalAssignment.from_indices(ivl)
        num += w * rectangle_prob(cfg, assumed.tau1, assumed.tau2, a, Hypothesis.H1,
                                  nodes=nodes, rho=assumed.rho_fc)
        den += w * rectangle_prob(cfg, assumed.tau1, assumed.tau2, a, Hypothesis.H0,
                                  nodes=nodes, rho=assumed.rho_fc)
    return num / den


def _realization(cfg, seed):
    h, v = draw_channel(cfg, 1, seed)
    rng = np.random.default_rng(seed + 1000)
    u = rng.integers(-1, 2, size=cfg.K)
    return ChannelRealization(h=h[0], y=u * h[0] + v[0])


class TestSymbolLikelihood:
    def test_censored_symbol_is_noise_only(self):
        val = symbol_likelihood(0.1 + 0.2j, 0, 1.0 + 1.0j, 0.5)
        assert val == pytest.approx(math.exp(-0.05 / 0.5) / (math.pi * 0.5), rel=1e-12)

    def test_mode_at_mean(self):
        h = 0.7 - 0.3j
        at_mean = symbol_likelihood(h, 1, h, 0.3)
        off = symbol_likelihood(h + 0.2, 1, h, 0.3)
        assert at_mean > off
        assert at_mean == pytest.approx(1.0 / (math.pi * 0.3), rel=1e-12)

    def test_ratio_identity(self):
        rng = np.random.default_rng(0)
        for _ in range(20):
            y = complex(*rng.standard_normal(2))
            h = complex(*rng.standard_normal(2))
            s2 = rng.uniform(0.1, 2.0)
            got = symbol_likelihood(y, 1, h, s2) / symbol_likelihood(y, 0, h, s2)
            expect = math.exp((2 * (y * h.conjugate()).real - abs(h) ** 2) / s2)
            assert got == pytest.approx(expect, rel=1e-10)


class TestLrEquivalence:
    @pytest.mark.parametrize("seed", [0, 1, 2])
    def test_crt1_matches_literal_double_sum_k3(self, cfg_k3, seed):
        real = _realization(cfg_k3, seed)
        assumed = AssumedModel(tau1=0.4, tau2=-0.3, rho_fc=0.5, g_fc=0.35, f_fc=0.6)
        got = lr_crt1(real, cfg_k3, assumed, nodes=NODES)
        expect = literal_lr_crt1(real, cfg_k3, assumed, 0.35, 0.6)
        assert got == pytest.approx(expect, rel=1e-10)

    @pytest.mark.parametrize("seed", [0, 1, 2])
    def test_crt2_matches_literal_indicator_sum_k2(self, cfg_k2, seed):
        real = _realization(cfg_k2, seed)
        assumed = AssumedModel(tau1=0.4, tau2=-0.3, rho_fc=0.5, g_fc=0.0, f_fc=1.0)
        rng = np.random.default_rng(seed)
        r_f = rng.integers(0, 2, size=2)
        r_g = rng.integers(0, 2, size=2)
        got = lr_crt2(real, cfg_k2, assumed, r_f, r_g, nodes=NODES)
        expect = literal_lr_crt2(real, cfg_k2, assumed, r_f, r_g)
        assert got == pytest.approx(expect, rel=1e-10)

    def test_pure_censoring_is_crt1_at_g0_f1(self, cfg_k3):
        real = _realization(cfg_k3, 7)
        assumed = AssumedModel(tau1=0.4, tau2=-0.3, rho_fc=0.5, g_fc=0.0, f_fc=1.0)
        assert lr_pure_censoring(real, cfg_k3, assumed) == pytest.approx(
            lr_crt1(real, cfg_k3, assumed), rel=1e-14
        )

    def test_crt2_deterministic_bits_reduce_to_pure(self, cfg_k3):
        real = _realization(cfg_k3, 8)
        assumed = AssumedModel(tau1=0.4, tau2=-0.3, rho_fc=0.5, g_fc=0.0, f_fc=1.0)
        got = lr_crt2(real, cfg_k3, assumed, r_f=np.ones(3, int), r_g=np.zeros(3, int))
        assert got == pytest.approx(lr_pure_censoring(real, cfg_k3, assumed), rel=1e-12)

    def test_identical_hypotheses_give_unit_lr(self):
        cfg = NetworkConfig(K=3, A=0.0, sigma_w2=0.5, rho=0.4, sigma_h2=1.0, sigma_v2=0.3)
        real = _realization(cfg, 9)
        assumed = AssumedModel(tau1=0.4, tau2=-0.3, rho_fc=0.4, g_fc=0.2, f_fc=0.8)
        assert lr_crt1(real, cfg, assumed) == pytest.approx(1.0, abs=1e-12)

    def test_sensor_exchangeability(self, cfg_k3):
        real = _realization(cfg_k3, 10)
        perm = [2, 0, 1]
        real_p = ChannelRealization(h=real.h[perm], y=real.y[perm])
        assumed = AssumedModel(tau1=0.4, tau2=-0.3, rho_fc=0.5, g_fc=0.3, f_fc=0.7)
        assert lr_crt1(real, cfg_k3, assumed) == pytest.approx(
            lr_crt1(real_p, cfg_k3, assumed), rel=1e-12
        )

    def test_k1_three_term_ratio(self):
        cfg = NetworkConfig(K=1, A=1.0, sigma_w2=0.5, rho=0.0, sigma_h2=1.0, sigma_v2=0.4)
        real = _realization(cfg, 11)
        assumed = AssumedModel(tau1=0.4, tau2=-0.3, rho_fc=0.0, g_fc=0.0, f_fc=1.0)
        from censornet.network_model import interval_probs

        p0 = interval_probs(cfg, 0.4, -0.3, Hypothesis.H0)
        p1 = interval_probs(cfg, 0.4, -0.3, Hypothesis.H1)
        y, h = real.y[0], real.h[0]
        num = sum(p1[i] * density(y, i - 1, h, cfg.sigma_v2) for i in range(3))
        den = sum(p0[i] * density(y, i - 1, h, cfg.sigma_v2) for i in range(3))
        assert lr_pure_censoring(real, cfg, assumed) == pytest.approx(num / den, rel=1e-12)


class TestBatchKernel:
    def test_batch_matches_single_shot(self, cfg_k3):
        assumed = AssumedModel(tau1=0.4, tau2=-0.3, rho_fc=0.5, g_fc=0.25, f_fc=0.65)
        h, v = draw_channel(cfg_k3, 64, seed=21)
        rng = np.random.default_rng(22)
        u = rng.integers(-1, 2, size=(64, 3))
        y = u * h + v
        q0, q1, w = _fc_interval_probs(cfg_k3, assumed, NODES)
        em = np.broadcast_to(crt1_emission(0.25, 0.65), (3, 3, 3))
        fast = batch_log_lr(y, h, cfg_k3.sigma_v2, em, q0, q1, w, fast=True)
        for i in range(0, 64, 13):
            real = ChannelRealization(h=h[i], y=y[i])
            single = lr_crt1(real, cfg_k3, assumed, nodes=NODES)
            assert math.exp(fast[i]) == pytest.approx(single, rel=2e-5)

    def test_lr_strictly_positive_and_finite(self, cfg_k3):
        assumed = AssumedModel(tau1=0.4, tau2=-0.3, rho_fc=0.5, g_fc=0.0, f_fc=1.0)
        # near-noiseless channel: the log-LR saturates but stays finite
        cfg = NetworkConfig(K=3, A=1.0, sigma_w2=0.1, rho=0.5, sigma_h2=1.0, sigma_v2=1e-12)
        h, v = draw_channel(cfg, 32, seed=5)
        u = np.ones((32, 3))
        y = u * h + v
        q0, q1, w = _fc_interval_probs(cfg, assumed, NODES)
        em = np.broadcast_to(crt1_emission(0.0, 1.0), (3, 3, 3))
        out = batch_log_lr(y, h, cfg.sigma_v2, em, q0, q1, w)
        assert np.isfinite(out).all()
        assert np.isfinite(np.exp(out)).all()


class TestFuse:
    def test_tie_decides_absent(self):
        assert fuse(2.0, 2.0) == 0
        assert fuse(2.0000001, 2.0) == 1

    def test_limits(self):
        assert fuse(0.5, 1e-12) == 1
        assert fuse(0.5, 1e12) == 0

    def test_monotone_in_threshold(self):
        lr = 3.7
        decisions = [fuse(lr, t) for t in (0.1, 1.0, 3.69, 3.7, 10.0)]
        assert decisions == sorted(decisions, reverse=True)

    def test_invalid_threshold(self):
        with pytest.raises(ValueError):
            fuse(1.0, 0.0)
