"""Physical model of the censoring sensor network.

Hypotheses, observation intervals, the randomized interval-to-symbol map,
transmission/censoring rates, SNR conversions, and the constant-rate
substitution g(f) with its feasible range.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum

from scipy.special import ndtr

__all__ = [
    "Scheme",
    "Hypothesis",
    "NetworkConfig",
    "DesignPoint",
    "FeasibleRange",
    "classify_observation",
    "map_symbol",
    "interval_probs",
    "rate_probs",
    "g_of_f",
    "feasible_f_range",
]

MW_PER_W = 1e3  # dBm reference is 1 mW


class Scheme(Enum):
    """Interval-to-symbol mapping scheme."""

    PURE_CENSORING = "pure_censoring"
    CRT1 = "crt1"
    CRT2 = "crt2"


class Hypothesis(Enum):
    H0 = 0
    H1 = 1


def db_to_linear(x_db: float) -> float:
    return 10.0 ** (x_db / 10.0)


def linear_to_db(x_lin: float) -> float:
    return 10.0 * math.log10(x_lin)


def dbm_to_watt(x_dbm: float) -> float:
    return 10.0 ** (x_dbm / 10.0) / MW_PER_W


@dataclass(frozen=True)
class NetworkConfig:
    """Physical parameters of the detection problem.

    Linear values are the source of truth; dB views are derived.

    Attributes
    ----------
    K : int
        Number of homogeneous sensors.
    A : float
        Known signal amplitude (linear units).
    sigma_w2 : float
        Observation noise variance.
    rho : float
        Common pairwise correlation of the observation noise, in [0, 1).
    sigma_h2 : float
        Fading channel variance (per complex coefficient).
    sigma_v2 : float
        Receiver AWGN variance (per complex sample).
    """

    K: int
    A: float
    sigma_w2: float
    rho: float
    sigma_h2: float
    sigma_v2: float

    def __post_init__(self):
        if self.K < 1:
            raise ValueError(f"K must be >= 1, got {self.K}")
        for name in ("sigma_w2", "sigma_h2", "sigma_v2"):
            if getattr(self, name) <= 0.0:
                raise ValueError(f"{name} must be > 0, got {getattr(self, name)}")
        if not 0.0 <= self.rho < 1.0:
            raise ValueError(f"rho must lie in [0, 1), got {self.rho}")

    @property
    def sigma_w(self) -> float:
        return math.sqrt(self.sigma_w2)

    @property
    def snr_c_db(self) -> float:
        """Sensing SNR, 10*log10(A^2 / sigma_w^2)."""
        return linear_to_db(self.A**2 / self.sigma_w2)

    @property
    def snr_h_db(self) -> float:
        """Communication SNR, 10*log10(sigma_h^2 / sigma_v^2)."""
        return linear_to_db(self.sigma_h2 / self.sigma_v2)

    @classmethod
    def from_snr(
        cls,
        K: int,
        A: float,
        snr_c_db: float,
        snr_h_db: float,
        rho: float,
        sigma_v2: float = dbm_to_watt(-50.0),
    ) -> "NetworkConfig":
        """Build a config from the two SNRs, holding A and sigma_v2 fixed."""
        sigma_w2 = A**2 / db_to_linear(snr_c_db)
        sigma_h2 = sigma_v2 * db_to_linear(snr_h_db)
        return cls(K=K, A=A, sigma_w2=sigma_w2, rho=rho, sigma_h2=sigma_h2, sigma_v2=sigma_v2)

    def with_rho(self, rho: float) -> "NetworkConfig":
        return NetworkConfig(self.K, self.A, self.sigma_w2, rho, self.sigma_h2, self.sigma_v2)


@dataclass(frozen=True)
class DesignPoint:
    """Controllable design: local thresholds, randomization parameters, FC threshold."""

    tau1: float
    tau2: float
    g: float
    f: float
    t: float
    scheme: Scheme

    def __post_init__(self):
        if self.tau2 > self.tau1:
            raise ValueError(f"tau2 ({self.tau2}) must not exceed tau1 ({self.tau1})")
        if not (0.0 <= self.g <= 1.0 and 0.0 <= self.f <= 1.0):
            raise ValueError(f"g, f must lie in [0, 1], got g={self.g}, f={self.f}")
        if self.t <= 0.0:
            raise ValueError(f"t must be > 0, got {self.t}")
        if self.scheme is Scheme.PURE_CENSORING and (self.g != 0.0 or self.f != 1.0):
            raise ValueError("pure censoring requires g = 0 and f = 1")

    @classmethod
    def pure(cls, tau1: float, tau2: float, t: float) -> "DesignPoint":
        return cls(tau1=tau1, tau2=tau2, g=0.0, f=1.0, t=t, scheme=Scheme.PURE_CENSORING)


@dataclass(frozen=True)
class FeasibleRange:
    """Box for f implied by the rate constraint after eliminating g.

    Raw bounds l0 <= f <= l1 keep g(f) inside [0, 1]; the clamps intersect
    them with the unit interval. ``feasible`` is False when the intersection
    is empty.
    """

    l0: float
    l1: float
    l0p: float = field(init=False)
    l1p: float = field(init=False)
    feasible: bool = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "l0p", max(0.0, self.l0))
        object.__setattr__(self, "l1p", min(1.0, self.l1))
        object.__setattr__(self, "feasible", self.l0p <= self.l1p)


def classify_observation(x: float, tau1: float, tau2: float) -> int:
    """Interval index of an observation: -1, 0 or +1.

    The censoring interval [tau2, tau1] is closed on both ends.
    """
    if tau2 > tau1:
        raise ValueError("tau2 must not exceed tau1")
    if x < tau2:
        return -1
    if x > tau1:
        return 1
    return 0


def map_symbol(d: int, r_g: int, r_f: int) -> int:
    """Map an interval index to a transmit symbol given the Bernoulli draws.

    d = +1 transmits +1; d = 0 transmits -1 when r_g fires, else censors;
    d = -1 transmits -1 when r_f fires, else censors.
    """
    if d == 1:
        return 1
    if d == 0:
        return -r_g
    if d == -1:
        return -r_f
    raise ValueError(f"interval index must be in {{-1, 0, 1}}, got {d}")


def interval_probs(
    cfg: NetworkConfig, tau1: float, tau2: float, hypothesis: Hypothesis
) -> tuple[float, float, float]:
    """Single-sensor interval probabilities (p_minus1, p0, p1) under a hypothesis."""
    if tau2 > tau1:
        raise ValueError("tau2 must not exceed tau1")
    mean = cfg.A if hypothesis is Hypothesis.H1 else 0.0
    sw = cfg.sigma_w
    lo = ndtr((tau2 - mean) / sw)
    hi = ndtr((tau1 - mean) / sw)
    return float(lo), float(hi - lo), float(1.0 - hi)


def rate_probs(
    cfg: NetworkConfig, tau1: float, tau2: float, g: float, f: float
) -> tuple[float, float]:
    """Transmission and censoring probabilities (P_t, P_c) under the null."""
    if not (0.0 <= g <= 1.0 and 0.0 <= f <= 1.0):
        raise ValueError("g and f must lie in [0, 1]")
    p_m1, p_0, p_1 = interval_probs(cfg, tau1, tau2, Hypothesis.H0)
    pt = p_1 + g * p_0 + f * p_m1
    return pt, 1.0 - pt


def g_of_f(
    cfg: NetworkConfig, tau1: float, tau2: float, p0_target: float, f: float
) -> tuple[float, float]:
    """Solve the rate equality P_t = p0_target for g, given f.

    Returns (g, dg/df); the derivative is the constant -p_minus1 / p_R0.

    Raises
    ------
    ZeroDivisionError
        If the censoring interval carries no mass under the null.
    """
    p_m1, p_0, p_1 = interval_probs(cfg, tau1, tau2, Hypothesis.H0)
    if p_0 == 0.0:
        raise ZeroDivisionError("censoring interval has zero mass under H0")
    g = (p0_target - p_1 - f * p_m1) / p_0
    return g, -p_m1 / p_0


def feasible_f_range(
    cfg: NetworkConfig, tau1: float, tau2: float, p0_target: float
) -> FeasibleRange:
    """Range of f for which the rate equality admits g in [0, 1]."""
    p_m1, p_0, p_1 = interval_probs(cfg, tau1, tau2, Hypothesis.H0)
    if p_m1 == 0.0:
        # f multiplies zero mass: the rate fixes g alone.
        if p_0 == 0.0:
            feasible = abs(p0_target - p_1) < 1e-12
        else:
            feasible = -1e-12 <= (p0_target - p_1) / p_0 <= 1.0 + 1e-12
        return FeasibleRange(l0=0.0, l1=1.0) if feasible else FeasibleRange(l0=1.0, l1=0.0)
    l0 = (p0_target - 1.0 + p_m1) / p_m1
    l1 = (p0_target - p_1) / p_m1
    return FeasibleRange(l0=l0, l1=l1)
