import numpy as np
import pytest

from censornet import NetworkConfig


@pytest.fixture(scope="session")
def cfg_k5():
    """Reference network: K=5, sensing SNR 10 dB, channel SNR 5 dB, rho 0.5."""
    return NetworkConfig.from_snr(K=5, A=1.0, snr_c_db=10.0, snr_h_db=5.0, rho=0.5)


@pytest.fixture(scope="session")
def cfg_k3():
    """Small network for exhaustive-enumeration tests."""
    return NetworkConfig.from_snr(K=3, A=1.0, snr_c_db=10.0, snr_h_db=5.0, rho=0.5)


@pytest.fixture(scope="session")
def cfg_k2():
    return NetworkConfig.from_snr(K=2, A=1.0, snr_c_db=10.0, snr_h_db=5.0, rho=0.5)


def draw_channel(cfg, n, seed):
    """Test-side channel/noise draws (independent of library streams)."""
    rng = np.random.default_rng(seed)
    sh = np.sqrt(cfg.sigma_h2 / 2.0)
    sv = np.sqrt(cfg.sigma_v2 / 2.0)
    h = sh * (rng.standard_normal((n, cfg.K)) + 1j * rng.standard_normal((n, cfg.K)))
    v = sv * (rng.standard_normal((n, cfg.K)) + 1j * rng.standard_normal((n, cfg.K)))
    return h, v
