import os
import sys

# Ensure the project root is importable
from pathlib import Path

import numpy as np
import pytest

PROJECT_ROOT = str(Path(__file__).resolve().parents[1])
if PROJECT_ROOT not in sys.path:
    sys.path.insert(0, PROJECT_ROOT)

# Ensure test mode while modules import; keeps the worker queue single-threaded
os.environ["TEST_MODE"] = "1"

from secrecy_relay.models import SystemParams  # noqa: E402


@pytest.fixture
def unit_params():
    """Every power, noise and distance set to one."""
    return SystemParams(
        num_antennas=4,
        path_loss_exp=4.0,
        eav_density=1.0,
        power_source=1.0,
        power_relay=1.0,
        dist_sr=1.0,
        dist_rd=1.0,
        noise_relay=1.0,
        noise_dest=1.0,
        noise_eav_slot1=1.0,
        noise_eav_slot2=1.0,
    )


@pytest.fixture
def fig2_params():
    """eta = 4, N = 4, lambda = 1, gamma_b = 10 dB (gamma_e is irrelevant for P_to)."""
    return SystemParams.from_mean_snr(4, 4.0, 1.0, mean_snr_b=10.0, mean_snr_e=5.0)


@pytest.fixture
def fig3_params():
    """eta = 4, N = 4, lambda = 1, gamma_e = 10 dB."""
    return SystemParams.from_mean_snr(4, 4.0, 1.0, mean_snr_b=100.0, mean_snr_e=10.0)


@pytest.fixture
def fig5_params():
    """eta = 4, lambda = 1, gamma_b = 20 dB, gamma_b / gamma_e = 20, N = 4."""
    return SystemParams.from_mean_snr(4, 4.0, 1.0, mean_snr_b=100.0, mean_snr_e=5.0)


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


@pytest.fixture(autouse=True)
def _clean_env(monkeypatch):
    """Operational settings must not leak in from the developer's shell."""
    for name in ("SECRECY_RELAY_THREADS", "SECRECY_RELAY_LOG_LEVEL", "SECRECY_RELAY_CROSS_CHECK"):
        monkeypatch.delenv(name, raising=False)
    monkeypatch.setenv("TEST_MODE", "1")
    yield
