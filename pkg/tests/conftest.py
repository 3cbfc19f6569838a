import numpy as np
import pytest

from irsbeam.channels import generate_channels
from irsbeam.config import SystemConfig, validate_config


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def table1_cfg():
    """Default configuration: M=10, N_RF=2, K=2, R=25 per IRS."""
    return validate_config(SystemConfig())


@pytest.fixture
def tiny_cfg():
    """Smallest valid instance: 2 BS antennas, one element per IRS."""
    return validate_config(SystemConfig(M=2, N_RF=2, R1=1, R2=1))


@pytest.fixture
def small_cfg():
    """Small but non-degenerate instance for optimizer tests."""
    return validate_config(SystemConfig(M=4, N_RF=2, R1=3, R2=3))


@pytest.fixture
def small_channels(small_cfg):
    return generate_channels(small_cfg, np.random.default_rng(7))


@pytest.fixture
def tiny_channels(tiny_cfg):
    return generate_channels(tiny_cfg, np.random.default_rng(3))


@pytest.fixture
def table1_channels(table1_cfg):
    return generate_channels(table1_cfg, np.random.default_rng(11))


def random_psd(rng, n, rank=None):
    k = rank or n
    a = rng.standard_normal((n, k)) + 1j * rng.standard_normal((n, k))
    return a @ a.conj().T


def random_hermitian(rng, n):
    a = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    return 0.5 * (a + a.conj().T)
