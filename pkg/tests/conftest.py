import numpy as np
import pytest

from catsim.device import DeviceParams


@pytest.fixture(scope="session")
def params():
    return DeviceParams()


@pytest.fixture(scope="session")
def ideal_params():
    """Table parameters with intrinsic memory losses switched off."""
    return DeviceParams().replace(kappa1_over_2pi=0.0, kappa_phi_m_over_2pi=0.0)


@pytest.fixture(scope="session")
def noiseless_readout_params():
    """Ideal memory and a noiseless transmon (for exact-parity checks)."""
    return DeviceParams().replace(
        kappa1_over_2pi=0.0,
        kappa_phi_m_over_2pi=0.0,
        transmon_T1=1e9,
        transmon_T2=1e9,
        n_th_q=0.0,
    )


@pytest.fixture()
def rng():
    return np.random.default_rng(1234)
