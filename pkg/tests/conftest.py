import numpy as np
import pytest

from fsqubit import atom, driven
from fsqubit.units import TWO_PI


@pytest.fixture(scope="session")
def full_scheme():
    return atom.sr88_scheme()


@pytest.fixture(scope="session")
def lam():
    return atom.lambda_scheme()


@pytest.fixture(scope="session")
def table():
    return atom.default_decay_table()


@pytest.fixture(scope="session")
def no_decay():
    return atom.DecayTable(gamma_s=0.0, channels=())


@pytest.fixture(scope="session")
def env():
    return atom.MagneticEnvironment(b_gauss=20.0)


@pytest.fixture(scope="session")
def fig3_config(lam):
    """The balanced far-detuned working point used throughout."""
    return driven.raman_config(lam, TWO_PI * 36e6, TWO_PI * 36e6, -TWO_PI * 6e9)


@pytest.fixture(autouse=True)
def _quiet_regime_warnings():
    import warnings

    from fsqubit.formulas import RegimeWarning

    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RegimeWarning)
        yield


def assert_close(a, b, rtol=0.0, atol=0.0):
    np.testing.assert_allclose(a, b, rtol=rtol, atol=atol)
