import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from conhist.kinematics import spin_decomposition

settings.register_profile("default", deadline=None, max_examples=60,
                          suppress_health_check=[HealthCheck.too_slow])
settings.register_profile("ci", deadline=None, max_examples=200,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

X = np.array([1.0, 0.0, 0.0])
Y = np.array([0.0, 1.0, 0.0])
Z = np.array([0.0, 0.0, 1.0])

SX = np.array([[0, 1], [1, 0]], dtype=complex)
SY = np.array([[0, -1j], [1j, 0]], dtype=complex)
SZ = np.diag([1.0, -1.0]).astype(complex)
I2 = np.eye(2, dtype=complex)
PZP = np.diag([1.0, 0.0]).astype(complex)
PZM = np.diag([0.0, 1.0]).astype(complex)
PXP = 0.5 * (I2 + SX)
PXM = 0.5 * (I2 - SX)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def z_decomp():
    return spin_decomposition(Z)


@pytest.fixture
def x_decomp():
    return spin_decomposition(X)


def random_unit(rng):
    v = rng.normal(size=3)
    return v / np.linalg.norm(v)
