"""Shared fixtures: small, fast configurations reused across test modules."""

import math

import numpy as np
import pytest

from bfns import fields as fl
from bfns.dynamics import SimConfig
from bfns.integrate import simulate


def bitwise_equal(a, b):
    """Exact comparison treating NaN payloads and signed zeros strictly."""
    return np.array_equal(a.coeffs.view(np.float64), b.coeffs.view(np.float64))


@pytest.fixture(scope="session")
def forcing_k8():
    return fl.SpectralField.from_modes(2, 8, [
        {"k": (1, 0), "component": 1, "re": 0.5, "im": 0.0},
        {"k": (0, 2), "component": 0, "re": -0.3, "im": 0.2},
    ])


@pytest.fixture(scope="session")
def u0_k8():
    return fl.random_solenoidal(2, 8, seed=3, h_norm_target=2.0)


@pytest.fixture(scope="session")
def cutoff_cfg(forcing_k8):
    """Modified-system fixture with the cutoff genuinely active."""
    return SimConfig(d=2, K=8, mu=0.3, alpha=0.5, beta=3.0, n_cut=1.5,
                     dt=0.005, t_end=0.8, forcing=forcing_k8)


@pytest.fixture(scope="session")
def cutoff_traj(cutoff_cfg, u0_k8):
    return simulate(u0_k8, cutoff_cfg)


@pytest.fixture(scope="session")
def decay_cfg():
    """Unforced, mu=1: plain exponential decay regime."""
    return SimConfig(d=2, K=8, mu=1.0, alpha=0.5, beta=3.0, n_cut=math.inf,
                     dt=0.01, t_end=2.0)


@pytest.fixture(scope="session")
def decay_traj(decay_cfg):
    u0 = fl.random_solenoidal(2, 8, seed=9, h_norm_target=1.5)
    return simulate(u0, decay_cfg)
