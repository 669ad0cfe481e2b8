import numpy as np
import pytest

from riemocad import model


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def make_case(nsat=6, nbl=2, sigma=0.003, seed=0, obs_seed=None):
    """Random scenario + one simulated observation set."""
    gen = np.random.default_rng(seed)
    scenario, _ = model.sample_scenario(nsat, nbl, sigma, gen)
    obs = model.simulate_observations(
        scenario, int(gen.integers(2**63)) if obs_seed is None else obs_seed)
    return scenario, obs


@pytest.fixture
def noiseless_case():
    return make_case(nsat=6, nbl=2, sigma=0.0, seed=7)
