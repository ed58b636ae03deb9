"""Shared fixtures: tiny synthetic datasets sized for fast unit tests."""

import numpy as np
import pytest

from sunstack import synth_generate


@pytest.fixture(scope="session")
def ds_two_weeks():
    return synth_generate(days=14, seed=424242)


@pytest.fixture(scope="session")
def ds_five_months():
    # Jan 1 through May 31: enough history for a short rolling backtest.
    return synth_generate(days=151, seed=424242)


@pytest.fixture
def rng():
    return np.random.default_rng(20240819)


@pytest.fixture(scope="session")
def disagreement_scenario():
    from scenario import build_disagreement_scenario

    return build_disagreement_scenario()


@pytest.fixture(scope="session")
def planted_scenario():
    from scenario import build_planted_scenario

    return build_planted_scenario()


@pytest.fixture(scope="session")
def noisy_planted_scenario():
    from scenario import build_planted_scenario

    return build_planted_scenario(planted_noise=0.02)
