import numpy as np
import pytest

from lrptransfer.synth import SynthConfig, generate_session


@pytest.fixture(scope="session")
def small_session():
    """One 8-trial unilateral session with ground truth, shared read-only."""
    config = SynthConfig(seed=11, trials_per_set=8)
    return generate_session(config, subject_index=0, set_index=0, task="unilateral")


@pytest.fixture(scope="session")
def small_bilateral_session():
    config = SynthConfig(seed=11, trials_per_set=8)
    return generate_session(config, subject_index=0, set_index=0, task="bilateral")


@pytest.fixture()
def rng():
    return np.random.default_rng(1234)
