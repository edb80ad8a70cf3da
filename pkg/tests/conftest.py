"""Shared test fixtures for the quantum dot simulator tests."""

import numpy as np
import pytest

from src.experiments.runner import ExperimentRunner
from src.experiments.setup import PulseErrors, Setup
from src.models.data_models import ExperimentConfig, ExperimentKind
from src.physics.levels import default_spin_system, ideal_selection_rules
from src.physics.noise import default_noise_model

PS = 1e-12
NS = 1e-9
US = 1e-6


@pytest.fixture
def spin_system():
    """SpinSystem with the default dot parameters."""
    return default_spin_system()


@pytest.fixture
def selection_rules():
    return ideal_selection_rules()


@pytest.fixture
def noise_model():
    """NoiseModel with the measured T2*, T2 and linewidth."""
    return default_noise_model()


def quiet_noise():
    """Every decoherence channel switched off."""
    return default_noise_model(
        sigma_quasistatic=0.0,
        gamma_phi=0.0,
        optical_linewidth_fwhm=0.0,
        t1=None,
    )


def ideal_pulses():
    return PulseErrors(depolarization=0.0, damping_per_pi=0.0)


@pytest.fixture(scope="session")
def runner():
    """Runner on the default setup; shared so calibrations are computed once."""
    return ExperimentRunner(Setup())


@pytest.fixture(scope="session")
def quiet_runner():
    """Runner without decoherence but with the default pulse errors."""
    return ExperimentRunner(Setup(noise=quiet_noise()))


@pytest.fixture(scope="session")
def ideal_runner():
    """Runner without decoherence or pulse errors."""
    return ExperimentRunner(Setup(noise=quiet_noise(), pulse_errors=ideal_pulses()))


@pytest.fixture
def ramsey_config():
    """Short noise-free Ramsey sweep: 0-200 ps in 1 ps steps."""
    return ExperimentConfig(
        kind=ExperimentKind.RAMSEY,
        sweep=np.arange(201) * PS,
        draws=1,
        shot_noise=False,
    )
