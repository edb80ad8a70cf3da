"""Tests for photon counting and the 2x2 ground-state engine."""

import numpy as np
import pytest

from src.experiments.readout import (
    PumpMap,
    ReadoutModel,
    apply_unitary,
    depolarize,
    expected_counts,
    ground_state,
    photon_counts,
    precess,
    pulse_depolarization,
    up_population,
)
from src.models.data_models import DomainError
from src.physics.levels import default_spin_system
from src.physics.pulses import default_pump


class TestPhotonCounts:
    """Tests for photon_counts and expected_counts."""

    def test_zero_efficiency_counts_nothing(self):
        rng = np.random.default_rng(0)
        counts = photon_counts(np.full(10, 0.7), 1000, 0.0, 0.0, rng)
        assert np.array_equal(counts, np.zeros(10))

    def test_mean_matches_expectation(self):
        rng = np.random.default_rng(1)
        counts = photon_counts(np.full(4000, 0.5), 10_000, 0.1, 0.0, rng)
        mean, std = expected_counts(0.5, 10_000, 0.1, 0.0)
        assert np.mean(counts) == pytest.approx(mean, rel=0.01)
        assert np.std(counts) == pytest.approx(std, rel=0.05)

    def test_dark_counts_add(self):
        mean, _ = expected_counts(0.0, 1000, 0.1, 0.02)
        assert mean == pytest.approx(20.0)

    def test_probability_out_of_range(self):
        with pytest.raises(DomainError):
            photon_counts(1.5, 10, 0.1, 0.0, np.random.default_rng())

    def test_efficiency_out_of_range(self):
        with pytest.raises(DomainError):
            photon_counts(0.5, 10, 1.1, 0.0, np.random.default_rng())

    def test_negative_dark_rate(self):
        with pytest.raises(DomainError):
            photon_counts(0.5, 10, 0.1, -1.0, np.random.default_rng())

    def test_readout_model_validation(self):
        with pytest.raises(DomainError):
            ReadoutModel(efficiency=-0.1)


class TestPumpMap:
    """Tests for PumpMap."""

    @pytest.fixture(scope="class")
    def pump_map(self):
        return PumpMap.from_window(default_pump(), default_spin_system())

    def test_pumps_both_inputs_into_down(self, pump_map):
        assert pump_map.to_up[0] < 0.01
        assert pump_map.to_up[1] < 0.01

    def test_only_up_emits(self, pump_map):
        assert pump_map.emission[0] == pytest.approx(0.0, abs=1e-9)
        assert pump_map.emission[1] > 0.9

    def test_apply_is_linear(self, pump_map):
        _, photons = pump_map.apply(np.array([0.0, 0.5, 1.0]))
        assert photons[1] == pytest.approx(0.5 * (photons[0] + photons[2]))


class TestGroundEngine:
    """Tests for the stacked 2x2 helpers."""

    def test_ground_state_stack(self):
        rho = ground_state(0.25, size=3)
        assert rho.shape == (3, 2, 2)
        assert np.allclose(up_population(rho), 0.25)

    def test_unitary_preserves_trace(self):
        rho = ground_state(0.0, size=2)
        flip = np.array([[0, 1], [1, 0]], dtype=complex)
        out = apply_unitary(rho, flip)
        assert np.allclose(up_population(out), 1.0)

    def test_full_depolarization_is_mixed(self):
        rho = depolarize(ground_state(0.0), 1.0)
        assert np.allclose(rho, 0.5 * np.eye(2))

    def test_zero_depolarization_is_identity(self):
        rho = ground_state(0.3)
        assert depolarize(rho, 0.0) is rho

    def test_precess_rotates_coherence(self):
        rho = 0.5 * np.ones((2, 2), dtype=complex)
        out = precess(rho, np.pi)
        assert out[0, 1] == pytest.approx(-0.5)
        assert out[1, 0] == pytest.approx(-0.5)

    def test_precess_population_decay(self):
        out = precess(ground_state(1.0), 0.0, population_decay=0.0)
        assert up_population(out) == pytest.approx(0.5)


class TestPulseDepolarization:
    """Tests for pulse_depolarization."""

    def test_dark_pulse(self):
        assert pulse_depolarization(0.0) == 0.0

    def test_half_pi_pulse(self):
        assert pulse_depolarization(np.pi / 2) == pytest.approx(0.11)

    def test_grows_with_area(self):
        values = [pulse_depolarization(t) for t in (0.5, np.pi / 2, np.pi, 2 * np.pi)]
        assert values == sorted(values)
        assert values[-1] > values[1]

    def test_sign_of_angle_ignored(self):
        assert pulse_depolarization(-np.pi) == pulse_depolarization(np.pi)
