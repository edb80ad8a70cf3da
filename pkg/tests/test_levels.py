"""Tests for the four-level system: splittings, selection rules, Hamiltonian."""

import numpy as np
import pytest

from src.data import defaults
from src.models.data_models import (
    DOWN,
    TRION_DOWN,
    TRION_UP,
    UP,
    DomainError,
    Polarization,
    RangeError,
    SelectionRules,
)
from src.physics.levels import (
    DriveField,
    build_hamiltonian,
    check_selection_rules,
    ideal_selection_rules,
    larmor_frequency,
    zeeman_splitting,
)


class TestZeemanSplitting:
    """Tests for zeeman_splitting."""

    def test_hole_splitting_at_8_tesla(self, spin_system):
        expected = 2 * np.pi * defaults.HOLE_SPLITTING_HZ
        assert spin_system.hole_splitting == pytest.approx(expected, rel=1e-9)

    def test_electron_splitting_at_8_tesla(self, spin_system):
        expected = 2 * np.pi * defaults.ELECTRON_SPLITTING_HZ
        assert spin_system.electron_splitting == pytest.approx(expected, rel=1e-9)

    def test_zero_field_gives_zero(self):
        assert zeeman_splitting(0.27, 0.0) == 0.0

    def test_linear_in_field(self):
        assert zeeman_splitting(0.27, 4.0) == pytest.approx(
            0.5 * zeeman_splitting(0.27, 8.0)
        )

    def test_negative_field_rejected(self):
        with pytest.raises(DomainError):
            zeeman_splitting(0.27, -1.0)


class TestSelectionRules:
    """Tests for ideal_selection_rules and check_selection_rules."""

    def test_ideal_rules_pass_check(self, selection_rules):
        check_selection_rules(selection_rules)

    def test_h_drives_vertical_legs_only(self, selection_rules):
        h = selection_rules.for_polarization(Polarization.H)
        assert h[DOWN, TRION_DOWN] == 1.0
        assert h[UP, TRION_UP] == 1.0
        assert h[UP, TRION_DOWN] == 0.0
        assert h[DOWN, TRION_UP] == 0.0

    def test_circular_light_drives_all_four_legs(self, selection_rules):
        sigma = selection_rules.for_polarization(Polarization.SIGMA_PLUS)
        for ground in (DOWN, UP):
            for trion in (TRION_DOWN, TRION_UP):
                assert abs(sigma[ground, trion]) > 0

    def test_imbalance_weakens_diagonal_legs(self):
        rules = ideal_selection_rules(0.2)
        sigma = rules.for_polarization(Polarization.SIGMA_PLUS)
        diagonal = abs(sigma[UP, TRION_DOWN])
        assert diagonal == pytest.approx(0.8 * abs(sigma[DOWN, TRION_DOWN]))

    def test_imbalance_out_of_range(self):
        with pytest.raises(DomainError):
            ideal_selection_rules(1.0)

    def test_ground_ground_entry_rejected(self):
        matrix = np.zeros((4, 4), dtype=complex)
        matrix[DOWN, UP] = matrix[UP, DOWN] = 1.0
        rules = SelectionRules(coupling={Polarization.H: matrix})
        with pytest.raises(DomainError):
            check_selection_rules(rules)


class TestBuildHamiltonian:
    """Tests for build_hamiltonian."""

    def test_hermitian(self, spin_system, selection_rules):
        drive = DriveField(rabi=1e11, detuning=2e12)
        h = build_hamiltonian(spin_system, selection_rules, drive)
        assert np.allclose(h, h.conj().T)

    def test_undriven_is_diagonal(self, spin_system, selection_rules):
        h = build_hamiltonian(spin_system, selection_rules, DriveField())
        assert np.allclose(h, np.diag(np.diag(h)))

    def test_ground_splitting_on_diagonal(self, spin_system, selection_rules):
        h = build_hamiltonian(spin_system, selection_rules, DriveField())
        splitting = np.real(h[UP, UP] - h[DOWN, DOWN])
        assert splitting == pytest.approx(spin_system.hole_splitting)

    def test_non_finite_drive_rejected(self, spin_system, selection_rules):
        with pytest.raises(DomainError):
            build_hamiltonian(spin_system, selection_rules, DriveField(rabi=np.inf))


class TestLarmorFrequency:
    """Tests for larmor_frequency."""

    def test_reference_bias_gives_hole_splitting(self, spin_system):
        omega = larmor_frequency(spin_system, defaults.BIAS_REF)
        assert omega == pytest.approx(spin_system.hole_splitting)

    def test_bias_pair_dephases_by_pi_at_t2star(self, spin_system):
        low, high = defaults.BIAS_PAIR
        difference = larmor_frequency(spin_system, high) - larmor_frequency(
            spin_system, low
        )
        assert difference * defaults.T2_STAR == pytest.approx(np.pi)

    def test_monotone_in_bias(self, spin_system):
        biases = np.linspace(1.45, 1.85, 9)
        omegas = [larmor_frequency(spin_system, v) for v in biases]
        assert np.all(np.diff(omegas) > 0)

    def test_outside_device_range(self, spin_system):
        with pytest.raises(RangeError):
            larmor_frequency(spin_system, 2.5)
