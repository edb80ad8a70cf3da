"""Four-level double-Λ system in Voigt geometry.

Axes: x along the magnetic field, z along the optical axis. The ground
states |⇓⟩, |⇑⟩ are the x-eigenstates of the hole pseudo-spin; every trion
state couples optically to both of them.
"""

from dataclasses import dataclass

import numpy as np
from scipy import constants

from ..data import defaults
from ..models.data_models import (
    DOWN,
    TRION_DOWN,
    TRION_UP,
    UP,
    DomainError,
    Polarization,
    RangeError,
    SelectionRules,
    SpinSystem,
)

MU_B = constants.physical_constants["Bohr magneton"][0]


@dataclass(frozen=True)
class DriveField:
    """Optical field envelope at one instant, in the frame of its carrier."""

    rabi: float = 0.0  # Ω(t), rad/s
    detuning: float = 0.0  # Δ, carrier offset below the mean trion frequency
    polarization: Polarization = Polarization.SIGMA_PLUS


def zeeman_splitting(g: float, b: float) -> float:
    """Zeeman splitting g·μ_B·B/ħ in rad/s."""
    if b < 0:
        raise DomainError(f"Magnetic field must be >= 0, got {b}")
    return g * MU_B * b / constants.hbar


def default_spin_system(**overrides) -> SpinSystem:
    """SpinSystem with the default dot parameters."""
    params = {
        "b_field": defaults.B_FIELD,
        "g_hole": defaults.G_HOLE,
        "g_electron": defaults.G_ELECTRON,
        "trion_frequency": defaults.TWO_PI * defaults.TRION_FREQUENCY_HZ,
        "gamma_sp": defaults.GAMMA_SP,
        "larmor_bias_slope": defaults.LARMOR_BIAS_SLOPE,
        "larmor_bias_ref": (defaults.BIAS_REF, None),
        "bias_range": defaults.BIAS_RANGE,
        "branching_down": defaults.BRANCHING_DOWN,
    }
    params.update(overrides)
    return SpinSystem(**params)


def ideal_selection_rules(imbalance: float = 0.0) -> SelectionRules:
    """Idealized Voigt selection rules.

    H drives the vertical legs (|⇓⟩-trion↓, |⇑⟩-trion↑), V the diagonal legs.
    Circular light drives all four; the phases are such that the two Raman
    paths through trion↓ and trion↑ add. ``imbalance`` scales the diagonal
    legs down to mimic heavy-hole/light-hole mixing.
    """
    if not 0.0 <= imbalance < 1.0:
        raise DomainError(f"imbalance must be in [0, 1), got {imbalance}")
    a = 1.0 / np.sqrt(2.0)
    b = a * (1.0 - imbalance)
    legs = {
        Polarization.H: {(DOWN, TRION_DOWN): 1.0, (UP, TRION_UP): 1.0},
        Polarization.V: {
            (UP, TRION_DOWN): 1.0 - imbalance,
            (DOWN, TRION_UP): 1.0 - imbalance,
        },
        Polarization.SIGMA_PLUS: {
            (DOWN, TRION_DOWN): a,
            (UP, TRION_DOWN): b,
            (DOWN, TRION_UP): 1j * b,
            (UP, TRION_UP): 1j * a,
        },
        Polarization.SIGMA_MINUS: {
            (DOWN, TRION_DOWN): a,
            (UP, TRION_DOWN): -b,
            (DOWN, TRION_UP): -1j * b,
            (UP, TRION_UP): 1j * a,
        },
    }
    coupling = {}
    for polarization, entries in legs.items():
        matrix = np.zeros((4, 4), dtype=complex)
        for (g, e), amplitude in entries.items():
            matrix[g, e] = amplitude
            matrix[e, g] = np.conj(amplitude)
        coupling[polarization] = matrix
    return SelectionRules(coupling=coupling)


def check_selection_rules(rules: SelectionRules) -> None:
    """Raise DomainError unless every coupling matrix is a valid double-Λ."""
    for polarization, matrix in rules.coupling.items():
        matrix = np.asarray(matrix)
        if matrix.shape != (4, 4):
            raise DomainError(f"{polarization.value} coupling must be 4x4")
        if not np.allclose(matrix, matrix.conj().T, atol=1e-14):
            raise DomainError(f"{polarization.value} coupling is not Hermitian")
        if np.any(np.abs(matrix[:2, :2]) > 0) or np.any(np.abs(matrix[2:, 2:]) > 0):
            raise DomainError(
                f"{polarization.value} coupling has ground-ground or "
                "trion-trion entries"
            )
        if np.any(np.abs(matrix) > 1.0 + 1e-12):
            raise DomainError(f"{polarization.value} amplitudes exceed 1")


def bare_energies(sys: SpinSystem, detuning: float) -> np.ndarray:
    """Diagonal of the rotating-frame Hamiltonian for a carrier at detuning Δ."""
    d_hh = sys.hole_splitting
    d_e = sys.electron_splitting
    return np.array([-d_hh / 2, d_hh / 2, detuning - d_e / 2, detuning + d_e / 2])


def build_hamiltonian(
    sys: SpinSystem, rules: SelectionRules, drive: DriveField
) -> np.ndarray:
    """Rotating-frame Hamiltonian (rad/s) for one instant of the drive."""
    if not (np.isfinite(drive.rabi) and np.isfinite(drive.detuning)):
        raise DomainError("Drive amplitude and detuning must be finite")
    coupling = np.asarray(rules.for_polarization(drive.polarization))
    if not np.allclose(coupling, coupling.conj().T, atol=1e-14):
        raise DomainError(f"{drive.polarization.value} coupling is not Hermitian")

    hamiltonian = np.diag(bare_energies(sys, drive.detuning)).astype(complex)
    if drive.rabi != 0.0:
        hamiltonian += 0.5 * drive.rabi * coupling
    return hamiltonian


def larmor_frequency(sys: SpinSystem, bias: float) -> float:
    """Bias-dependent Larmor frequency ω_L(V) (linear between anchors)."""
    low, high = sys.bias_range
    if not low <= bias <= high:
        raise RangeError(f"Bias {bias} V outside device range [{low}, {high}] V")
    v_ref = sys.larmor_bias_ref[0]
    return sys.reference_larmor + sys.larmor_bias_slope * (bias - v_ref)
