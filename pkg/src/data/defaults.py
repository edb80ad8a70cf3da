"""Default physical and instrument constants.

Values reproduce the measured quantities of a single hole-charged dot at
8 T: Zeeman splittings, trion decay, pulse parameters, coherence times and
the optical linewidth. Where only a measured frequency is known the
underlying parameter (g-factors, noise widths, bias slope) is back-computed
from it here, so that every quoted number is recovered by the simulator.

Frequencies named ``*_HZ`` are ordinary frequencies; everything else is SI
with angular frequencies in rad/s.
"""

from dataclasses import dataclass

import numpy as np
from scipy import constants

TWO_PI = 2.0 * np.pi

# =============================================================================
# Level structure
# =============================================================================

B_FIELD = 8.0  # T
HOLE_SPLITTING_HZ = 30.2e9
ELECTRON_SPLITTING_HZ = 35e9
MU_B = constants.physical_constants["Bohr magneton"][0]

G_HOLE = constants.h * HOLE_SPLITTING_HZ / (MU_B * B_FIELD)  # ≈ 0.2697
G_ELECTRON = constants.h * ELECTRON_SPLITTING_HZ / (MU_B * B_FIELD)  # ≈ 0.3125

# Absolute trion frequency only fixes the lab frame; any optical value works.
TRION_FREQUENCY_HZ = 326e12
GAMMA_SP = 1.0e9  # (1 ns)^-1
BRANCHING_DOWN = 0.5

# =============================================================================
# Optical control
# =============================================================================

LASER_PERIOD = 13e-9
PULSE_FWHM = 3.67e-12
PULSE_DETUNING_HZ = 340e9
PUMP_DURATION = 26e-9
PUMP_RABI = 5.0e9  # completes pumping well inside the 26 ns window
SCAN_PUMP_RABI = 0.3e9  # weak pump for absorption scans (narrow homogeneous line)
# Beyond this pump detuning the emission falls off as a Lorentzian tail
SCAN_TABLE_HALF_WIDTH_HZ = 5e9

# Per-pulse depolarization of a pulse of area >= π/2; fidelity (1+√V)/2 = 0.945
PULSE_DEPOLARIZATION = 0.11
# Extra damping per π of pulse area from residual trion population
TRION_DAMPING_PER_PI = 0.01

# =============================================================================
# Decoherence
# =============================================================================

T2_STAR = 2.3e-9
T2 = 1.1e-6
T1 = 100.0 * T2
SIGMA_QUASISTATIC = np.sqrt(2.0) / T2_STAR
GAMMA_PHI = 1.0 / T2
OPTICAL_LINEWIDTH_HZ = 6.7e9

# =============================================================================
# Bias dependence of the Larmor frequency
# =============================================================================

BIAS_REF = 1.60  # V
BIAS_PAIR = (1.55, 1.65)  # V
BIAS_RANGE = (1.40, 1.90)  # V
# Phase difference of π accumulated at τ = T2* between the two biases
LARMOR_BIAS_SLOPE = np.pi / ((BIAS_PAIR[1] - BIAS_PAIR[0]) * T2_STAR)

# =============================================================================
# Nuclear feedback
# =============================================================================

FEEDBACK_RELAXATION = 5.0  # 1/s
FEEDBACK_GAIN = TWO_PI * 400e9  # rad/s per second of dwell at unit drag
FEEDBACK_BOUND = TWO_PI * 20e9
FEEDBACK_TARGET = 0.5
DRAG_WIDTH = TWO_PI * 4e9  # detuning scale of the drag sign function
# Ramsey readout drags the nuclei more weakly than a continuous pump scan
RAMSEY_PULL = 0.02
DWELL_PER_POINT = 1.0  # s
UPDATES_PER_POINT = 50

# =============================================================================
# Readout and sweeps
# =============================================================================

READOUT_EFFICIENCY = 0.1
DARK_COUNTS_PER_SHOT = 0.0
SHOTS_PER_POINT = 10_000
SCAN_SHOTS_PER_POINT = 1_000_000
QUASISTATIC_DRAWS = 2000


@dataclass(frozen=True)
class SpeciesProfile:
    """Feedback characteristics of one charge species."""

    name: str
    suppression: float  # κ, reduction of nuclear feedback strength
    notes: str = ""


SPECIES_PROFILES: dict[str, SpeciesProfile] = {
    "hole": SpeciesProfile(
        name="hole",
        suppression=30.0,
        notes="Lower bound on the hyperfine suppression for heavy holes",
    ),
    "electron": SpeciesProfile(
        name="electron",
        suppression=1.0,
        notes="Contact hyperfine interaction, full feedback strength",
    ),
}


def get_species_profile(name: str) -> SpeciesProfile:
    """Look up a species profile by name."""
    try:
        return SPECIES_PROFILES[name.lower()]
    except KeyError:
        raise KeyError(f"Unknown charge species: {name}") from None
