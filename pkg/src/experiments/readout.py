"""Photon counting and the vectorized ground-manifold engine.

Pulses last picoseconds and pump windows tens of nanoseconds, so sweeps do
not integrate the full master equation at every point. The pump windows are
reduced once to linear maps on the ground populations (``PumpMap``), the
pulses to 2x2 unitaries from ``effective_rotation``, and free precession is
applied analytically to a stack of 2x2 density matrices, one per
quasi-static draw.
"""

import logging
from dataclasses import dataclass

import numpy as np

from ..data import defaults
from ..models.data_models import (
    DOWN,
    UP,
    DensityMatrix,
    DomainError,
    PumpWindow,
    SpinSystem,
)
from ..physics.dynamics import optical_pump

logger = logging.getLogger(__name__)


def photon_counts(
    prob_excited,
    shots: int,
    efficiency: float,
    dark_rate: float,
    rng: np.random.Generator,
):
    """Detected photons: Binomial(shots, p·η) + Poisson(dark·shots)."""
    prob = np.asarray(prob_excited, dtype=float)
    if np.any((prob < 0) | (prob > 1)):
        raise DomainError("Detection probability must lie in [0, 1]")
    if not 0.0 <= efficiency <= 1.0:
        raise DomainError(f"Efficiency must lie in [0, 1], got {efficiency}")
    if dark_rate < 0:
        raise DomainError(f"Dark rate must be >= 0, got {dark_rate}")
    if shots < 0:
        raise DomainError(f"Shot count must be >= 0, got {shots}")

    counts = rng.binomial(shots, prob * efficiency)
    if dark_rate > 0:
        counts = counts + rng.poisson(dark_rate * shots, size=np.shape(prob))
    return counts


def expected_counts(prob_excited, shots: int, efficiency: float, dark_rate: float):
    """Mean and standard deviation of ``photon_counts``."""
    q = np.asarray(prob_excited, dtype=float) * efficiency
    mean = shots * q + shots * dark_rate
    std = np.sqrt(shots * q * (1 - q) + shots * dark_rate)
    return mean, std


@dataclass(frozen=True)
class PumpMap:
    """Effect of one pump window on each pure ground state.

    ``to_up[i]`` is the |⇑⟩ population left after pumping |i⟩ and
    ``emission[i]`` the readout-leg photon expectation for that input.
    """

    to_up: tuple[float, float]
    emission: tuple[float, float]

    @classmethod
    def from_window(cls, window: PumpWindow, sys: SpinSystem) -> "PumpMap":
        to_up = []
        emission = []
        for index in (DOWN, UP):
            final, photons = optical_pump(DensityMatrix.pure(index), window, sys)
            populations = final.populations
            # Residual trion population decays with the normal branching
            trion = populations[2] + populations[3]
            to_up.append(float(populations[UP] + 0.5 * trion))
            emission.append(float(photons))
        logger.debug(f"PumpMap: to_up={to_up}, emission={emission}")
        return cls(to_up=tuple(to_up), emission=tuple(emission))

    def apply(self, p_up):
        """Pump a stack of states; returns (p_up after, emitted photons)."""
        p_up = np.asarray(p_up, dtype=float)
        p_down = 1.0 - p_up
        after = p_down * self.to_up[DOWN] + p_up * self.to_up[UP]
        photons = p_down * self.emission[DOWN] + p_up * self.emission[UP]
        return after, photons


@dataclass(frozen=True)
class ReadoutModel:
    """Detection chain after the readout pump."""

    efficiency: float = defaults.READOUT_EFFICIENCY
    dark_rate: float = defaults.DARK_COUNTS_PER_SHOT

    def __post_init__(self):
        if not 0.0 <= self.efficiency <= 1.0:
            raise DomainError(f"efficiency must lie in [0, 1]: {self.efficiency}")
        if self.dark_rate < 0:
            raise DomainError(f"dark_rate must be >= 0: {self.dark_rate}")


def ground_state(p_up, size: int | None = None) -> np.ndarray:
    """Incoherent ground states with the given |⇑⟩ population."""
    shape = () if size is None else (size,)
    p_up = np.broadcast_to(np.asarray(p_up, dtype=float), shape)
    rho = np.zeros(p_up.shape + (2, 2), dtype=complex)
    rho[..., 0, 0] = 1.0 - p_up
    rho[..., 1, 1] = p_up
    return rho


def apply_unitary(rho: np.ndarray, unitary: np.ndarray) -> np.ndarray:
    return unitary @ rho @ unitary.conj().T


def depolarize(rho: np.ndarray, p: float) -> np.ndarray:
    """ρ → (1 − p)ρ + p·I/2."""
    if p == 0:
        return rho
    return (1.0 - p) * rho + 0.5 * p * np.eye(2)


def pulse_depolarization(
    theta: float,
    per_pulse: float = defaults.PULSE_DEPOLARIZATION,
    per_pi: float = defaults.TRION_DAMPING_PER_PI,
) -> float:
    """Depolarizing probability of one pulse of area θ.

    Grows linearly to ``per_pulse`` at π/2; larger areas add the damping from
    residual trion population, ``per_pi`` per π beyond π/2.
    """
    theta = abs(theta)
    if theta == 0:
        return 0.0
    base = per_pulse * min(1.0, theta / (np.pi / 2))
    extra = np.exp(-per_pi * max(0.0, theta - np.pi / 2) / np.pi)
    return float(1.0 - (1.0 - base) * extra)


def precess(
    rho: np.ndarray,
    phase,
    coherence_decay=1.0,
    population_decay=1.0,
) -> np.ndarray:
    """Free precession of a stack of ground states by per-state phases.

    ``population_decay`` multiplies the population difference (T1),
    ``coherence_decay`` the coherence (γ_φ, T1 and any other damping).
    """
    out = rho.copy()
    phase = np.asarray(phase, dtype=float)
    factor = np.exp(1j * phase) * coherence_decay
    out[..., 0, 1] = rho[..., 0, 1] * factor
    out[..., 1, 0] = np.conj(out[..., 0, 1])
    if np.any(np.asarray(population_decay) != 1.0):
        total = np.real(rho[..., 0, 0] + rho[..., 1, 1])
        diff = np.real(rho[..., 0, 0] - rho[..., 1, 1]) * population_decay
        out[..., 0, 0] = 0.5 * (total + diff)
        out[..., 1, 1] = 0.5 * (total - diff)
    return out


def up_population(rho: np.ndarray):
    return np.clip(np.real(rho[..., 1, 1]), 0.0, 1.0)
