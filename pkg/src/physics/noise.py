"""Decoherence channels and the nuclear feedback model.

Quasi-static draws give the Gaussian free-induction decay, a Markovian
pure-dephasing rate gives the exponential echo decay, and an optional
Ornstein-Uhlenbeck process interpolates between the two. The Overhauser
state is carried sequentially through a scan and is the only source of
scan-direction dependence.
"""

import logging
from dataclasses import replace

import numpy as np

from ..data import defaults
from ..models.data_models import (
    DOWN,
    UP,
    ChargeSpecies,
    DomainError,
    LindbladTerm,
    NoiseModel,
    OverhauserState,
    SpinSystem,
)
from .levels import larmor_frequency

logger = logging.getLogger(__name__)

# FWHM = 2√(2 ln 2)·σ for a Gaussian
FWHM_TO_SIGMA = 1.0 / (2.0 * np.sqrt(2.0 * np.log(2.0)))


def default_noise_model(**overrides) -> NoiseModel:
    """NoiseModel with the measured T2*, T2, linewidth and T1 bound."""
    params = {
        "sigma_quasistatic": defaults.SIGMA_QUASISTATIC,
        "gamma_phi": defaults.GAMMA_PHI,
        "optical_linewidth_fwhm": defaults.TWO_PI * defaults.OPTICAL_LINEWIDTH_HZ,
        "bias_modulation": None,
        "t1": defaults.T1,
        "ou_correlation_time": None,
    }
    params.update(overrides)
    return NoiseModel(**params)


def default_overhauser(species: ChargeSpecies | str, **overrides) -> OverhauserState:
    """Feedback state for a freshly prepared scan of the given carrier."""
    name = species.value if isinstance(species, ChargeSpecies) else species
    profile = defaults.get_species_profile(name)
    params = {
        "shift": 0.0,
        "gain": defaults.FEEDBACK_GAIN,
        "suppression": profile.suppression,
        "relaxation_rate": defaults.FEEDBACK_RELAXATION,
        "bound": defaults.FEEDBACK_BOUND,
        "target": defaults.FEEDBACK_TARGET,
    }
    params.update(overrides)
    return OverhauserState(**params)


def spawn_streams(seed: int, count: int) -> list[np.random.Generator]:
    """Independent generators, one per sweep point."""
    children = np.random.SeedSequence(seed).spawn(count)
    return [np.random.default_rng(child) for child in children]


def sample_quasistatic(model: NoiseModel, rng: np.random.Generator, size=None):
    """Shot-batch Larmor offset δω ~ N(0, σ²), rad/s."""
    if model.sigma_quasistatic == 0:
        return 0.0 if size is None else np.zeros(size)
    return rng.normal(0.0, model.sigma_quasistatic, size=size)


def optical_detuning_sample(model: NoiseModel, rng: np.random.Generator, size=None):
    """Spectral-diffusion offset of the trion line, rad/s."""
    sigma = model.optical_linewidth_fwhm * FWHM_TO_SIGMA
    if sigma == 0:
        return 0.0 if size is None else np.zeros(size)
    return rng.normal(0.0, sigma, size=size)


def fid_envelope(t, t2star: float):
    """Gaussian free-induction decay exp(−(t/T2*)²)."""
    t = np.asarray(t, dtype=float)
    if np.any(t < 0):
        raise DomainError("FID time must be >= 0")
    if t2star <= 0:
        raise DomainError(f"T2* must be > 0, got {t2star}")
    result = np.exp(-((t / t2star) ** 2))
    return float(result) if result.ndim == 0 else result


def echo_envelope(two_t, t2: float):
    """Exponential echo decay exp(−2T/T2)."""
    two_t = np.asarray(two_t, dtype=float)
    if np.any(two_t < 0):
        raise DomainError("Echo delay must be >= 0")
    if t2 <= 0:
        raise DomainError(f"T2 must be > 0, got {t2}")
    result = np.exp(-two_t / t2)
    return float(result) if result.ndim == 0 else result


def dephasing_terms(model: NoiseModel) -> list[LindbladTerm]:
    """Ground-manifold collapse operators for γ_φ and T1."""
    terms = []
    if model.gamma_phi > 0:
        # D[diag(1,−1)] at rate γ/2 damps ρ_⇓⇑ at exactly γ
        op = np.zeros((4, 4), dtype=complex)
        op[DOWN, DOWN] = 1.0
        op[UP, UP] = -1.0
        terms.append(LindbladTerm(op, model.gamma_phi / 2, "pure_dephasing"))
    if model.t1 is not None:
        down_to_up = np.zeros((4, 4), dtype=complex)
        down_to_up[UP, DOWN] = 1.0
        up_to_down = np.zeros((4, 4), dtype=complex)
        up_to_down[DOWN, UP] = 1.0
        rate = 1.0 / (2.0 * model.t1)
        terms.append(LindbladTerm(down_to_up, rate, "spin_flip_down_up"))
        terms.append(LindbladTerm(up_to_down, rate, "spin_flip_up_down"))
    return terms


def update_overhauser(
    state: OverhauserState, pump_signal: float, dwell: float, pull: float = 1.0
) -> OverhauserState:
    """Advance the nuclear polarization over one dwell interval.

    The drag η = (pump_signal − target)·pull builds polarization at
    (gain/κ)·η while it relaxes at ``relaxation_rate``; with η held fixed
    over the dwell the linear equation is integrated exactly. ``pull`` is
    the sign (and strength) with which pumping drags the transition.
    """
    if dwell <= 0:
        raise DomainError(f"dwell must be > 0, got {dwell}")
    drag = (pump_signal - state.target) * pull
    drive = state.gain / state.suppression * drag

    rate = state.relaxation_rate
    if rate > 0:
        steady = drive / rate
        decay = np.exp(-rate * dwell)
        shift = steady + (state.shift - steady) * decay
    else:
        shift = state.shift + drive * dwell

    shift = float(np.clip(shift, -state.bound, state.bound))
    return replace(state, shift=shift)


def bias_modulation_offset(
    sys: SpinSystem, model: NoiseModel, t, phase: float = 0.0
):
    """Larmor offset from the AC bias modulation at time t, rad/s."""
    if model.bias_modulation is None:
        return np.zeros_like(np.asarray(t, dtype=float))
    amplitude, frequency = model.bias_modulation
    return (
        sys.larmor_bias_slope
        * amplitude
        * np.sin(2 * np.pi * frequency * np.asarray(t, dtype=float) + phase)
    )


def bias_modulation_phase(
    sys: SpinSystem, model: NoiseModel, t_start, t_end, phase: float = 0.0
):
    """∫ of the modulation offset from t_start to t_end (rad)."""
    t_start = np.asarray(t_start, dtype=float)
    t_end = np.asarray(t_end, dtype=float)
    if model.bias_modulation is None:
        return np.zeros(np.broadcast(t_start, t_end).shape)
    amplitude, frequency = model.bias_modulation
    w = 2 * np.pi * frequency
    return (
        sys.larmor_bias_slope
        * amplitude
        / w
        * (np.cos(w * t_start + phase) - np.cos(w * t_end + phase))
    )


def effective_larmor(
    sys: SpinSystem,
    model: NoiseModel,
    over: OverhauserState,
    bias: float | None,
    t: float,
    draw: float = 0.0,
    phase: float = 0.0,
) -> float:
    """ω_L(bias) + quasi-static draw + Overhauser shift + bias modulation."""
    if bias is None:
        bias = sys.larmor_bias_ref[0]
    omega = larmor_frequency(sys, bias) + draw + over.shift
    return float(omega + bias_modulation_offset(sys, model, t, phase))


def ou_phases(
    model: NoiseModel, times: np.ndarray, rng: np.random.Generator, draws: int
) -> np.ndarray:
    """Accumulated phase of an Ornstein-Uhlenbeck Larmor offset.

    The stationary variance is γ_φ/τ_c, so a short correlation time recovers
    the Markovian rate γ_φ and a long one a Gaussian decay. The offset and
    its integral are advanced together from their joint Gaussian law, which
    is exact for any spacing of ``times``. Returns an array of shape
    (draws, len(times)) with phase 0 at times[0].
    """
    if model.ou_correlation_time is None:
        raise DomainError("NoiseModel has no OU correlation time")
    times = np.asarray(times, dtype=float)
    if times.ndim != 1 or times.size < 2 or np.any(np.diff(times) <= 0):
        raise DomainError("OU times must be a strictly increasing grid")

    tau_c = model.ou_correlation_time
    variance = model.gamma_phi / tau_c
    omega = rng.normal(0.0, np.sqrt(variance), size=draws)
    phase = np.zeros((draws, times.size))
    for k, dt in enumerate(np.diff(times), start=1):
        decay = np.exp(-dt / tau_c)
        lost = -np.expm1(-dt / tau_c)
        var_omega = variance * lost * (1 + decay)
        var_phase = variance * tau_c**2 * (2 * dt / tau_c - lost * (3 - decay))
        covariance = variance * tau_c * lost**2
        sigma_omega = np.sqrt(var_omega)
        spread = np.sqrt(max(var_phase - covariance**2 / var_omega, 0.0))
        kick, extra = rng.normal(size=(2, draws))
        phase[:, k] = (
            phase[:, k - 1]
            + tau_c * lost * omega
            + covariance / sigma_omega * kick
            + spread * extra
        )
        omega = decay * omega + sigma_omega * kick
    return phase
