"""The simulated bench: dot, optics, noise, feedback and detection."""

from dataclasses import dataclass, field

from ..data import defaults
from ..models.data_models import (
    ChargeSpecies,
    DomainError,
    NoiseModel,
    OverhauserState,
    Pulse,
    PumpWindow,
    SelectionRules,
    SpinSystem,
)
from ..physics.levels import default_spin_system, ideal_selection_rules
from ..physics.noise import default_noise_model, default_overhauser
from ..physics.pulses import default_pulse, default_pump
from .readout import ReadoutModel


@dataclass(frozen=True)
class FeedbackSettings:
    """Nuclear feedback constants shared by every feedback scan."""

    enabled: bool = True
    gain: float = defaults.FEEDBACK_GAIN
    relaxation_rate: float = defaults.FEEDBACK_RELAXATION
    bound: float = defaults.FEEDBACK_BOUND
    target: float = defaults.FEEDBACK_TARGET
    drag_width: float = defaults.DRAG_WIDTH
    ramsey_pull: float = defaults.RAMSEY_PULL
    dwell: float = defaults.DWELL_PER_POINT
    updates_per_point: int = defaults.UPDATES_PER_POINT
    # None takes κ from the charge species profile
    suppression: float | None = None

    def __post_init__(self):
        if self.dwell <= 0:
            raise DomainError(f"Feedback dwell must be > 0, got {self.dwell}")
        if self.updates_per_point < 1:
            raise DomainError("updates_per_point must be >= 1")
        if self.drag_width <= 0:
            raise DomainError(f"drag_width must be > 0, got {self.drag_width}")

    def initial_state(self, species: ChargeSpecies) -> OverhauserState:
        overrides = {
            "gain": self.gain if self.enabled else 0.0,
            "relaxation_rate": self.relaxation_rate,
            "bound": self.bound,
            "target": self.target,
        }
        if self.suppression is not None:
            overrides["suppression"] = self.suppression
        return default_overhauser(species, **overrides)

    def to_dict(self) -> dict:
        return {
            "enabled": self.enabled,
            "gain": self.gain,
            "relaxation_rate": self.relaxation_rate,
            "bound": self.bound,
            "target": self.target,
            "drag_width": self.drag_width,
            "ramsey_pull": self.ramsey_pull,
            "dwell": self.dwell,
            "updates_per_point": self.updates_per_point,
            "suppression": self.suppression,
        }


@dataclass(frozen=True)
class PulseErrors:
    """Phenomenological pulse imperfections applied by the sweep engine."""

    depolarization: float = defaults.PULSE_DEPOLARIZATION
    damping_per_pi: float = defaults.TRION_DAMPING_PER_PI

    def __post_init__(self):
        if not 0.0 <= self.depolarization < 1.0:
            raise DomainError(
                f"depolarization must lie in [0, 1): {self.depolarization}"
            )
        if self.damping_per_pi < 0:
            raise DomainError(f"damping_per_pi must be >= 0: {self.damping_per_pi}")

    def to_dict(self) -> dict:
        return {
            "depolarization": self.depolarization,
            "damping_per_pi": self.damping_per_pi,
        }


@dataclass(frozen=True, eq=False)
class Setup:
    """Everything an experiment needs besides its sweep."""

    system: SpinSystem = field(default_factory=default_spin_system)
    noise: NoiseModel = field(default_factory=default_noise_model)
    rules: SelectionRules = field(default_factory=ideal_selection_rules)
    pulse: Pulse = field(default_factory=default_pulse)
    pump: PumpWindow = field(default_factory=default_pump)
    scan_pump_rabi: float = defaults.SCAN_PUMP_RABI
    period: float = defaults.LASER_PERIOD
    readout: ReadoutModel = field(default_factory=ReadoutModel)
    feedback: FeedbackSettings = field(default_factory=FeedbackSettings)
    pulse_errors: PulseErrors = field(default_factory=PulseErrors)

    def to_dict(self) -> dict:
        return {
            "system": self.system.to_dict(),
            "noise": self.noise.to_dict(),
            "rules": self.rules.to_dict(),
            "pulse": self.pulse.to_dict(),
            "pump": self.pump.to_dict(),
            "scan_pump_rabi": self.scan_pump_rabi,
            "period": self.period,
            "readout": {
                "efficiency": self.readout.efficiency,
                "dark_rate": self.readout.dark_rate,
            },
            "feedback": self.feedback.to_dict(),
            "pulse_errors": self.pulse_errors.to_dict(),
        }


def default_setup(**overrides) -> Setup:
    return Setup(**overrides)
