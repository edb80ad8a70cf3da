"""Data models for the quantum dot spin qubit simulator."""

from dataclasses import dataclass, field, replace
from enum import Enum

import numpy as np

# Basis ordering used everywhere: |⇓⟩, |⇑⟩, |⇓⇑,↓⟩, |⇓⇑,↑⟩
DOWN = 0
UP = 1
TRION_DOWN = 2
TRION_UP = 3
BASIS_LABELS = ("down", "up", "trion_down", "trion_up")


class SimulationError(Exception):
    """Base class for every error raised by the simulator."""


class ConfigError(SimulationError):
    """Invalid or unresolvable run configuration."""


class SequenceError(SimulationError):
    """A pulse sequence cannot be built as requested."""


class DomainError(SimulationError, ValueError):
    """An argument lies outside the mathematical domain of an operation."""


class RangeError(SimulationError, ValueError):
    """An argument lies outside the configured device range."""


class CalibrationError(SimulationError):
    """Power calibration did not converge."""


class FitError(SimulationError):
    """A fit required by a downstream step did not converge."""


class IntegrationError(SimulationError):
    """The master-equation integrator gave up.

    Carries the last state that was integrated successfully.
    """

    def __init__(self, message: str, last_state=None, last_time: float | None = None):
        super().__init__(message)
        self.last_state = last_state
        self.last_time = last_time


class Polarization(Enum):
    """Optical polarization of a pulse or pump window."""

    SIGMA_PLUS = "sigma+"
    SIGMA_MINUS = "sigma-"
    H = "H"
    V = "V"


class PulseShape(Enum):
    """Temporal envelope of a rotation pulse."""

    GAUSSIAN = "gaussian"
    SECH = "sech"


class ExperimentKind(Enum):
    """Experiments the runner knows how to perform."""

    RABI = "rabi"
    RAMSEY = "ramsey"
    BLOCH_MAP = "bloch_map"
    ECHO_FINE = "echo_fine"
    ECHO_DECAY = "echo_decay"
    PUMP_SCAN = "pump_scan"
    HYSTERESIS_RAMSEY = "hysteresis_ramsey"
    T1 = "t1"
    LARMOR_BIAS = "larmor_bias"


class ScanDirection(Enum):
    """Order in which sweep points are visited."""

    UP = "up"
    DOWN = "down"
    BOTH = "both"


class ChargeSpecies(Enum):
    """Which carrier is trapped in the dot."""

    HOLE = "hole"
    ELECTRON = "electron"


class EnvelopeModel(Enum):
    """Outcome of comparing decay-envelope fits."""

    GAUSSIAN = "gaussian"
    EXPONENTIAL = "exponential"
    INCONCLUSIVE = "inconclusive"


@dataclass(frozen=True)
class SpinSystem:
    """Physical constants of one dot (SI units, angular frequencies in rad/s)."""

    b_field: float
    g_hole: float
    g_electron: float
    trion_frequency: float
    gamma_sp: float
    larmor_bias_slope: float
    # (V_ref, ω_L_ref); ω_L_ref None means "hole Zeeman splitting at b_field"
    larmor_bias_ref: tuple[float, float | None] = (1.60, None)
    bias_range: tuple[float, float] = (1.40, 1.90)
    branching_down: float = 0.5  # fraction of each trion decay into |⇓⟩

    def __post_init__(self):
        if self.b_field < 0:
            raise DomainError(f"b_field must be >= 0, got {self.b_field}")
        if self.gamma_sp <= 0:
            raise DomainError(f"gamma_sp must be > 0, got {self.gamma_sp}")
        if not 0.0 <= self.branching_down <= 1.0:
            raise DomainError(
                f"branching_down must be in [0, 1]: {self.branching_down}"
            )
        low, high = self.bias_range
        if low > high:
            raise DomainError(f"bias_range is inverted: {self.bias_range}")

    @property
    def hole_splitting(self) -> float:
        """δ_HH in rad/s."""
        # Import here to avoid circular imports
        from ..physics.levels import zeeman_splitting

        return zeeman_splitting(self.g_hole, self.b_field)

    @property
    def electron_splitting(self) -> float:
        """δ_e in rad/s."""
        from ..physics.levels import zeeman_splitting

        return zeeman_splitting(self.g_electron, self.b_field)

    @property
    def reference_larmor(self) -> float:
        """ω_L at the bias calibration anchor."""
        omega_ref = self.larmor_bias_ref[1]
        return self.hole_splitting if omega_ref is None else omega_ref

    def to_dict(self) -> dict:
        """Convert to dictionary for JSON serialization."""
        return {
            "b_field": self.b_field,
            "g_hole": self.g_hole,
            "g_electron": self.g_electron,
            "trion_frequency": self.trion_frequency,
            "gamma_sp": self.gamma_sp,
            "larmor_bias_slope": self.larmor_bias_slope,
            "larmor_bias_ref": list(self.larmor_bias_ref),
            "bias_range": list(self.bias_range),
            "branching_down": self.branching_down,
        }


@dataclass(frozen=True, eq=False)
class SelectionRules:
    """Dipole amplitudes per polarization.

    Each matrix is 4x4, Hermitian, with entries only between a ground state
    (rows/cols 0-1) and a trion state (rows/cols 2-3).
    """

    coupling: dict[Polarization, np.ndarray]

    def for_polarization(self, polarization: Polarization) -> np.ndarray:
        """Coupling matrix for one polarization."""
        return self.coupling[polarization]

    def to_dict(self) -> dict:
        """Nonzero ground-trion amplitudes per polarization, as [re, im]."""
        out = {}
        for polarization, matrix in self.coupling.items():
            legs = {}
            for ground in (DOWN, UP):
                for trion in (TRION_DOWN, TRION_UP):
                    value = complex(matrix[ground, trion])
                    if value != 0:
                        legs[f"{ground}-{trion}"] = [value.real, value.imag]
            out[polarization.value] = legs
        return out


@dataclass(frozen=True)
class Pulse:
    """A detuned picosecond rotation pulse."""

    center: float
    fwhm: float = 3.67e-12  # intensity FWHM, s
    detuning: float = 2 * np.pi * 340e9
    peak_rabi: float = 0.0
    polarization: Polarization = Polarization.SIGMA_PLUS
    shape: PulseShape = PulseShape.GAUSSIAN
    label: str = "rotation"

    def __post_init__(self):
        if self.fwhm <= 0:
            raise DomainError(f"Pulse fwhm must be > 0, got {self.fwhm}")

    @property
    def half_width(self) -> float:
        """Half-width of the window outside which the envelope is negligible."""
        return (4.0 if self.shape == PulseShape.GAUSSIAN else 8.0) * self.fwhm

    @property
    def start(self) -> float:
        return self.center - self.half_width

    @property
    def end(self) -> float:
        return self.center + self.half_width

    def rabi(self, t):
        """Field Rabi frequency Ω(t) in rad/s (intensity FWHM = fwhm)."""
        x = (np.asarray(t, dtype=float) - self.center) / self.fwhm
        if self.shape == PulseShape.GAUSSIAN:
            return self.peak_rabi * np.exp(-2.0 * np.log(2.0) * x**2)
        # sech² intensity with the same FWHM
        return self.peak_rabi / np.cosh(2.0 * np.arccosh(np.sqrt(2.0)) * x)

    def with_rabi(self, peak_rabi: float) -> "Pulse":
        return replace(self, peak_rabi=peak_rabi)

    def to_dict(self) -> dict:
        """Convert to dictionary for the sequence manifest (times in ps)."""
        return {
            "type": "pulse",
            "label": self.label,
            "center_ps": self.center * 1e12,
            "fwhm_ps": self.fwhm * 1e12,
            "detuning": self.detuning,
            "peak_rabi": self.peak_rabi,
            "polarization": self.polarization.value,
            "shape": self.shape.value,
        }


@dataclass(frozen=True)
class PumpWindow:
    """A narrowband CW pump window used for initialization and readout."""

    start: float
    duration: float = 26e-9
    pump_rabi: float = 5e9
    target_transition: tuple[int, int] = (UP, TRION_DOWN)
    detuning: float = 0.0  # pump offset from the driven leg, rad/s
    label: str = "pump"

    def __post_init__(self):
        if self.duration <= 0:
            raise DomainError(f"PumpWindow duration must be > 0, got {self.duration}")

    @property
    def end(self) -> float:
        return self.start + self.duration

    def to_dict(self) -> dict:
        return {
            "type": "pump",
            "label": self.label,
            "start_ps": self.start * 1e12,
            "duration_ps": self.duration * 1e12,
            "pump_rabi": self.pump_rabi,
            "target_transition": list(self.target_transition),
            "detuning": self.detuning,
        }


@dataclass(frozen=True)
class Sequence:
    """Time-ordered optical events making up one experimental shot."""

    events: tuple = ()
    period: float = 13e-9
    repetitions: int = 1

    @property
    def pulses(self) -> list[Pulse]:
        return [e for e in self.events if isinstance(e, Pulse)]

    @property
    def pump_windows(self) -> list[PumpWindow]:
        return [e for e in self.events if isinstance(e, PumpWindow)]

    @property
    def span(self) -> float:
        """Total time available to the sequence."""
        return self.period * self.repetitions

    def to_dict(self) -> dict:
        """Convert to the JSON manifest format."""
        return {
            "period_ps": self.period * 1e12,
            "repetitions": self.repetitions,
            "events": [event.to_dict() for event in self.events],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "Sequence":
        """Rebuild a sequence from its manifest form."""
        events = []
        for item in data["events"]:
            if item["type"] == "pulse":
                events.append(
                    Pulse(
                        center=item["center_ps"] / 1e12,
                        fwhm=item["fwhm_ps"] / 1e12,
                        detuning=item["detuning"],
                        peak_rabi=item["peak_rabi"],
                        polarization=Polarization(item["polarization"]),
                        shape=PulseShape(item["shape"]),
                        label=item["label"],
                    )
                )
            elif item["type"] == "pump":
                events.append(
                    PumpWindow(
                        start=item["start_ps"] / 1e12,
                        duration=item["duration_ps"] / 1e12,
                        pump_rabi=item["pump_rabi"],
                        target_transition=tuple(item["target_transition"]),
                        detuning=item["detuning"],
                        label=item["label"],
                    )
                )
            else:
                raise SequenceError(f"Unknown event type: {item['type']}")
        return cls(
            events=tuple(events),
            period=data["period_ps"] / 1e12,
            repetitions=data["repetitions"],
        )


@dataclass(frozen=True)
class Violation:
    """One problem found by the sequence validator."""

    kind: str  # "order", "overlap" or "bounds"
    message: str
    index: int = -1

    def to_dict(self) -> dict:
        return {"kind": self.kind, "message": self.message, "index": self.index}


@dataclass(eq=False)
class DensityMatrix:
    """4x4 density matrix over (|⇓⟩, |⇑⟩, trion↓, trion↑)."""

    rho: np.ndarray

    def __post_init__(self):
        self.rho = np.asarray(self.rho, dtype=complex)
        if self.rho.shape != (4, 4):
            raise DomainError(f"DensityMatrix must be 4x4, got {self.rho.shape}")

    @classmethod
    def pure(cls, index: int) -> "DensityMatrix":
        rho = np.zeros((4, 4), dtype=complex)
        rho[index, index] = 1.0
        return cls(rho)

    @classmethod
    def from_vector(cls, psi) -> "DensityMatrix":
        psi = np.asarray(psi, dtype=complex)
        psi = psi / np.linalg.norm(psi)
        return cls(np.outer(psi, psi.conj()))

    @classmethod
    def from_ground(cls, rho_ground: np.ndarray) -> "DensityMatrix":
        """Embed a 2x2 ground-manifold state."""
        rho = np.zeros((4, 4), dtype=complex)
        rho[:2, :2] = rho_ground
        return cls(rho)

    @property
    def trace(self) -> float:
        return float(np.real(np.trace(self.rho)))

    @property
    def hermiticity_error(self) -> float:
        return float(np.max(np.abs(self.rho - self.rho.conj().T)))

    @property
    def min_eigenvalue(self) -> float:
        hermitian = 0.5 * (self.rho + self.rho.conj().T)
        return float(np.min(np.linalg.eigvalsh(hermitian)))

    @property
    def populations(self) -> np.ndarray:
        return np.real(np.diag(self.rho)).copy()

    @property
    def purity(self) -> float:
        return float(np.real(np.trace(self.rho @ self.rho)))

    @property
    def ground_block(self) -> np.ndarray:
        return self.rho[:2, :2].copy()

    @property
    def bloch_vector(self) -> np.ndarray:
        """Ground-manifold Bloch vector, x along the field, z along the optical axis.

        |⇓⟩ is +x; rotations generated by the Larmor term are about x.
        """
        g = self.rho[:2, :2]
        return np.array(
            [
                np.real(g[0, 0] - g[1, 1]),
                2.0 * np.imag(g[0, 1]),
                2.0 * np.real(g[0, 1]),
            ]
        )

    def is_physical(self, atol: float = 1e-9) -> bool:
        return (
            self.hermiticity_error <= 1e-12 + atol
            and abs(self.trace - 1.0) <= atol
            and self.min_eigenvalue >= -atol
        )

    def trace_distance(self, other: "DensityMatrix") -> float:
        diff = self.rho - other.rho
        diff = 0.5 * (diff + diff.conj().T)
        return float(0.5 * np.sum(np.abs(np.linalg.eigvalsh(diff))))

    def to_dict(self) -> dict:
        return {"re": np.real(self.rho).tolist(), "im": np.imag(self.rho).tolist()}


@dataclass(frozen=True, eq=False)
class LindbladTerm:
    """Collapse operator with its rate (1/s)."""

    operator: np.ndarray
    rate: float
    label: str = ""

    def __post_init__(self):
        if self.rate < 0:
            raise DomainError(f"LindbladTerm rate must be >= 0, got {self.rate}")


@dataclass
class Trajectory:
    """Output of a master-equation integration."""

    times: np.ndarray
    states: list[DensityMatrix]
    error_estimate: float = 0.0

    @property
    def final(self) -> DensityMatrix:
        return self.states[-1]


@dataclass(frozen=True)
class RotationResult:
    """Ground-manifold rotation produced by one detuned pulse."""

    axis: np.ndarray
    angle: float
    unitary: np.ndarray  # 2x2, applied in the free-precession frame of the centre
    residual_trion: float
    nominal_angle: float  # ∫Ω²/(2Δ)dt
    valid: bool = True
    # 4x4 carrier-frame map acting at the centre, trion amplitudes included
    pulse_map: np.ndarray | None = None

    def to_dict(self) -> dict:
        return {
            "axis": np.asarray(self.axis).tolist(),
            "angle": self.angle,
            "residual_trion": self.residual_trion,
            "nominal_angle": self.nominal_angle,
            "valid": self.valid,
        }


@dataclass(frozen=True)
class NoiseModel:
    """Decoherence channels acting on the spin and the optical line."""

    sigma_quasistatic: float = 0.0  # rad/s
    gamma_phi: float = 0.0  # 1/s
    optical_linewidth_fwhm: float = 0.0  # rad/s
    bias_modulation: tuple[float, float] | None = None  # (amplitude V, frequency Hz)
    t1: float | None = None  # s; None disables spin relaxation
    ou_correlation_time: float | None = None  # s; None keeps γ_φ Markovian

    def __post_init__(self):
        for name in ("sigma_quasistatic", "gamma_phi", "optical_linewidth_fwhm"):
            if getattr(self, name) < 0:
                raise DomainError(f"NoiseModel.{name} must be >= 0")
        if self.t1 is not None and self.t1 <= 0:
            raise DomainError(f"NoiseModel.t1 must be > 0, got {self.t1}")
        if self.ou_correlation_time is not None and self.ou_correlation_time <= 0:
            raise DomainError("NoiseModel.ou_correlation_time must be > 0")

    def to_dict(self) -> dict:
        return {
            "sigma_quasistatic": self.sigma_quasistatic,
            "gamma_phi": self.gamma_phi,
            "optical_linewidth_fwhm": self.optical_linewidth_fwhm,
            "bias_modulation": (
                list(self.bias_modulation) if self.bias_modulation else None
            ),
            "t1": self.t1,
            "ou_correlation_time": self.ou_correlation_time,
        }


@dataclass(frozen=True)
class OverhauserState:
    """Nuclear-feedback state carried through a sequential scan."""

    shift: float = 0.0  # rad/s
    gain: float = 0.0  # rad/s per second of dwell per unit drag
    suppression: float = 1.0  # κ
    relaxation_rate: float = 5.0  # 1/s
    bound: float = 2 * np.pi * 20e9  # rad/s
    target: float = 0.5  # pump signal (relative) at which the drag changes sign

    def __post_init__(self):
        if self.suppression < 1:
            raise DomainError(f"Suppression κ must be >= 1, got {self.suppression}")
        if abs(self.shift) > self.bound:
            raise DomainError("Overhauser shift exceeds its bound")

    def to_dict(self) -> dict:
        return {
            "shift": self.shift,
            "gain": self.gain,
            "suppression": self.suppression,
            "relaxation_rate": self.relaxation_rate,
            "bound": self.bound,
            "target": self.target,
        }


@dataclass
class ExperimentConfig:
    """What to sweep and how to measure it.

    ``sweep`` is the outer axis; ``inner`` (optional) is a second axis
    scanned at every outer point (fine delays, or τ in a Bloch map).
    """

    kind: ExperimentKind
    sweep: np.ndarray
    sweep_unit: str = ""
    inner: np.ndarray | None = None
    inner_unit: str = ""
    shots_per_point: int = 10_000
    scan_direction: ScanDirection = ScanDirection.UP
    charge_species: ChargeSpecies = ChargeSpecies.HOLE
    seed: int = 0
    bias: float | None = None  # None means the calibration anchor
    draws: int = 2000  # quasi-static draws per point
    shot_noise: bool = True
    total_delay: float = 130e-9  # 2T for echo_fine
    threads: int = 1

    def __post_init__(self):
        self.sweep = np.atleast_1d(np.asarray(self.sweep, dtype=float))
        if self.inner is not None:
            self.inner = np.atleast_1d(np.asarray(self.inner, dtype=float))
        if self.shots_per_point < 1:
            raise ConfigError("shots_per_point must be >= 1")
        if self.sweep.size == 0:
            raise ConfigError("sweep must not be empty")
        if self.inner is not None and self.inner.size == 0:
            raise ConfigError("inner sweep must not be empty")
        if self.draws < 1:
            raise ConfigError("draws must be >= 1")

    def to_dict(self) -> dict:
        return {
            "kind": self.kind.value,
            "sweep": self.sweep.tolist(),
            "sweep_unit": self.sweep_unit,
            "inner": None if self.inner is None else self.inner.tolist(),
            "inner_unit": self.inner_unit,
            "shots_per_point": self.shots_per_point,
            "scan_direction": self.scan_direction.value,
            "charge_species": self.charge_species.value,
            "seed": self.seed,
            "bias": self.bias,
            "draws": self.draws,
            "shot_noise": self.shot_noise,
            "total_delay": self.total_delay,
        }


@dataclass
class SweepResult:
    """One experiment's measured points.

    Every column holds one entry per measured point; ``direction`` labels
    which scan the point belongs to.
    """

    kind: ExperimentKind
    axes: dict[str, np.ndarray]
    axis_units: dict[str, str]
    mean_counts: np.ndarray
    shots: np.ndarray
    std_err: np.ndarray
    direction: np.ndarray
    probability: np.ndarray  # noise-free detection probability per shot
    manifest: dict = field(default_factory=dict)

    def __post_init__(self):
        if np.any(self.mean_counts < 0):
            raise SimulationError("Counts must be non-negative")

    @property
    def directions(self) -> list[str]:
        seen: list[str] = []
        for d in self.direction:
            if d not in seen:
                seen.append(str(d))
        return seen

    def __len__(self) -> int:
        return len(self.mean_counts)

    def for_direction(self, direction: str) -> "SweepResult":
        """Points of one scan direction, ordered by the primary axis."""
        mask = self.direction == direction
        first_axis = next(iter(self.axes))
        order = np.argsort(self.axes[first_axis][mask], kind="stable")
        return SweepResult(
            kind=self.kind,
            axes={k: v[mask][order] for k, v in self.axes.items()},
            axis_units=dict(self.axis_units),
            mean_counts=self.mean_counts[mask][order],
            shots=self.shots[mask][order],
            std_err=self.std_err[mask][order],
            direction=self.direction[mask][order],
            probability=self.probability[mask][order],
            manifest=self.manifest,
        )

    def check_aligned(self) -> bool:
        """True when every direction covers the same axis values."""
        dirs = self.directions
        if len(dirs) < 2:
            return True
        reference = self.for_direction(dirs[0]).axes
        for d in dirs[1:]:
            other = self.for_direction(d).axes
            for name, values in reference.items():
                if not np.array_equal(values, other[name]):
                    return False
        return True

    def to_dict(self) -> dict:
        return {
            "kind": self.kind.value,
            "axes": {k: v.tolist() for k, v in self.axes.items()},
            "axis_units": self.axis_units,
            "mean_counts": self.mean_counts.tolist(),
            "shots": self.shots.tolist(),
            "std_err": self.std_err.tolist(),
            "direction": [str(d) for d in self.direction],
            "manifest": self.manifest,
        }


@dataclass
class FitResult:
    """Least-squares fit with 1σ uncertainties."""

    model: str
    params: dict[str, float]
    errors: dict[str, float]
    rss: float
    converged: bool
    flags: list[str] = field(default_factory=list)
    message: str = ""

    def __getitem__(self, name: str) -> float:
        return self.params[name]

    def to_dict(self) -> dict:
        return {
            "model": self.model,
            "params": dict(self.params),
            "errors": dict(self.errors),
            "rss": self.rss,
            "converged": self.converged,
            "flags": list(self.flags),
            "message": self.message,
        }
