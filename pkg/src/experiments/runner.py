"""Sweep engine: calibration, per-point simulation and scan bookkeeping.

The runner owns everything that is expensive to derive once per setup:
the power calibration of the rotation pulses, the pump maps of the
initialization/readout windows and the absorption response table used by
pump scans. Each sweep point is then a handful of 2x2 operations on a stack
of quasi-static draws.
"""

import logging
import math
import threading
from collections.abc import Callable
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace

import numpy as np
from scipy import integrate, optimize

from .. import __version__
from ..data import defaults
from ..models.data_models import (
    UP,
    CalibrationError,
    ConfigError,
    DensityMatrix,
    DomainError,
    ExperimentConfig,
    ExperimentKind,
    OverhauserState,
    PumpWindow,
    RotationResult,
    ScanDirection,
    Sequence,
    SequenceError,
    SweepResult,
)
from ..physics import noise as noise_tools
from ..physics.dynamics import effective_rotation, optical_pump
from ..physics.levels import larmor_frequency
from ..physics.pulses import SequenceBuilder, peak_rabi_for_angle, validate
from .readout import (
    PumpMap,
    apply_unitary,
    depolarize,
    expected_counts,
    ground_state,
    photon_counts,
    precess,
    pulse_depolarization,
    up_population,
)
from .setup import Setup, default_setup

logger = logging.getLogger(__name__)

REPORT_SCHEMA = 1

# Power grid used to unwrap rotation angles beyond π
CALIBRATION_STEP = 1.0 / 32
MAX_CALIBRATION_POWER = 16.0
CALIBRATION_TOLERANCE = 1e-3

# Pump-scan response table, one-sided (the line is symmetric in detuning)
SCAN_TABLE_POINTS = 41
SCAN_TABLE_STRETCH = 3.0

# Largest gate duration counted in the operations-per-coherence figure
GATE_BUDGET = 20e-12
PULSE_AREA_FRACTION = 0.99

AXIS_UNITS = {
    "power": "relative",
    "tau": "s",
    "tau_center": "s",
    "tau_offset": "s",
    "theta": "rad",
    "fine_delay": "s",
    "total_delay": "s",
    "pump_detuning": "rad/s",
    "wait": "s",
    "bias": "V",
}


@dataclass(frozen=True)
class _Row:
    """One measured point: which direction, which axis values."""

    direction: ScanDirection
    index: int
    outer: float
    inner: float | None


class ExperimentRunner:
    """Runs experiments against one simulated setup.

    Calibrations and pump maps are computed lazily and cached, so a runner
    is cheap to create and fast to reuse across sweeps. Non-feedback sweeps
    spread their points over a thread pool; feedback scans walk their
    points in order and carry the Overhauser state from point to point.
    """

    def __init__(self, setup: Setup | None = None):
        self.setup = setup or default_setup()
        self.unit_rabi = peak_rabi_for_angle(np.pi, self.setup.pulse)
        self._lock = threading.RLock()
        self._rotations: dict[float, RotationResult] = {}
        self._grid: list[tuple[float, np.ndarray | None]] = [(0.0, None)]
        self._calibrations: dict[float, float] = {}
        self._pump_map: PumpMap | None = None
        self._scan_table: tuple[np.ndarray, np.ndarray, np.ndarray] | None = None
        self._on_point: Callable[[str, int, float], None] | None = None

        self.builder = SequenceBuilder(
            template=self.setup.pulse,
            pump=self.setup.pump,
            period=self.setup.period,
            rabi_for_angle=self.rabi_for_angle,
        )
        # Nominal amplitudes; used only to lay out and check timing
        self._timing = SequenceBuilder(
            template=self.setup.pulse,
            pump=self.setup.pump,
            period=self.setup.period,
        )

    def set_point_callback(self, callback: Callable[[str, int, float], None]):
        """Set callback invoked as (direction, index, probability) per point."""
        self._on_point = callback

    # =========================================================================
    # Calibration
    # =========================================================================

    def rabi_for_power(self, power: float) -> float:
        """Peak Rabi frequency at relative power P (Ω₀ ∝ √P)."""
        if power < 0:
            raise DomainError(f"Optical power must be >= 0, got {power}")
        return self.unit_rabi * math.sqrt(power)

    def rotation_for_power(self, power: float) -> RotationResult:
        key = round(float(power), 12)
        with self._lock:
            cached = self._rotations.get(key)
        if cached is not None:
            return cached
        pulse = self.setup.pulse.with_rabi(self.rabi_for_power(key))
        rotation = effective_rotation(pulse, self.setup.system, self.setup.rules)
        with self._lock:
            self._rotations[key] = rotation
        return rotation

    def _grid_point(self, k: int) -> tuple[float, np.ndarray | None]:
        """Unwrapped angle and oriented axis at grid power k·CALIBRATION_STEP."""
        with self._lock:
            while len(self._grid) <= k:
                n = len(self._grid)
                rotation = self.rotation_for_power(n * CALIBRATION_STEP)
                self._grid.append(_unwrap(rotation, *self._grid[-1]))
            return self._grid[k]

    def _grid_angle(self, k: int) -> float:
        return self._grid_point(k)[0]

    def rotation_angle(self, power: float) -> float:
        """Rotation angle at power P, continued past π along the power grid."""
        if power < 0:
            raise DomainError(f"Optical power must be >= 0, got {power}")
        if power > MAX_CALIBRATION_POWER:
            raise CalibrationError(
                f"Power {power} exceeds the calibrated range "
                f"[0, {MAX_CALIBRATION_POWER}]"
            )
        k = int(math.floor(power / CALIBRATION_STEP + 1e-9))
        angle, axis = self._grid_point(k)
        if abs(power - k * CALIBRATION_STEP) < 1e-12:
            return angle
        return _unwrap(self.rotation_for_power(power), angle, axis)[0]

    def calibrate_power(self, target_angle: float) -> float:
        """Relative power whose pulse rotates the spin by ``target_angle``.

        Walks the power grid to bracket the first crossing of the target,
        then bisects on the extracted rotation angle.
        """
        if target_angle < 0:
            raise DomainError(f"Target angle must be >= 0, got {target_angle}")
        if target_angle == 0:
            return 0.0
        key = round(float(target_angle), 12)
        with self._lock:
            if key in self._calibrations:
                return self._calibrations[key]

        k = 1
        while self._grid_angle(k) < target_angle:
            k += 1
            if k * CALIBRATION_STEP > MAX_CALIBRATION_POWER:
                raise CalibrationError(
                    f"No power up to {MAX_CALIBRATION_POWER} reaches "
                    f"{target_angle:.4f} rad"
                )

        low, high = (k - 1) * CALIBRATION_STEP, k * CALIBRATION_STEP
        try:
            power = optimize.bisect(
                lambda p: self.rotation_angle(p) - target_angle,
                low,
                high,
                xtol=1e-6,
            )
        except (ValueError, RuntimeError) as e:
            raise CalibrationError(
                f"Calibration of {target_angle:.4f} rad failed: {e}"
            ) from e

        achieved = self.rotation_angle(power)
        if abs(achieved - target_angle) > CALIBRATION_TOLERANCE:
            raise CalibrationError(
                f"Calibrated power {power:.6f} gives {achieved:.6f} rad, "
                f"target {target_angle:.6f} rad"
            )
        logger.debug(
            f"Calibrated {target_angle:.4f} rad -> P={power:.6f} "
            f"(nominal {target_angle / np.pi:.6f})"
        )
        with self._lock:
            self._calibrations[key] = power
        return power

    def rabi_for_angle(self, theta: float) -> float:
        return self.rabi_for_power(self.calibrate_power(theta))

    def rotation_for_angle(self, theta: float) -> RotationResult:
        return self.rotation_for_power(self.calibrate_power(theta))

    # =========================================================================
    # Pump windows
    # =========================================================================

    @property
    def pump_map(self) -> PumpMap:
        with self._lock:
            if self._pump_map is None:
                self._pump_map = PumpMap.from_window(
                    self.setup.pump, self.setup.system
                )
            return self._pump_map

    @property
    def initial_up(self) -> float:
        """|⇑⟩ population left by the init window, starting fully mixed."""
        after, _ = self.pump_map.apply(0.5)
        return float(after)

    def readout_probability(self, p_up):
        """Detection probability per shot for a given |⇑⟩ population."""
        _, photons = self.pump_map.apply(p_up)
        return np.clip(photons, 0.0, 1.0)

    def _scan_window(self, detuning: float) -> PumpWindow:
        pump = self.setup.pump
        return PumpWindow(
            start=0.0,
            duration=pump.duration,
            pump_rabi=self.setup.scan_pump_rabi,
            target_transition=pump.target_transition,
            detuning=detuning,
            label="scan",
        )

    @property
    def scan_table(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """(|detuning| grid, |⇑⟩ left, readout photons) for a pumped |⇑⟩."""
        with self._lock:
            if self._scan_table is None:
                half_width = defaults.TWO_PI * defaults.SCAN_TABLE_HALF_WIDTH_HZ
                x = np.linspace(0.0, 1.0, SCAN_TABLE_POINTS)
                grid = half_width * np.sinh(SCAN_TABLE_STRETCH * x) / np.sinh(
                    SCAN_TABLE_STRETCH
                )
                remain = np.empty_like(grid)
                emission = np.empty_like(grid)
                for i, detuning in enumerate(grid):
                    final, photons = optical_pump(
                        DensityMatrix.pure(UP),
                        self._scan_window(float(detuning)),
                        self.setup.system,
                    )
                    pops = final.populations
                    remain[i] = pops[UP] + 0.5 * (pops[2] + pops[3])
                    emission[i] = photons
                logger.debug(
                    f"Scan table: {grid.size} points, peak emission "
                    f"{emission[0]:.4f}"
                )
                self._scan_table = (grid, remain, emission)
            return self._scan_table

    def scan_response(self, detuning) -> np.ndarray:
        """Readout probability of a pump scan at the given line detunings.

        Init and readout both use the detuned scan pump, so the response is
        the readout emission times the |⇑⟩ population after the π pulse.
        Outside the tabulated range the line falls off as a Lorentzian.
        """
        grid, remain, emission = self.scan_table
        d = np.abs(np.atleast_1d(np.asarray(detuning, dtype=float)))
        edge = grid[-1]
        inside = d <= edge
        tail = (edge / np.maximum(d, edge)) ** 2
        f_up = np.where(
            inside, np.interp(d, grid, remain), 1.0 - (1.0 - remain[-1]) * tail
        )
        photons = np.where(inside, np.interp(d, grid, emission), emission[-1] * tail)

        rho = ground_state(0.5 * f_up, d.size)
        rho = self._apply_pulse(rho, np.pi)
        return up_population(rho) * photons

    # =========================================================================
    # Ground-state engine
    # =========================================================================

    def _depolarization(self, theta: float) -> float:
        errors = self.setup.pulse_errors
        return pulse_depolarization(
            theta, errors.depolarization, errors.damping_per_pi
        )

    def _apply_pulse(self, rho: np.ndarray, theta: float) -> np.ndarray:
        if theta == 0:
            return rho
        rotation = self.rotation_for_angle(theta)
        return depolarize(
            apply_unitary(rho, rotation.unitary), self._depolarization(theta)
        )

    def _omega_draws(self, cfg: ExperimentConfig, bias: float | None, rng):
        """Larmor frequency per quasi-static draw, and modulation phases."""
        system = self.setup.system
        if bias is None:
            bias = cfg.bias if cfg.bias is not None else system.larmor_bias_ref[0]
        base = larmor_frequency(system, bias)
        offsets = noise_tools.sample_quasistatic(self.setup.noise, rng, cfg.draws)
        if self.setup.noise.bias_modulation is not None:
            phases = rng.uniform(0.0, 2 * np.pi, size=cfg.draws)
        else:
            phases = np.zeros(cfg.draws)
        return base + offsets, phases

    def _ou_segments(
        self, durations: list[float], size: int, rng: np.random.Generator
    ) -> list[np.ndarray | None]:
        """OU phase of each consecutive free interval, one path per draw.

        All intervals of a sequence share the path, so slow noise is the
        same before and after a refocusing pulse.
        """
        noise = self.setup.noise
        if noise.ou_correlation_time is None:
            return [None] * len(durations)
        edges = np.concatenate([[0.0], np.cumsum(durations)])
        times, index = np.unique(edges, return_inverse=True)
        if times.size < 2:
            return [np.zeros(size) for _ in durations]
        phase = noise_tools.ou_phases(noise, times, rng, size)
        return [phase[:, b] - phase[:, a] for a, b in zip(index[:-1], index[1:])]

    def _precess(
        self,
        rho: np.ndarray,
        omega: np.ndarray,
        t_start: float,
        duration: float,
        phases: np.ndarray,
        ou_phase: np.ndarray | None = None,
    ) -> np.ndarray:
        noise = self.setup.noise
        phase = omega * duration + noise_tools.bias_modulation_phase(
            self.setup.system, noise, t_start, t_start + duration, phases
        )
        coherence = 1.0
        population = 1.0
        if noise.t1 is not None:
            coherence = math.exp(-duration / (2 * noise.t1))
            population = math.exp(-duration / noise.t1)
        if ou_phase is not None:
            phase = phase + ou_phase
        elif noise.ou_correlation_time is None:
            coherence *= math.exp(-noise.gamma_phi * duration)
        return precess(rho, phase, coherence, population)

    def ramsey_up(
        self,
        tau: float,
        theta: float,
        omega: np.ndarray,
        phases: np.ndarray,
        rng: np.random.Generator,
    ) -> float:
        """|⇑⟩ population after θ – τ – θ, averaged over the draws."""
        t0 = self.builder.first_pulse_time
        (ou,) = self._ou_segments([tau], omega.size, rng)
        rho = ground_state(self.initial_up, omega.size)
        rho = self._apply_pulse(rho, theta)
        rho = self._precess(rho, omega, t0, tau, phases, ou)
        rho = self._apply_pulse(rho, theta)
        return float(up_population(rho).mean())

    def echo_up(
        self,
        total_delay: float,
        fine_delay: float,
        omega: np.ndarray,
        phases: np.ndarray,
        rng: np.random.Generator,
    ) -> float:
        """|⇑⟩ population after π/2 – T – π – T+δτ – π/2."""
        t0 = self.builder.first_pulse_time
        half = total_delay / 2
        before, after = self._ou_segments([half, half + fine_delay], omega.size, rng)
        rho = ground_state(self.initial_up, omega.size)
        rho = self._apply_pulse(rho, np.pi / 2)
        rho = self._precess(rho, omega, t0, half, phases, before)
        rho = self._apply_pulse(rho, np.pi)
        rho = self._precess(rho, omega, t0 + half, half + fine_delay, phases, after)
        rho = self._apply_pulse(rho, np.pi / 2)
        return float(up_population(rho).mean())

    def rabi_up(self, power: float) -> float:
        rotation = self.rotation_for_power(power)
        theta = self.rotation_angle(power)
        rho = ground_state(self.initial_up)
        if power > 0:
            rho = depolarize(
                apply_unitary(rho, rotation.unitary), self._depolarization(theta)
            )
        return float(up_population(rho))

    def t1_up(self, wait: float) -> float:
        if wait < 0:
            raise DomainError(f"Wait time must be >= 0, got {wait}")
        p0 = self.initial_up
        t1 = self.setup.noise.t1
        if t1 is None:
            return p0
        return 0.5 - (0.5 - p0) * math.exp(-wait / t1)

    # =========================================================================
    # Sweeps
    # =========================================================================

    def run(self, cfg: ExperimentConfig) -> SweepResult:
        """Run one experiment and collect its points into a SweepResult."""
        if (
            cfg.kind == ExperimentKind.HYSTERESIS_RAMSEY
            and cfg.scan_direction != ScanDirection.BOTH
        ):
            raise ConfigError("hysteresis_ramsey scans both directions")
        names = _axis_names(cfg)
        points = _points(cfg)
        self._check_sequences(cfg, points)

        directions = _directions(cfg.scan_direction)
        streams = noise_tools.spawn_streams(cfg.seed, 2 * len(points) + 1)
        rows = []
        for direction in directions:
            order = range(len(points))
            if direction == ScanDirection.DOWN:
                order = reversed(order)
            rows.extend(_Row(direction, i, *points[i]) for i in order)

        logger.info(
            f"Running {cfg.kind.value}: {len(points)} point(s) x "
            f"{len(directions)} direction(s), seed {cfg.seed}"
        )

        def stream_for(row: _Row) -> np.random.Generator:
            offset = 0 if row.direction == ScanDirection.UP else len(points)
            return streams[1 + offset + row.index]

        if cfg.kind == ExperimentKind.PUMP_SCAN:
            probabilities = self._pump_scan(cfg, rows, streams[0])
        elif cfg.kind == ExperimentKind.HYSTERESIS_RAMSEY:
            # Both directions reuse each point's quasi-static draws
            seeds = np.random.SeedSequence(cfg.seed).spawn(3 * len(points) + 1)

            def draws_for(row: _Row) -> np.random.Generator:
                return np.random.default_rng(seeds[1 + 2 * len(points) + row.index])

            probabilities = self._hysteresis_scan(cfg, rows, stream_for, draws_for)
        else:
            def measure(row: _Row) -> float:
                p_up = self._point_up(cfg, row, stream_for(row))
                return float(self.readout_probability(p_up))

            if cfg.threads > 1:
                with ThreadPoolExecutor(max_workers=cfg.threads) as pool:
                    probabilities = list(pool.map(measure, rows))
            else:
                probabilities = [measure(row) for row in rows]

        counts = []
        errors = []
        readout = self.setup.readout
        for row, prob in zip(rows, probabilities, strict=True):
            mean, std = expected_counts(
                prob, cfg.shots_per_point, readout.efficiency, readout.dark_rate
            )
            if cfg.shot_noise:
                mean = photon_counts(
                    prob,
                    cfg.shots_per_point,
                    readout.efficiency,
                    readout.dark_rate,
                    stream_for(row),
                )
            counts.append(float(mean))
            errors.append(float(std))
            if self._on_point:
                self._on_point(row.direction.value, row.index, prob)

        axes = {names[0]: np.array([row.outer for row in rows])}
        if len(names) > 1:
            axes[names[1]] = np.array([row.inner for row in rows])

        result = SweepResult(
            kind=cfg.kind,
            axes=axes,
            axis_units={name: AXIS_UNITS[name] for name in names},
            mean_counts=np.array(counts),
            shots=np.full(len(rows), cfg.shots_per_point),
            std_err=np.array(errors),
            direction=np.array([row.direction.value for row in rows]),
            probability=np.array(probabilities, dtype=float),
            manifest=self.manifest(cfg, points),
        )
        logger.info(f"Finished {cfg.kind.value}: {len(result)} point(s)")
        return result

    def _point_up(self, cfg: ExperimentConfig, row: _Row, rng) -> float:
        """|⇑⟩ population before readout for one non-feedback point."""
        kind = cfg.kind
        if kind == ExperimentKind.RABI:
            return self.rabi_up(row.outer)
        if kind == ExperimentKind.T1:
            return self.t1_up(row.outer)

        bias = row.outer if kind == ExperimentKind.LARMOR_BIAS else None
        omega, phases = self._omega_draws(cfg, bias, rng)
        if kind == ExperimentKind.RAMSEY:
            tau = row.outer if row.inner is None else row.outer + row.inner
            return self.ramsey_up(tau, np.pi / 2, omega, phases, rng)
        if kind == ExperimentKind.LARMOR_BIAS:
            return self.ramsey_up(row.inner, np.pi / 2, omega, phases, rng)
        if kind == ExperimentKind.BLOCH_MAP:
            return self.ramsey_up(row.inner, row.outer, omega, phases, rng)
        if kind == ExperimentKind.ECHO_FINE:
            return self.echo_up(cfg.total_delay, row.outer, omega, phases, rng)
        if kind == ExperimentKind.ECHO_DECAY:
            return self.echo_up(row.outer, row.inner, omega, phases, rng)
        raise DomainError(f"No point engine for {kind.value}")

    def _pump_scan(self, cfg, rows, common) -> list[float]:
        """Pump-laser scan; the Overhauser shift drags the line as it goes."""
        feedback = self.setup.feedback
        lines = np.atleast_1d(
            noise_tools.optical_detuning_sample(self.setup.noise, common, cfg.draws)
        )

        def signal(detuning: float) -> float:
            return float(self.scan_response(detuning - lines).mean())

        peak = signal(0.0)
        state = feedback.initial_state(cfg.charge_species)
        dwell = feedback.dwell / feedback.updates_per_point
        probabilities = []
        for row in rows:
            for _ in range(feedback.updates_per_point):
                if state.gain == 0:
                    break
                detuning = row.outer + state.shift / 2
                relative = signal(detuning) / peak
                pull = -relative * np.tanh(detuning / feedback.drag_width)
                state = noise_tools.update_overhauser(
                    state, relative, dwell, pull
                )
            probabilities.append(signal(row.outer + state.shift / 2))
            logger.debug(
                f"pump_scan {row.direction.value} {row.outer:.3e}: "
                f"shift {state.shift:.3e}"
            )
        return probabilities

    def _hysteresis_scan(self, cfg, rows, stream_for, draws_for) -> list[float]:
        """Sequential Ramsey delay scan with the Overhauser state carried.

        The quasi-static draws at a delay are the same in both directions,
        so the two passes differ only through the Overhauser state.
        """
        feedback = self.setup.feedback
        state = feedback.initial_state(cfg.charge_species)
        dwell = feedback.dwell / feedback.updates_per_point
        probabilities = []
        for row in rows:
            rng = stream_for(row)
            omega, phases = self._omega_draws(cfg, None, draws_for(row))
            state = self._settle(state, row.outer, omega, phases, rng, dwell)
            p_up = self.ramsey_up(
                row.outer, np.pi / 2, omega + state.shift, phases, rng
            )
            probabilities.append(float(self.readout_probability(p_up)))
        return probabilities

    def _settle(
        self,
        state: OverhauserState,
        tau: float,
        omega: np.ndarray,
        phases: np.ndarray,
        rng: np.random.Generator,
        dwell: float,
    ) -> OverhauserState:
        if state.gain == 0:
            return state
        pull = self.setup.feedback.ramsey_pull
        for _ in range(self.setup.feedback.updates_per_point):
            p_up = self.ramsey_up(tau, np.pi / 2, omega + state.shift, phases, rng)
            state = noise_tools.update_overhauser(state, p_up, dwell, pull)
        return state

    # =========================================================================
    # Sequences and provenance
    # =========================================================================

    def sequence_for(
        self,
        cfg: ExperimentConfig,
        outer: float,
        inner: float | None = None,
        builder: SequenceBuilder | None = None,
    ) -> Sequence:
        """The shot sequence of one sweep point."""
        builder = builder or self._timing
        kind = cfg.kind
        if kind == ExperimentKind.RABI:
            # Nominal π·P reproduces the calibrated amplitude Ω₀ ∝ √P
            return self._timing.rabi(np.pi * outer)
        if kind == ExperimentKind.RAMSEY:
            return builder.ramsey(outer if inner is None else outer + inner)
        if kind == ExperimentKind.HYSTERESIS_RAMSEY:
            return builder.ramsey(outer)
        if kind == ExperimentKind.LARMOR_BIAS:
            return builder.ramsey(inner)
        if kind == ExperimentKind.BLOCH_MAP:
            return builder.bloch_map(outer, inner)
        if kind == ExperimentKind.ECHO_FINE:
            return builder.echo(cfg.total_delay, outer)
        if kind == ExperimentKind.ECHO_DECAY:
            return builder.echo(outer, inner)
        if kind == ExperimentKind.PUMP_SCAN:
            return builder.pump_scan(outer)
        if kind == ExperimentKind.T1:
            return builder.dark_wait(outer)
        raise DomainError(f"No sequence for {kind.value}")

    def violations(self, cfg: ExperimentConfig, points=None) -> list[str]:
        """Timing violations of every point's sequence, as messages."""
        messages = []
        for outer, inner in points if points is not None else _points(cfg):
            for v in validate(self.sequence_for(cfg, outer, inner)):
                point = f"{cfg.kind.value} point ({outer}, {inner})"
                messages.append(f"{point}: {v.message}")
        return messages

    def _check_sequences(self, cfg: ExperimentConfig, points) -> None:
        messages = self.violations(cfg, points)
        if messages:
            raise SequenceError("; ".join(messages))

    def manifest(self, cfg: ExperimentConfig, points=None) -> dict:
        """Everything needed to reproduce a run."""
        points = points if points is not None else _points(cfg)
        outer, inner = points[0]
        with self._lock:
            calibration = {
                f"{angle:.6f}": power for angle, power in self._calibrations.items()
            }
        system = self.setup.system
        bias = cfg.bias if cfg.bias is not None else system.larmor_bias_ref[0]
        readout = self.setup.readout
        count_scale = [
            float(
                expected_counts(
                    self.readout_probability(p_up),
                    cfg.shots_per_point,
                    readout.efficiency,
                    readout.dark_rate,
                )[0]
            )
            for p_up in (0.0, 1.0)
        ]
        return {
            "schema": REPORT_SCHEMA,
            "version": __version__,
            "seed": cfg.seed,
            "config": cfg.to_dict(),
            "setup": self.setup.to_dict(),
            "calibration": {"unit_rabi": self.unit_rabi, "powers": calibration},
            "larmor_frequency": larmor_frequency(system, bias),
            "count_scale": count_scale,
            "sequence": self.sequence_for(
                cfg, outer, inner, builder=self.builder
            ).to_dict(),
        }


def _unwrap(
    rotation: RotationResult, angle: float, axis: np.ndarray | None
) -> tuple[float, np.ndarray]:
    """Continue a folded rotation angle from a neighbouring grid point.

    The extracted angle lies in [0, π]; a rotation by θ about n is also one
    by 2π − θ about −n. The axis orientation nearest the reference axis
    picks the branch and the turn count nearest the reference angle.
    """
    raw, raw_axis = rotation.angle, np.asarray(rotation.axis, dtype=float)
    if axis is None:
        return raw, raw_axis
    signed, oriented = max(
        [(raw, raw_axis), (-raw, -raw_axis)], key=lambda b: float(np.dot(b[1], axis))
    )
    turns = round((angle - signed) / (2 * np.pi))
    return signed + 2 * np.pi * turns, oriented


def _directions(direction: ScanDirection) -> list[ScanDirection]:
    if direction == ScanDirection.BOTH:
        return [ScanDirection.UP, ScanDirection.DOWN]
    return [direction]


_AXES = {
    ExperimentKind.RABI: ("power",),
    ExperimentKind.RAMSEY: ("tau",),
    ExperimentKind.BLOCH_MAP: ("theta", "tau"),
    ExperimentKind.ECHO_FINE: ("fine_delay",),
    ExperimentKind.ECHO_DECAY: ("total_delay", "fine_delay"),
    ExperimentKind.PUMP_SCAN: ("pump_detuning",),
    ExperimentKind.HYSTERESIS_RAMSEY: ("tau",),
    ExperimentKind.T1: ("wait",),
    ExperimentKind.LARMOR_BIAS: ("bias", "tau"),
}

_NEEDS_INNER = {
    ExperimentKind.BLOCH_MAP,
    ExperimentKind.ECHO_DECAY,
    ExperimentKind.LARMOR_BIAS,
}


def _axis_names(cfg: ExperimentConfig) -> tuple[str, ...]:
    if cfg.kind == ExperimentKind.RAMSEY and cfg.inner is not None:
        return ("tau_center", "tau_offset")
    names = _AXES[cfg.kind]
    if len(names) == 1 and cfg.inner is not None:
        raise ConfigError(f"{cfg.kind.value} takes a single sweep axis")
    return names


def _points(cfg: ExperimentConfig) -> list[tuple[float, float | None]]:
    if cfg.kind in _NEEDS_INNER:
        if cfg.inner is None:
            raise ConfigError(f"{cfg.kind.value} needs an inner sweep axis")
        return [(float(o), float(i)) for o in cfg.sweep for i in cfg.inner]
    if cfg.inner is not None:
        return [(float(o), float(i)) for o in cfg.sweep for i in cfg.inner]
    return [(float(o), None) for o in cfg.sweep]


_DEFAULT_RUNNER: ExperimentRunner | None = None


def get_runner(setup: Setup | None = None) -> ExperimentRunner:
    """Runner for ``setup``; the default setup shares one cached runner."""
    global _DEFAULT_RUNNER
    if setup is not None:
        return ExperimentRunner(setup)
    if _DEFAULT_RUNNER is None:
        _DEFAULT_RUNNER = ExperimentRunner()
    return _DEFAULT_RUNNER


def run_experiment(cfg: ExperimentConfig, setup: Setup | None = None) -> SweepResult:
    return get_runner(setup).run(cfg)


def _run_as(kind: ExperimentKind):
    def run(cfg: ExperimentConfig, setup: Setup | None = None) -> SweepResult:
        if cfg.kind != kind:
            cfg = replace(cfg, kind=kind)
        return run_experiment(cfg, setup)

    run.__name__ = f"run_{kind.value}"
    run.__doc__ = f"Run a {kind.value} sweep."
    return run


run_rabi = _run_as(ExperimentKind.RABI)
run_ramsey = _run_as(ExperimentKind.RAMSEY)
run_bloch_map = _run_as(ExperimentKind.BLOCH_MAP)
run_echo_fine = _run_as(ExperimentKind.ECHO_FINE)
run_echo_decay = _run_as(ExperimentKind.ECHO_DECAY)
run_pump_scan = _run_as(ExperimentKind.PUMP_SCAN)
run_hysteresis_ramsey = _run_as(ExperimentKind.HYSTERESIS_RAMSEY)
run_t1 = _run_as(ExperimentKind.T1)
run_larmor_vs_bias = _run_as(ExperimentKind.LARMOR_BIAS)


def calibrate_power(target_angle: float, setup: Setup | None = None) -> float:
    """Relative power of the pulse rotating by ``target_angle``."""
    return get_runner(setup).calibrate_power(target_angle)


def pulse_duration(runner: ExperimentRunner, theta: float = np.pi) -> float:
    """Width holding 99% of the calibrated pulse's intensity."""
    pulse = runner.setup.pulse.with_rabi(runner.rabi_for_angle(theta))

    def intensity(t: float) -> float:
        return float(pulse.rabi(t)) ** 2

    total, _ = integrate.quad(
        intensity, pulse.start, pulse.end, points=[pulse.center], limit=200
    )

    def excess(half: float) -> float:
        inside, _ = integrate.quad(
            intensity, pulse.center - half, pulse.center + half, limit=200
        )
        return inside / total - PULSE_AREA_FRACTION

    half = optimize.bisect(excess, 1e-18, pulse.half_width, xtol=1e-16)
    return 2 * half


def ops_per_coherence(
    setup: Setup | None = None, runner: ExperimentRunner | None = None
) -> dict:
    """How many π rotations fit in one echo coherence time."""
    runner = runner or get_runner(setup)
    duration = pulse_duration(runner)
    gamma_phi = runner.setup.noise.gamma_phi
    t2 = 1.0 / gamma_phi if gamma_phi > 0 else math.inf
    return {
        "pi_duration": duration,
        "gate_budget": GATE_BUDGET,
        "pi_within_budget": duration <= GATE_BUDGET,
        "t2": t2,
        "operations": t2 / GATE_BUDGET,
    }
