"""Optical events and the builders for each experiment's shot sequence.

Placement follows the mode-locked laser clock: the first rotation pulse sits
on a clock tick after the initialization window, later pulses are offset by
the delay lines, and the readout window starts on the first clock tick after
the last pulse.
"""

import logging
import math
from collections.abc import Callable

import numpy as np
from scipy import integrate

from ..data import defaults
from ..models.data_models import (
    DomainError,
    Pulse,
    PumpWindow,
    Sequence,
    SequenceError,
    Violation,
)

logger = logging.getLogger(__name__)

# Angle per unit relative power: p = 1 is a nominal π pulse
DEFAULT_ANGLE_PER_POWER = np.pi
MAX_SEQUENCE_LENGTH = 5e-6
# Dark waits carry no coherent pulses and may run over many T1
MAX_DARK_WAIT = 1e-3
# Gap between the end of the init window and the first rotation pulse
INIT_GUARD_PERIODS = 1


def default_pulse(**overrides) -> Pulse:
    params = {
        "center": 0.0,
        "fwhm": defaults.PULSE_FWHM,
        "detuning": defaults.TWO_PI * defaults.PULSE_DETUNING_HZ,
    }
    params.update(overrides)
    return Pulse(**params)


def default_pump(**overrides) -> PumpWindow:
    params = {
        "start": 0.0,
        "duration": defaults.PUMP_DURATION,
        "pump_rabi": defaults.PUMP_RABI,
    }
    params.update(overrides)
    return PumpWindow(**params)


def shape_integral(pulse: Pulse) -> float:
    """∫(Ω(t)/Ω₀)² dt for the pulse envelope, evaluated numerically."""
    unit = pulse.with_rabi(1.0)
    value, _ = integrate.quad(
        lambda t: float(unit.rabi(t)) ** 2,
        unit.start,
        unit.end,
        points=[unit.center],
        limit=200,
    )
    return value


def nominal_angle(pulse: Pulse) -> float:
    """Perturbative two-photon rotation angle ∫Ω²/(2Δ) dt."""
    return pulse.peak_rabi**2 * shape_integral(pulse) / (2.0 * pulse.detuning)


def peak_rabi_for_angle(theta: float, template: Pulse | None = None) -> float:
    """Peak Rabi frequency whose nominal angle is θ."""
    if theta < 0:
        raise DomainError(f"Rotation angle must be >= 0, got {theta}")
    template = template or default_pulse()
    return math.sqrt(2.0 * abs(template.detuning) * theta / shape_integral(template))


def rotation_angle_from_power(
    p: float, cal: float = DEFAULT_ANGLE_PER_POWER
) -> float:
    """Rotation angle θ = cal·p for relative optical power p."""
    if p < 0:
        raise DomainError(f"Optical power must be >= 0, got {p}")
    return cal * p


def power_to_rabi(
    p: float, template: Pulse | None = None, cal: float = DEFAULT_ANGLE_PER_POWER
) -> float:
    """Peak Rabi frequency for relative power p (Ω₀² ∝ p)."""
    return peak_rabi_for_angle(rotation_angle_from_power(p, cal), template)


AngleToRabi = Callable[[float], float]


class SequenceBuilder:
    """Lays out pump windows and rotation pulses on the laser clock."""

    def __init__(
        self,
        template: Pulse | None = None,
        pump: PumpWindow | None = None,
        period: float = defaults.LASER_PERIOD,
        rabi_for_angle: AngleToRabi | None = None,
        max_length: float = MAX_SEQUENCE_LENGTH,
        max_dark_wait: float = MAX_DARK_WAIT,
    ):
        self.template = template or default_pulse()
        self.pump = pump or default_pump()
        self.period = period
        self.rabi_for_angle = rabi_for_angle or (
            lambda theta: peak_rabi_for_angle(theta, self.template)
        )
        self.max_length = max_length
        self.max_dark_wait = max_dark_wait

    @property
    def first_pulse_time(self) -> float:
        ticks = math.ceil(self.pump.duration / self.period) + INIT_GUARD_PERIODS
        return ticks * self.period

    def _pulse(self, center: float, theta: float, label: str) -> Pulse:
        return Pulse(
            center=center,
            fwhm=self.template.fwhm,
            detuning=self.template.detuning,
            peak_rabi=self.rabi_for_angle(theta) if theta > 0 else 0.0,
            polarization=self.template.polarization,
            shape=self.template.shape,
            label=label,
        )

    def _assemble(
        self, pulses: list[Pulse], pump_detuning: float = 0.0
    ) -> Sequence:
        init = PumpWindow(
            start=0.0,
            duration=self.pump.duration,
            pump_rabi=self.pump.pump_rabi,
            target_transition=self.pump.target_transition,
            detuning=pump_detuning,
            label="init",
        )
        last = max((p.end for p in pulses), default=self.first_pulse_time)
        readout_start = max(
            math.ceil(last / self.period) * self.period, self.first_pulse_time
        )
        if readout_start < last:
            readout_start += self.period
        readout = PumpWindow(
            start=readout_start,
            duration=self.pump.duration,
            pump_rabi=self.pump.pump_rabi,
            target_transition=self.pump.target_transition,
            detuning=pump_detuning,
            label="readout",
        )
        repetitions = math.ceil(round(readout.end / self.period, 9))
        return Sequence(
            events=(init, *sorted(pulses, key=lambda p: p.start), readout),
            period=self.period,
            repetitions=repetitions,
        )

    def ramsey(self, tau: float, theta: float = np.pi / 2) -> Sequence:
        if tau < 0:
            raise SequenceError(f"Ramsey delay must be >= 0, got {tau}")
        if tau > self.period:
            raise SequenceError(
                f"Ramsey delay {tau:.3e} s exceeds the laser period {self.period:.3e} s"
            )
        t0 = self.first_pulse_time
        pulses = [
            self._pulse(t0, theta, "rotation_1"),
            self._pulse(t0 + tau, theta, "rotation_2"),
        ]
        return self._assemble(pulses)

    def echo(self, total_delay_2t: float, fine_delay: float) -> Sequence:
        if not 0 < total_delay_2t <= self.max_length:
            raise SequenceError(
                f"Echo total delay must be in (0, {self.max_length:.1e}] s, "
                f"got {total_delay_2t}"
            )
        half = total_delay_2t / 2
        if abs(fine_delay) > 0.1 * half:
            raise SequenceError(
                f"Fine delay {fine_delay:.3e} s is not small relative to T={half:.3e} s"
            )
        t0 = self.first_pulse_time
        pulses = [
            self._pulse(t0, np.pi / 2, "echo_pi2_1"),
            self._pulse(t0 + half, np.pi, "echo_pi"),
            self._pulse(t0 + total_delay_2t + fine_delay, np.pi / 2, "echo_pi2_2"),
        ]
        return self._assemble(pulses)

    def rabi(self, theta: float) -> Sequence:
        return self._assemble([self._pulse(self.first_pulse_time, theta, "rotation")])

    def bloch_map(self, theta: float, tau: float) -> Sequence:
        if theta < 0:
            raise SequenceError(f"Rotation angle must be >= 0, got {theta}")
        return self.ramsey(tau, theta)

    def pump_scan(self, pump_detuning: float) -> Sequence:
        pulse = self._pulse(self.first_pulse_time, np.pi, "rotation_pi")
        return self._assemble([pulse], pump_detuning=pump_detuning)

    def dark_wait(self, tau: float) -> Sequence:
        if tau < 0:
            raise SequenceError(f"Wait time must be >= 0, got {tau}")
        if tau > self.max_dark_wait:
            raise SequenceError(
                f"Wait time {tau:.3e} s exceeds the dark-wait limit "
                f"{self.max_dark_wait:.1e} s"
            )
        sequence = self._assemble([])
        init, readout = sequence.events
        ticks = math.ceil(round((self.first_pulse_time + tau) / self.period, 9))
        readout = PumpWindow(
            start=ticks * self.period,
            duration=readout.duration,
            pump_rabi=readout.pump_rabi,
            target_transition=readout.target_transition,
            detuning=readout.detuning,
            label="readout",
        )
        return Sequence(
            events=(init, readout),
            period=self.period,
            repetitions=math.ceil(round(readout.end / self.period, 9)),
        )


_DEFAULT_BUILDER: SequenceBuilder | None = None


def _builder() -> SequenceBuilder:
    global _DEFAULT_BUILDER
    if _DEFAULT_BUILDER is None:
        _DEFAULT_BUILDER = SequenceBuilder()
    return _DEFAULT_BUILDER


def make_ramsey(tau: float, theta: float = np.pi / 2) -> Sequence:
    """init → θ → free delay τ → θ → readout."""
    return _builder().ramsey(tau, theta)


def make_echo(total_delay_2t: float, fine_delay: float = 0.0) -> Sequence:
    """init → π/2 → T → π → T + fine_delay → π/2 → readout."""
    return _builder().echo(total_delay_2t, fine_delay)


def make_rabi(power: float, cal: float = DEFAULT_ANGLE_PER_POWER) -> Sequence:
    """init → one rotation of relative power p → readout."""
    return _builder().rabi(rotation_angle_from_power(power, cal))


def make_bloch_map(theta: float, tau: float) -> Sequence:
    """Two pulses of angle θ separated by τ."""
    return _builder().bloch_map(theta, tau)


def make_pump_scan(pump_detuning: float) -> Sequence:
    """Detuned init → π → detuned readout."""
    return _builder().pump_scan(pump_detuning)


def make_t1(tau: float) -> Sequence:
    """init → dark wait τ → readout."""
    return _builder().dark_wait(tau)


def _overlaps(a_start: float, a_end: float, b_start: float, b_end: float) -> bool:
    return a_start < b_end and b_start < a_end


def validate(seq: Sequence) -> list[Violation]:
    """Diagnose ordering, forbidden overlaps and period bounds."""
    violations: list[Violation] = []
    events = list(seq.events)

    for i in range(1, len(events)):
        if events[i].start < events[i - 1].start:
            violations.append(
                Violation(
                    kind="order",
                    message=(
                        f"Event {i} ({events[i].label}) starts before "
                        f"event {i - 1}"
                    ),
                    index=i,
                )
            )

    for i, event in enumerate(events):
        if not isinstance(event, Pulse):
            continue
        for j, other in enumerate(events):
            if isinstance(other, PumpWindow) and _overlaps(
                event.start, event.end, other.start, other.end
            ):
                violations.append(
                    Violation(
                        kind="overlap",
                        message=(
                            f"Rotation pulse {event.label} overlaps pump window "
                            f"{other.label} (event {j})"
                        ),
                        index=i,
                    )
                )

    windows = [(i, e) for i, e in enumerate(events) if isinstance(e, PumpWindow)]
    for k, (i, window) in enumerate(windows):
        for j, other in windows[k + 1 :]:
            if _overlaps(window.start, window.end, other.start, other.end):
                violations.append(
                    Violation(
                        kind="overlap",
                        message=f"Pump windows {i} and {j} overlap",
                        index=j,
                    )
                )

    for i, event in enumerate(events):
        if event.start < 0 or event.end > seq.span + 1e-15:
            violations.append(
                Violation(
                    kind="bounds",
                    message=(
                        f"Event {i} ({event.label}) lies outside "
                        f"[0, {seq.span:.3e}] s"
                    ),
                    index=i,
                )
            )

    if violations:
        logger.debug(f"Sequence has {len(violations)} violation(s)")
    return violations
