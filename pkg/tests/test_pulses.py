"""Tests for pulse shapes, power calibration and sequence layout."""

import numpy as np
import pytest

from src.models.data_models import (
    DomainError,
    Pulse,
    PulseShape,
    PumpWindow,
    Sequence,
    SequenceError,
)
from src.physics.pulses import (
    MAX_DARK_WAIT,
    MAX_SEQUENCE_LENGTH,
    SequenceBuilder,
    default_pulse,
    make_bloch_map,
    make_echo,
    make_pump_scan,
    make_rabi,
    make_ramsey,
    make_t1,
    nominal_angle,
    peak_rabi_for_angle,
    power_to_rabi,
    rotation_angle_from_power,
    shape_integral,
    validate,
)

from .conftest import NS, PS, US

PERIOD = 13 * NS
FIRST_PULSE = 39 * NS


class TestShapeIntegral:
    """Tests for shape_integral and nominal_angle."""

    def test_gaussian_closed_form(self):
        pulse = default_pulse()
        expected = pulse.fwhm * np.sqrt(np.pi / (4 * np.log(2)))
        assert shape_integral(pulse) == pytest.approx(expected, rel=1e-6)

    def test_sech_closed_form(self):
        pulse = default_pulse(shape=PulseShape.SECH)
        k = 2 * np.arccosh(np.sqrt(2))
        assert shape_integral(pulse) == pytest.approx(2 * pulse.fwhm / k, rel=1e-6)

    def test_peak_rabi_inverts_nominal_angle(self):
        template = default_pulse()
        for theta in (np.pi / 2, np.pi, 3.0):
            pulse = template.with_rabi(peak_rabi_for_angle(theta, template))
            assert nominal_angle(pulse) == pytest.approx(theta, rel=1e-9)

    def test_zero_angle_gives_zero_rabi(self):
        assert peak_rabi_for_angle(0.0) == 0.0

    def test_negative_angle_rejected(self):
        with pytest.raises(DomainError):
            peak_rabi_for_angle(-0.1)


class TestPowerCalibration:
    """Tests for rotation_angle_from_power and power_to_rabi."""

    def test_unit_power_is_pi(self):
        assert rotation_angle_from_power(1.0) == pytest.approx(np.pi)

    def test_custom_calibration(self):
        assert rotation_angle_from_power(0.5, cal=2.0) == pytest.approx(1.0)

    def test_rabi_scales_with_root_power(self):
        assert power_to_rabi(4.0) == pytest.approx(2.0 * power_to_rabi(1.0))

    def test_negative_power_rejected(self):
        with pytest.raises(DomainError):
            rotation_angle_from_power(-1.0)


class TestPulseEnvelope:
    """Tests for the Pulse envelope and window."""

    def test_half_intensity_at_fwhm(self):
        pulse = default_pulse(center=1 * NS, peak_rabi=1.0)
        intensity = pulse.rabi(pulse.center + pulse.fwhm / 2) ** 2
        assert intensity == pytest.approx(0.5)

    def test_sech_half_intensity_at_fwhm(self):
        pulse = default_pulse(shape=PulseShape.SECH, peak_rabi=1.0)
        assert pulse.rabi(pulse.fwhm / 2) ** 2 == pytest.approx(0.5)

    def test_window_is_symmetric(self):
        pulse = default_pulse(center=FIRST_PULSE)
        assert pulse.center - pulse.start == pytest.approx(4 * pulse.fwhm)
        assert pulse.end - pulse.center == pytest.approx(4 * pulse.fwhm)

    def test_non_positive_fwhm_rejected(self):
        with pytest.raises(DomainError):
            Pulse(center=0.0, fwhm=0.0)


class TestRamseyLayout:
    """Tests for make_ramsey."""

    def test_pulse_positions(self):
        seq = make_ramsey(100 * PS)
        first, second = seq.pulses
        assert first.center == pytest.approx(FIRST_PULSE)
        assert second.center - first.center == pytest.approx(100 * PS)

    def test_init_before_pulses_readout_after(self):
        seq = make_ramsey(100 * PS)
        init, readout = seq.pump_windows
        assert init.start == 0.0
        assert init.end <= seq.pulses[0].start
        assert readout.start >= seq.pulses[-1].end
        ticks = readout.start / PERIOD
        assert ticks == pytest.approx(round(ticks))

    def test_both_pulses_have_same_area(self):
        first, second = make_ramsey(1 * NS).pulses
        assert first.peak_rabi == second.peak_rabi
        assert nominal_angle(first) == pytest.approx(np.pi / 2)

    def test_valid(self):
        assert validate(make_ramsey(5 * NS)) == []

    def test_delay_longer_than_period(self):
        with pytest.raises(SequenceError):
            make_ramsey(14 * NS)

    def test_negative_delay(self):
        with pytest.raises(SequenceError):
            make_ramsey(-1 * PS)


class TestEchoLayout:
    """Tests for make_echo."""

    def test_pulse_positions(self):
        seq = make_echo(130 * NS, 20 * PS)
        first, refocus, last = seq.pulses
        assert refocus.center - first.center == pytest.approx(65 * NS)
        assert last.center - refocus.center == pytest.approx(65 * NS + 20 * PS)

    def test_refocusing_pulse_has_twice_the_angle(self):
        first, refocus, _ = make_echo(130 * NS).pulses
        assert nominal_angle(refocus) == pytest.approx(2 * nominal_angle(first))

    def test_longest_delay_fits(self):
        seq = make_echo(4 * US)
        assert validate(seq) == []

    def test_beyond_maximum_length(self):
        with pytest.raises(SequenceError):
            make_echo(MAX_SEQUENCE_LENGTH + 1 * NS)

    def test_zero_delay(self):
        with pytest.raises(SequenceError):
            make_echo(0.0)

    def test_fine_delay_too_large(self):
        with pytest.raises(SequenceError):
            make_echo(130 * NS, 10 * NS)


class TestOtherLayouts:
    """Tests for the Rabi, Bloch-map, pump-scan and dark-wait sequences."""

    def test_rabi_single_pulse(self):
        seq = make_rabi(0.5)
        assert len(seq.pulses) == 1
        assert nominal_angle(seq.pulses[0]) == pytest.approx(np.pi / 2)

    def test_rabi_zero_power_has_no_drive(self):
        assert make_rabi(0.0).pulses[0].peak_rabi == 0.0

    def test_bloch_map_uses_theta(self):
        seq = make_bloch_map(np.pi, 50 * PS)
        assert all(nominal_angle(p) == pytest.approx(np.pi) for p in seq.pulses)

    def test_bloch_map_negative_angle(self):
        with pytest.raises(SequenceError):
            make_bloch_map(-1.0, 50 * PS)

    def test_pump_scan_detunes_both_windows(self):
        seq = make_pump_scan(2 * np.pi * 3e9)
        for window in seq.pump_windows:
            assert window.detuning == pytest.approx(2 * np.pi * 3e9)
        assert nominal_angle(seq.pulses[0]) == pytest.approx(np.pi)

    def test_dark_wait_has_no_pulses(self):
        seq = make_t1(1 * US)
        assert seq.pulses == []
        init, readout = seq.pump_windows
        assert readout.start >= FIRST_PULSE + 1 * US
        assert validate(seq) == []

    def test_dark_wait_may_exceed_sequence_length(self):
        seq = make_t1(100 * MAX_SEQUENCE_LENGTH)
        assert validate(seq) == []

    def test_dark_wait_too_long(self):
        with pytest.raises(SequenceError):
            make_t1(MAX_DARK_WAIT + 1 * US)

    def test_first_pulse_time_follows_pump_duration(self):
        builder = SequenceBuilder(pump=PumpWindow(start=0.0, duration=10 * NS))
        assert builder.first_pulse_time == pytest.approx(26 * NS)


class TestValidate:
    """Tests for validate."""

    def test_pulse_inside_pump_window(self):
        seq = Sequence(
            events=(
                PumpWindow(start=0.0, label="init"),
                default_pulse(center=10 * NS),
            ),
            repetitions=2,
        )
        kinds = [v.kind for v in validate(seq)]
        assert kinds == ["overlap"]

    def test_out_of_order_events(self):
        seq = Sequence(
            events=(default_pulse(center=30 * NS), default_pulse(center=29 * NS)),
            repetitions=3,
        )
        assert [v.kind for v in validate(seq)] == ["order"]

    def test_event_beyond_span(self):
        seq = Sequence(events=(PumpWindow(start=0.0),), repetitions=1)
        violations = validate(seq)
        assert [v.kind for v in violations] == ["bounds"]
        assert violations[0].index == 0

    def test_overlapping_pump_windows(self):
        seq = Sequence(
            events=(PumpWindow(start=0.0), PumpWindow(start=13 * NS)),
            repetitions=4,
        )
        assert [v.kind for v in validate(seq)] == ["overlap"]

    def test_wide_pulse_reaches_init_window(self):
        builder = SequenceBuilder(template=default_pulse(fwhm=5 * NS))
        violations = validate(builder.ramsey(1 * NS))
        assert any(v.kind == "overlap" for v in violations)
