"""Tests for the scan-direction hysteresis detector."""

import numpy as np
import pytest

from src.analysis.hysteresis import (
    detect_hysteresis,
    hysteresis_metric,
    hysteresis_threshold,
)
from src.models.data_models import DomainError, ExperimentKind, SweepResult

DETUNING = np.linspace(-10e9, 10e9, 41)


def _line(center: float) -> np.ndarray:
    return 1000.0 * np.exp(-(((DETUNING - center) / 3e9) ** 2)) + 50.0


def _scan(up: np.ndarray, down: np.ndarray, std_err: float = 10.0) -> SweepResult:
    """Two-direction sweep; the down half is stored in scan order."""
    n = DETUNING.size
    counts = np.concatenate([up, down[::-1]])
    return SweepResult(
        kind=ExperimentKind.PUMP_SCAN,
        axes={"pump_detuning": np.concatenate([DETUNING, DETUNING[::-1]])},
        axis_units={"pump_detuning": "rad/s"},
        mean_counts=counts,
        shots=np.full(2 * n, 1000),
        std_err=np.full(2 * n, std_err),
        direction=np.array(["up"] * n + ["down"] * n),
        probability=counts / 1e4,
    )


class TestHysteresisMetric:
    """Tests for hysteresis_metric and hysteresis_threshold."""

    def test_identical_scans(self):
        result = _scan(_line(0.0), _line(0.0))
        assert hysteresis_metric(result) == 0.0

    def test_dragged_scans(self):
        result = _scan(_line(2e9), _line(-2e9))
        assert hysteresis_metric(result) > 0.1

    def test_metric_is_scale_free(self):
        first = _scan(_line(1e9), _line(-1e9))
        scaled = _scan(3 * _line(1e9), 3 * _line(-1e9), std_err=30.0)
        assert hysteresis_metric(scaled) == pytest.approx(hysteresis_metric(first))
        assert hysteresis_threshold(scaled) == pytest.approx(
            hysteresis_threshold(first)
        )

    def test_threshold_from_shot_noise(self):
        result = _scan(_line(0.0), _line(0.0), std_err=10.0)
        span = np.ptp(_line(0.0))
        expected = 3 * 2 * 10.0 / np.sqrt(np.pi) / span
        assert hysteresis_threshold(result) == pytest.approx(expected)

    def test_flat_scans(self):
        flat = np.full(DETUNING.size, 5.0)
        result = _scan(flat, flat)
        assert hysteresis_metric(result) == 0.0
        assert hysteresis_threshold(result) == np.inf


class TestDetectHysteresis:
    """Tests for detect_hysteresis."""

    def test_shot_noise_alone_not_detected(self):
        rng = np.random.default_rng(4)
        line = _line(0.0)
        up = line + rng.normal(0, 10.0, line.size)
        down = line + rng.normal(0, 10.0, line.size)
        assert not detect_hysteresis(_scan(up, down)).detected

    def test_dragged_line_detected(self):
        report = detect_hysteresis(_scan(_line(2e9), _line(-2e9)))
        assert report.detected
        assert report.to_dict()["metric"] > report.to_dict()["threshold"]

    def test_single_direction_rejected(self):
        result = _scan(_line(0.0), _line(0.0)).for_direction("up")
        with pytest.raises(DomainError):
            detect_hysteresis(result)

    def test_misaligned_scans_rejected(self):
        result = _scan(_line(0.0), _line(0.0))
        result.axes["pump_detuning"][-1] += 1.0
        with pytest.raises(DomainError):
            hysteresis_metric(result)
