"""Scan-direction hysteresis detector."""

import logging
from dataclasses import dataclass

import numpy as np

from ..models.data_models import DomainError, ScanDirection, SweepResult

logger = logging.getLogger(__name__)

# Detector threshold, in multiples of the metric's shot-noise expectation
THRESHOLD_SIGMAS = 3.0


@dataclass(frozen=True)
class HysteresisReport:
    metric: float
    threshold: float
    detected: bool

    def to_dict(self) -> dict:
        return {
            "metric": self.metric,
            "threshold": self.threshold,
            "detected": self.detected,
        }


def _pair(result: SweepResult) -> tuple[SweepResult, SweepResult]:
    up = ScanDirection.UP.value
    down = ScanDirection.DOWN.value
    if set(result.directions) != {up, down}:
        raise DomainError("Hysteresis needs an up and a down scan")
    if not result.check_aligned():
        raise DomainError("Up and down scans cover different axis values")
    return result.for_direction(up), result.for_direction(down)


def hysteresis_metric(result: SweepResult) -> float:
    """Mean |up − down| over the scan, relative to its peak-to-peak signal."""
    up, down = _pair(result)
    span = float(np.ptp(np.concatenate([up.mean_counts, down.mean_counts])))
    if span == 0:
        return 0.0
    return float(np.mean(np.abs(up.mean_counts - down.mean_counts)) / span)


def hysteresis_threshold(result: SweepResult) -> float:
    """THRESHOLD_SIGMAS times the metric expected from shot noise alone.

    For two independent readings with standard error σ, E|X − Y| = 2σ/√π.
    """
    up, down = _pair(result)
    span = float(np.ptp(np.concatenate([up.mean_counts, down.mean_counts])))
    if span == 0:
        return np.inf
    sigma = float(np.mean(np.concatenate([up.std_err, down.std_err])))
    return THRESHOLD_SIGMAS * 2.0 * sigma / np.sqrt(np.pi) / span


def detect_hysteresis(result: SweepResult) -> HysteresisReport:
    metric = hysteresis_metric(result)
    threshold = hysteresis_threshold(result)
    detected = metric > threshold
    logger.info(
        f"Hysteresis metric {metric:.4f} vs threshold {threshold:.4f}: "
        f"{'detected' if detected else 'none'}"
    )
    return HysteresisReport(metric=metric, threshold=threshold, detected=detected)
