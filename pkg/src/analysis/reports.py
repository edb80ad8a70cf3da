"""Per-experiment analysis of a SweepResult into a JSON-ready report."""

import logging
from dataclasses import replace

import numpy as np

from ..models.data_models import (
    EnvelopeModel,
    ExperimentKind,
    FitError,
    FitResult,
    SweepResult,
)
from .fitting import (
    fidelity_from_visibility,
    fit_fixed_frequency,
    fit_gaussian_profile,
    fit_saturation,
    fit_sinusoid,
    select_envelope_model,
    weights_from_errors,
)
from .hysteresis import detect_hysteresis

logger = logging.getLogger(__name__)


def to_population(result: SweepResult, counts=None) -> np.ndarray:
    """Map counts onto |⇑⟩ population with the run's count scale."""
    counts = result.mean_counts if counts is None else np.asarray(counts)
    zero, one = result.manifest.get("count_scale", [0.0, 1.0])
    if one == zero:
        return np.zeros_like(counts, dtype=float)
    return (counts - zero) / (one - zero)


def _larmor_hz(result: SweepResult) -> float:
    return result.manifest["larmor_frequency"] / (2 * np.pi)


def _grouped(result: SweepResult, outer: str, inner: str):
    """Yield (outer value, inner axis, counts, std_err) per outer value."""
    first = result.for_direction(result.directions[0])
    values = first.axes[outer]
    for value in np.unique(values):
        mask = values == value
        order = np.argsort(first.axes[inner][mask])
        yield (
            float(value),
            first.axes[inner][mask][order],
            first.mean_counts[mask][order],
            first.std_err[mask][order],
        )


def _envelope(result: SweepResult, outer: str, inner: str, frequency: float):
    times, amplitudes, rows = [], [], []
    scale = result.manifest.get("count_scale", [0.0, 1.0])
    full = (scale[1] - scale[0]) or 1.0
    for value, x, counts, err in _grouped(result, outer, inner):
        fit = fit_fixed_frequency(x, counts, frequency, weights_from_errors(err))
        times.append(value)
        amplitudes.append(2 * fit["amplitude"] / full)
        rows.append({outer: value, "visibility": 2 * fit["amplitude"] / full})
    return np.array(times), np.array(amplitudes), rows


def _ramsey(result: SweepResult, report: dict) -> None:
    if "tau_center" in result.axes:
        times, visibility, rows = _envelope(
            result, "tau_center", "tau_offset", _larmor_hz(result)
        )
        report["envelope"] = rows
        selection = select_envelope_model(times, visibility)
        report["envelope_model"] = selection.to_dict()
        report["t2star"] = selection.gaussian["t2star"]
        report["fits"] = [selection.gaussian, selection.exponential]
        return

    first = result.for_direction(result.directions[0])
    fit = fit_sinusoid(
        first.axes["tau"], first.mean_counts, weights_from_errors(first.std_err)
    )
    scale = result.manifest.get("count_scale", [0.0, 1.0])
    visibility = float(np.clip(2 * fit["amplitude"] / (scale[1] - scale[0]), 0, 1))
    expected = _larmor_hz(result)
    report["fringe"] = fit.to_dict()
    report["frequency_hz"] = fit["frequency"]
    report["larmor_hz"] = expected
    report["frequency_error"] = abs(fit["frequency"] - expected) / expected
    report["visibility"] = visibility
    report["fidelity"] = fidelity_from_visibility(visibility)
    report["fits"] = [fit]


def _echo_fine(result: SweepResult, report: dict) -> None:
    first = result.for_direction(result.directions[0])
    fit = fit_sinusoid(
        first.axes["fine_delay"],
        first.mean_counts,
        weights_from_errors(first.std_err),
    )
    scale = result.manifest.get("count_scale", [0.0, 1.0])
    report["fringe"] = fit.to_dict()
    report["frequency_hz"] = fit["frequency"]
    report["larmor_hz"] = _larmor_hz(result)
    report["visibility"] = float(2 * fit["amplitude"] / (scale[1] - scale[0]))
    report["fits"] = [fit]


def _echo_decay(result: SweepResult, report: dict) -> None:
    times, visibility, rows = _envelope(
        result, "total_delay", "fine_delay", _larmor_hz(result)
    )
    report["envelope"] = rows
    selection = select_envelope_model(times, visibility)
    report["envelope_model"] = selection.to_dict()
    report["t2"] = selection.exponential["t2"]
    report["fits"] = [selection.gaussian, selection.exponential]


def _rabi(result: SweepResult, report: dict) -> None:
    first = result.for_direction(result.directions[0])
    power = first.axes["power"]
    population = to_population(result, first.mean_counts)
    peak = len(population) - 1
    for i in range(1, len(population) - 1):
        if population[i] >= population[i - 1] and population[i] > population[i + 1]:
            if population[i] > 0.5:
                peak = i
                break
    report["first_maximum_power"] = float(power[peak])
    report["visibility"] = float(population[peak] - population[0])
    report["fits"] = []


def _bloch_map(result: SweepResult, report: dict) -> None:
    rows = []
    for theta, _, counts, _ in _grouped(result, "theta", "tau"):
        population = to_population(result, counts)
        rows.append(
            {
                "theta": theta,
                "mean_population": float(np.mean(population)),
                "peak_to_peak": float(np.ptp(population)),
            }
        )
    report["rows"] = rows
    report["fits"] = []


def _per_direction(result: SweepResult, fitter, axis: str) -> dict[str, FitResult]:
    fits = {}
    for direction in result.directions:
        scan = result.for_direction(direction)
        fits[direction] = fitter(
            scan.axes[axis], scan.mean_counts, weights_from_errors(scan.std_err)
        )
    return fits


def _hysteresis(result: SweepResult, report: dict) -> None:
    if len(result.directions) == 2:
        report["hysteresis"] = detect_hysteresis(result).to_dict()


def _pump_scan(result: SweepResult, report: dict) -> None:
    fits = _per_direction(result, fit_gaussian_profile, "pump_detuning")
    report["profiles"] = {
        direction: {
            **fit.to_dict(),
            "fwhm_hz": fit["fwhm"] / (2 * np.pi),
            "center_hz": fit["center"] / (2 * np.pi),
        }
        for direction, fit in fits.items()
    }
    _hysteresis(result, report)
    report["fits"] = list(fits.values())


def _hysteresis_ramsey(result: SweepResult, report: dict) -> None:
    fits = _per_direction(result, fit_sinusoid, "tau")
    report["fringes"] = {}
    for direction, fit in fits.items():
        scan = result.for_direction(direction)
        model = (
            fit["amplitude"]
            * np.cos(2 * np.pi * fit["frequency"] * scan.axes["tau"] + fit["phase"])
            + fit["offset"]
        )
        rms = float(np.sqrt(np.mean((scan.mean_counts - model) ** 2)))
        residual = rms / fit["amplitude"] if fit["amplitude"] else 0.0
        report["fringes"][direction] = {
            **fit.to_dict(),
            "relative_residual": float(residual),
        }
    _hysteresis(result, report)
    report["fits"] = list(fits.values())


def _t1(result: SweepResult, report: dict) -> None:
    first = result.for_direction(result.directions[0])
    wait = first.axes["wait"]
    fit = fit_saturation(wait, first.mean_counts, weights_from_errors(first.std_err))
    # A sweep much shorter than T1 only bounds it from below
    resolved = not {"t1_beyond_span", "t1_unconstrained"} & set(fit.flags)
    if not resolved:
        logger.warning(
            f"Fitted T1 {fit['t1']:.3e} s is not resolved by the swept span "
            f"{np.ptp(wait):.3e} s; treating the fit as unconverged"
        )
        fit = replace(fit, converged=False)
    report["relaxation"] = fit.to_dict()
    report["t1"] = fit["t1"]
    report["t1_resolved"] = resolved
    report["fits"] = [fit]


def _larmor_bias(result: SweepResult, report: dict) -> None:
    groups = list(_grouped(result, "bias", "tau"))
    fits = []
    if len(groups) == 2:
        # Two biases: compare fringe phase over the common window
        (_, _, a, _), (_, _, b, _) = groups
        report["fringe_correlation"] = float(np.corrcoef(a, b)[0, 1])
    rows = []
    for bias, tau, counts, err in groups:
        if len(tau) < 8:
            continue
        fit = fit_sinusoid(tau, counts, weights_from_errors(err))
        fits.append(fit)
        rows.append({"bias": bias, "frequency_hz": fit["frequency"], **fit.to_dict()})
    report["biases"] = rows
    if len(rows) >= 2:
        freqs = np.array([row["frequency_hz"] for row in rows])
        steps = np.diff(freqs)
        report["monotone"] = bool(np.all(steps > 0) or np.all(steps < 0))
    report["fits"] = fits


_ANALYSES = {
    ExperimentKind.RAMSEY: _ramsey,
    ExperimentKind.ECHO_FINE: _echo_fine,
    ExperimentKind.ECHO_DECAY: _echo_decay,
    ExperimentKind.RABI: _rabi,
    ExperimentKind.BLOCH_MAP: _bloch_map,
    ExperimentKind.PUMP_SCAN: _pump_scan,
    ExperimentKind.HYSTERESIS_RAMSEY: _hysteresis_ramsey,
    ExperimentKind.T1: _t1,
    ExperimentKind.LARMOR_BIAS: _larmor_bias,
}


def build_report(result: SweepResult, extras: dict | None = None) -> dict:
    """Fits and derived quantities for one run, plus its manifest.

    ``fits_converged`` is False when any fit failed or did not converge;
    a failing fit is recorded under ``errors`` instead of raising.
    """
    report: dict = {
        "schema": result.manifest.get("schema", 1),
        "kind": result.kind.value,
        "directions": result.directions,
    }
    try:
        _ANALYSES[result.kind](result, report)
        fits = report.pop("fits")
        converged = all(fit.converged for fit in fits)
    except FitError as e:
        logger.warning(f"Analysis of {result.kind.value} failed: {e}")
        report.pop("fits", None)
        report["errors"] = [str(e)]
        converged = False

    report["fits_converged"] = converged
    if extras:
        report.update(extras)
    report["manifest"] = result.manifest
    return report


def envelope_model(report: dict) -> EnvelopeModel | None:
    entry = report.get("envelope_model")
    return EnvelopeModel(entry["model"]) if entry else None


def hysteresis_flag(report: dict) -> bool:
    return bool(report.get("hysteresis", {}).get("detected", False))

