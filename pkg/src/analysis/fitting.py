"""Least-squares fits of fringes, decay envelopes and absorption lines.

Every fitter rescales its abscissa and ordinate to order one before calling
``scipy.optimize.least_squares`` and scales the result back, so the fits are
equivariant under rescaling of the data. Non-convergence never raises: it
comes back as ``FitResult.converged = False`` with a flag.
"""

import logging
from dataclasses import dataclass

import numpy as np
from scipy import optimize, signal

from ..models.data_models import DomainError, EnvelopeModel, FitError, FitResult

logger = logging.getLogger(__name__)

XTOL = 1e-9
MAX_ITERATIONS = 200
# Relative RSS difference below which two envelope models are a tie
TIE_RATIO = 1.01
# A fitted decay time this many spans beyond the data counts as no decay
NON_DECAYING_SPANS = 100.0

FWHM_FACTOR = 4.0 * np.log(2.0)


def _prepare(x, y, weights, minimum: int, name: str):
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape or x.ndim != 1:
        raise FitError(f"{name}: x and y must be 1-D arrays of equal length")
    if x.size < minimum:
        raise FitError(f"{name}: needs at least {minimum} points, got {x.size}")
    if weights is None:
        w = np.ones_like(y)
    else:
        w = np.asarray(weights, dtype=float)
        if w.shape != y.shape or np.any(w < 0) or not np.any(w > 0):
            raise FitError(f"{name}: weights must be >= 0 and not all zero")
    return x, y, w


def weights_from_errors(std_err) -> np.ndarray:
    """1/σ² weights; points with zero error get the largest finite weight."""
    std_err = np.asarray(std_err, dtype=float)
    positive = std_err[std_err > 0]
    if positive.size == 0:
        return np.ones_like(std_err)
    floor = positive.min()
    return 1.0 / np.maximum(std_err, floor) ** 2


def _solve(
    model: str,
    func,
    x: np.ndarray,
    y: np.ndarray,
    w: np.ndarray,
    p0,
    names: tuple[str, ...],
    bounds=(-np.inf, np.inf),
) -> tuple[np.ndarray, np.ndarray, float, bool, str]:
    """Weighted least squares in scaled units; returns (p, σ_p, rss, ok, msg)."""
    root_w = np.sqrt(w)

    def residuals(p):
        return (func(x, *p) - y) * root_w

    try:
        solution = optimize.least_squares(
            residuals,
            np.asarray(p0, dtype=float),
            bounds=bounds,
            xtol=XTOL,
            ftol=1e-12,
            gtol=1e-12,
            max_nfev=MAX_ITERATIONS * (len(names) + 1),
            x_scale="jac",
        )
    except ValueError as e:
        raise FitError(f"{model}: {e}") from e

    rss = float(np.sum(solution.fun**2))
    dof = max(x.size - len(names), 1)
    jac = solution.jac
    try:
        cov = np.linalg.pinv(jac.T @ jac) * (rss / dof)
        errors = np.sqrt(np.clip(np.diag(cov), 0.0, None))
    except np.linalg.LinAlgError:
        errors = np.full(len(names), np.inf)

    converged = bool(solution.status > 0 and np.all(np.isfinite(solution.x)))
    if not converged:
        logger.warning(f"{model} fit did not converge: {solution.message}")
    return solution.x, errors, rss, converged, solution.message


def _scale(values: np.ndarray) -> float:
    peak = float(np.max(np.abs(values)))
    return peak if peak > 0 else 1.0


# =============================================================================
# Fringes
# =============================================================================


def _cosine(x, amplitude, frequency, phase, offset):
    return amplitude * np.cos(2 * np.pi * frequency * x + phase) + offset


def _linear_sinusoid(x, y, w, frequency):
    """Weighted linear solve of a·cos + b·sin + c at a fixed frequency."""
    arg = 2 * np.pi * frequency * x
    design = np.column_stack([np.cos(arg), np.sin(arg), np.ones_like(x)])
    root_w = np.sqrt(w)
    coeffs, *_ = np.linalg.lstsq(design * root_w[:, None], y * root_w, rcond=None)
    residual = y - design @ coeffs
    rss = float(np.sum(w * residual**2))
    dof = max(x.size - 3, 1)
    normal = (design * w[:, None]).T @ design
    cov = np.linalg.pinv(normal) * (rss / dof)
    return coeffs, cov, rss


def _polar(coeffs, cov):
    """(a, b) of a·cos + b·sin as amplitude and phase with 1σ errors."""
    a, b = coeffs[0], coeffs[1]
    amplitude = float(np.hypot(a, b))
    # a·cos(u) + b·sin(u) = A·cos(u + φ) with φ = atan2(−b, a)
    phase = float(np.arctan2(-b, a))
    if amplitude == 0:
        return amplitude, phase, float(np.sqrt(cov[0, 0])), np.inf
    grad_amp = np.array([a, b]) / amplitude
    grad_phase = np.array([b, -a]) / amplitude**2
    sub = cov[:2, :2]
    amp_err = float(np.sqrt(max(grad_amp @ sub @ grad_amp, 0.0)))
    phase_err = float(np.sqrt(max(grad_phase @ sub @ grad_phase, 0.0)))
    return amplitude, phase, amp_err, phase_err


def dominant_frequency(x, y) -> float:
    """Frequency (Hz) of the strongest Lomb-Scargle peak of y(x)."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    span = float(np.ptp(x))
    steps = np.diff(np.sort(x))
    step = float(np.min(steps[steps > 0]))
    low = 0.5 / span
    high = 0.5 / step
    freqs = np.linspace(low, high, max(20 * x.size, 200))
    power = signal.lombscargle(x, y - y.mean(), 2 * np.pi * freqs)
    return float(freqs[int(np.argmax(power))])


def fit_sinusoid(x, y, weights=None) -> FitResult:
    """Fit A·cos(2πf·x + φ) + c, seeded by the Lomb-Scargle peak.

    Needs at least 8 points; data covering less than one period is fitted
    but flagged ``short_span``. Flat data returns amplitude 0, unconverged.
    """
    x, y, w = _prepare(x, y, weights, 8, "fit_sinusoid")
    names = ("amplitude", "frequency", "phase", "offset")

    if np.ptp(y) <= 1e-12 * max(_scale(y), 1e-300):
        return FitResult(
            model="sinusoid",
            params={
                "amplitude": 0.0,
                "frequency": 0.0,
                "phase": 0.0,
                "offset": float(y.mean()),
            },
            errors=dict.fromkeys(names, np.inf),
            rss=0.0,
            converged=False,
            flags=["flat_data"],
            message="Data are constant",
        )

    x_scale = _scale(x)
    y_scale = _scale(y)
    xs = x / x_scale
    ys = y / y_scale
    ws = w / np.max(w)

    seed_freq = dominant_frequency(xs, ys)
    coeffs, cov, _ = _linear_sinusoid(xs, ys, ws, seed_freq)
    amplitude, phase, _, _ = _polar(coeffs, cov)
    p0 = [amplitude, seed_freq, phase, coeffs[2]]

    p, err, rss, converged, message = _solve(
        "sinusoid", _cosine, xs, ys, ws, p0, names
    )
    amplitude, frequency, phase, offset = p
    if amplitude < 0:
        amplitude, phase = -amplitude, phase + np.pi
    if frequency < 0:
        frequency, phase = -frequency, -phase
    phase = float((phase + np.pi) % (2 * np.pi) - np.pi)

    flags = []
    if not converged:
        flags.append("not_converged")
    if frequency * np.ptp(xs) < 1.0:
        flags.append("short_span")

    return FitResult(
        model="sinusoid",
        params={
            "amplitude": float(amplitude * y_scale),
            "frequency": float(frequency / x_scale),
            "phase": phase,
            "offset": float(offset * y_scale),
        },
        errors={
            "amplitude": float(err[0] * y_scale),
            "frequency": float(err[1] / x_scale),
            "phase": float(err[2]),
            "offset": float(err[3] * y_scale),
        },
        rss=float(rss * y_scale**2 * np.max(w)),
        converged=converged,
        flags=flags,
        message=str(message),
    )


def fit_fixed_frequency(x, y, frequency: float, weights=None) -> FitResult:
    """Amplitude, phase and offset of fringes at a known frequency (Hz)."""
    x, y, w = _prepare(x, y, weights, 4, "fit_fixed_frequency")
    coeffs, cov, rss = _linear_sinusoid(x, y, w, frequency)
    amplitude, phase, amp_err, phase_err = _polar(coeffs, cov)
    return FitResult(
        model="fixed_frequency_sinusoid",
        params={
            "amplitude": amplitude,
            "frequency": float(frequency),
            "phase": phase,
            "offset": float(coeffs[2]),
        },
        errors={
            "amplitude": amp_err,
            "frequency": 0.0,
            "phase": phase_err,
            "offset": float(np.sqrt(max(cov[2, 2], 0.0))),
        },
        rss=rss,
        converged=True,
    )


# =============================================================================
# Decay envelopes
# =============================================================================


def _gaussian_decay(t, a0, tau):
    return a0 * np.exp(-((t / tau) ** 2))


def _exponential_decay(t, a0, tau):
    return a0 * np.exp(-t / tau)


def _decay_seed(t, amp, power: int) -> tuple[float, float, bool]:
    """(A0, τ, decaying) from a log-linear fit of amp against t**power."""
    positive = amp > 0
    if np.count_nonzero(positive) < 2:
        return float(np.max(amp)), float(np.ptp(t) or 1.0), False
    slope, intercept = np.polyfit(t[positive] ** power, np.log(amp[positive]), 1)
    if slope >= 0:
        return float(np.exp(intercept)), float(np.ptp(t) or 1.0), False
    return float(np.exp(intercept)), float((-1.0 / slope) ** (1.0 / power)), True


def _fit_decay(t, amp, weights, func, power: int, model: str, tau_name: str):
    t, amp, w = _prepare(t, amp, weights, 5, model)
    t_scale = _scale(t)
    a_scale = _scale(amp)
    ts = t / t_scale
    amps = amp / a_scale
    ws = w / np.max(w)

    a0, tau, decaying = _decay_seed(ts, amps, power)
    names = ("A0", tau_name)
    p, err, rss, converged, message = _solve(
        model,
        func,
        ts,
        amps,
        ws,
        [a0, tau],
        names,
        bounds=([-np.inf, 1e-12], np.inf),
    )

    flags = []
    if not converged:
        flags.append("not_converged")
    if not decaying or p[1] > NON_DECAYING_SPANS * np.ptp(ts):
        flags.append("non_decaying")

    return FitResult(
        model=model,
        params={"A0": float(p[0] * a_scale), tau_name: float(p[1] * t_scale)},
        errors={"A0": float(err[0] * a_scale), tau_name: float(err[1] * t_scale)},
        rss=float(rss * a_scale**2 * np.max(w)),
        converged=converged,
        flags=flags,
        message=str(message),
    )


def fit_gaussian_decay(t, amp, weights=None) -> FitResult:
    """Fit A0·exp(−(t/T2*)²)."""
    return _fit_decay(
        t, amp, weights, _gaussian_decay, 2, "gaussian_decay", "t2star"
    )


def fit_exponential_decay(t, amp, weights=None) -> FitResult:
    """Fit A0·exp(−t/T2)."""
    return _fit_decay(
        t, amp, weights, _exponential_decay, 1, "exponential_decay", "t2"
    )


@dataclass
class EnvelopeSelection:
    """Outcome of fitting both decay models to one envelope."""

    model: EnvelopeModel
    ratio: float  # worse RSS / better RSS
    gaussian: FitResult
    exponential: FitResult

    def to_dict(self) -> dict:
        return {
            "model": self.model.value,
            "ratio": self.ratio,
            "gaussian": self.gaussian.to_dict(),
            "exponential": self.exponential.to_dict(),
        }


def select_envelope_model(t, amp, weights=None) -> EnvelopeSelection:
    """Pick the decay model with the lower RSS; near-ties are inconclusive."""
    gaussian = fit_gaussian_decay(t, amp, weights)
    exponential = fit_exponential_decay(t, amp, weights)
    for fit in (gaussian, exponential):
        if not fit.converged:
            raise FitError(f"{fit.model} fit did not converge: {fit.message}")

    if "non_decaying" in gaussian.flags and "non_decaying" in exponential.flags:
        return EnvelopeSelection(
            EnvelopeModel.INCONCLUSIVE, 1.0, gaussian, exponential
        )

    low, high = sorted([gaussian.rss, exponential.rss])
    ratio = high / low if low > 0 else (1.0 if high == 0 else np.inf)
    if ratio <= TIE_RATIO:
        model = EnvelopeModel.INCONCLUSIVE
    elif gaussian.rss < exponential.rss:
        model = EnvelopeModel.GAUSSIAN
    else:
        model = EnvelopeModel.EXPONENTIAL
    logger.debug(f"Envelope model {model.value}, RSS ratio {ratio:.3f}")
    return EnvelopeSelection(model, float(ratio), gaussian, exponential)


# =============================================================================
# Line shapes and relaxation
# =============================================================================


def _gaussian_profile(x, center, fwhm, height, baseline):
    return height * np.exp(-FWHM_FACTOR * ((x - center) / fwhm) ** 2) + baseline


def fit_gaussian_profile(detuning, sig, weights=None) -> FitResult:
    """Fit a Gaussian line: center, FWHM, height and baseline."""
    x, y, w = _prepare(detuning, sig, weights, 5, "fit_gaussian_profile")
    order = np.argsort(x)
    x, y, w = x[order], y[order], w[order]

    x_scale = _scale(x)
    y_scale = _scale(y)
    xs = x / x_scale
    ys = y / y_scale
    ws = w / np.max(w)

    peak = int(np.argmax(ys))
    baseline = float(np.min(ys))
    height = float(ys[peak] - baseline)
    above = xs[ys >= baseline + 0.5 * height]
    fwhm = float(np.ptp(above)) or float(np.ptp(xs)) / 4
    names = ("center", "fwhm", "height", "baseline")
    p, err, rss, converged, message = _solve(
        "gaussian_profile",
        _gaussian_profile,
        xs,
        ys,
        ws,
        [xs[peak], fwhm, height, baseline],
        names,
        bounds=([-np.inf, 1e-12, -np.inf, -np.inf], np.inf),
    )

    flags = []
    if not converged:
        flags.append("not_converged")
    if peak in (0, xs.size - 1) or not xs[0] < p[0] < xs[-1]:
        flags.append("peak_at_boundary")

    return FitResult(
        model="gaussian_profile",
        params={
            "center": float(p[0] * x_scale),
            "fwhm": float(p[1] * x_scale),
            "height": float(p[2] * y_scale),
            "baseline": float(p[3] * y_scale),
        },
        errors={
            "center": float(err[0] * x_scale),
            "fwhm": float(err[1] * x_scale),
            "height": float(err[2] * y_scale),
            "baseline": float(err[3] * y_scale),
        },
        rss=float(rss * y_scale**2 * np.max(w)),
        converged=converged,
        flags=flags,
        message=str(message),
    )


def _saturation(t, amplitude, t1, offset):
    return amplitude * (1.0 - np.exp(-t / t1)) + offset


def fit_saturation(t, y, weights=None) -> FitResult:
    """Fit A·(1 − exp(−t/T1)) + c to a relaxation curve."""
    t, y, w = _prepare(t, y, weights, 5, "fit_saturation")
    order = np.argsort(t)
    t, y, w = t[order], y[order], w[order]

    t_scale = _scale(t)
    y_scale = _scale(y)
    ts = t / t_scale
    ys = y / y_scale
    ws = w / np.max(w)

    offset = float(ys[0])
    amplitude = float(ys[-1] - ys[0])
    names = ("amplitude", "t1", "offset")
    p, err, rss, converged, message = _solve(
        "saturation",
        _saturation,
        ts,
        ys,
        ws,
        [amplitude or 1e-3, 0.5 * float(np.ptp(ts) or 1.0), offset],
        names,
        bounds=([-np.inf, 1e-12, -np.inf], np.inf),
    )

    flags = []
    if not converged:
        flags.append("not_converged")
    if p[1] > 3.0 * np.ptp(ts):
        flags.append("t1_beyond_span")
    if err[1] > p[1]:
        flags.append("t1_unconstrained")

    return FitResult(
        model="saturation",
        params={
            "amplitude": float(p[0] * y_scale),
            "t1": float(p[1] * t_scale),
            "offset": float(p[2] * y_scale),
        },
        errors={
            "amplitude": float(err[0] * y_scale),
            "t1": float(err[1] * t_scale),
            "offset": float(err[2] * y_scale),
        },
        rss=float(rss * y_scale**2 * np.max(w)),
        converged=converged,
        flags=flags,
        message=str(message),
    )


def fidelity_from_visibility(v: float) -> float:
    """Per-pulse fidelity (1 + √V)/2 for two identical imperfect pulses."""
    if not 0.0 <= v <= 1.0:
        raise DomainError(f"Visibility must lie in [0, 1], got {v}")
    return 0.5 * (1.0 + np.sqrt(v))


_CURVES = {
    "sinusoid": (_cosine, ("amplitude", "frequency", "phase", "offset")),
    "fixed_frequency_sinusoid": (
        _cosine,
        ("amplitude", "frequency", "phase", "offset"),
    ),
    "gaussian_decay": (_gaussian_decay, ("A0", "t2star")),
    "exponential_decay": (_exponential_decay, ("A0", "t2")),
    "gaussian_profile": (_gaussian_profile, ("center", "fwhm", "height", "baseline")),
    "saturation": (_saturation, ("amplitude", "t1", "offset")),
}


def evaluate_fit(fit: FitResult | dict, x) -> np.ndarray:
    """Model curve of a fit (or its to_dict form) at x."""
    if isinstance(fit, FitResult):
        fit = fit.to_dict()
    try:
        func, names = _CURVES[fit["model"]]
    except KeyError:
        raise FitError(f"No curve for fit model {fit['model']!r}") from None
    return func(np.asarray(x, dtype=float), *(fit["params"][n] for n in names))
