"""SVG figures for a finished run: line plots, heatmaps and decay envelopes."""

import logging
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from ..analysis.fitting import evaluate_fit  # noqa: E402
from ..models.data_models import SweepResult  # noqa: E402
from .writers import artifact_stem  # noqa: E402

logger = logging.getLogger(__name__)

# Fixed ids and no date stamp keep reruns byte-identical
plt.rcParams["svg.hashsalt"] = "qdot-sim"
SVG_METADATA = {"Date": None}

AXIS_LABELS = {
    "power": "relative power",
    "tau": "delay τ",
    "tau_center": "delay τ",
    "tau_offset": "offset",
    "theta": "pulse angle θ (rad)",
    "fine_delay": "fine delay δτ",
    "total_delay": "total delay 2T",
    "pump_detuning": "pump detuning (GHz)",
    "wait": "wait",
    "bias": "gate bias (V)",
}

TIME_SCALES = ((1e-6, "µs"), (1e-9, "ns"), (1e-12, "ps"))


def _scaled(name: str, unit: str, values: np.ndarray) -> tuple[np.ndarray, str, float]:
    """Values in display units, the axis label and the divisor used."""
    label = AXIS_LABELS.get(name, name)
    if unit == "s":
        span = float(np.max(np.abs(values))) if values.size else 0.0
        for scale, suffix in TIME_SCALES:
            if span >= scale or scale == TIME_SCALES[-1][0]:
                return values / scale, f"{label} ({suffix})", scale
    if unit == "rad/s":
        scale = 2 * np.pi * 1e9
        return values / scale, label, scale
    return values, label, 1.0


def _fits_by_direction(report: dict) -> dict[str, dict]:
    if "fringe" in report:
        return {"": report["fringe"]}
    if "relaxation" in report:
        return {"": report["relaxation"]}
    return report.get("fringes") or report.get("profiles") or {}


def _line_plot(ax, result: SweepResult, report: dict) -> None:
    fits = _fits_by_direction(report)
    for direction in result.directions:
        scan = result.for_direction(direction)
        name = next(iter(scan.axes))
        x, label, scale = _scaled(name, scan.axis_units[name], scan.axes[name])
        ax.errorbar(
            x,
            scan.mean_counts,
            yerr=scan.std_err,
            fmt="o",
            markersize=3,
            label=f"{direction} scan",
        )
        fit = fits.get(direction) or fits.get("")
        if fit and fit.get("converged"):
            dense = np.linspace(scan.axes[name].min(), scan.axes[name].max(), 400)
            ax.plot(dense / scale, evaluate_fit(fit, dense), linewidth=1)
        ax.set_xlabel(label)
    ax.set_ylabel("counts per point")
    if len(result.directions) > 1:
        ax.legend(frameon=False, fontsize=9)


def _heatmap(ax, result: SweepResult) -> None:
    scan = result.for_direction(result.directions[0])
    outer_name, inner_name = list(scan.axes)[:2]
    outer = np.unique(scan.axes[outer_name])
    inner = np.unique(scan.axes[inner_name])
    grid = np.full((outer.size, inner.size), np.nan)
    rows = np.searchsorted(outer, scan.axes[outer_name])
    cols = np.searchsorted(inner, scan.axes[inner_name])
    grid[rows, cols] = scan.mean_counts

    y, y_label, _ = _scaled(outer_name, scan.axis_units[outer_name], outer)
    x, x_label, _ = _scaled(inner_name, scan.axis_units[inner_name], inner)
    mesh = ax.pcolormesh(x, y, grid, shading="nearest")
    plt.colorbar(mesh, ax=ax, label="counts per point")
    ax.set_xlabel(x_label)
    ax.set_ylabel(y_label)


def _envelope_plot(ax, result: SweepResult, report: dict) -> None:
    outer_name = next(iter(result.axes))
    times = np.array([row[outer_name] for row in report["envelope"]])
    visibility = np.array([row["visibility"] for row in report["envelope"]])
    x, label, scale = _scaled(outer_name, result.axis_units[outer_name], times)
    ax.plot(x, visibility, "o", markersize=4, label="fringe visibility")

    selection = report.get("envelope_model", {})
    dense = np.linspace(0.0, times.max(), 400)
    for model in ("gaussian", "exponential"):
        fit = selection.get(model)
        if fit and fit.get("converged"):
            ax.plot(dense / scale, evaluate_fit(fit, dense), label=f"{model} fit")
    ax.set_xlabel(label)
    ax.set_ylabel("visibility")
    ax.legend(frameon=False, fontsize=9)


def plot_result(
    result: SweepResult,
    report: dict,
    out_dir: str | Path,
    title: str | None = None,
) -> Path:
    """Write ``<kind>_<seed>.svg`` and return its path."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    seed = result.manifest.get("seed", 0)
    path = out_dir / f"{artifact_stem(result.kind.value, seed)}.svg"

    fig, ax = plt.subplots(figsize=(6.4, 4.2))
    if "envelope" in report:
        _envelope_plot(ax, result, report)
    elif len(result.axes) > 1:
        _heatmap(ax, result)
    else:
        _line_plot(ax, result, report)
    ax.set_title(title or result.kind.value.replace("_", " "))
    fig.tight_layout()
    fig.savefig(path, format="svg", metadata=SVG_METADATA)
    plt.close(fig)

    logger.info(f"Wrote plot to {path}")
    return path
