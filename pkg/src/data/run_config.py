"""Strict TOML run configuration.

Frequencies in the file are ordinary frequencies (keys ending ``_hz``) and
are converted to rad/s here; times are in seconds, biases in volts. Any key
or table that is not listed below is an error, never silently ignored. A
zero in one of the optional noise times (``t2_star``, ``t2``, ``t1``,
``ou_correlation_time``) switches that channel off.
"""

import logging
import tomllib
from dataclasses import dataclass, field
from pathlib import Path
from typing import TYPE_CHECKING

import numpy as np

from ..models.data_models import (
    ChargeSpecies,
    ConfigError,
    DomainError,
    ExperimentConfig,
    ExperimentKind,
    Polarization,
    PulseShape,
    ScanDirection,
)
from . import defaults

if TYPE_CHECKING:
    from ..experiments.setup import Setup

logger = logging.getLogger(__name__)

TWO_PI = defaults.TWO_PI

SCHEMA: dict[str, set[str]] = {
    "system": {
        "b_field",
        "g_hole",
        "g_electron",
        "trion_frequency_hz",
        "gamma_sp",
        "branching_down",
        "larmor_bias_slope",
        "bias_ref",
        "larmor_ref_hz",
        "bias_range",
        "selection_imbalance",
    },
    "pulse": {"fwhm", "detuning_hz", "shape", "polarization"},
    "pump": {"duration", "pump_rabi", "scan_pump_rabi", "period"},
    "noise": {
        "t2_star",
        "t2",
        "optical_linewidth_hz",
        "t1",
        "ou_correlation_time",
        "bias_modulation",
    },
    "feedback": {
        "enabled",
        "gain_hz",
        "relaxation_rate",
        "bound_hz",
        "target",
        "drag_width_hz",
        "ramsey_pull",
        "dwell",
        "updates_per_point",
        "suppression",
    },
    "readout": {"efficiency", "dark_rate", "depolarization", "damping_per_pi"},
    "experiment": {
        "kind",
        "sweep",
        "inner",
        "shots_per_point",
        "scan_direction",
        "charge_species",
        "bias",
        "draws",
        "shot_noise",
        "total_delay",
    },
    "run": {"seed", "out", "threads", "plot"},
}


@dataclass
class RunSettings:
    seed: int = 0
    out: str = "results"
    threads: int = 1
    plot: bool = True

    def to_dict(self) -> dict:
        return {
            "seed": self.seed,
            "out": self.out,
            "threads": self.threads,
            "plot": self.plot,
        }


@dataclass
class RunConfig:
    """A parsed config file: the setup, an optional experiment, run settings."""

    setup: "Setup"
    experiment: ExperimentConfig | None = None
    run: RunSettings = field(default_factory=RunSettings)
    source: str | None = None

    def to_dict(self) -> dict:
        return {
            "source": self.source,
            "setup": self.setup.to_dict(),
            "experiment": self.experiment.to_dict() if self.experiment else None,
            "run": self.run.to_dict(),
        }


def _number(table: str, key: str, value) -> float:
    if isinstance(value, bool) or not isinstance(value, int | float):
        raise ConfigError(f"[{table}] {key} must be a number, got {value!r}")
    return float(value)


def _integer(table: str, key: str, value) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigError(f"[{table}] {key} must be an integer, got {value!r}")
    return value


def _boolean(table: str, key: str, value) -> bool:
    if not isinstance(value, bool):
        raise ConfigError(f"[{table}] {key} must be true or false, got {value!r}")
    return value


def _enum(table: str, key: str, value, enum_type):
    try:
        return enum_type(value)
    except ValueError:
        choices = ", ".join(member.value for member in enum_type)
        raise ConfigError(
            f"[{table}] {key} must be one of {choices}, got {value!r}"
        ) from None


def _numbers(table: str, key: str, value) -> list[float]:
    if not isinstance(value, list):
        raise ConfigError(f"[{table}] {key} must be a list of numbers")
    return [_number(table, key, v) for v in value]


def _check_keys(data: dict) -> None:
    for table, entries in data.items():
        if table not in SCHEMA:
            known = ", ".join(f"[{name}]" for name in SCHEMA)
            raise ConfigError(f"Unknown table [{table}] (known: {known})")
        if not isinstance(entries, dict):
            raise ConfigError(f"[{table}] must be a table")
        for key in entries:
            if key not in SCHEMA[table]:
                raise ConfigError(f"Unknown key '{key}' in [{table}]")


def _optional_time(table: str, key: str, value) -> float | None:
    seconds = _number(table, key, value)
    if seconds < 0:
        raise ConfigError(f"[{table}] {key} must be >= 0, got {seconds}")
    return None if seconds == 0 else seconds


def _system(table: dict):
    from ..physics.levels import default_spin_system, ideal_selection_rules

    overrides = {}
    for key in ("b_field", "g_hole", "g_electron", "gamma_sp", "branching_down"):
        if key in table:
            overrides[key] = _number("system", key, table[key])
    if "trion_frequency_hz" in table:
        overrides["trion_frequency"] = TWO_PI * _number(
            "system", "trion_frequency_hz", table["trion_frequency_hz"]
        )
    if "larmor_bias_slope" in table:
        overrides["larmor_bias_slope"] = _number(
            "system", "larmor_bias_slope", table["larmor_bias_slope"]
        )
    if "bias_ref" in table or "larmor_ref_hz" in table:
        bias_ref = _number(
            "system", "bias_ref", table.get("bias_ref", defaults.BIAS_REF)
        )
        omega_ref = None
        if "larmor_ref_hz" in table:
            omega_ref = TWO_PI * _number(
                "system", "larmor_ref_hz", table["larmor_ref_hz"]
            )
        overrides["larmor_bias_ref"] = (bias_ref, omega_ref)
    if "bias_range" in table:
        bias_range = _numbers("system", "bias_range", table["bias_range"])
        if len(bias_range) != 2 or bias_range[0] >= bias_range[1]:
            raise ConfigError("[system] bias_range must be [low, high]")
        overrides["bias_range"] = tuple(bias_range)

    imbalance = _number(
        "system", "selection_imbalance", table.get("selection_imbalance", 0.0)
    )
    return default_spin_system(**overrides), ideal_selection_rules(imbalance)


def _pulse(table: dict):
    from ..physics.pulses import default_pulse

    overrides = {}
    if "fwhm" in table:
        overrides["fwhm"] = _number("pulse", "fwhm", table["fwhm"])
    if "detuning_hz" in table:
        overrides["detuning"] = TWO_PI * _number(
            "pulse", "detuning_hz", table["detuning_hz"]
        )
    if "shape" in table:
        overrides["shape"] = _enum("pulse", "shape", table["shape"], PulseShape)
    if "polarization" in table:
        overrides["polarization"] = _enum(
            "pulse", "polarization", table["polarization"], Polarization
        )
    return default_pulse(**overrides)


def _pump(table: dict) -> tuple:
    from ..physics.pulses import default_pump

    overrides = {}
    for key in ("duration", "pump_rabi"):
        if key in table:
            overrides[key] = _number("pump", key, table[key])
    scan_rabi = _number(
        "pump",
        "scan_pump_rabi",
        table.get("scan_pump_rabi", defaults.SCAN_PUMP_RABI),
    )
    period = _number("pump", "period", table.get("period", defaults.LASER_PERIOD))
    if period <= 0:
        raise ConfigError(f"[pump] period must be > 0, got {period}")
    return default_pump(**overrides), scan_rabi, period


def _noise(table: dict):
    from ..physics.noise import default_noise_model

    overrides = {}
    if "t2_star" in table:
        t2_star = _optional_time("noise", "t2_star", table["t2_star"])
        sigma = 0.0 if t2_star is None else np.sqrt(2.0) / t2_star
        overrides["sigma_quasistatic"] = sigma
    if "t2" in table:
        t2 = _optional_time("noise", "t2", table["t2"])
        overrides["gamma_phi"] = 0.0 if t2 is None else 1.0 / t2
    if "optical_linewidth_hz" in table:
        overrides["optical_linewidth_fwhm"] = TWO_PI * _number(
            "noise", "optical_linewidth_hz", table["optical_linewidth_hz"]
        )
    if "t1" in table:
        overrides["t1"] = _optional_time("noise", "t1", table["t1"])
    if "ou_correlation_time" in table:
        overrides["ou_correlation_time"] = _optional_time(
            "noise", "ou_correlation_time", table["ou_correlation_time"]
        )
    if "bias_modulation" in table:
        modulation = _numbers("noise", "bias_modulation", table["bias_modulation"])
        if modulation and len(modulation) != 2:
            raise ConfigError(
                "[noise] bias_modulation must be [amplitude_V, frequency_hz] or []"
            )
        overrides["bias_modulation"] = tuple(modulation) if modulation else None
    return default_noise_model(**overrides)


def _feedback(table: dict):
    from ..experiments.setup import FeedbackSettings

    overrides = {}
    if "enabled" in table:
        overrides["enabled"] = _boolean("feedback", "enabled", table["enabled"])
    for key in ("relaxation_rate", "target", "ramsey_pull", "dwell"):
        if key in table:
            overrides[key] = _number("feedback", key, table[key])
    for key in ("gain_hz", "bound_hz", "drag_width_hz"):
        if key in table:
            overrides[key.removesuffix("_hz")] = TWO_PI * _number(
                "feedback", key, table[key]
            )
    if "updates_per_point" in table:
        overrides["updates_per_point"] = _integer(
            "feedback", "updates_per_point", table["updates_per_point"]
        )
    if "suppression" in table:
        kappa = _number("feedback", "suppression", table["suppression"])
        overrides["suppression"] = None if kappa == 0 else kappa
    return FeedbackSettings(**overrides)


def _readout(table: dict):
    from ..experiments.readout import ReadoutModel
    from ..experiments.setup import PulseErrors

    readout = {}
    for key in ("efficiency", "dark_rate"):
        if key in table:
            readout[key] = _number("readout", key, table[key])
    errors = {}
    for key in ("depolarization", "damping_per_pi"):
        if key in table:
            errors[key] = _number("readout", key, table[key])
    return ReadoutModel(**readout), PulseErrors(**errors)


def _experiment(table: dict, run: RunSettings) -> ExperimentConfig:
    if "kind" not in table:
        raise ConfigError("[experiment] needs a kind")
    kind = _enum("experiment", "kind", table["kind"], ExperimentKind)
    if "sweep" not in table:
        raise ConfigError("[experiment] needs a sweep")
    sweep = np.array(_numbers("experiment", "sweep", table["sweep"]))
    if kind == ExperimentKind.PUMP_SCAN:
        sweep = TWO_PI * sweep

    params = {"kind": kind, "sweep": sweep, "seed": run.seed, "threads": run.threads}
    if "inner" in table:
        params["inner"] = np.array(_numbers("experiment", "inner", table["inner"]))
    if "shots_per_point" in table:
        params["shots_per_point"] = _integer(
            "experiment", "shots_per_point", table["shots_per_point"]
        )
    if "draws" in table:
        params["draws"] = _integer("experiment", "draws", table["draws"])
    if "scan_direction" in table:
        params["scan_direction"] = _enum(
            "experiment", "scan_direction", table["scan_direction"], ScanDirection
        )
    if "charge_species" in table:
        params["charge_species"] = _enum(
            "experiment", "charge_species", table["charge_species"], ChargeSpecies
        )
    if "bias" in table:
        params["bias"] = _number("experiment", "bias", table["bias"])
    if "shot_noise" in table:
        params["shot_noise"] = _boolean("experiment", "shot_noise", table["shot_noise"])
    if "total_delay" in table:
        params["total_delay"] = _number(
            "experiment", "total_delay", table["total_delay"]
        )
    return ExperimentConfig(**params)


def _run(table: dict) -> RunSettings:
    settings = RunSettings()
    if "seed" in table:
        settings.seed = _integer("run", "seed", table["seed"])
    if "out" in table:
        if not isinstance(table["out"], str):
            raise ConfigError("[run] out must be a string")
        settings.out = table["out"]
    if "threads" in table:
        settings.threads = _integer("run", "threads", table["threads"])
        if settings.threads < 1:
            raise ConfigError("[run] threads must be >= 1")
    if "plot" in table:
        settings.plot = _boolean("run", "plot", table["plot"])
    return settings


def parse_run_config(data: dict, source: str | None = None) -> RunConfig:
    """Build a RunConfig from already-parsed TOML data."""
    from ..experiments.setup import Setup

    _check_keys(data)
    try:
        system, rules = _system(data.get("system", {}))
        pump, scan_rabi, period = _pump(data.get("pump", {}))
        readout, pulse_errors = _readout(data.get("readout", {}))
        setup = Setup(
            system=system,
            noise=_noise(data.get("noise", {})),
            rules=rules,
            pulse=_pulse(data.get("pulse", {})),
            pump=pump,
            scan_pump_rabi=scan_rabi,
            period=period,
            readout=readout,
            feedback=_feedback(data.get("feedback", {})),
            pulse_errors=pulse_errors,
        )
        run = _run(data.get("run", {}))
        experiment = None
        if "experiment" in data:
            experiment = _experiment(data["experiment"], run)
    except DomainError as e:
        raise ConfigError(str(e)) from e

    logger.debug(f"Parsed run config from {source or '<defaults>'}")
    return RunConfig(setup=setup, experiment=experiment, run=run, source=source)


def load_run_config(path: str | Path | None = None) -> RunConfig:
    """Load a TOML config file; None gives the built-in defaults."""
    if path is None:
        return parse_run_config({})
    path = Path(path)
    try:
        with path.open("rb") as f:
            data = tomllib.load(f)
    except FileNotFoundError:
        raise ConfigError(f"Config file not found: {path}") from None
    except tomllib.TOMLDecodeError as e:
        raise ConfigError(f"Invalid TOML in {path}: {e}") from e
    return parse_run_config(data, source=str(path))
