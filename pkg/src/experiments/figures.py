"""Sweep presets: one per reproduced figure, plus a default per experiment."""

from dataclasses import dataclass, field

import numpy as np

from ..data import defaults
from ..models.data_models import (
    ChargeSpecies,
    ConfigError,
    ExperimentConfig,
    ExperimentKind,
    ScanDirection,
)

PS = 1e-12
NS = 1e-9
US = 1e-6


@dataclass(frozen=True)
class FigurePreset:
    """Baked-in sweep of one figure."""

    figure: str
    title: str
    kind: ExperimentKind
    sweep: np.ndarray
    inner: np.ndarray | None = None
    scan_direction: ScanDirection = ScanDirection.UP
    charge_species: ChargeSpecies = ChargeSpecies.HOLE
    shots_per_point: int = defaults.SHOTS_PER_POINT
    draws: int = defaults.QUASISTATIC_DRAWS
    options: dict = field(default_factory=dict)

    def config(
        self,
        seed: int = 0,
        shots: int | None = None,
        threads: int = 1,
        species: ChargeSpecies | None = None,
        direction: ScanDirection | None = None,
    ) -> ExperimentConfig:
        return ExperimentConfig(
            kind=self.kind,
            sweep=self.sweep,
            inner=self.inner,
            shots_per_point=shots or self.shots_per_point,
            scan_direction=direction or self.scan_direction,
            charge_species=species or self.charge_species,
            seed=seed,
            draws=self.draws,
            threads=threads,
            **self.options,
        )


def _steps(start: float, stop: float, step: float) -> np.ndarray:
    count = int(round((stop - start) / step)) + 1
    return np.linspace(start, stop, count)


_PUMP_SCAN = _steps(-10e9, 10e9, 0.25e9) * defaults.TWO_PI
_HYSTERESIS_TAU = _steps(1.0 * NS, 1.1 * NS, 2 * PS)
_RAMSEY_CENTERS = _steps(0.0, 7 * NS, 0.25 * NS)
_RAMSEY_OFFSETS = _steps(0.0, 66 * PS, 3 * PS)

FIGURES: dict[str, FigurePreset] = {
    "2C": FigurePreset(
        figure="2C",
        title="Rabi oscillation vs rotation power",
        kind=ExperimentKind.RABI,
        sweep=_steps(0.0, 3.0, 0.0375),
        draws=1,
    ),
    "2D": FigurePreset(
        figure="2D",
        title="Ramsey fringes",
        kind=ExperimentKind.RAMSEY,
        sweep=_steps(0.0, 200 * PS, 1 * PS),
    ),
    "2E": FigurePreset(
        figure="2E",
        title="Bloch-sphere map: pulse angle vs delay",
        kind=ExperimentKind.BLOCH_MAP,
        sweep=_steps(0.0, np.pi, np.pi / 24),
        inner=_steps(0.0, 100 * PS, 2 * PS),
        draws=200,
    ),
    "3A": FigurePreset(
        figure="3A",
        title="Electron Ramsey fringes, both scan directions",
        kind=ExperimentKind.HYSTERESIS_RAMSEY,
        sweep=_HYSTERESIS_TAU,
        scan_direction=ScanDirection.BOTH,
        charge_species=ChargeSpecies.ELECTRON,
        draws=500,
    ),
    "3B": FigurePreset(
        figure="3B",
        title="Hole Ramsey fringes, both scan directions",
        kind=ExperimentKind.HYSTERESIS_RAMSEY,
        sweep=_HYSTERESIS_TAU,
        scan_direction=ScanDirection.BOTH,
        draws=500,
    ),
    "3C": FigurePreset(
        figure="3C",
        title="Electron absorption scan, both directions",
        kind=ExperimentKind.PUMP_SCAN,
        sweep=_PUMP_SCAN,
        scan_direction=ScanDirection.BOTH,
        charge_species=ChargeSpecies.ELECTRON,
        shots_per_point=defaults.SCAN_SHOTS_PER_POINT,
    ),
    "3D": FigurePreset(
        figure="3D",
        title="Hole absorption scan, both directions",
        kind=ExperimentKind.PUMP_SCAN,
        sweep=_PUMP_SCAN,
        scan_direction=ScanDirection.BOTH,
        shots_per_point=defaults.SCAN_SHOTS_PER_POINT,
    ),
    "4A": FigurePreset(
        figure="4A",
        title="Ramsey fringes out to several T2*",
        kind=ExperimentKind.RAMSEY,
        sweep=_RAMSEY_CENTERS,
        inner=_RAMSEY_OFFSETS,
    ),
    "4B": FigurePreset(
        figure="4B",
        title="Ramsey fringe amplitude: Gaussian vs exponential decay",
        kind=ExperimentKind.RAMSEY,
        sweep=_RAMSEY_CENTERS,
        inner=_RAMSEY_OFFSETS,
    ),
    "4C": FigurePreset(
        figure="4C",
        title="Ramsey fringes at two gate biases near T2*",
        kind=ExperimentKind.LARMOR_BIAS,
        sweep=np.array(defaults.BIAS_PAIR),
        inner=_steps(2.25 * NS, 2.35 * NS, 1 * PS),
    ),
    "4D": FigurePreset(
        figure="4D",
        title="Larmor frequency vs gate bias",
        kind=ExperimentKind.LARMOR_BIAS,
        sweep=_steps(1.45, 1.85, 0.05),
        inner=_steps(0.0, 200 * PS, 2 * PS),
        draws=500,
    ),
    "4E": FigurePreset(
        figure="4E",
        title="Spin-echo fringes vs fine delay at 2T = 130 ns",
        kind=ExperimentKind.ECHO_FINE,
        sweep=_steps(-100 * PS, 100 * PS, 2 * PS),
        options={"total_delay": 130 * NS},
    ),
    "4F": FigurePreset(
        figure="4F",
        title="Spin-echo fringe amplitude vs total delay",
        kind=ExperimentKind.ECHO_DECAY,
        sweep=np.array([0.05, 0.1, 0.2, 0.4, 0.6, 0.8, 1.0, 1.4, 1.8, 2.4, 3.0, 4.0])
        * US,
        inner=_steps(-48 * PS, 48 * PS, 3 * PS),
    ),
}

# Sweeps used by `run <kind>` when the config gives none
DEFAULT_SWEEPS: dict[ExperimentKind, FigurePreset] = {
    ExperimentKind.RABI: FIGURES["2C"],
    ExperimentKind.RAMSEY: FIGURES["2D"],
    ExperimentKind.BLOCH_MAP: FIGURES["2E"],
    ExperimentKind.ECHO_FINE: FIGURES["4E"],
    ExperimentKind.ECHO_DECAY: FIGURES["4F"],
    ExperimentKind.PUMP_SCAN: FIGURES["3D"],
    ExperimentKind.HYSTERESIS_RAMSEY: FIGURES["3B"],
    ExperimentKind.LARMOR_BIAS: FIGURES["4D"],
    ExperimentKind.T1: FigurePreset(
        figure="T1",
        title="Spin relaxation in the dark",
        kind=ExperimentKind.T1,
        # About 4.5 T1 at the default T1 = 100·T2
        sweep=_steps(0.0, 500 * US, 20 * US),
        draws=1,
    ),
}


def get_figure(name: str) -> FigurePreset:
    try:
        return FIGURES[name.upper()]
    except KeyError:
        known = ", ".join(FIGURES)
        raise ConfigError(f"Unknown figure '{name}' (known: {known})") from None
