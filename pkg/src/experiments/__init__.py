"""Experiment sweeps, readout model and figure presets."""

from .readout import (
    photon_counts as photon_counts,
)
from .runner import (
    ExperimentRunner as ExperimentRunner,
)
from .runner import (
    calibrate_power as calibrate_power,
)
from .runner import (
    ops_per_coherence as ops_per_coherence,
)
from .runner import (
    run_experiment as run_experiment,
)
from .setup import (
    Setup as Setup,
)
from .setup import (
    default_setup as default_setup,
)
