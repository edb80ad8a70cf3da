"""Fits, hysteresis detection and run reports."""

from .fitting import (
    fidelity_from_visibility as fidelity_from_visibility,
)
from .fitting import (
    fit_exponential_decay as fit_exponential_decay,
)
from .fitting import (
    fit_gaussian_decay as fit_gaussian_decay,
)
from .fitting import (
    fit_gaussian_profile as fit_gaussian_profile,
)
from .fitting import (
    fit_sinusoid as fit_sinusoid,
)
from .fitting import (
    select_envelope_model as select_envelope_model,
)
from .hysteresis import (
    detect_hysteresis as detect_hysteresis,
)
from .reports import (
    build_report as build_report,
)
