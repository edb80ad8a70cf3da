"""Default constants and run configuration."""

from .defaults import (
    SPECIES_PROFILES,
    SpeciesProfile,
    get_species_profile,
)
from .run_config import (
    RunConfig,
    RunSettings,
    load_run_config,
    parse_run_config,
)

__all__ = [
    "SPECIES_PROFILES",
    "RunConfig",
    "RunSettings",
    "SpeciesProfile",
    "get_species_profile",
    "load_run_config",
    "parse_run_config",
]
