"""Level structure, pulse sequences, master-equation dynamics and noise."""

from .dynamics import (
    apply_rotation as apply_rotation,
)
from .dynamics import (
    effective_rotation as effective_rotation,
)
from .dynamics import (
    evolve as evolve,
)
from .dynamics import (
    free_precession as free_precession,
)
from .dynamics import (
    optical_pump as optical_pump,
)
from .levels import (
    build_hamiltonian as build_hamiltonian,
)
from .levels import (
    larmor_frequency as larmor_frequency,
)
from .levels import (
    zeeman_splitting as zeeman_splitting,
)
from .pulses import (
    make_echo as make_echo,
)
from .pulses import (
    make_ramsey as make_ramsey,
)
from .pulses import (
    validate as validate,
)
