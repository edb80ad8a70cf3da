from .data_models import (
    ChargeSpecies as ChargeSpecies,
)
from .data_models import (
    DensityMatrix as DensityMatrix,
)
from .data_models import (
    ExperimentConfig as ExperimentConfig,
)
from .data_models import (
    ExperimentKind as ExperimentKind,
)
from .data_models import (
    FitResult as FitResult,
)
from .data_models import (
    NoiseModel as NoiseModel,
)
from .data_models import (
    OverhauserState as OverhauserState,
)
from .data_models import (
    Pulse as Pulse,
)
from .data_models import (
    PumpWindow as PumpWindow,
)
from .data_models import (
    Sequence as Sequence,
)
from .data_models import (
    SpinSystem as SpinSystem,
)
from .data_models import (
    SweepResult as SweepResult,
)
