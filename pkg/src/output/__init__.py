"""Run artifacts: CSV data, JSON reports and SVG plots."""

from .plots import (
    plot_result as plot_result,
)
from .writers import (
    read_csv as read_csv,
)
from .writers import (
    write_csv as write_csv,
)
from .writers import (
    write_report as write_report,
)
