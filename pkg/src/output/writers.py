"""CSV and JSON writers for sweep results.

Every file carries the run manifest (resolved config, setup and seed), so a
CSV on its own is enough to rerun the experiment. Output is deterministic:
same inputs, same bytes.
"""

import csv
import json
import logging
from pathlib import Path

import numpy as np

from ..models.data_models import SweepResult

logger = logging.getLogger(__name__)

MANIFEST_PREFIX = "# manifest: "
COLUMNS = ("direction", "mean_counts", "shots", "std_err")


def artifact_stem(kind: str, seed: int) -> str:
    return f"{kind}_{seed}"


def _json_default(value):
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, np.generic):
        return value.item()
    if isinstance(value, Path):
        return str(value)
    raise TypeError(f"Not JSON serializable: {type(value).__name__}")


def to_json(data: dict) -> str:
    return json.dumps(data, indent=2, sort_keys=True, default=_json_default)


def _cell(value) -> str:
    if isinstance(value, str):
        return value
    if isinstance(value, int | np.integer):
        return str(int(value))
    return repr(float(value))


def write_csv(
    result: SweepResult, out_dir: str | Path, extra: dict | None = None
) -> Path:
    """Write ``<kind>_<seed>.csv``: manifest comment line, then one row per point."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    seed = result.manifest.get("seed", 0)
    path = out_dir / f"{artifact_stem(result.kind.value, seed)}.csv"

    manifest = dict(result.manifest)
    if extra:
        manifest.update(extra)
    axes = list(result.axes)

    with path.open("w", newline="", encoding="utf-8") as f:
        f.write(MANIFEST_PREFIX)
        f.write(json.dumps(manifest, sort_keys=True, default=_json_default))
        f.write("\n")
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow([*axes, *COLUMNS])
        for i in range(len(result)):
            writer.writerow(
                [_cell(result.axes[name][i]) for name in axes]
                + [
                    str(result.direction[i]),
                    _cell(result.mean_counts[i]),
                    _cell(result.shots[i]),
                    _cell(result.std_err[i]),
                ]
            )

    logger.info(f"Wrote {len(result)} point(s) to {path}")
    return path


def read_csv(path: str | Path) -> tuple[dict, dict[str, list]]:
    """Read a CSV written by write_csv back into (manifest, columns)."""
    path = Path(path)
    with path.open(newline="", encoding="utf-8") as f:
        first = f.readline()
        if not first.startswith(MANIFEST_PREFIX):
            raise ValueError(f"{path} has no manifest header")
        manifest = json.loads(first[len(MANIFEST_PREFIX) :])
        reader = csv.DictReader(f)
        columns: dict[str, list] = {name: [] for name in reader.fieldnames or []}
        for row in reader:
            for name, value in row.items():
                columns[name].append(value if name == "direction" else float(value))
    return manifest, columns


def write_report(report: dict, out_dir: str | Path, kind: str, seed: int) -> Path:
    """Write ``<kind>_<seed>.report.json``."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    path = out_dir / f"{artifact_stem(kind, seed)}.report.json"
    path.write_text(to_json(report) + "\n", encoding="utf-8")
    logger.info(f"Wrote report to {path}")
    return path
