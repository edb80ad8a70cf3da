"""Tests for the CSV/JSON writers and SVG plots."""

import json

import numpy as np
import pytest

from src.analysis.reports import build_report
from src.models.data_models import ExperimentConfig, ExperimentKind
from src.output.plots import plot_result
from src.output.writers import (
    MANIFEST_PREFIX,
    read_csv,
    to_json,
    write_csv,
    write_report,
)

from .conftest import PS


@pytest.fixture
def ramsey_result(quiet_runner, ramsey_config):
    return quiet_runner.run(ramsey_config)


class TestWriteCsv:
    """Tests for write_csv and read_csv."""

    def test_file_name_and_layout(self, ramsey_result, tmp_path):
        path = write_csv(ramsey_result, tmp_path)
        assert path.name == "ramsey_0.csv"

        lines = path.read_text(encoding="utf-8").splitlines()
        assert lines[0].startswith(MANIFEST_PREFIX)
        assert lines[1] == "tau,direction,mean_counts,shots,std_err"
        assert len(lines) == 2 + len(ramsey_result)

    def test_read_back(self, ramsey_result, tmp_path):
        path = write_csv(ramsey_result, tmp_path, extra={"note": "bench"})
        manifest, columns = read_csv(path)
        assert manifest["seed"] == 0
        assert manifest["note"] == "bench"
        assert manifest["config"]["kind"] == "ramsey"
        assert np.allclose(columns["tau"], ramsey_result.axes["tau"])
        assert np.allclose(columns["mean_counts"], ramsey_result.mean_counts)
        assert set(columns["direction"]) == {"up"}

    def test_deterministic(self, ramsey_result, tmp_path):
        first = write_csv(ramsey_result, tmp_path / "a").read_bytes()
        second = write_csv(ramsey_result, tmp_path / "b").read_bytes()
        assert first == second

    def test_missing_manifest(self, tmp_path):
        path = tmp_path / "plain.csv"
        path.write_text("tau,mean_counts\n0,1\n", encoding="utf-8")
        with pytest.raises(ValueError):
            read_csv(path)


class TestWriteReport:
    """Tests for write_report and to_json."""

    def test_report_json(self, ramsey_result, tmp_path):
        report = build_report(ramsey_result)
        path = write_report(report, tmp_path, "ramsey", 0)
        assert path.name == "ramsey_0.report.json"
        data = json.loads(path.read_text(encoding="utf-8"))
        assert data["kind"] == "ramsey"
        assert data["fits_converged"] is True
        assert data["frequency_hz"] == pytest.approx(report["frequency_hz"])

    def test_numpy_values_serialize(self):
        text = to_json({"a": np.arange(3), "b": np.float64(0.5)})
        assert json.loads(text) == {"a": [0, 1, 2], "b": 0.5}

    def test_unknown_type_rejected(self):
        with pytest.raises(TypeError):
            to_json({"a": object()})


class TestPlotResult:
    """Tests for plot_result."""

    def test_line_plot(self, ramsey_result, tmp_path):
        path = plot_result(ramsey_result, build_report(ramsey_result), tmp_path)
        assert path.name == "ramsey_0.svg"
        assert path.read_text(encoding="utf-8").lstrip().startswith("<?xml")

    def test_deterministic(self, ramsey_result, tmp_path):
        report = build_report(ramsey_result)
        first = plot_result(ramsey_result, report, tmp_path / "a").read_bytes()
        second = plot_result(ramsey_result, report, tmp_path / "b").read_bytes()
        assert first == second

    def test_heatmap(self, quiet_runner, tmp_path):
        cfg = ExperimentConfig(
            kind=ExperimentKind.BLOCH_MAP,
            sweep=[np.pi / 2, np.pi],
            inner=np.arange(0, 21, 2) * PS,
            draws=1,
            shot_noise=False,
        )
        result = quiet_runner.run(cfg)
        path = plot_result(result, build_report(result), tmp_path, title="map")
        assert path.stat().st_size > 0
