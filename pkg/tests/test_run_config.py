"""Tests for TOML run-config loading."""

import numpy as np
import pytest

from src.data import defaults
from src.data.run_config import load_run_config, parse_run_config
from src.models.data_models import (
    ChargeSpecies,
    ConfigError,
    ExperimentKind,
    PulseShape,
    ScanDirection,
)

from .conftest import NS

TWO_PI = 2 * np.pi


class TestDefaults:
    """Tests for the built-in configuration."""

    def test_no_file_gives_defaults(self):
        config = load_run_config(None)
        assert config.experiment is None
        assert config.run.seed == 0
        assert config.setup.noise.sigma_quasistatic == pytest.approx(
            defaults.SIGMA_QUASISTATIC
        )

    def test_round_trips_to_dict(self):
        data = load_run_config(None).to_dict()
        assert data["source"] is None
        assert data["run"]["plot"] is True
        assert data["setup"]["rules"]["sigma+"]["1-2"] == pytest.approx(
            [1 / np.sqrt(2), 0.0]
        )

    def test_selection_imbalance_in_manifest(self):
        config = parse_run_config({"system": {"selection_imbalance": 0.2}})
        rules = config.to_dict()["setup"]["rules"]
        assert rules["sigma+"]["1-2"] == pytest.approx([0.8 / np.sqrt(2), 0.0])
        assert rules["sigma+"]["0-3"] == pytest.approx([0.0, 0.8 / np.sqrt(2)])
        assert rules["H"] == {"0-2": [1.0, 0.0], "1-3": [1.0, 0.0]}


class TestStrictSchema:
    """Tests for unknown tables, keys and types."""

    def test_unknown_table(self):
        with pytest.raises(ConfigError, match="Unknown table"):
            parse_run_config({"laser": {"power": 1.0}})

    def test_unknown_key(self):
        with pytest.raises(ConfigError, match="Unknown key 'fwhm_ps'"):
            parse_run_config({"pulse": {"fwhm_ps": 3.67}})

    def test_wrong_type(self):
        with pytest.raises(ConfigError, match="must be a number"):
            parse_run_config({"system": {"b_field": "8 T"}})

    def test_bool_is_not_a_number(self):
        with pytest.raises(ConfigError):
            parse_run_config({"system": {"b_field": True}})

    def test_bad_enum(self):
        with pytest.raises(ConfigError, match="must be one of"):
            parse_run_config({"pulse": {"shape": "square"}})

    def test_negative_gamma_sp(self):
        with pytest.raises(ConfigError):
            parse_run_config({"system": {"gamma_sp": -1.0}})

    def test_zero_threads(self):
        with pytest.raises(ConfigError):
            parse_run_config({"run": {"threads": 0}})


class TestUnits:
    """Tests for unit conversion and channel switches."""

    def test_hz_keys_become_angular(self):
        config = parse_run_config(
            {
                "pulse": {"detuning_hz": 200e9},
                "feedback": {"gain_hz": 1e9, "drag_width_hz": 2e9},
            }
        )
        assert config.setup.pulse.detuning == pytest.approx(TWO_PI * 200e9)
        assert config.setup.feedback.gain == pytest.approx(TWO_PI * 1e9)
        assert config.setup.feedback.drag_width == pytest.approx(TWO_PI * 2e9)

    def test_t2_star_sets_quasistatic_width(self):
        config = parse_run_config({"noise": {"t2_star": 4 * NS}})
        assert config.setup.noise.sigma_quasistatic == pytest.approx(
            np.sqrt(2) / (4 * NS)
        )

    def test_zero_switches_channels_off(self):
        config = parse_run_config({"noise": {"t2_star": 0.0, "t2": 0.0, "t1": 0.0}})
        noise = config.setup.noise
        assert noise.sigma_quasistatic == 0.0
        assert noise.gamma_phi == 0.0
        assert noise.t1 is None

    def test_negative_time_rejected(self):
        with pytest.raises(ConfigError):
            parse_run_config({"noise": {"t2": -1.0}})

    def test_bias_modulation(self):
        config = parse_run_config({"noise": {"bias_modulation": [0.01, 1e6]}})
        assert config.setup.noise.bias_modulation == (0.01, 1e6)
        with pytest.raises(ConfigError):
            parse_run_config({"noise": {"bias_modulation": [0.01]}})

    def test_pulse_shape(self):
        config = parse_run_config({"pulse": {"shape": "sech"}})
        assert config.setup.pulse.shape == PulseShape.SECH


class TestExperimentTable:
    """Tests for the [experiment] table."""

    def test_parses_experiment(self):
        config = parse_run_config(
            {
                "experiment": {
                    "kind": "pump_scan",
                    "sweep": [-1e9, 0.0, 1e9],
                    "scan_direction": "both",
                    "charge_species": "electron",
                    "shot_noise": False,
                },
                "run": {"seed": 7, "threads": 2},
            }
        )
        cfg = config.experiment
        assert cfg.kind == ExperimentKind.PUMP_SCAN
        assert np.allclose(cfg.sweep, TWO_PI * np.array([-1e9, 0.0, 1e9]))
        assert cfg.scan_direction == ScanDirection.BOTH
        assert cfg.charge_species == ChargeSpecies.ELECTRON
        assert not cfg.shot_noise
        assert cfg.seed == 7
        assert cfg.threads == 2

    def test_needs_kind(self):
        with pytest.raises(ConfigError, match="needs a kind"):
            parse_run_config({"experiment": {"sweep": [0.0]}})

    def test_needs_sweep(self):
        with pytest.raises(ConfigError, match="needs a sweep"):
            parse_run_config({"experiment": {"kind": "ramsey"}})

    def test_integer_fields(self):
        with pytest.raises(ConfigError, match="must be an integer"):
            parse_run_config(
                {"experiment": {"kind": "ramsey", "sweep": [0.0], "draws": 1.5}}
            )


class TestLoadFile:
    """Tests for load_run_config on files."""

    def test_loads_file(self, tmp_path):
        path = tmp_path / "run.toml"
        path.write_text(
            "[experiment]\n"
            'kind = "ramsey"\n'
            "sweep = [0.0, 1e-12, 2e-12]\n"
            "\n"
            "[run]\n"
            "seed = 3\n"
            'out = "out"\n',
            encoding="utf-8",
        )
        config = load_run_config(path)
        assert config.source == str(path)
        assert config.experiment.seed == 3
        assert config.run.out == "out"

    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigError, match="not found"):
            load_run_config(tmp_path / "absent.toml")

    def test_invalid_toml(self, tmp_path):
        path = tmp_path / "broken.toml"
        path.write_text("[system\nb_field = 8\n", encoding="utf-8")
        with pytest.raises(ConfigError, match="Invalid TOML"):
            load_run_config(path)
