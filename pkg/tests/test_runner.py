"""Tests for the sweep engine: calibration, experiments and provenance."""

from dataclasses import replace

import numpy as np
import pytest

from src.analysis.reports import build_report, to_population
from src.data import defaults
from src.experiments.figures import DEFAULT_SWEEPS, FIGURES, get_figure
from src.experiments.runner import (
    ExperimentRunner,
    get_runner,
    ops_per_coherence,
    pulse_duration,
    run_t1,
)
from src.experiments.setup import Setup
from src.models.data_models import (
    CalibrationError,
    ChargeSpecies,
    ConfigError,
    DomainError,
    ExperimentConfig,
    ExperimentKind,
    ScanDirection,
    SequenceError,
)
from src.physics.noise import default_noise_model

from .conftest import NS, PS, US, ideal_pulses, quiet_noise


class TestCalibration:
    """Tests for calibrate_power and rotation_angle."""

    def test_half_pi_within_tolerance(self, runner):
        power = runner.calibrate_power(np.pi / 2)
        assert runner.rotation_angle(power) == pytest.approx(np.pi / 2, abs=1e-3)

    def test_pi_needs_more_power(self, runner):
        assert runner.calibrate_power(np.pi) > runner.calibrate_power(np.pi / 2)

    @pytest.mark.parametrize("target", [np.pi, 2 * np.pi])
    def test_angles_past_the_fold(self, runner, target):
        power = runner.calibrate_power(target)
        assert runner.rotation_angle(power) == pytest.approx(target, abs=1e-3)

    def test_two_pi_needs_more_power_than_pi(self, runner):
        assert runner.calibrate_power(2 * np.pi) > runner.calibrate_power(np.pi)

    def test_angle_grows_through_pi(self, runner):
        powers = np.arange(1, 81) * (2.5 / 80)
        angles = [runner.rotation_angle(p) for p in powers]
        assert np.all(np.diff(angles) > 0)
        assert angles[-1] > np.pi

    def test_zero_angle(self, runner):
        assert runner.calibrate_power(0.0) == 0.0

    def test_cached(self, runner):
        assert runner.calibrate_power(np.pi) == runner.calibrate_power(np.pi)

    def test_negative_angle(self, runner):
        with pytest.raises(DomainError):
            runner.calibrate_power(-1.0)

    def test_power_beyond_calibrated_range(self, runner):
        with pytest.raises(CalibrationError):
            runner.rotation_angle(17.0)


class TestPumpMap:
    """Tests for the runner's init and readout windows."""

    def test_init_window_prepares_down(self, runner):
        assert runner.initial_up < 0.01

    def test_readout_is_bright_for_up(self, runner):
        dark, bright = runner.readout_probability(np.array([0.0, 1.0]))
        assert dark == pytest.approx(0.0, abs=1e-6)
        assert bright > 0.9


class TestRamsey:
    """Tests for Ramsey sweeps."""

    def test_fringe_frequency_is_larmor(self, quiet_runner, ramsey_config):
        report = build_report(quiet_runner.run(ramsey_config))
        assert report["frequency_error"] < 1e-3
        assert report["frequency_hz"] == pytest.approx(30.2e9, rel=1e-3)

    def test_pulse_fidelity(self, quiet_runner, ramsey_config):
        report = build_report(quiet_runner.run(ramsey_config))
        assert report["fidelity"] == pytest.approx(0.945, abs=0.005)

    def test_starts_bright(self, ideal_runner, ramsey_config):
        result = ideal_runner.run(replace(ramsey_config, sweep=np.array([0.0])))
        assert to_population(result)[0] > 0.98

    def test_gaussian_envelope_recovers_t2star(self, runner):
        cfg = replace(get_figure("4A").config(), shot_noise=False)
        report = build_report(runner.run(cfg))
        assert report["envelope_model"]["model"] == "gaussian"
        assert report["t2star"] == pytest.approx(defaults.T2_STAR, rel=0.05)
        assert report["fits_converged"]

    def test_delay_beyond_period(self, runner):
        cfg = ExperimentConfig(kind=ExperimentKind.RAMSEY, sweep=[20 * NS], draws=1)
        with pytest.raises(SequenceError):
            runner.run(cfg)


class TestEcho:
    """Tests for the spin-echo engine and sweeps."""

    @pytest.mark.parametrize("scale", [0.1, 1.0, 10.0])
    def test_refocuses_quasistatic_noise(self, ideal_runner, scale):
        rng = np.random.default_rng(11)
        sigma = scale * defaults.SIGMA_QUASISTATIC
        omega = ideal_runner.setup.system.hole_splitting + rng.normal(0, sigma, 400)
        p_up = ideal_runner.echo_up(130 * NS, 0.0, omega, np.zeros(400), rng)
        assert p_up < 0.02

    def test_slow_correlated_noise_refocuses(self):
        # σ = 5e6 rad/s frozen over the whole sequence: T2* ≈ 0.3 µs
        noise = replace(quiet_noise(), gamma_phi=2.5e10, ou_correlation_time=1e-3)
        runner = ExperimentRunner(Setup(noise=noise, pulse_errors=ideal_pulses()))
        omega = np.full(400, runner.setup.system.hole_splitting)
        rng = np.random.default_rng(3)
        p_up = runner.echo_up(1 * US, 0.0, omega, np.zeros(400), rng)
        assert p_up < 0.02

    def test_fast_correlated_noise_matches_markovian_decay(self, ideal_runner):
        gamma = 1.0 / defaults.T2
        ou_noise = replace(quiet_noise(), gamma_phi=gamma, ou_correlation_time=1 * NS)
        markov_noise = replace(quiet_noise(), gamma_phi=gamma)
        omega = np.full(8000, ideal_runner.setup.system.hole_splitting)
        # Both see coherence exp(−γ_φ·2T) = exp(−1) at 2T = T2
        p_up = [
            ExperimentRunner(Setup(noise=noise, pulse_errors=ideal_pulses())).echo_up(
                defaults.T2, 0.0, omega, np.zeros(8000), np.random.default_rng(4)
            )
            for noise in (ou_noise, markov_noise)
        ]
        assert p_up[0] == pytest.approx(p_up[1], abs=0.02)

    def test_exponential_envelope_recovers_t2(self, runner):
        cfg = replace(get_figure("4F").config(), shot_noise=False, draws=200)
        report = build_report(runner.run(cfg))
        assert report["envelope_model"]["model"] == "exponential"
        assert report["t2"] == pytest.approx(defaults.T2, rel=0.05)

    def test_bias_modulation_shortens_t2(self, runner):
        cfg = replace(get_figure("4F").config(), shot_noise=False, draws=200)
        # 2e6 rad/s peak Larmor swing at 250 kHz is not refocused
        amplitude = 2e6 / defaults.LARMOR_BIAS_SLOPE
        noise = default_noise_model(bias_modulation=(amplitude, 0.25e6))
        modulated = ExperimentRunner(Setup(noise=noise))
        base = build_report(runner.run(cfg))["t2"]
        shortened = build_report(modulated.run(cfg))["t2"]
        assert shortened < 0.8 * base

    def test_fine_delay_fringes_at_larmor(self, quiet_runner):
        cfg = replace(get_figure("4E").config(), shot_noise=False, draws=1)
        report = build_report(quiet_runner.run(cfg))
        assert report["frequency_hz"] == pytest.approx(30.2e9, rel=1e-3)


class TestRabi:
    """Tests for Rabi sweeps."""

    def test_first_maximum_at_pi_power(self, runner):
        cfg = replace(get_figure("2C").config(), shot_noise=False)
        report = build_report(runner.run(cfg))
        step = cfg.sweep[1] - cfg.sweep[0]
        pi_power = runner.calibrate_power(np.pi)
        assert report["first_maximum_power"] == pytest.approx(pi_power, abs=step)


class TestBlochMap:
    """Tests for Bloch-map sweeps."""

    def test_pi_rows_do_not_depend_on_delay(self, runner):
        cfg = ExperimentConfig(
            kind=ExperimentKind.BLOCH_MAP,
            sweep=[0.0, np.pi / 2, np.pi],
            inner=np.arange(0, 101, 2) * PS,
            draws=200,
            shot_noise=False,
        )
        rows = {row["theta"]: row for row in build_report(runner.run(cfg))["rows"]}
        assert rows[0.0]["peak_to_peak"] < 1e-4
        assert rows[np.pi]["peak_to_peak"] < 0.05
        assert rows[np.pi / 2]["peak_to_peak"] > 0.5

    def test_needs_inner_axis(self, runner):
        cfg = ExperimentConfig(kind=ExperimentKind.BLOCH_MAP, sweep=[np.pi])
        with pytest.raises(ConfigError):
            runner.run(cfg)


class TestT1:
    """Tests for dark relaxation sweeps."""

    def test_preset_recovers_default_t1(self, runner):
        cfg = replace(DEFAULT_SWEEPS[ExperimentKind.T1].config(), shot_noise=False)
        report = build_report(runner.run(cfg))
        assert report["t1"] == pytest.approx(defaults.T1, rel=1e-3)
        assert report["t1_resolved"]
        assert report["fits_converged"]

    def test_preset_with_shot_noise(self, runner):
        cfg = DEFAULT_SWEEPS[ExperimentKind.T1].config(seed=2)
        report = build_report(runner.run(cfg))
        assert report["t1"] == pytest.approx(defaults.T1, rel=0.3)
        assert report["t1_resolved"]

    def test_short_sweep_is_not_converged(self, runner):
        cfg = ExperimentConfig(
            kind=ExperimentKind.T1,
            sweep=np.arange(25) * 0.2 * US,
            draws=1,
            shot_noise=False,
        )
        report = build_report(runner.run(cfg))
        assert not report["t1_resolved"]
        assert not report["fits_converged"]
        assert "t1_beyond_span" in report["relaxation"]["flags"]

    def test_recovers_short_t1(self):
        runner = ExperimentRunner(Setup(noise=default_noise_model(t1=1 * US)))
        cfg = ExperimentConfig(
            kind=ExperimentKind.T1,
            sweep=np.arange(25) * 0.2 * US,
            draws=1,
            shot_noise=False,
        )
        report = build_report(runner.run(cfg))
        assert report["t1"] == pytest.approx(1 * US, rel=1e-3)
        assert report["t1_resolved"]

    def test_without_relaxation_population_stays(self, quiet_runner):
        assert quiet_runner.t1_up(4 * US) == pytest.approx(quiet_runner.initial_up)


class TestLarmorBias:
    """Tests for bias-dependent Ramsey sweeps."""

    def test_bias_pair_anticorrelated_at_t2star(self, runner):
        cfg = replace(get_figure("4C").config(), shot_noise=False)
        report = build_report(runner.run(cfg))
        assert report["fringe_correlation"] < -0.5

    def test_frequency_monotone_in_bias(self, runner):
        cfg = replace(get_figure("4D").config(), shot_noise=False)
        report = build_report(runner.run(cfg))
        assert report["monotone"]
        frequencies = [row["frequency_hz"] for row in report["biases"]]
        assert frequencies == sorted(frequencies)


@pytest.fixture(scope="module")
def scan_reports(runner):
    """Noise-free reports of both absorption-scan presets, computed once."""
    out = {}
    for name in ("3C", "3D"):
        cfg = replace(get_figure(name).config(), shot_noise=False, draws=4000)
        out[name] = build_report(runner.run(cfg))
    return out


def _scan_metric(suppression: float) -> float:
    setup = Setup()
    setup = replace(setup, feedback=replace(setup.feedback, suppression=suppression))
    cfg = replace(get_figure("3C").config(), shot_noise=False, draws=500)
    return build_report(ExperimentRunner(setup).run(cfg))["hysteresis"]["metric"]


class TestPumpScan:
    """Tests for absorption scans with nuclear feedback."""

    def test_electron_scan_is_hysteretic(self, scan_reports):
        assert scan_reports["3C"]["hysteresis"]["detected"]

    def test_hole_scan_is_not_hysteretic(self, scan_reports):
        assert not scan_reports["3D"]["hysteresis"]["detected"]

    def test_hole_feedback_suppressed(self, scan_reports):
        electron = scan_reports["3C"]["hysteresis"]["metric"]
        hole = scan_reports["3D"]["hysteresis"]["metric"]
        assert hole < electron / 30

    def test_metric_falls_with_suppression(self):
        metrics = [_scan_metric(kappa) for kappa in (1.0, 3.0, 10.0, 30.0)]
        assert all(b <= a for a, b in zip(metrics, metrics[1:]))
        assert metrics[-1] < metrics[0] / 30

    def test_hole_linewidth(self, scan_reports):
        profiles = scan_reports["3D"]["profiles"]
        for profile in profiles.values():
            assert profile["fwhm_hz"] == pytest.approx(6.7e9, rel=0.05)
        up, down = profiles["up"]["fwhm_hz"], profiles["down"]["fwhm_hz"]
        assert up == pytest.approx(down, rel=0.02)

    def test_feedback_disabled_removes_hysteresis(self):
        setup = Setup()
        setup = replace(setup, feedback=replace(setup.feedback, enabled=False))
        cfg = replace(
            get_figure("3C").config(),
            sweep=get_figure("3C").sweep[::4],
            shot_noise=False,
            draws=500,
        )
        report = build_report(ExperimentRunner(setup).run(cfg))
        assert report["hysteresis"]["metric"] == pytest.approx(0.0, abs=1e-12)


@pytest.fixture(scope="module")
def ramsey_reports(runner):
    """Noise-free reports of both feedback Ramsey presets, computed once."""
    out = {}
    for name in ("3A", "3B"):
        cfg = replace(get_figure(name).config(), shot_noise=False)
        out[name] = build_report(runner.run(cfg))
    return out


class TestHysteresisRamsey:
    """Tests for Ramsey scans with the Overhauser state carried."""

    def test_electron_detected(self, ramsey_reports):
        assert ramsey_reports["3A"]["hysteresis"]["detected"]

    def test_hole_not_detected(self, ramsey_reports):
        assert not ramsey_reports["3B"]["hysteresis"]["detected"]

    def test_hole_feedback_suppressed(self, ramsey_reports):
        electron = ramsey_reports["3A"]["hysteresis"]["metric"]
        hole = ramsey_reports["3B"]["hysteresis"]["metric"]
        assert hole < electron / 30

    def test_directions_share_draws(self):
        setup = Setup()
        setup = replace(setup, feedback=replace(setup.feedback, enabled=False))
        cfg = replace(get_figure("3A").config(), shot_noise=False, draws=100)
        report = build_report(ExperimentRunner(setup).run(cfg))
        assert report["hysteresis"]["metric"] == 0.0

    def test_single_direction_rejected(self, runner):
        cfg = replace(get_figure("3B").config(), scan_direction=ScanDirection.UP)
        with pytest.raises(ConfigError):
            runner.run(cfg)


class TestDeterminism:
    """Tests for seeding and threading."""

    def _config(self, **changes):
        cfg = ExperimentConfig(
            kind=ExperimentKind.RAMSEY,
            sweep=np.arange(0, 41) * PS,
            draws=50,
            seed=42,
        )
        return replace(cfg, **changes)

    def test_same_seed_same_counts(self, runner):
        first = runner.run(self._config())
        second = runner.run(self._config())
        assert np.array_equal(first.mean_counts, second.mean_counts)

    @pytest.mark.parametrize("threads", [4, 8])
    def test_threads_do_not_change_results(self, runner, threads):
        serial = runner.run(self._config(threads=1))
        threaded = runner.run(self._config(threads=threads))
        assert np.array_equal(serial.mean_counts, threaded.mean_counts)

    def test_different_seed_different_counts(self, runner):
        first = runner.run(self._config())
        other = runner.run(self._config(seed=43))
        assert not np.array_equal(first.mean_counts, other.mean_counts)


class TestEntryPoints:
    """Tests for get_runner, the run_* functions and point callbacks."""

    def test_default_runner_is_shared(self):
        assert get_runner() is get_runner()

    def test_custom_setup_gets_own_runner(self):
        assert get_runner(Setup(noise=quiet_noise())) is not get_runner()

    def test_run_function_sets_kind(self, ramsey_config):
        cfg = replace(ramsey_config, sweep=np.array([0.0, 1 * US]))
        result = run_t1(cfg, Setup(noise=quiet_noise()))
        assert result.kind == ExperimentKind.T1
        assert np.allclose(result.axes["wait"], [0.0, 1 * US])
        assert result.probability[0] == pytest.approx(result.probability[1])

    def test_point_callback(self, quiet_runner, ramsey_config):
        seen = []
        quiet_runner.set_point_callback(lambda d, i, p: seen.append((d, i)))
        try:
            quiet_runner.run(replace(ramsey_config, sweep=np.arange(5) * PS))
        finally:
            quiet_runner.set_point_callback(None)
        assert seen == [("up", i) for i in range(5)]


class TestProvenance:
    """Tests for sequences, violations and the manifest."""

    @pytest.mark.parametrize("name", sorted(FIGURES))
    def test_presets_have_valid_sequences(self, runner, name):
        assert runner.violations(get_figure(name).config()) == []

    def test_unknown_figure(self):
        with pytest.raises(ConfigError):
            get_figure("9Z")

    def test_manifest_contents(self, runner, ramsey_config):
        manifest = runner.run(ramsey_config).manifest
        assert manifest["seed"] == 0
        assert manifest["config"]["kind"] == "ramsey"
        assert manifest["larmor_frequency"] == pytest.approx(
            runner.setup.system.hole_splitting
        )
        zero, one = manifest["count_scale"]
        assert one > zero
        assert len(manifest["sequence"]["events"]) == 4

    def test_species_override(self):
        cfg = get_figure("3D").config(species=ChargeSpecies.ELECTRON)
        assert cfg.charge_species == ChargeSpecies.ELECTRON


class TestOpsPerCoherence:
    """Tests for pulse_duration and ops_per_coherence."""

    def test_pi_pulse_fits_gate_budget(self, runner):
        assert pulse_duration(runner) <= 20 * PS

    def test_operations_per_t2(self, runner):
        ops = ops_per_coherence(runner=runner)
        assert ops["pi_within_budget"]
        assert ops["operations"] >= 5e4
