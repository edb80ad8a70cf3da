#!/usr/bin/env python3
"""Quantum dot spin qubit simulator - Main entry point.

Usage:
    qdot-sim run ramsey --seed 42                  # One experiment
    qdot-sim run echo-decay --config my.toml       # With a config file
    qdot-sim reproduce 4F                          # One figure preset
    qdot-sim validate --config my.toml             # Check a config
"""

import argparse
import logging
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from .analysis.reports import build_report
from .data.run_config import RunConfig, load_run_config
from .experiments.figures import DEFAULT_SWEEPS, FigurePreset, get_figure
from .experiments.runner import ExperimentRunner, ops_per_coherence
from .models.data_models import (
    DOWN,
    UP,
    ChargeSpecies,
    ConfigError,
    DensityMatrix,
    DomainError,
    ExperimentConfig,
    ExperimentKind,
    Pulse,
    RangeError,
    ScanDirection,
    SequenceError,
    SimulationError,
)
from .output.plots import plot_result
from .output.writers import to_json, write_csv, write_report
from .physics.dynamics import dump_trajectory, evolve, optical_pump, radiative_terms

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_RUNTIME = 2
EXIT_FIT = 3

TRAJECTORY_POINTS = 201


def print_report_summary(report: dict, paths: list[Path]) -> None:
    """Print the headline numbers of a run."""
    print("\n" + "=" * 70)
    print(f"EXPERIMENT: {report['kind']}  (seed {report['manifest']['seed']})")
    print(f"Directions: {', '.join(report['directions'])}")
    print("=" * 70)

    headline = (
        ("frequency_hz", "Fringe frequency", "{:.6e} Hz"),
        ("larmor_hz", "Larmor frequency", "{:.6e} Hz"),
        ("visibility", "Visibility", "{:.4f}"),
        ("fidelity", "Pulse fidelity", "{:.4f}"),
        ("t2star", "T2*", "{:.4e} s"),
        ("t2", "T2", "{:.4e} s"),
        ("t1", "T1", "{:.4e} s"),
        ("first_maximum_power", "First Rabi maximum", "{:.3f} (relative power)"),
        ("fringe_correlation", "Fringe correlation", "{:+.3f}"),
    )
    for key, label, fmt in headline:
        if key in report and report[key] is not None:
            print(f"  {label:<22} {fmt.format(report[key])}")

    if "envelope_model" in report:
        selection = report["envelope_model"]
        model, ratio = selection["model"], selection["ratio"]
        print(f"  {'Envelope model':<22} {model} (ratio {ratio:.3f})")

    for direction, profile in report.get("profiles", {}).items():
        label = f"FWHM ({direction})"
        print(f"  {label:<22} {profile['fwhm_hz']:.4e} Hz")

    for direction, fringe in report.get("fringes", {}).items():
        label = f"Residual ({direction})"
        print(f"  {label:<22} {fringe['relative_residual']:.4f}")

    if "hysteresis" in report:
        hysteresis = report["hysteresis"]
        verdict = "DETECTED" if hysteresis["detected"] else "none"
        print(
            f"  {'Hysteresis':<22} {verdict} (metric {hysteresis['metric']:.4f}, "
            f"threshold {hysteresis['threshold']:.4f})"
        )

    if "ops_per_coherence" in report:
        ops = report["ops_per_coherence"]
        print(f"  {'π pulse duration':<22} {ops['pi_duration']:.3e} s")
        print(f"  {'Operations per T2':<22} {ops['operations']:.3e}")

    for error in report.get("errors", []):
        print(f"  FIT ERROR: {error}")
    print(f"\n  Fits converged: {report['fits_converged']}")

    print("\n--- FILES ---")
    for path in paths:
        print(f"  {path}")
    print("=" * 70)


def on_point(direction: str, index: int, probability: float) -> None:
    """Callback when a sweep point is measured."""
    print(f"  [{direction:>4}] point {index:4d}  p = {probability:.5f}")


def _kind(name: str) -> ExperimentKind:
    try:
        return ExperimentKind(name.replace("-", "_").lower())
    except ValueError:
        known = ", ".join(k.value.replace("_", "-") for k in ExperimentKind)
        raise ConfigError(f"Unknown experiment '{name}' (known: {known})") from None


def _with_overrides(
    cfg: ExperimentConfig, args, run_config: RunConfig
) -> ExperimentConfig:
    settings = run_config.run
    changes = {
        "seed": settings.seed if args.seed is None else args.seed,
        "threads": settings.threads if args.threads is None else args.threads,
    }
    if args.shots is not None:
        changes["shots_per_point"] = args.shots
    if args.species is not None:
        changes["charge_species"] = ChargeSpecies(args.species)
    if args.direction is not None:
        changes["scan_direction"] = ScanDirection(args.direction)
    return replace(cfg, **changes)


def _dump_first_pulse(
    runner: ExperimentRunner, cfg: ExperimentConfig, path: Path
) -> Path:
    """Integrate the first rotation pulse of the first point and write ρ(t)."""
    inner = None if cfg.inner is None else float(cfg.inner[0])
    sequence = runner.sequence_for(
        cfg, float(cfg.sweep[0]), inner, builder=runner.builder
    )
    pulses = [event for event in sequence.events if isinstance(event, Pulse)]
    if not pulses:
        raise SequenceError(f"{cfg.kind.value} has no rotation pulse to trace")
    pulse = pulses[0]
    setup = runner.setup
    trajectory = evolve(
        DensityMatrix.pure(DOWN),
        setup.system,
        pulse,
        radiative_terms(setup.system),
        (pulse.start, pulse.end),
        rules=setup.rules,
        t_eval=np.linspace(pulse.start, pulse.end, TRAJECTORY_POINTS),
    )
    return dump_trajectory(trajectory, path)


def execute(
    cfg: ExperimentConfig,
    run_config: RunConfig,
    args,
    title: str | None = None,
) -> int:
    """Run one experiment and write its CSV, report and plot."""
    out_dir = Path(args.out or run_config.run.out)
    plot = args.plot if args.plot is not None else run_config.run.plot
    runner = ExperimentRunner(run_config.setup)
    if args.verbose:
        runner.set_point_callback(on_point)

    logger.info(f"Running {cfg.kind.value} with seed {cfg.seed}")
    result = runner.run(cfg)

    extras = {"run": {"config_source": run_config.source}}
    if cfg.kind == ExperimentKind.ECHO_DECAY:
        extras["ops_per_coherence"] = ops_per_coherence(runner=runner)
    report = build_report(result, extras)

    paths = [
        write_csv(result, out_dir, extras),
        write_report(report, out_dir, cfg.kind.value, cfg.seed),
    ]
    if plot:
        paths.append(plot_result(result, report, out_dir, title=title))
    if args.dump_trajectory:
        paths.append(_dump_first_pulse(runner, cfg, Path(args.dump_trajectory)))

    print_report_summary(report, paths)

    if args.require_fit and not report["fits_converged"]:
        print("Error: fit did not converge (--require-fit)", file=sys.stderr)
        return EXIT_FIT
    return EXIT_OK


def cmd_run(args) -> int:
    kind = _kind(args.kind)
    run_config = load_run_config(args.config)
    if run_config.experiment is not None and run_config.experiment.kind == kind:
        cfg = run_config.experiment
    else:
        cfg = DEFAULT_SWEEPS[kind].config()
    return execute(_with_overrides(cfg, args, run_config), run_config, args)


def cmd_reproduce(args) -> int:
    preset: FigurePreset = get_figure(args.figure)
    run_config = load_run_config(args.config)
    cfg = _with_overrides(preset.config(), args, run_config)
    return execute(cfg, run_config, args, title=f"{preset.figure}: {preset.title}")


def cmd_validate(args) -> int:
    run_config = load_run_config(args.config)
    runner = ExperimentRunner(run_config.setup)

    if run_config.experiment is not None:
        configs = [run_config.experiment]
    else:
        configs = [preset.config() for preset in DEFAULT_SWEEPS.values()]
    messages = []
    for cfg in configs:
        messages.extend(runner.violations(cfg))

    # Smoke evolution: one pump window from |⇑⟩
    setup = run_config.setup
    rho, photons = optical_pump(DensityMatrix.pure(UP), setup.pump, setup.system)
    if not rho.is_physical(atol=1e-6):
        messages.append("pump evolution left the physical state space")
    pumped = float(rho.populations[DOWN])

    print(to_json(run_config.to_dict()))
    print(
        f"\nSmoke evolution: |⇓⟩ population {pumped:.4f} after one pump window, "
        f"{photons:.3f} photons"
    )

    if messages:
        for message in messages:
            print(f"Violation: {message}", file=sys.stderr)
        return EXIT_CONFIG
    print("Config OK")
    return EXIT_OK


def _add_run_options(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", metavar="TOML", help="Run configuration file")
    parser.add_argument("--seed", type=int, help="Master seed")
    parser.add_argument("--out", metavar="DIR", help="Output directory")
    parser.add_argument("--shots", type=int, help="Shots per sweep point")
    parser.add_argument("--threads", type=int, help="Threads for non-feedback sweeps")
    parser.add_argument(
        "--plot",
        action=argparse.BooleanOptionalAction,
        default=None,
        help="Write an SVG plot (default: from config, else on)",
    )
    parser.add_argument("--species", choices=[s.value for s in ChargeSpecies])
    parser.add_argument("--direction", choices=[d.value for d in ScanDirection])
    parser.add_argument(
        "--require-fit",
        action="store_true",
        help="Exit with status 3 when a fit does not converge",
    )
    parser.add_argument(
        "--dump-trajectory",
        metavar="CSV",
        help="Also write ρ(t) through the first rotation pulse to this CSV",
    )


def build_parser() -> argparse.ArgumentParser:
    arg_parser = argparse.ArgumentParser(
        prog="qdot-sim",
        description="Quantum dot hole spin qubit simulator",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="""
Examples:
  qdot-sim run ramsey --seed 42
  qdot-sim run pump-scan --species electron --direction both
  qdot-sim reproduce 4F
  qdot-sim validate --config my.toml
        """,
    )
    arg_parser.add_argument(
        "-v", "--verbose", action="store_true", help="Debug logging"
    )
    commands = arg_parser.add_subparsers(dest="command", required=True)

    run = commands.add_parser("run", help="Run one experiment")
    run.add_argument("kind", help="Experiment, e.g. ramsey, echo-decay, pump-scan")
    _add_run_options(run)
    run.set_defaults(handler=cmd_run)

    reproduce = commands.add_parser("reproduce", help="Run a figure preset")
    reproduce.add_argument("figure", help="Figure name, e.g. 2D, 3B, 4F")
    _add_run_options(reproduce)
    reproduce.set_defaults(handler=cmd_reproduce)

    validate = commands.add_parser("validate", help="Check a config without running")
    validate.add_argument("--config", metavar="TOML", help="Run configuration file")
    validate.set_defaults(handler=cmd_validate)
    return arg_parser


def main(argv: list[str] | None = None) -> int:
    """Main entry point."""
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(asctime)s [%(levelname)s] %(name)s: %(message)s",
        stream=sys.stderr,
    )

    try:
        return args.handler(args)
    except (ConfigError, SequenceError, RangeError, DomainError) as e:
        print(f"Error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except SimulationError as e:
        print(f"Error: {e}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
