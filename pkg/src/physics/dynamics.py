"""Lindblad evolution of the four-level density matrix.

Driven evolution lives in the frame co-rotating with the drive carrier, so
the trion energies carry the drive detuning. Undriven evolution uses the
mean-trion frame (zero detuning); the ground block is the same in both.
Pump windows are integrated in their own resonant frame and rotated back
into the mean-trion frame at the end of the window.
"""

import logging
import math
from collections.abc import Callable
from pathlib import Path

import numpy as np
from scipy import integrate, linalg

from ..models.data_models import (
    DOWN,
    TRION_DOWN,
    TRION_UP,
    UP,
    DensityMatrix,
    DomainError,
    IntegrationError,
    LindbladTerm,
    Pulse,
    PumpWindow,
    RotationResult,
    SelectionRules,
    SpinSystem,
    Trajectory,
)
from . import pulses as pulse_tools
from .levels import DriveField, bare_energies, ideal_selection_rules

logger = logging.getLogger(__name__)

# Pauli matrices on the ground manifold
PAULI_X = np.array([[0, 1], [1, 0]], dtype=complex)
PAULI_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
PAULI_Z = np.array([[1, 0], [0, -1]], dtype=complex)

# Adiabatic elimination is trusted only well above this Δ/Γ
VALIDITY_RATIO = 100.0
ROTATION_STEPS = 600
PUMP_OUTPUT_POINTS = 400

# Fourth-order commutator-free Magnus: Gauss nodes and exponent weights
CF4_NODES = (0.5 - math.sqrt(3) / 6, 0.5 + math.sqrt(3) / 6)
CF4_WEIGHTS = ((3 + 2 * math.sqrt(3)) / 12, (3 - 2 * math.sqrt(3)) / 12)

Drive = Pulse | DriveField | Callable[[float], DriveField] | None


def _projector(i: int, j: int) -> np.ndarray:
    op = np.zeros((4, 4), dtype=complex)
    op[i, j] = 1.0
    return op


def radiative_terms(sys: SpinSystem) -> list[LindbladTerm]:
    """Spontaneous emission of both trion states into both ground states."""
    b = sys.branching_down
    gamma = sys.gamma_sp
    # trion↓ prefers |⇓⟩ and trion↑ prefers |⇑⟩ by the same branching ratio
    return [
        LindbladTerm(_projector(DOWN, TRION_DOWN), gamma * b, "trion_down->down"),
        LindbladTerm(_projector(UP, TRION_DOWN), gamma * (1 - b), "trion_down->up"),
        LindbladTerm(_projector(DOWN, TRION_UP), gamma * (1 - b), "trion_up->down"),
        LindbladTerm(_projector(UP, TRION_UP), gamma * b, "trion_up->up"),
    ]


def _branching(sys: SpinSystem, ground: int, trion: int) -> float:
    same = (ground == DOWN) == (trion == TRION_DOWN)
    return sys.branching_down if same else 1.0 - sys.branching_down


class _Liouvillian:
    """Right-hand side dρ/dt for a time-dependent H and fixed collapse terms."""

    def __init__(
        self,
        h_static: np.ndarray,
        coupling: np.ndarray | None,
        rabi: Callable[[float], float] | None,
        terms: list[LindbladTerm],
    ):
        self.h_static = h_static
        self.coupling = coupling
        self.rabi = rabi
        self.jumps = [
            (math.sqrt(term.rate) * term.operator) for term in terms if term.rate > 0
        ]
        self.anti = sum(
            (j.conj().T @ j for j in self.jumps), np.zeros((4, 4), dtype=complex)
        )

    def hamiltonian(self, t: float) -> np.ndarray:
        if self.rabi is None or self.coupling is None:
            return self.h_static
        return self.h_static + 0.5 * self.rabi(t) * self.coupling

    def __call__(self, t: float, rho: np.ndarray) -> np.ndarray:
        h = self.hamiltonian(t)
        out = -1j * (h @ rho - rho @ h)
        for j in self.jumps:
            out += j @ rho @ j.conj().T
        out -= 0.5 * (self.anti @ rho + rho @ self.anti)
        return out


def _resolve_drive(
    sys: SpinSystem, rules: SelectionRules, drive: Drive
) -> tuple[np.ndarray, np.ndarray | None, Callable[[float], float] | None]:
    """Split a drive description into H_static, coupling and Ω(t)."""
    if drive is None:
        return np.diag(bare_energies(sys, 0.0)).astype(complex), None, None
    if isinstance(drive, Pulse):
        h0 = np.diag(bare_energies(sys, drive.detuning)).astype(complex)
        coupling = np.asarray(rules.for_polarization(drive.polarization))
        return h0, coupling, lambda t: float(drive.rabi(t))
    if isinstance(drive, DriveField):
        h0 = np.diag(bare_energies(sys, drive.detuning)).astype(complex)
        coupling = np.asarray(rules.for_polarization(drive.polarization))
        return h0, coupling, lambda t: drive.rabi
    if callable(drive):
        first = drive(0.0)
        h0 = np.diag(bare_energies(sys, first.detuning)).astype(complex)
        coupling = np.asarray(rules.for_polarization(first.polarization))
        return h0, coupling, lambda t: drive(t).rabi
    raise DomainError(f"Unsupported drive description: {type(drive).__name__}")


def _to_states(columns: np.ndarray) -> list[DensityMatrix]:
    states = []
    for column in columns.T:
        rho = column[:16].reshape(4, 4)
        states.append(DensityMatrix(0.5 * (rho + rho.conj().T)))
    return states


def _rk4(
    rhs: Callable[[float, np.ndarray], np.ndarray],
    y0: np.ndarray,
    t_span: tuple[float, float],
    step: float,
    t_eval: np.ndarray,
) -> np.ndarray:
    """Fixed-step classic Runge-Kutta, sampled at t_eval by stepping onto it."""
    out = np.empty((y0.size, t_eval.size), dtype=complex)
    y = y0.copy()
    t = t_span[0]
    for k, target in enumerate(t_eval):
        n = max(1, math.ceil((target - t) / step - 1e-9)) if target > t else 0
        h = (target - t) / n if n else 0.0
        for _ in range(n):
            k1 = rhs(t, y)
            k2 = rhs(t + h / 2, y + h / 2 * k1)
            k3 = rhs(t + h / 2, y + h / 2 * k2)
            k4 = rhs(t + h, y + h * k3)
            y = y + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
            t += h
        t = target
        out[:, k] = y
    return out


def _integrate(
    liouvillian: _Liouvillian,
    rho0: np.ndarray,
    t_span: tuple[float, float],
    tol: float,
    t_eval: np.ndarray,
    extra: Callable[[np.ndarray], np.ndarray] | None = None,
    n_extra: int = 0,
    fixed_step: float | None = None,
    max_step: float = np.inf,
) -> tuple[np.ndarray, float]:
    """Integrate the flattened ρ (plus optional accumulators)."""

    def rhs(t, y):
        rho = y[:16].reshape(4, 4)
        d_rho = liouvillian(t, rho).ravel()
        if n_extra:
            return np.concatenate([d_rho, extra(rho)])
        return d_rho

    y0 = np.concatenate([rho0.ravel(), np.zeros(n_extra, dtype=complex)])

    if fixed_step is not None:
        if fixed_step <= 0:
            raise DomainError(f"fixed_step must be > 0, got {fixed_step}")
        columns = _rk4(rhs, y0, t_span, fixed_step, t_eval)
        steps = (t_span[1] - t_span[0]) / fixed_step
        return columns, tol * max(1.0, steps)

    sol = integrate.solve_ivp(
        rhs,
        t_span,
        y0,
        method="RK45",
        t_eval=t_eval,
        rtol=tol,
        atol=tol * 1e-2,
        max_step=max_step,
    )
    if sol.status == -1:
        last_state = None
        last_time = None
        if sol.y.size:
            last_state = DensityMatrix(sol.y[:16, -1].reshape(4, 4))
            last_time = float(sol.t[-1])
        raise IntegrationError(
            f"Master-equation integration failed: {sol.message}",
            last_state=last_state,
            last_time=last_time,
        )
    # RK45 makes six function evaluations per accepted step
    steps = max(1.0, sol.nfev / 6.0)
    return sol.y, tol * steps


def evolve(
    rho0: DensityMatrix,
    sys: SpinSystem,
    drive: Drive,
    terms: list[LindbladTerm] | None,
    t_span: tuple[float, float],
    tol: float = 1e-8,
    *,
    rules: SelectionRules | None = None,
    t_eval=None,
    fixed_step: float | None = None,
    max_step: float | None = None,
) -> Trajectory:
    """Integrate dρ/dt = −i[H(t),ρ] + Σ D[L_k]ρ over t_span.

    ``drive`` is a Pulse, a constant DriveField, a callable t → DriveField or
    None (bare level structure in the mean-trion frame). A zero-amplitude
    DriveField keeps a free interval in a pulse's carrier frame.
    ``fixed_step`` switches to a fixed-step RK4 run for reproducibility
    comparisons.
    """
    if tol <= 0:
        raise DomainError(f"tol must be > 0, got {tol}")
    if not rho0.is_physical(atol=1e-9):
        raise DomainError("Initial density matrix is not physical")
    t0, t1 = float(t_span[0]), float(t_span[1])
    if t1 < t0:
        raise DomainError(f"t_span is reversed: {t_span}")

    rules = rules or ideal_selection_rules()
    h_static, coupling, rabi = _resolve_drive(sys, rules, drive)
    liouvillian = _Liouvillian(h_static, coupling, rabi, list(terms or []))

    times = np.array([t0, t1]) if t_eval is None else np.asarray(t_eval, dtype=float)
    if t1 == t0:
        return Trajectory(times=np.array([t0]), states=[DensityMatrix(rho0.rho.copy())])

    if max_step is None and isinstance(drive, Pulse):
        # Keep the adaptive stepper from jumping over a short pulse
        max_step = drive.fwhm / 4
    columns, error = _integrate(
        liouvillian,
        rho0.rho,
        (t0, t1),
        tol,
        times,
        fixed_step=fixed_step,
        max_step=np.inf if max_step is None else max_step,
    )
    states = _to_states(columns)
    logger.debug(f"evolve: {len(states)} output points, error estimate {error:.2e}")
    return Trajectory(times=times, states=states, error_estimate=error)


def _ground_hamiltonian(omega_l: float) -> np.ndarray:
    return np.diag([-omega_l / 2, omega_l / 2]).astype(complex)


def _precession_unitary(omega_l: float, tau: float) -> np.ndarray:
    """exp(−iH_g τ) for H_g = diag(−ω/2, ω/2)."""
    return np.diag([np.exp(0.5j * omega_l * tau), np.exp(-0.5j * omega_l * tau)])


def bare_propagator(sys: SpinSystem, detuning: float, tau: float) -> np.ndarray:
    """exp(−iH₀τ) of the undriven levels in the carrier frame at ``detuning``."""
    return np.diag(np.exp(-1j * bare_energies(sys, detuning) * tau))


def free_precession(
    rho: DensityMatrix,
    tau: float,
    omega_l: float,
    gamma_phi: float = 0.0,
    offset: float = 0.0,
    t1: float | None = None,
) -> DensityMatrix:
    """Analytic Larmor precession of the ground manifold about x.

    ``offset`` is a quasi-static detuning added to ω_L; ``gamma_phi`` and
    ``t1`` damp the coherence and the population difference. Trion entries
    are left untouched.
    """
    if tau < 0:
        raise DomainError(f"Precession time must be >= 0, got {tau}")
    out = rho.rho.copy()
    if tau == 0:
        return DensityMatrix(out)

    omega = omega_l + offset
    coherence_decay = np.exp(-gamma_phi * tau)
    if t1 is not None:
        coherence_decay *= np.exp(-tau / (2 * t1))
        ground_total = np.real(out[DOWN, DOWN] + out[UP, UP])
        difference = np.real(out[DOWN, DOWN] - out[UP, UP]) * np.exp(-tau / t1)
        out[DOWN, DOWN] = 0.5 * (ground_total + difference)
        out[UP, UP] = 0.5 * (ground_total - difference)

    out[DOWN, UP] = out[DOWN, UP] * np.exp(1j * omega * tau) * coherence_decay
    out[UP, DOWN] = np.conj(out[DOWN, UP])
    return DensityMatrix(out)


def _coherent_propagator(
    pulse: Pulse, sys: SpinSystem, rules: SelectionRules, steps: int
) -> np.ndarray:
    """Coherent propagator over the pulse window, fourth order in the step.

    Each step is two exponentials of the Hamiltonian sampled at the Gauss
    nodes; the exponentials of all steps are diagonalized in one batch.
    """
    h0 = np.diag(bare_energies(sys, pulse.detuning)).astype(complex)
    coupling = np.asarray(rules.for_polarization(pulse.polarization), dtype=complex)
    edges = np.linspace(pulse.start, pulse.end, steps + 1)
    dt = edges[1] - edges[0]
    early, late = (
        0.5 * pulse.rabi(edges[:-1] + node * dt)[:, None, None] * coupling
        for node in CF4_NODES
    )
    heavy, light = CF4_WEIGHTS
    # h0 enters each exponent with weight (heavy + light) = 1/2
    first = _batched_expm(0.5 * h0 + heavy * early + light * late, dt)
    second = _batched_expm(0.5 * h0 + light * early + heavy * late, dt)
    propagator = np.eye(4, dtype=complex)
    for step in second @ first:
        propagator = step @ propagator
    return propagator


def _batched_expm(h: np.ndarray, dt: float) -> np.ndarray:
    """exp(−i·dt·H) for a stack of Hermitian matrices."""
    values, vectors = np.linalg.eigh(h)
    phases = np.exp(-1j * dt * values)
    return (vectors * phases[..., None, :]) @ vectors.conj().swapaxes(-1, -2)


def _su2_axis_angle(unitary: np.ndarray) -> tuple[np.ndarray, float, np.ndarray]:
    """Lab-frame axis and angle of a 2x2 unitary (global phase dropped)."""
    su2 = unitary / np.sqrt(np.linalg.det(unitary))
    if np.real(np.trace(su2)) < 0:
        su2 = -su2
    cos_half = np.clip(np.real(np.trace(su2)) / 2, -1.0, 1.0)
    angle = 2.0 * float(np.arccos(cos_half))
    sin_half = np.sin(angle / 2)
    if sin_half < 1e-12:
        return np.array([0.0, 0.0, 1.0]), 0.0, su2
    n = [
        np.real(1j * np.trace(su2 @ p)) / (2 * sin_half)
        for p in (PAULI_X, PAULI_Y, PAULI_Z)
    ]
    # Bloch x = ⟨Z⟩, y = −⟨Y⟩, z = ⟨X⟩ in the ground basis
    axis = np.array([n[2], -n[1], n[0]])
    return axis / np.linalg.norm(axis), angle, su2


def effective_rotation(
    pulse: Pulse,
    sys: SpinSystem,
    rules: SelectionRules | None = None,
    steps: int = ROTATION_STEPS,
) -> RotationResult:
    """Reduce a detuned pulse to an SU(2) rotation of the ground manifold.

    The coherent four-level propagator over the pulse window is projected on
    the ground block, made unitary by polar decomposition and stripped of
    the free precession before and after the pulse centre. The returned
    unitary therefore acts instantaneously at ``pulse.center``. The full
    propagator, stripped the same way in the carrier frame, is kept as
    ``pulse_map`` so the small trion amplitude a pulse leaves is not lost.
    """
    rules = rules or ideal_selection_rules()
    nominal = pulse_tools.nominal_angle(pulse)
    valid = abs(pulse.detuning) >= VALIDITY_RATIO * sys.gamma_sp
    if not valid:
        logger.warning(
            f"Pulse detuning {pulse.detuning:.3e} rad/s is not large compared "
            f"with Γ={sys.gamma_sp:.3e}; effective rotation is approximate"
        )

    if pulse.peak_rabi == 0:
        return RotationResult(
            axis=np.array([0.0, 0.0, 1.0]),
            angle=0.0,
            unitary=np.eye(2, dtype=complex),
            residual_trion=0.0,
            nominal_angle=0.0,
            valid=valid,
        )

    full = _coherent_propagator(pulse, sys, rules, steps)
    ground = full[:2, :2]
    residual = float(np.max(np.sum(np.abs(full[2:, :2]) ** 2, axis=0)))
    polar_unitary, _ = linalg.polar(ground)

    omega = sys.hole_splitting
    before = _precession_unitary(omega, pulse.center - pulse.start)
    after = _precession_unitary(omega, pulse.end - pulse.center)
    rotation = after.conj().T @ polar_unitary @ before.conj().T
    pulse_map = (
        bare_propagator(sys, pulse.detuning, pulse.end - pulse.center).conj().T
        @ full
        @ bare_propagator(sys, pulse.detuning, pulse.center - pulse.start).conj().T
    )

    axis, angle, su2 = _su2_axis_angle(rotation)
    return RotationResult(
        axis=axis,
        angle=angle,
        unitary=su2,
        residual_trion=residual,
        nominal_angle=nominal,
        valid=valid,
        pulse_map=pulse_map,
    )


def apply_rotation(rho: DensityMatrix, rotation: RotationResult) -> DensityMatrix:
    """Apply a pulse instantaneously at its centre.

    Uses the four-level pulse map when the rotation carries one (the state
    must then be in that pulse's carrier frame), else the ground unitary.
    """
    if rotation.pulse_map is not None:
        full = rotation.pulse_map
    else:
        full = np.eye(4, dtype=complex)
        full[:2, :2] = rotation.unitary
    return DensityMatrix(full @ rho.rho @ full.conj().T)


def optical_pump(
    rho: DensityMatrix,
    window: PumpWindow,
    sys: SpinSystem,
    terms: list[LindbladTerm] | None = None,
    tol: float = 1e-8,
) -> tuple[DensityMatrix, float]:
    """Drive the target leg resonantly for one pump window.

    Integrated in the pump frame, where only the pump detuning survives on
    the excited level, then rotated back into the mean-trion frame. Returns the
    final state and the expected number of photons emitted on the readout
    leg (the target trion decaying into the other ground state).
    """
    ground, trion = window.target_transition
    if ground not in (DOWN, UP) or trion not in (TRION_DOWN, TRION_UP):
        raise DomainError(f"Invalid pump transition: {window.target_transition}")
    readout_ground = UP if ground == DOWN else DOWN

    h_pump = np.zeros((4, 4), dtype=complex)
    h_pump[trion, trion] = -window.detuning
    h_pump[ground, trion] = h_pump[trion, ground] = 0.5 * window.pump_rabi
    collapse = radiative_terms(sys) + list(terms or [])
    liouvillian = _Liouvillian(h_pump, None, None, collapse)

    readout_rate = sys.gamma_sp * _branching(sys, readout_ground, trion)

    def emission(r: np.ndarray) -> np.ndarray:
        return np.array([readout_rate * r[trion, trion]])

    times = np.linspace(0.0, window.duration, PUMP_OUTPUT_POINTS)
    columns, _ = _integrate(
        liouvillian,
        rho.rho,
        (0.0, window.duration),
        tol,
        times,
        extra=emission,
        n_extra=1,
    )
    final = columns[:16, -1].reshape(4, 4)
    photons = float(np.real(columns[16, -1]))

    # Back to the mean-trion frame; pump detuning only dresses the target trion
    energies = bare_energies(sys, 0.0)
    energies[trion] += window.detuning
    phase = np.exp(-1j * energies * window.duration)
    final = phase[:, None] * final * phase.conj()[None, :]
    final = 0.5 * (final + final.conj().T)
    return DensityMatrix(final), max(photons, 0.0)


def dump_trajectory(traj: Trajectory, path: str | Path) -> Path:
    """Write a trajectory as CSV: t_s then re/im of every ρ element."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    header = ["t_s"]
    header += [f"rho_re_{i}_{j}" for i in range(4) for j in range(4)]
    header += [f"rho_im_{i}_{j}" for i in range(4) for j in range(4)]
    rows = [
        np.concatenate([[t], np.real(s.rho).ravel(), np.imag(s.rho).ravel()])
        for t, s in zip(traj.times, traj.states, strict=True)
    ]
    np.savetxt(
        path, np.array(rows), delimiter=",", header=",".join(header), comments=""
    )
    logger.info(f"Trajectory written to {path}")
    return path
