"""McLachlan variational propagation of parametrized Pauli-rotation circuits.

The ansatz is a product of Pauli-string rotations acting on a fixed prepared
state,

    psi(theta) = exp(i theta_K R_K) ... exp(i theta_1 R_1) |init>,

with generators R_k chosen by :func:`build_ansatz`: per-qubit X and Z
rotations (single-qubit Y omitted; two-qubit generators keep Y so the tangent
space retains imaginary directions for real Hamiltonians) plus all two-qubit
letter pairs.  McLachlan's principle — minimize the distance between
d psi/dt and the Schroedinger flow over the tangent space — gives the
parameter ODE

    M theta_dot = V,   M_kl = Re <d_k psi | d_l psi>,
                       V_k  = Im <d_k psi | H | psi> / hbar,

assembled by :func:`mclachlan_system` and integrated here with classical RK4
(an explicit-Euler mode is kept for comparison).  The regularized solve
(M + eps I) theta_dot = V handles the rank-deficient M of an overcomplete
generator set; the per-step residual || M theta_dot - V || is recorded as the
primary health diagnostic.

Global phase.  Transition amplitudes are phase-sensitive, so the evolution
must transport the global phase, which a rotation circuit cannot always
represent.  :func:`evolve_variational` therefore augments the tangent basis
with the direction i*psi — equivalently, a virtual exp(i phi I) factor — and
solves for theta_dot and phi_dot jointly.  The identity column absorbs the
mean-energy (dynamical-phase) component of the flow, reducing to
phi_dot = -<H>/hbar whenever the physical tangents are orthogonal to i*psi,
and the physical parameters are freed to track the projective state.  Where
the span already contains i*psi (e.g. Z rotations acting on a basis-state
preparation) the regularized least-squares splits the phase velocity across
the redundant directions and the recorded state exp(i phi) psi(theta) is
unchanged — integrating the phase ODE on top of the unaugmented flow would
instead count the mean phase twice.  ``phase_mode="none"`` disables the
augmentation and reproduces the bare parameter flow: on deficient tangent
spaces it audibly degrades (the solve spends tangent budget chasing phase),
which is measured in the tests rather than worked around.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_factor, cho_solve

from . import _kernels
from .constants import HBAR_EV_FS
from .exceptions import NumericError
from .grids import PropagationGrid
from .pauli import PauliOperator, PauliString, StateVector, pack_operator, pack_strings
from .trajectory import TimeDependentOperator

__all__ = [
    "REGULARIZATION_SCALE",
    "RESIDUAL_ABORT",
    "Ansatz",
    "ThetaTrajectory",
    "build_ansatz",
    "ansatz_state",
    "tangent_state",
    "mclachlan_system",
    "solve_step",
    "evolve_variational",
]

#: eps = REGULARIZATION_SCALE * max(trace(M)/dim, 1) in the linear solve.
REGULARIZATION_SCALE = 1e-8

#: A step residual ||M theta_dot - V|| above this aborts the evolution.
RESIDUAL_ABORT = 0.1

_PAIR_LETTERS = ("X", "Y", "Z")


@dataclass(frozen=True)
class Ansatz:
    """Ordered rotation generators acting on a fixed prepared state."""

    n_qubits: int
    generators: tuple[PauliString, ...]
    initial_state: StateVector

    def __post_init__(self):
        if not self.generators:
            raise ValueError("ansatz needs at least one generator")
        if self.initial_state.n_qubits != self.n_qubits:
            raise ValueError(
                f"initial state on {self.initial_state.n_qubits} qubits, "
                f"ansatz on {self.n_qubits}"
            )
        object.__setattr__(self, "generators", tuple(self.generators))
        perms, phases = pack_strings(self.generators, self.n_qubits)
        perms.flags.writeable = False
        phases.flags.writeable = False
        object.__setattr__(self, "_perms", perms)
        object.__setattr__(self, "_phases", phases)

    @property
    def n_parameters(self) -> int:
        return len(self.generators)

    def _check_theta(self, theta) -> np.ndarray:
        theta = np.asarray(theta, dtype=float)
        if theta.shape != (self.n_parameters,):
            raise ValueError(
                f"expected {self.n_parameters} parameters, got shape {theta.shape}"
            )
        return theta


def build_ansatz(n_qubits: int, initial_state: StateVector | None = None) -> Ansatz:
    """Per-qubit {X, Z} rotations plus all 9 letter pairs on each qubit pair.

    Ordering is deterministic: singles by qubit then letter (X before Z);
    pairs by qubit pair (m < n), then first letter, then second.  Parameter
    counts are 2n + 9 n(n-1)/2: 2 for one qubit, 13 for two, 62 for four.
    """
    if initial_state is None:
        initial_state = StateVector.basis_state(n_qubits, 0)
    generators = []
    for m in range(1, n_qubits + 1):
        generators.append(PauliString.single(n_qubits, m, "X"))
        generators.append(PauliString.single(n_qubits, m, "Z"))
    for m in range(1, n_qubits + 1):
        for n in range(m + 1, n_qubits + 1):
            for p in _PAIR_LETTERS:
                for q in _PAIR_LETTERS:
                    letters = ["I"] * n_qubits
                    letters[m - 1] = p
                    letters[n - 1] = q
                    generators.append(PauliString(n_qubits, tuple(letters)))
    return Ansatz(n_qubits, tuple(generators), initial_state)


def ansatz_state(a: Ansatz, theta) -> StateVector:
    """psi(theta): rotations applied in order, k = 1 (rightmost factor) first."""
    theta = a._check_theta(theta)
    out = _kernels.exp_factors_apply(
        a._perms, a._phases, theta, a.initial_state.amplitudes
    )
    return StateVector(a.n_qubits, out)


def tangent_state(a: Ansatz, theta, k: int) -> StateVector:
    """d psi / d theta_k (unnormalized), for the 0-based generator index k."""
    theta = a._check_theta(theta)
    if not 0 <= k < a.n_parameters:
        raise ValueError(f"generator index {k} outside 0..{a.n_parameters - 1}")
    _, w = _kernels.tangent_sweep(
        a._perms, a._phases, theta, a.initial_state.amplitudes
    )
    return StateVector(a.n_qubits, w[k])


def _assemble(a, theta, h_perms, h_phases, h_coeffs, augment_phase):
    """(M, V) at one theta; optionally with the i*psi phase column appended."""
    psi, w = _kernels.tangent_sweep(
        a._perms, a._phases, theta, a.initial_state.amplitudes
    )
    if augment_phase:
        w = np.vstack([w, 1j * psi[None, :]])
    hpsi = _kernels.apply_terms(h_perms, h_phases, h_coeffs, psi)
    m = (w.conj() @ w.T).real
    v = (w.conj() @ hpsi).imag / HBAR_EV_FS
    return m, v


def _solve(m, v, eps=None):
    """Regularized solve with residual and a cheap condition indicator."""
    k = m.shape[0]
    if eps is None:
        eps = REGULARIZATION_SCALE * max(float(np.trace(m)) / k, 1.0)
    a = m + eps * np.eye(k)
    try:
        factor = cho_factor(a, lower=True, check_finite=False)
        theta_dot = cho_solve(factor, v, check_finite=False)
        diag = np.abs(np.diag(factor[0]))
        condition = float((diag.max() / diag.min()) ** 2)
    except (np.linalg.LinAlgError, ValueError):
        theta_dot, *_ = np.linalg.lstsq(a, v, rcond=None)
        condition = float("inf")
    residual = float(np.linalg.norm(m @ theta_dot - v))
    return theta_dot, residual, condition


def mclachlan_system(a: Ansatz, theta, h: PauliOperator) -> tuple[np.ndarray, np.ndarray]:
    """(M, V) of the parameter ODE at one point, from a Hermitian Hamiltonian."""
    theta = a._check_theta(theta)
    if h.n_qubits != a.n_qubits:
        raise ValueError(f"Hamiltonian on {h.n_qubits} qubits, ansatz on {a.n_qubits}")
    if not h.is_hermitian():
        raise ValueError("Hamiltonian has non-real Pauli coefficients")
    packed = pack_operator(h)
    return _assemble(
        a, theta, packed.perms, packed.phases, packed.coeffs, augment_phase=False
    )


def solve_step(m: np.ndarray, v: np.ndarray, eps: float | None = None) -> np.ndarray:
    """theta_dot from (M + eps I) theta_dot = V; eps defaults to the trace rule."""
    theta_dot, _, _ = _solve(np.asarray(m, float), np.asarray(v, float), eps)
    return theta_dot


@dataclass(frozen=True)
class ThetaTrajectory:
    """Parameters, states, and per-step health diagnostics of one evolution.

    ``states[r]`` is the recorded circuit state at ``times_fs[r]`` with the
    accumulated phase ``phases[r]`` already applied (that array is zero when
    the evolution ran with ``phase_mode="none"``).  Diagnostics are per
    integrator step: residual ``||M theta_dot - V||`` and a Cholesky-based
    condition indicator.
    """

    times_fs: np.ndarray
    thetas: np.ndarray
    states: np.ndarray
    phases: np.ndarray
    diag_times_fs: np.ndarray
    theta_norms: np.ndarray
    residuals: np.ndarray
    conditions: np.ndarray

    def __post_init__(self):
        for name in (
            "times_fs",
            "thetas",
            "states",
            "phases",
            "diag_times_fs",
            "theta_norms",
            "residuals",
            "conditions",
        ):
            arr = np.asarray(getattr(self, name))
            arr.flags.writeable = False
            object.__setattr__(self, name, arr)

    @property
    def n_records(self) -> int:
        return self.times_fs.size

    @property
    def max_residual(self) -> float:
        return float(self.residuals.max()) if self.residuals.size else 0.0

    def state_at(self, r: int) -> StateVector:
        n_qubits = int(np.log2(self.states.shape[1]))
        return StateVector(n_qubits, self.states[r])

    def diagnostics_text(self) -> str:
        """One line per integrator step: ``t theta_norm residual``."""
        lines = [
            f"{t:.6f} {tn:.9e} {res:.9e}"
            for t, tn, res in zip(
                self.diag_times_fs, self.theta_norms, self.residuals
            )
        ]
        return "\n".join(lines) + ("\n" if lines else "")


def evolve_variational(
    h: TimeDependentOperator,
    a: Ansatz,
    grid: PropagationGrid,
    *,
    integrator: str = "rk4",
    phase_mode: str = "joint",
    residual_abort: float = RESIDUAL_ABORT,
    regularization: float | None = None,
) -> ThetaTrajectory:
    """Integrate the McLachlan parameter ODE from theta(t0) = 0.

    ``integrator`` is ``"rk4"`` (default) or ``"euler"``.  ``phase_mode``
    selects how the global phase is carried (see the module docstring):
    ``"joint"`` (default) appends the i*psi direction to the tangent basis
    and solves for the phase velocity together with theta_dot; ``"none"``
    integrates the bare parameter flow with no phase variable.
    """
    if h.n_qubits != a.n_qubits:
        raise ValueError(f"Hamiltonian on {h.n_qubits} qubits, ansatz on {a.n_qubits}")
    if integrator not in ("rk4", "euler"):
        raise ValueError(f"integrator must be 'rk4' or 'euler', got {integrator!r}")
    if phase_mode not in ("joint", "none"):
        raise ValueError(f"phase_mode must be 'joint' or 'none', got {phase_mode!r}")
    augment = phase_mode == "joint"
    h_perms, h_phases = pack_strings(h.strings, h.n_qubits)
    times = grid.record_times_fs
    dt = grid.effective_substep_fs
    spr = grid.substeps_per_record
    n_params = a.n_parameters
    dim = a.initial_state.amplitudes.size

    def rhs(t, y):
        # y = theta in bare mode, (theta, phi) in joint mode; phi enters the
        # state only as a prefactor, so the assembly sees just the theta part.
        m, v = _assemble(a, y[:n_params], h_perms, h_phases, h.evaluate(t), augment)
        return _solve(m, v, regularization)

    thetas = np.empty((grid.n_records, n_params))
    states = np.empty((grid.n_records, dim), dtype=complex)
    phases = np.empty(grid.n_records)
    n_steps = grid.n_intervals * spr
    diag_times = np.empty(n_steps)
    theta_norms = np.empty(n_steps)
    residuals = np.empty(n_steps)
    conditions = np.empty(n_steps)

    y = np.zeros(n_params + 1 if augment else n_params)
    thetas[0] = 0.0
    phases[0] = 0.0
    states[0] = a.initial_state.amplitudes
    step = 0
    for r in range(grid.n_intervals):
        t_base = times[r]
        for s in range(spr):
            t = t_base + s * dt
            k1, residual, condition = rhs(t, y)
            diag_times[step] = t
            theta_norms[step] = float(np.linalg.norm(y[:n_params]))
            residuals[step] = residual
            conditions[step] = condition
            step += 1
            if residual > residual_abort:
                raise NumericError(
                    f"McLachlan solve diverged at t = {t:.4f} fs: residual "
                    f"{residual:.3e} exceeds {residual_abort:.3e}"
                )
            if integrator == "euler":
                y = y + dt * k1
            else:
                k2, _, _ = rhs(t + 0.5 * dt, y + 0.5 * dt * k1)
                k3, _, _ = rhs(t + 0.5 * dt, y + 0.5 * dt * k2)
                k4, _, _ = rhs(t + dt, y + dt * k3)
                y = y + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        theta = y[:n_params]
        phi = float(y[n_params]) if augment else 0.0
        thetas[r + 1] = theta
        phases[r + 1] = phi
        raw = _kernels.exp_factors_apply(
            a._perms, a._phases, theta, a.initial_state.amplitudes
        )
        states[r + 1] = np.exp(1.0j * phi) * raw if augment else raw
    return ThetaTrajectory(
        times_fs=times,
        thetas=thetas,
        states=states,
        phases=phases,
        diag_times_fs=diag_times,
        theta_norms=theta_norms,
        residuals=residuals,
        conditions=conditions,
    )
