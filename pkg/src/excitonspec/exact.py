"""Numerically exact statevector propagation; the oracle for variational runs.

The propagator realizes the time-ordered exponential of a time-dependent
Pauli-sum Hamiltonian by midpoint freezing: over each substep of length d,

    psi <- exp(-i H(t + d/2) d / hbar) psi

with the matrix exponential applied as a scaled Taylor action on the
statevector (no dense matrices).  For a constant Hamiltonian a substep is
exact up to the Taylor tolerance; for a time-dependent one the midpoint rule
is second-order accurate in the coefficient variation, which the optional
substep-halving convergence gate verifies a posteriori.  Unitarity comes for
free from exponentiating a Hermitian operator, so the recorded norms track
roundoff, not method error.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .constants import HBAR_EV_FS
from .exceptions import NumericError
from .grids import PropagationGrid
from .pauli import StateVector, pack_strings
from .trajectory import TimeDependentOperator

__all__ = [
    "DEFAULT_EXPM_TOL",
    "HERMITICITY_TOL",
    "ground_state",
    "PropagationResult",
    "propagate_array",
    "propagate",
]

#: Per-substep relative truncation of the Taylor series; near machine epsilon
#: so that norm drift over ~10^4 substeps stays below 1e-10.
DEFAULT_EXPM_TOL = 3e-15

#: Largest imaginary part tolerated in Hamiltonian Pauli coefficients.
HERMITICITY_TOL = 1e-12

#: Norm drift beyond this aborts the run as numerically broken.
NORM_DRIFT_LIMIT = 1e-8

#: The Taylor action is split so each factor has |alpha| * one_norm below this.
_MAX_ALPHA_NORM = 0.5


def ground_state(n_qubits: int) -> StateVector:
    """|0...0>, the shared electronic ground state of both encodings."""
    return StateVector.basis_state(n_qubits, 0)


@dataclass(frozen=True)
class PropagationResult:
    """Recorded snapshots of a (possibly batched) propagation.

    ``states[r, b]`` is batch member b at ``times_fs[r]``; ``norms`` are the
    corresponding vector norms.  The first record is the initial state.
    """

    times_fs: np.ndarray
    states: np.ndarray
    norms: np.ndarray

    @property
    def n_records(self) -> int:
        return self.times_fs.size

    @property
    def max_norm_drift(self) -> float:
        """Largest |norm(t) - norm(0)| over all records and batch members."""
        return float(np.max(np.abs(self.norms - self.norms[0])))

    def state_at(self, r: int, b: int = 0) -> np.ndarray:
        return self.states[r, b]


def propagate_array(
    h: TimeDependentOperator,
    psi0: np.ndarray,
    grid: PropagationGrid,
    *,
    check_hermitian: bool = True,
    expm_tol: float = DEFAULT_EXPM_TOL,
) -> PropagationResult:
    """Propagate one state (dim,) or a batch (B, dim) under ``h``.

    Batch members share the Hamiltonian evaluations and Taylor sweeps, which
    is how ensembles of prepared states are evolved in one pass.
    """
    psi = np.array(psi0, dtype=complex)
    if psi.ndim == 1:
        psi = psi[None, :]
    if psi.ndim != 2 or psi.shape[1] != (1 << h.n_qubits):
        raise ValueError(
            f"initial states must be (batch, {1 << h.n_qubits}), got {psi.shape}"
        )
    if check_hermitian and h.max_imag_coefficient() > HERMITICITY_TOL:
        raise ValueError(
            "non-Hermitian Hamiltonian: largest imaginary Pauli coefficient is "
            f"{h.max_imag_coefficient():.3e}"
        )
    perms, phases = pack_strings(h.strings, h.n_qubits)
    dt = grid.effective_substep_fs
    spr = grid.substeps_per_record
    times = grid.record_times_fs
    states = np.empty((grid.n_records, *psi.shape), dtype=complex)
    states[0] = psi
    alpha = -1.0j * dt / HBAR_EV_FS
    for r in range(grid.n_intervals):
        t_base = times[r]
        for s in range(spr):
            coeffs = h.evaluate(t_base + (s + 0.5) * dt)
            one_norm = float(np.sum(np.abs(coeffs)))
            n_split = max(1, math.ceil(abs(alpha) * one_norm / _MAX_ALPHA_NORM))
            for _ in range(n_split):
                psi = _kernels.expm_apply(
                    perms, phases, coeffs, psi, alpha / n_split, tol=expm_tol
                )
        states[r + 1] = psi
    norms = np.linalg.norm(states, axis=-1)
    result = PropagationResult(times_fs=times, states=states, norms=norms)
    if result.max_norm_drift > NORM_DRIFT_LIMIT * max(1.0, float(norms[0].max())):
        raise NumericError(
            f"norm drift {result.max_norm_drift:.3e} exceeds "
            f"{NORM_DRIFT_LIMIT:.0e}; propagation is numerically broken"
        )
    return result


def propagate(
    h: TimeDependentOperator,
    s0: StateVector,
    grid: PropagationGrid,
    *,
    check_convergence: bool = False,
    convergence_tol: float = 1e-8,
    check_hermitian: bool = True,
    expm_tol: float = DEFAULT_EXPM_TOL,
) -> list[tuple[float, StateVector]]:
    """Recorded (t, state) pairs of the time-ordered evolution of ``s0``.

    With ``check_convergence`` the run is repeated at half the substep and the
    recorded states must agree within ``convergence_tol``; disagreement means
    the substep under-resolves the Hamiltonian's time dependence.
    """
    if h.n_qubits != s0.n_qubits:
        raise ValueError(
            f"Hamiltonian on {h.n_qubits} qubits, state on {s0.n_qubits}"
        )
    run = propagate_array(
        h, s0.amplitudes, grid, check_hermitian=check_hermitian, expm_tol=expm_tol
    )
    if check_convergence:
        fine = propagate_array(
            h,
            s0.amplitudes,
            grid.halved(),
            check_hermitian=False,
            expm_tol=expm_tol,
        )
        deviation = float(
            np.max(np.linalg.norm(run.states - fine.states, axis=-1))
        )
        if deviation >= convergence_tol:
            raise NumericError(
                f"substep convergence gate: halving {grid.substep_fs} fs moves "
                f"recorded states by {deviation:.3e} "
                f"(allowed {convergence_tol:.0e})"
            )
    return [
        (float(t), StateVector(h.n_qubits, run.states[r, 0]))
        for r, t in enumerate(run.times_fs)
    ]
