"""Dipole-dipole time-correlation functions assembled from engine evolutions.

The direct route decomposes the t = 0 dipole over Pauli terms, evolves each
prepared state A_j|G> once (states are shared across Cartesian components
through :class:`EvolutionCache`), and reads the amplitudes <G| B_i |psi_j(t)>
either exactly from the statevector or through a simulated ancilla
(Hadamard-test) circuit.  The small-lambda route instead evolves the two
unitary preparations exp(+/- i lambda mu(0))|G> and combines four overlaps
into an estimator with O(lambda^2) bias.  The bath is classical throughout:
operator coefficients are evaluated at the readout time, never
Heisenberg-evolved.

An optional rotating frame subtracts E_bar * (I - |G><G|) from the
Hamiltonian before evolving and restores the phase on the assembled TCF with
exp(-i E_bar (t - t0) / hbar).  The transform is an exact identity whenever
the ground state is decoupled from the excited manifold (the site-basis
encoding, and single-chromophore aggregates); with ground-to-excited
couplings in the Hamiltonian it is an approximation and is left off by
default.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path
from typing import Hashable, Sequence

import numpy as np

from . import _kernels
from .constants import HBAR_EV_FS
from .exact import propagate_array
from .exceptions import FileFormatError
from .exciton import encode_projector
from .grids import PropagationGrid
from .pauli import (
    PauliOperator,
    PauliString,
    StateVector,
    apply_operator,
    inner,
    pack_operator,
    pack_strings,
)
from .trajectory import TimeDependentOperator
from .vqa import build_ansatz, evolve_variational

__all__ = [
    "COMPONENT_TAGS",
    "TcfSeries",
    "EvolutionCache",
    "excited_projector",
    "transition_amplitude_direct",
    "transition_amplitude_hadamard",
    "tcf_direct",
    "tcf_small_lambda",
    "isotropic_average",
    "ensemble_average",
    "relative_difference",
    "save_tcf",
    "load_tcf",
]

COMPONENT_TAGS = ("x", "y", "z", "iso")

_ENGINES = ("exact", "vqa")

#: Split exp(i alpha mu) applications so each Taylor argument stays small.
_MAX_EXP_NORM = 0.5


@dataclass(frozen=True)
class TcfSeries:
    """One correlation function on a uniform time grid.

    ``component`` tags the Cartesian direction (or ``"iso"`` for the
    isotropic average); ``ensemble_size`` counts the bath realizations
    already averaged into ``values``.
    """

    times_fs: np.ndarray
    values: np.ndarray
    component: str
    ensemble_size: int = 1

    def __post_init__(self):
        times = np.array(self.times_fs, dtype=float)
        values = np.array(self.values, dtype=complex)
        if times.ndim != 1 or times.size == 0:
            raise ValueError("times must be a non-empty 1-D array")
        if values.shape != times.shape:
            raise ValueError(f"values shape {values.shape} != times shape {times.shape}")
        if times.size > 1:
            steps = np.diff(times)
            if steps[0] <= 0 or not np.allclose(
                steps, steps[0], rtol=0.0, atol=1e-9 * max(1.0, abs(times[-1]))
            ):
                raise ValueError("times must be uniformly increasing")
        if not np.all(np.isfinite(values.view(float))):
            raise ValueError("values must be finite")
        if self.component not in COMPONENT_TAGS:
            raise ValueError(
                f"component must be one of {COMPONENT_TAGS}, got {self.component!r}"
            )
        if self.ensemble_size < 1:
            raise ValueError("ensemble_size must be at least 1")
        times.flags.writeable = False
        values.flags.writeable = False
        object.__setattr__(self, "times_fs", times)
        object.__setattr__(self, "values", values)

    @property
    def n_times(self) -> int:
        return self.times_fs.size

    @property
    def dt_fs(self) -> float:
        return float(self.times_fs[1] - self.times_fs[0]) if self.n_times > 1 else 0.0


def excited_projector(n_qubits: int) -> PauliOperator:
    """I - |0...0><0...0|: projector onto everything but the shared ground."""
    identity = PauliOperator.from_terms(
        n_qubits, [(1.0, PauliString.identity(n_qubits))]
    )
    return identity - encode_projector(0, 0, n_qubits)


def _ground_image(string: PauliString, n_qubits: int) -> tuple[int, complex]:
    """(mask, phase) such that S|0...0> = phase * |mask>."""
    perms, phases = pack_strings([string], n_qubits)
    e0 = np.zeros(1 << n_qubits, dtype=complex)
    e0[0] = 1.0
    vec = _kernels.apply_terms(perms, phases, np.ones(1, dtype=complex), e0)
    mask = int(np.flatnonzero(vec)[0])
    return mask, complex(vec[mask])


def _split_exp_apply(perms, phases, coeffs, psi, alpha):
    """exp(alpha * op) psi with the argument split into small Taylor steps."""
    one_norm = float(np.sum(np.abs(coeffs)))
    n_split = max(1, math.ceil(abs(alpha) * one_norm / _MAX_EXP_NORM))
    out = psi
    for _ in range(n_split):
        out = _kernels.expm_apply(perms, phases, coeffs, out, alpha / n_split)
    return out


class EvolutionCache:
    """Evolved preparations shared across TCF components.

    All evolutions run under one Hamiltonian, grid, and engine; requests are
    keyed so repeated preparations (the same Pauli mask appearing in several
    dipole components, say) are propagated once.  The exact engine batches
    basis-state requests into a single propagation; the variational engine
    runs one ansatz per preparation.
    """

    def __init__(
        self,
        h: TimeDependentOperator,
        grid: PropagationGrid,
        engine: str = "exact",
        *,
        engine_options: dict | None = None,
        rotating_frame_ev: float | None = None,
    ):
        if engine not in _ENGINES:
            raise ValueError(f"engine must be one of {_ENGINES}, got {engine!r}")
        if rotating_frame_ev is not None:
            shift = (-float(rotating_frame_ev)) * excited_projector(h.n_qubits)
            h = h.add_constant(shift)
        self.h = h
        self.grid = grid
        self.engine = engine
        self.engine_options = dict(engine_options or {})
        self.rotating_frame_ev = (
            None if rotating_frame_ev is None else float(rotating_frame_ev)
        )
        self._evolved: dict[Hashable, np.ndarray] = {}

    @property
    def n_qubits(self) -> int:
        return self.h.n_qubits

    @property
    def record_times_fs(self) -> np.ndarray:
        return self.grid.record_times_fs

    def _run_single(self, amplitudes: np.ndarray) -> np.ndarray:
        if self.engine == "exact":
            result = propagate_array(
                self.h, amplitudes[None, :], self.grid, **self.engine_options
            )
            return result.states[:, 0, :]
        prepared = StateVector(self.n_qubits, amplitudes)
        ansatz = build_ansatz(self.n_qubits, prepared)
        trajectory = evolve_variational(
            self.h, ansatz, self.grid, **self.engine_options
        )
        return trajectory.states

    def evolved(self, key: Hashable, amplitudes: np.ndarray) -> np.ndarray:
        """Record-grid states (n_records, dim) of one keyed preparation."""
        if key not in self._evolved:
            self._evolved[key] = self._run_single(np.asarray(amplitudes, complex))
        return self._evolved[key]

    def basis_states(self, masks) -> dict[int, np.ndarray]:
        """Evolved computational basis states |mask>, batched when exact."""
        masks = sorted(set(int(m) for m in masks))
        missing = [m for m in masks if ("basis", m) not in self._evolved]
        if missing:
            dim = 1 << self.n_qubits
            if self.engine == "exact":
                batch = np.zeros((len(missing), dim), dtype=complex)
                for row, mask in enumerate(missing):
                    batch[row, mask] = 1.0
                result = propagate_array(
                    self.h, batch, self.grid, **self.engine_options
                )
                for row, mask in enumerate(missing):
                    self._evolved[("basis", mask)] = result.states[:, row, :]
            else:
                for mask in missing:
                    e_mask = np.zeros(dim, dtype=complex)
                    e_mask[mask] = 1.0
                    self._evolved[("basis", mask)] = self._run_single(e_mask)
        return {m: self._evolved[("basis", m)] for m in masks}


def transition_amplitude_direct(
    records: Sequence[tuple[float, StateVector]],
    b: PauliOperator,
    g: StateVector,
    t_fs: float,
    scale: complex = 1.0,
) -> complex:
    """<g| b |psi(t)> from recorded engine states, times a preparation scale."""
    tol = 1e-9 * max(1.0, abs(t_fs))
    state = None
    for t_rec, candidate in records:
        if abs(t_rec - t_fs) <= tol:
            state = candidate
            break
    if state is None:
        raise ValueError(f"t = {t_fs} fs is not a recorded time")
    bra = apply_operator(b.adjoint(), g)
    return complex(scale * inner(bra, state))


def transition_amplitude_hadamard(
    b, evolved: StateVector, g: StateVector, phi: float
) -> float:
    """One quadrature of <g| b |evolved> from the simulated ancilla circuit.

    ``b`` must be unitary: a bare Pauli string, or a single-term operator
    with a unit-modulus coefficient.  The joint register puts the ancilla on
    the most significant qubit, branch |0> holding g with the phase-gate
    factor and branch |1> holding the evolved state; the controlled-b acts on
    the |1> branch and the returned <X_ancilla> is Re for phi = 0 and Im for
    phi = pi/2.  Both input states must be normalized, which bounds the
    quadrature by 1 in magnitude.
    """
    if isinstance(b, PauliString):
        coeff, string = 1.0 + 0.0j, b
    else:
        if b.n_terms != 1:
            raise ValueError("readout operator must be a single Pauli string (unitary)")
        coeff, string = b.terms[0]
        if abs(abs(coeff) - 1.0) > 1e-12:
            raise ValueError(
                "readout coefficient must have unit modulus (unitary); "
                f"got |{coeff}| = {abs(coeff):.6g}"
            )
    n = g.n_qubits
    if evolved.n_qubits != n or string.n_qubits != n:
        raise ValueError("qubit counts differ")
    dim = 1 << n
    joint = np.empty(2 * dim, dtype=complex)
    joint[:dim] = np.exp(1.0j * phi) * g.amplitudes / math.sqrt(2.0)
    joint[dim:] = evolved.amplitudes / math.sqrt(2.0)
    pad = PauliString(n + 1, (*string.letters, "I"))
    pad_z = PauliString(n + 1, (*string.letters, "Z"))
    controlled = PauliOperator.from_terms(
        n + 1,
        [
            (0.5, PauliString.identity(n + 1)),
            (0.5, PauliString.single(n + 1, n + 1, "Z")),
            (0.5 * coeff, pad),
            (-0.5 * coeff, pad_z),
        ],
    )
    after = apply_operator(controlled, StateVector(n + 1, joint))
    x_ancilla = PauliOperator.from_terms(
        n + 1, [(1.0, PauliString.single(n + 1, n + 1, "X"))]
    )
    return float(inner(after, apply_operator(x_ancilla, after)).real)


def _restore_rotating_frame(values: np.ndarray, times: np.ndarray, cache) -> None:
    if cache.rotating_frame_ev is not None:
        values *= np.exp(
            -1.0j * cache.rotating_frame_ev * (times - times[0]) / HBAR_EV_FS
        )


def tcf_direct(
    h: TimeDependentOperator,
    mu_series: TimeDependentOperator,
    engine: str,
    grid: PropagationGrid,
    *,
    component: str = "x",
    readout: str = "direct",
    rotating_frame_ev: float | None = None,
    cache: EvolutionCache | None = None,
    engine_options: dict | None = None,
) -> TcfSeries:
    """C(t) = sum_ij b_i(t) a_j <G| B_i U(t) A_j |G> for one dipole component.

    Each Pauli term of mu(0) prepares one basis state (its phase is carried
    as a scalar), evolved once per distinct mask; readout contracts every
    evolved state against every term of mu(t).  ``readout="hadamard"``
    assembles each amplitude from two simulated ancilla quadratures instead
    of reading the statevector, at matching cost per amplitude.
    """
    if mu_series.n_qubits != h.n_qubits:
        raise ValueError("Hamiltonian and dipole series qubit counts differ")
    if readout not in ("direct", "hadamard"):
        raise ValueError(f"readout must be 'direct' or 'hadamard', got {readout!r}")
    if cache is None:
        cache = EvolutionCache(
            h,
            grid,
            engine,
            engine_options=engine_options,
            rotating_frame_ev=rotating_frame_ev,
        )
    n = h.n_qubits
    times = grid.record_times_fs
    values = np.zeros(times.size, dtype=complex)
    mu0 = mu_series.as_operator(grid.t0_fs)
    if mu0.n_terms:
        prepared = []
        for a_j, string in mu0.terms:
            mask, phase = _ground_image(string, n)
            prepared.append((a_j * phase, mask))
        states = cache.basis_states(mask for _, mask in prepared)

        readout_strings = mu_series.strings
        readout_masks = np.empty(len(readout_strings), dtype=np.intp)
        readout_phases = np.empty(len(readout_strings), dtype=complex)
        for i, string in enumerate(readout_strings):
            mask, phase = _ground_image(string, n)
            readout_masks[i] = mask
            # <G|S|psi> = conj(phase) * psi[mask] since S is Hermitian.
            readout_phases[i] = np.conj(phase)
        if mu_series.is_constant:
            b_rows = np.broadcast_to(mu_series.coeffs[0], (times.size, len(readout_strings)))
        else:
            b_rows = np.array([mu_series.evaluate(t) for t in times])

        if readout == "direct":
            weights = b_rows * readout_phases
            for w_j, mask_j in prepared:
                values += w_j * np.sum(states[mask_j][:, readout_masks] * weights, axis=1)
        else:
            ground = StateVector.basis_state(n, 0)
            for w_j, mask_j in prepared:
                evolved_j = states[mask_j]
                for r in range(times.size):
                    psi_r = StateVector(n, evolved_j[r])
                    for i, string in enumerate(readout_strings):
                        re = transition_amplitude_hadamard(string, psi_r, ground, 0.0)
                        im = transition_amplitude_hadamard(
                            string, psi_r, ground, math.pi / 2.0
                        )
                        values[r] += b_rows[r, i] * w_j * (re + 1.0j * im)
    _restore_rotating_frame(values, times, cache)
    return TcfSeries(times_fs=times, values=values, component=component)


def tcf_small_lambda(
    h: TimeDependentOperator,
    mu_series: TimeDependentOperator,
    engine: str,
    grid: PropagationGrid,
    lambda_: float,
    *,
    component: str = "x",
    rotating_frame_ev: float | None = None,
    cache: EvolutionCache | None = None,
    engine_options: dict | None = None,
) -> TcfSeries:
    """Unitary-preparation estimator of the dipole TCF with O(lambda^2) bias.

    Evolves exp(+/- i lambda mu(0))|G> and contracts both against
    |d(t)> = (exp(i lambda mu(t)) - exp(-i lambda mu(t)))|G>, scaled by
    1/(4 lambda^2).  For a constant dipole the contraction bra is computed
    once.
    """
    if lambda_ <= 0.0:
        raise ValueError(f"lambda must be positive, got {lambda_}")
    if mu_series.n_qubits != h.n_qubits:
        raise ValueError("Hamiltonian and dipole series qubit counts differ")
    if cache is None:
        cache = EvolutionCache(
            h,
            grid,
            engine,
            engine_options=engine_options,
            rotating_frame_ev=rotating_frame_ev,
        )
    n = h.n_qubits
    times = grid.record_times_fs
    ground = np.zeros(1 << n, dtype=complex)
    ground[0] = 1.0

    mu0 = pack_operator(mu_series.as_operator(grid.t0_fs))
    psi_plus = _split_exp_apply(mu0.perms, mu0.phases, mu0.coeffs, ground, 1.0j * lambda_)
    psi_minus = _split_exp_apply(mu0.perms, mu0.phases, mu0.coeffs, ground, -1.0j * lambda_)
    plus = cache.evolved(("small_lambda", component, lambda_, +1), psi_plus)
    minus = cache.evolved(("small_lambda", component, lambda_, -1), psi_minus)

    perms, phases = pack_strings(mu_series.strings, n)

    def d_bra(t: float) -> np.ndarray:
        coeffs = mu_series.evaluate(t)
        up = _split_exp_apply(perms, phases, coeffs, ground, 1.0j * lambda_)
        down = _split_exp_apply(perms, phases, coeffs, ground, -1.0j * lambda_)
        return up - down

    values = np.empty(times.size, dtype=complex)
    if mu_series.is_constant:
        d0 = d_bra(float(times[0]))
        overlaps = (plus - minus) @ d0.conj()
        values[:] = overlaps / (4.0 * lambda_**2)
    else:
        for r, t in enumerate(times):
            d_t = d_bra(float(t))
            values[r] = (np.vdot(d_t, plus[r]) - np.vdot(d_t, minus[r])) / (
                4.0 * lambda_**2
            )
    _restore_rotating_frame(values, times, cache)
    return TcfSeries(times_fs=times, values=values, component=component)


def _require_same_grid(*series: TcfSeries) -> None:
    first = series[0]
    for other in series[1:]:
        if other.n_times != first.n_times or not np.allclose(
            other.times_fs, first.times_fs, rtol=0.0, atol=1e-9
        ):
            raise ValueError("series are on different time grids")


def isotropic_average(cx: TcfSeries, cy: TcfSeries, cz: TcfSeries) -> TcfSeries:
    """(cx + cy + cz) / 3 pointwise, tagged ``"iso"``."""
    _require_same_grid(cx, cy, cz)
    values = (cx.values + cy.values + cz.values) / 3.0
    return TcfSeries(
        times_fs=cx.times_fs,
        values=values,
        component="iso",
        ensemble_size=cx.ensemble_size,
    )


def ensemble_average(members: Sequence[TcfSeries]) -> TcfSeries:
    """Pointwise mean over bath realizations, summed in index order."""
    if not members:
        raise ValueError("cannot average an empty ensemble")
    _require_same_grid(*members)
    component = members[0].component
    for member in members[1:]:
        if member.component != component:
            raise ValueError("ensemble members carry different component tags")
    total = np.zeros(members[0].n_times, dtype=complex)
    for member in members:
        total += member.values
    return TcfSeries(
        times_fs=members[0].times_fs,
        values=total / len(members),
        component=component,
        ensemble_size=sum(m.ensemble_size for m in members),
    )


def relative_difference(c_ref: TcfSeries, c_test: TcfSeries) -> np.ndarray:
    """|c_ref(t) - c_test(t)| / |c_ref(0)| on the shared grid."""
    _require_same_grid(c_ref, c_test)
    scale = abs(complex(c_ref.values[0]))
    if scale == 0.0:
        raise ValueError("reference TCF vanishes at t = 0")
    return np.abs(c_ref.values - c_test.values) / scale


def save_tcf(series: TcfSeries, path) -> None:
    """Write ``t_fs,re,im`` rows; full double precision, newline-terminated."""
    lines = ["t_fs,re,im"]
    for t, v in zip(series.times_fs, series.values):
        lines.append(f"{t:.17g},{v.real:.17g},{v.imag:.17g}")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def load_tcf(path, component: str = "iso", ensemble_size: int = 1) -> TcfSeries:
    """Read a :func:`save_tcf` file; tags are supplied by the caller.

    The on-disk format carries no metadata, so ``component`` and
    ``ensemble_size`` default to the most generic reading.
    """
    text = Path(path).read_text(encoding="utf-8")
    lines = [line for line in text.splitlines() if line.strip()]
    if not lines or lines[0].strip() != "t_fs,re,im":
        raise FileFormatError(f"{path}: expected header 't_fs,re,im'")
    times = []
    values = []
    for line_no, line in enumerate(lines[1:], start=2):
        parts = line.split(",")
        if len(parts) != 3:
            raise FileFormatError(f"{path}: line {line_no}: expected 3 fields")
        try:
            t, re, im = (float(p) for p in parts)
        except ValueError as exc:
            raise FileFormatError(f"{path}: line {line_no}: {exc}") from None
        times.append(t)
        values.append(complex(re, im))
    if not times:
        raise FileFormatError(f"{path}: no data rows")
    try:
        return TcfSeries(
            times_fs=np.array(times),
            values=np.array(values),
            component=component,
            ensemble_size=ensemble_size,
        )
    except ValueError as exc:
        raise FileFormatError(f"{path}: {exc}") from None
