"""Chromophore trajectories: synthesis, file I/O, and operator time series.

A :class:`Trajectory` is a uniformly spaced sequence of
:class:`~excitonspec.exciton.ChromophoreFrame` snapshots.  Frames can be
loaded from the JSON-Lines trajectory format (one header object, then one
object per frame) or synthesized with an Ornstein-Uhlenbeck model of the
excitation-energy fluctuations (exact stationary discretization, so the
statistics are stepsize-independent and any seed reproduces bytewise).

:class:`TimeDependentOperator` holds a fixed Pauli-string template with
per-frame coefficients, linearly interpolated in time; the builders
:func:`hamiltonian_series` (with the ground-state expectation subtracted so
|0...0> is numerically stationary) and :func:`dipole_series` map a trajectory
onto it in either encoding.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .exceptions import ConfigError, FileFormatError
from .exciton import (
    ChromophoreFrame,
    dipole_frenkel,
    dipole_full,
    encode_frenkel,
    frenkel_hamiltonian,
    frenkel_qubits,
    full_space_hamiltonian,
)
from .pauli import PauliOperator, PauliString

__all__ = [
    "TRAJECTORY_FORMAT",
    "Trajectory",
    "OUConfig",
    "synthesize_ou",
    "save_trajectory",
    "load_trajectory",
    "TimeDependentOperator",
    "hamiltonian_series",
    "dipole_series",
    "ground_expectation",
]

TRAJECTORY_FORMAT = "exciton-traj-v1"

_BASES = ("full", "frenkel")


@dataclass(frozen=True)
class Trajectory:
    """Uniformly sampled frames, ``dt_fs`` apart, starting at t = 0."""

    dt_fs: float
    frames: tuple[ChromophoreFrame, ...]

    def __post_init__(self):
        if self.dt_fs <= 0:
            raise ValueError(f"dt_fs must be positive, got {self.dt_fs}")
        if len(self.frames) < 2:
            raise ValueError("a trajectory needs at least two frames")
        n = self.frames[0].n_chromophores
        for i, f in enumerate(self.frames):
            if f.n_chromophores != n:
                raise ValueError(
                    f"frame {i} has {f.n_chromophores} chromophores, expected {n}"
                )
        object.__setattr__(self, "frames", tuple(self.frames))

    @property
    def n_frames(self) -> int:
        return len(self.frames)

    @property
    def n_chromophores(self) -> int:
        return self.frames[0].n_chromophores

    @property
    def t_max_fs(self) -> float:
        return self.dt_fs * (self.n_frames - 1)

    @property
    def times_fs(self) -> np.ndarray:
        return self.dt_fs * np.arange(self.n_frames)


@dataclass(frozen=True)
class OUConfig:
    """Ornstein-Uhlenbeck site-energy model with frozen dipoles and geometry.

    Each chromophore's excitation energy performs an independent OU walk
    around ``mean_energy_ev`` with stationary standard deviation
    ``energy_sigma_ev`` and correlation time ``correlation_time_fs``; dipole
    vectors and centers are constant.
    """

    mean_energy_ev: np.ndarray
    energy_sigma_ev: float
    correlation_time_fs: float
    dt_fs: float
    n_frames: int
    mu00: np.ndarray
    mu11: np.ndarray
    mu01: np.ndarray
    com: np.ndarray

    def __post_init__(self):
        com = np.array(self.com, dtype=float)
        if com.ndim != 2 or com.shape[1] != 3:
            raise ConfigError(f"com must be (N, 3), got {com.shape}")
        n = com.shape[0]
        mean = np.broadcast_to(
            np.asarray(self.mean_energy_ev, dtype=float), (n,)
        ).copy()
        mean.flags.writeable = False
        object.__setattr__(self, "mean_energy_ev", mean)
        for name in ("mu00", "mu11", "mu01", "com"):
            arr = np.array(getattr(self, name), dtype=float)
            if arr.shape != (n, 3):
                raise ConfigError(f"{name} must be ({n}, 3), got {arr.shape}")
            arr.flags.writeable = False
            object.__setattr__(self, name, arr)
        if self.energy_sigma_ev < 0:
            raise ConfigError("energy_sigma_ev must be >= 0")
        if self.correlation_time_fs <= 0:
            raise ConfigError("correlation_time_fs must be positive")
        if self.dt_fs <= 0:
            raise ConfigError("dt_fs must be positive")
        if self.n_frames < 2:
            raise ConfigError("n_frames must be at least 2")

    @property
    def n_chromophores(self) -> int:
        return self.com.shape[0]

    @classmethod
    def line_aggregate(
        cls,
        n_chromophores: int,
        mean_energy_ev: float,
        energy_sigma_ev: float,
        correlation_time_fs: float,
        dt_fs: float,
        n_frames: int,
        spacing_ang: float = 6.0,
        mu01=(1.0, 0.0, 0.0),
        mu00=(0.0, 0.0, 0.0),
        mu11=(0.0, 0.0, 0.0),
    ) -> "OUConfig":
        """Identical chromophores on a line along z, ``spacing_ang`` apart."""
        if n_chromophores < 1:
            raise ConfigError("n_chromophores must be >= 1")
        com = np.zeros((n_chromophores, 3))
        com[:, 2] = spacing_ang * np.arange(n_chromophores)
        tile = lambda v: np.tile(np.asarray(v, dtype=float), (n_chromophores, 1))
        return cls(
            mean_energy_ev=mean_energy_ev,
            energy_sigma_ev=energy_sigma_ev,
            correlation_time_fs=correlation_time_fs,
            dt_fs=dt_fs,
            n_frames=n_frames,
            mu00=tile(mu00),
            mu11=tile(mu11),
            mu01=tile(mu01),
            com=com,
        )


def synthesize_ou(config: OUConfig, seed: int) -> Trajectory:
    """Synthesize a trajectory from the OU model, deterministically per seed.

    Uses the exact one-step update
    ``E(t+dt) = Ebar + (E(t) - Ebar) e^(-dt/tau) + sigma sqrt(1 - e^(-2 dt/tau)) xi``
    with the first frame drawn from the stationary distribution; one
    standard-normal vector is drawn per frame, in frame order.
    """
    rng = np.random.default_rng(seed)
    n = config.n_chromophores
    mean = config.mean_energy_ev
    sigma = config.energy_sigma_ev
    decay = float(np.exp(-config.dt_fs / config.correlation_time_fs))
    kick = sigma * np.sqrt(1.0 - decay**2)
    energies = mean + sigma * rng.standard_normal(n)
    frames = []
    for _ in range(config.n_frames):
        frames.append(
            ChromophoreFrame(
                energies=energies,
                mu00=config.mu00,
                mu11=config.mu11,
                mu01=config.mu01,
                com=config.com,
            )
        )
        energies = mean + (energies - mean) * decay + kick * rng.standard_normal(n)
    return Trajectory(dt_fs=config.dt_fs, frames=tuple(frames))


def save_trajectory(traj: Trajectory, path) -> None:
    """Write the JSON-Lines trajectory format (lossless float round trip)."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(
            json.dumps(
                {
                    "format": TRAJECTORY_FORMAT,
                    "dt_fs": traj.dt_fs,
                    "n_chromophores": traj.n_chromophores,
                }
            )
            + "\n"
        )
        for i, frame in enumerate(traj.frames):
            record = {
                "t_fs": i * traj.dt_fs,
                "chromophores": [
                    {
                        "E_ev": float(frame.energies[m]),
                        "mu00": frame.mu00[m].tolist(),
                        "mu11": frame.mu11[m].tolist(),
                        "mu01": frame.mu01[m].tolist(),
                        "com_ang": frame.com[m].tolist(),
                    }
                    for m in range(frame.n_chromophores)
                ],
            }
            fh.write(json.dumps(record) + "\n")


def _frame_from_record(record: dict, n: int, line_no: int) -> ChromophoreFrame:
    chromo = record.get("chromophores")
    if not isinstance(chromo, list) or len(chromo) != n:
        raise FileFormatError(
            f"line {line_no}: expected {n} chromophores, got "
            f"{len(chromo) if isinstance(chromo, list) else type(chromo).__name__}"
        )
    try:
        return ChromophoreFrame(
            energies=[c["E_ev"] for c in chromo],
            mu00=[c["mu00"] for c in chromo],
            mu11=[c["mu11"] for c in chromo],
            mu01=[c["mu01"] for c in chromo],
            com=[c["com_ang"] for c in chromo],
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise FileFormatError(f"line {line_no}: bad chromophore record: {exc}") from exc


def load_trajectory(path) -> Trajectory:
    """Read the JSON-Lines trajectory format, validating spacing and size."""
    with open(path, "r", encoding="utf-8") as fh:
        lines = fh.read().splitlines()
    records = []
    for line_no, line in enumerate(lines, start=1):
        if not line.strip():
            continue
        try:
            records.append((line_no, json.loads(line)))
        except json.JSONDecodeError as exc:
            raise FileFormatError(f"line {line_no}: invalid JSON: {exc}") from exc
    if not records:
        raise FileFormatError("empty trajectory file")
    header_no, header = records[0]
    if header.get("format") != TRAJECTORY_FORMAT:
        raise FileFormatError(
            f"line {header_no}: expected format {TRAJECTORY_FORMAT!r}, "
            f"got {header.get('format')!r}"
        )
    try:
        dt = float(header["dt_fs"])
        n = int(header["n_chromophores"])
    except (KeyError, TypeError, ValueError) as exc:
        raise FileFormatError(f"line {header_no}: bad header: {exc}") from exc
    frames = []
    times = []
    for line_no, record in records[1:]:
        if "t_fs" not in record:
            raise FileFormatError(f"line {line_no}: frame record missing t_fs")
        times.append(float(record["t_fs"]))
        frames.append(_frame_from_record(record, n, line_no))
    if len(frames) < 2:
        raise FileFormatError("trajectory needs at least two frames")
    expected = dt * np.arange(len(times))
    if not np.allclose(times, expected, rtol=0.0, atol=1e-9 * max(dt, 1.0)):
        bad = int(np.argmax(np.abs(np.asarray(times) - expected)))
        raise FileFormatError(
            f"nonuniform frame times: frame {bad} at t={times[bad]} fs, "
            f"expected {expected[bad]} fs"
        )
    try:
        return Trajectory(dt_fs=dt, frames=tuple(frames))
    except ValueError as exc:
        raise FileFormatError(str(exc)) from exc


@dataclass(frozen=True)
class TimeDependentOperator:
    """Fixed Pauli-string template with per-frame coefficient rows.

    ``coeffs[j]`` are the coefficients at ``times[j]``; :meth:`evaluate`
    interpolates linearly and refuses extrapolation.  A single row makes the
    operator constant.
    """

    n_qubits: int
    strings: tuple[PauliString, ...]
    times: np.ndarray
    coeffs: np.ndarray

    def __post_init__(self):
        times = np.array(self.times, dtype=float)
        coeffs = np.array(self.coeffs, dtype=complex)
        if times.ndim != 1 or times.size < 1:
            raise ValueError("times must be a non-empty 1-D array")
        if np.any(np.diff(times) <= 0):
            raise ValueError("times must be strictly increasing")
        if coeffs.shape != (times.size, len(self.strings)):
            raise ValueError(
                f"coeffs shape {coeffs.shape} != ({times.size}, {len(self.strings)})"
            )
        for s in self.strings:
            if s.n_qubits != self.n_qubits:
                raise ValueError("string register size mismatch")
        times.flags.writeable = False
        coeffs.flags.writeable = False
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "coeffs", coeffs)
        object.__setattr__(self, "strings", tuple(self.strings))

    @classmethod
    def constant(cls, op: PauliOperator) -> "TimeDependentOperator":
        strings = tuple(s for _, s in op.terms)
        coeffs = np.array([[c for c, _ in op.terms]], dtype=complex)
        return cls(op.n_qubits, strings, np.array([0.0]), coeffs)

    @property
    def t_min_fs(self) -> float:
        return float(self.times[0])

    @property
    def t_max_fs(self) -> float:
        return float(self.times[-1])

    @property
    def is_constant(self) -> bool:
        return self.times.size == 1

    def evaluate(self, t_fs: float) -> np.ndarray:
        """Coefficient vector at time t (linear interpolation between rows)."""
        if self.is_constant:
            return self.coeffs[0]
        tol = 1e-9 * max(abs(self.t_max_fs), 1.0)
        if t_fs < self.t_min_fs - tol or t_fs > self.t_max_fs + tol:
            raise ValueError(
                f"t={t_fs} fs outside tabulated range "
                f"[{self.t_min_fs}, {self.t_max_fs}] fs"
            )
        t = min(max(t_fs, self.t_min_fs), self.t_max_fs)
        j = int(np.searchsorted(self.times, t, side="right") - 1)
        j = min(j, self.times.size - 2)
        w = (t - self.times[j]) / (self.times[j + 1] - self.times[j])
        return (1.0 - w) * self.coeffs[j] + w * self.coeffs[j + 1]

    def as_operator(self, t_fs: float) -> PauliOperator:
        c = self.evaluate(t_fs)
        return PauliOperator.from_terms(
            self.n_qubits, list(zip(c, self.strings))
        )

    def add_constant(self, op: PauliOperator) -> "TimeDependentOperator":
        """Series with ``op`` added to every frame (e.g. a frame shift)."""
        if op.n_qubits != self.n_qubits:
            raise ValueError("qubit counts differ")
        letters_union = sorted(
            {s.letters for s in self.strings} | {s.letters for _, s in op.terms}
        )
        index = {ls: k for k, ls in enumerate(letters_union)}
        coeffs = np.zeros((self.times.size, len(letters_union)), dtype=complex)
        for k, s in enumerate(self.strings):
            coeffs[:, index[s.letters]] = self.coeffs[:, k]
        for c, s in op.terms:
            coeffs[:, index[s.letters]] += c
        strings = tuple(PauliString(self.n_qubits, ls) for ls in letters_union)
        return TimeDependentOperator(self.n_qubits, strings, self.times, coeffs)

    def max_imag_coefficient(self) -> float:
        return float(np.max(np.abs(self.coeffs.imag))) if self.coeffs.size else 0.0


def ground_expectation(op: PauliOperator) -> float:
    """<0...0|op|0...0>: the sum of coefficients of {I,Z}-only strings."""
    total = 0.0 + 0.0j
    for c, s in op.terms:
        if s.x_mask == 0:
            total += c
    return float(total.real)


def _series_from_operators(
    n_qubits: int, times: np.ndarray, ops: Sequence[PauliOperator]
) -> TimeDependentOperator:
    letters_union = sorted({s.letters for op in ops for _, s in op.terms})
    index = {ls: k for k, ls in enumerate(letters_union)}
    coeffs = np.zeros((len(ops), len(letters_union)), dtype=complex)
    for j, op in enumerate(ops):
        for c, s in op.terms:
            coeffs[j, index[s.letters]] = c
    strings = tuple(PauliString(n_qubits, ls) for ls in letters_union)
    return TimeDependentOperator(n_qubits, strings, times, coeffs)


def _check_basis(basis: str) -> None:
    if basis not in _BASES:
        raise ConfigError(f"basis must be one of {_BASES}, got {basis!r}")


def hamiltonian_series(traj: Trajectory, basis: str) -> TimeDependentOperator:
    """Per-frame encoded Hamiltonians, shifted so <0...0|H|0...0> = 0.

    The shift removes the ground-state energy offset frame by frame, making
    the all-zeros state (numerically) stationary in both encodings.
    """
    _check_basis(basis)
    ops = []
    for frame in traj.frames:
        if basis == "full":
            op = full_space_hamiltonian(frame)
            n_qubits = frame.n_chromophores
        else:
            n_qubits = frenkel_qubits(frame.n_chromophores)
            op = encode_frenkel(frenkel_hamiltonian(frame), n_qubits)
        shift = ground_expectation(op)
        if shift != 0.0:
            op = op + PauliOperator.from_terms(
                n_qubits, [(-shift, PauliString.identity(n_qubits))]
            )
        ops.append(op)
    return _series_from_operators(n_qubits, traj.times_fs, ops)


def dipole_series(
    traj: Trajectory, basis: str, component: int, mode: str = "averaged"
) -> TimeDependentOperator:
    """Dipole-component operator along the trajectory.

    ``mode="averaged"`` (default) averages the coefficients over frames into
    a constant operator; ``mode="instant"`` keeps the per-frame series.
    """
    _check_basis(basis)
    if mode not in ("averaged", "instant"):
        raise ConfigError(f"mode must be 'averaged' or 'instant', got {mode!r}")
    ops = []
    for frame in traj.frames:
        if basis == "full":
            op = dipole_full(frame, component)
            n_qubits = frame.n_chromophores
        else:
            n_qubits = frenkel_qubits(frame.n_chromophores)
            op = dipole_frenkel(frame, component, n_qubits)
        ops.append(op)
    series = _series_from_operators(n_qubits, traj.times_fs, ops)
    if mode == "instant":
        return series
    mean = series.coeffs.mean(axis=0, keepdims=True)
    return TimeDependentOperator(
        n_qubits, series.strings, np.array([0.0]), mean
    )
