"""Absorption lineshapes: damped Fourier transform of TCFs, and the
static (ensemble) spectrum from per-frame eigendecompositions.

The dynamic route evaluates

    I(omega) = 2 Re integral_0^T dt e^{i omega t / hbar} C(t) e^{-t/tau}

by trapezoidal quadrature on the TCF grid; the 2-Re form uses the Hermitian
extension C(-t) = C(t)* implicitly, and the exponential damping sets the
Lorentzian linewidth floor hbar/tau (eV).  The static route diagonalizes the
encoded Hamiltonian of each sampled frame and accumulates
|<G| mu |alpha>|^2-weighted Lorentzians of the same width at the eigenstate
gaps, averaged over frames and the three Cartesian components.  Both routes
normalize the peak to 1; absolute intensity is not defined by the lineshape
expression, and the normalization is recorded implicitly in the file
metadata.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, replace
from pathlib import Path
from typing import NamedTuple, Sequence

import numpy as np

from .constants import HBAR_EV_FS
from .correlation import TcfSeries
from .exceptions import FileFormatError
from .exciton import (
    ChromophoreFrame,
    dipole_frenkel,
    dipole_full,
    encode_frenkel,
    frenkel_hamiltonian,
    frenkel_qubits,
    full_space_hamiltonian,
)
from .pauli import to_dense

__all__ = [
    "ROUTES",
    "Peak",
    "Spectrum",
    "default_omega_grid",
    "damped_fourier",
    "static_spectrum",
    "peak_analysis",
    "save_spectrum",
    "load_spectrum",
]

ROUTES = ("dynamic", "static")

#: Intensities may undershoot zero by at most this much (discretization).
NEGATIVE_TOL = 1e-12

#: Fraction of the global maximum below which local maxima are not peaks.
PEAK_THRESHOLD = 0.05

#: Negative lobes beyond this fraction of the peak trigger a warning.
_ARTIFACT_WARN = 0.01

_OMEGA_CHUNK = 256


def default_omega_grid() -> np.ndarray:
    """Frequency window bracketing the visible/near-UV exciton bands."""
    return np.linspace(2.0, 7.0, 2000)


@dataclass(frozen=True)
class Spectrum:
    """Normalized absorption lineshape on a uniform frequency grid.

    ``route`` records how the spectrum was produced ("dynamic" via the TCF
    transform, "static" via per-frame eigendecomposition); ``engine`` tags
    the propagation engine behind a dynamic spectrum.  Intensities below
    zero by more than :data:`NEGATIVE_TOL` are rejected; smaller
    discretization undershoots are clipped to zero.
    """

    omega_ev: np.ndarray
    intensity: np.ndarray
    tau_fs: float
    route: str
    engine: str = "exact"
    ensemble_size: int = 1

    def __post_init__(self):
        omega = np.array(self.omega_ev, dtype=float)
        intensity = np.array(self.intensity, dtype=float)
        if omega.ndim != 1 or omega.size < 2:
            raise ValueError("omega grid must be 1-D with at least two points")
        steps = np.diff(omega)
        if steps[0] <= 0 or not np.allclose(
            steps, steps[0], rtol=0.0, atol=1e-9 * max(1.0, abs(omega[-1]))
        ):
            raise ValueError("omega grid must be uniformly ascending")
        if intensity.shape != omega.shape:
            raise ValueError(
                f"intensity shape {intensity.shape} != omega shape {omega.shape}"
            )
        if not np.all(np.isfinite(intensity)):
            raise ValueError("intensity must be finite")
        low = float(intensity.min(initial=0.0))
        if low < -NEGATIVE_TOL:
            raise ValueError(
                f"intensity reaches {low:.3e}, below the -{NEGATIVE_TOL:g} floor"
            )
        np.clip(intensity, 0.0, None, out=intensity)
        if self.tau_fs <= 0:
            raise ValueError(f"tau_fs must be positive, got {self.tau_fs}")
        if self.route not in ROUTES:
            raise ValueError(f"route must be one of {ROUTES}, got {self.route!r}")
        if self.ensemble_size < 1:
            raise ValueError("ensemble_size must be at least 1")
        omega.flags.writeable = False
        intensity.flags.writeable = False
        object.__setattr__(self, "omega_ev", omega)
        object.__setattr__(self, "intensity", intensity)

    @property
    def n_points(self) -> int:
        return self.omega_ev.size

    @property
    def d_omega_ev(self) -> float:
        return float(self.omega_ev[1] - self.omega_ev[0])

    def normalized(self) -> "Spectrum":
        """Peak intensity scaled to 1; idempotent, and a no-op on zeros."""
        peak = float(self.intensity.max(initial=0.0))
        if peak <= 0.0 or peak == 1.0:
            return self
        return replace(self, intensity=self.intensity / peak)


def damped_fourier(
    c: TcfSeries,
    tau_fs: float,
    omega_grid: np.ndarray | None = None,
    *,
    engine: str = "exact",
) -> Spectrum:
    """One-sided damped Fourier transform of a TCF, peak-normalized.

    Warns when the TCF window is shorter than three damping times (the
    un-decayed tail truncates visibly) and when truncation ringing drives
    the raw transform below -1% of its peak; negative excursions are
    clipped after normalization.
    """
    if tau_fs <= 0:
        raise ValueError(f"tau_fs must be positive, got {tau_fs}")
    omega = default_omega_grid() if omega_grid is None else np.asarray(omega_grid, float)
    elapsed = c.times_fs - c.times_fs[0]
    window = float(elapsed[-1])
    if window < 3.0 * tau_fs:
        warnings.warn(
            f"TCF window {window:g} fs is shorter than 3 tau = {3 * tau_fs:g} fs; "
            "expect truncation artifacts",
            stacklevel=2,
        )
    damped = c.values * np.exp(-elapsed / tau_fs)
    intensity = np.empty(omega.size)
    for start in range(0, omega.size, _OMEGA_CHUNK):
        block = omega[start : start + _OMEGA_CHUNK]
        phases = np.exp(1.0j * block[:, None] * elapsed[None, :] / HBAR_EV_FS)
        integral = np.trapezoid(phases * damped[None, :], x=elapsed, axis=1)
        intensity[start : start + _OMEGA_CHUNK] = 2.0 * integral.real
    peak = float(intensity.max(initial=0.0))
    if peak > 0.0:
        intensity /= peak
    low = float(intensity.min(initial=0.0))
    if low < -_ARTIFACT_WARN:
        warnings.warn(
            f"negative spectral lobes reach {low:.3g} of the peak "
            "(truncation ringing); clipping to zero",
            stacklevel=2,
        )
    np.clip(intensity, 0.0, None, out=intensity)
    return Spectrum(
        omega_ev=omega,
        intensity=intensity,
        tau_fs=tau_fs,
        route="dynamic",
        engine=engine,
        ensemble_size=c.ensemble_size,
    )


def _frame_operators(frame: ChromophoreFrame, basis: str):
    if basis == "full":
        n_qubits = frame.n_chromophores
        h_op = full_space_hamiltonian(frame)
        mu_ops = [dipole_full(frame, c) for c in range(3)]
    elif basis == "frenkel":
        n_qubits = frenkel_qubits(frame.n_chromophores)
        h_op = encode_frenkel(frenkel_hamiltonian(frame), n_qubits)
        mu_ops = [dipole_frenkel(frame, c, n_qubits) for c in range(3)]
    else:
        raise ValueError(f"basis must be 'full' or 'frenkel', got {basis!r}")
    return h_op, mu_ops


def static_spectrum(
    frames: Sequence[ChromophoreFrame],
    basis: str,
    tau_fs: float,
    omega_grid: np.ndarray | None = None,
) -> Spectrum:
    """Ensemble (static) spectrum from frame-by-frame eigendecompositions.

    Each sampled frame is encoded, diagonalized densely, and every
    eigenstate contributes a Lorentzian of half-width hbar/tau at its gap
    from the ground eigenstate (the eigenvector with the largest overlap on
    |0...0>), weighted by |<G| mu |alpha>|^2.  Contributions are averaged
    over frames and Cartesian components, then peak-normalized.
    """
    if not frames:
        raise ValueError("need at least one sampled frame")
    if tau_fs <= 0:
        raise ValueError(f"tau_fs must be positive, got {tau_fs}")
    omega = default_omega_grid() if omega_grid is None else np.asarray(omega_grid, float)
    gamma = HBAR_EV_FS / tau_fs
    total = np.zeros(omega.size)
    for frame in frames:
        h_op, mu_ops = _frame_operators(frame, basis)
        if not h_op.is_hermitian():
            raise ValueError("encoded Hamiltonian has non-real Pauli coefficients")
        vals, vecs = np.linalg.eigh(to_dense(h_op))
        g_idx = int(np.argmax(np.abs(vecs[0, :])))
        gaps = vals - vals[g_idx]
        ground = vecs[:, g_idx]
        for mu_op in mu_ops:
            amps = (ground.conj() @ to_dense(mu_op)) @ vecs
            weights = np.abs(amps) ** 2
            weights[g_idx] = 0.0
            keep = weights > 0.0
            if not np.any(keep):
                continue
            lorentz = gamma / ((omega[:, None] - gaps[keep]) ** 2 + gamma**2)
            total += lorentz @ weights[keep]
    total /= 3.0 * len(frames)
    peak = float(total.max(initial=0.0))
    if peak > 0.0:
        total /= peak
    return Spectrum(
        omega_ev=omega,
        intensity=total,
        tau_fs=tau_fs,
        route="static",
        engine="exact",
        ensemble_size=len(frames),
    )


class Peak(NamedTuple):
    position_ev: float
    height: float
    fwhm_ev: float


def _half_crossing(omega, intensity, peak_idx, half, step) -> float:
    """Interpolated frequency where intensity crosses ``half``, scanning
    from the peak in steps of ``step`` (+1 right, -1 left); grid edge if
    the level is never crossed."""
    j = peak_idx
    while 0 <= j + step < omega.size:
        if intensity[j + step] <= half:
            lo, hi = intensity[j + step], intensity[j]
            frac = (half - lo) / (hi - lo) if hi > lo else 0.0
            return float(omega[j + step] + frac * (omega[j] - omega[j + step]))
        j += step
    return float(omega[j])


def peak_analysis(s: Spectrum) -> list[Peak]:
    """Local maxima above 5% of the global maximum, with interpolated FWHM.

    Peaks are reported in ascending frequency; a flat-topped maximum is
    reported once, at its first grid point.  Half-height crossings that run
    off the grid are truncated at the edge (the reported width is then a
    lower bound).
    """
    intensity = s.intensity
    top = float(intensity.max(initial=0.0))
    if top <= 0.0:
        return []
    threshold = PEAK_THRESHOLD * top
    peaks = []
    for i in range(1, s.n_points - 1):
        if (
            intensity[i] > intensity[i - 1]
            and intensity[i] >= intensity[i + 1]
            and intensity[i] > threshold
        ):
            half = intensity[i] / 2.0
            left = _half_crossing(s.omega_ev, intensity, i, half, -1)
            right = _half_crossing(s.omega_ev, intensity, i, half, +1)
            peaks.append(Peak(float(s.omega_ev[i]), float(intensity[i]), right - left))
    return peaks


def save_spectrum(s: Spectrum, path) -> None:
    """Write '#' metadata lines then ``omega_ev,intensity`` rows."""
    lines = [
        f"# tau_fs = {s.tau_fs:.17g}",
        f"# route = {s.route}",
        f"# engine = {s.engine}",
        f"# ensemble_size = {s.ensemble_size}",
        "omega_ev,intensity",
    ]
    for w, i in zip(s.omega_ev, s.intensity):
        lines.append(f"{w:.17g},{i:.17g}")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def load_spectrum(path) -> Spectrum:
    """Read a :func:`save_spectrum` file, restoring the metadata."""
    text = Path(path).read_text(encoding="utf-8")
    meta: dict[str, str] = {}
    data_lines: list[tuple[int, str]] = []
    header_seen = False
    for line_no, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if not stripped:
            continue
        if stripped.startswith("#"):
            key, sep, value = stripped[1:].partition("=")
            if sep:
                meta[key.strip()] = value.strip()
            continue
        if not header_seen:
            if stripped != "omega_ev,intensity":
                raise FileFormatError(
                    f"{path}: line {line_no}: expected header 'omega_ev,intensity'"
                )
            header_seen = True
            continue
        data_lines.append((line_no, stripped))
    if not header_seen:
        raise FileFormatError(f"{path}: missing 'omega_ev,intensity' header")
    missing = [k for k in ("tau_fs", "route", "engine", "ensemble_size") if k not in meta]
    if missing:
        raise FileFormatError(f"{path}: missing metadata {missing}")
    omega = []
    intensity = []
    for line_no, line in data_lines:
        parts = line.split(",")
        if len(parts) != 2:
            raise FileFormatError(f"{path}: line {line_no}: expected 2 fields")
        try:
            w, i = float(parts[0]), float(parts[1])
        except ValueError as exc:
            raise FileFormatError(f"{path}: line {line_no}: {exc}") from None
        omega.append(w)
        intensity.append(i)
    if not omega:
        raise FileFormatError(f"{path}: no data rows")
    try:
        return Spectrum(
            omega_ev=np.array(omega),
            intensity=np.array(intensity),
            tau_fs=float(meta["tau_fs"]),
            route=meta["route"],
            engine=meta["engine"],
            ensemble_size=int(meta["ensemble_size"]),
        )
    except ValueError as exc:
        raise FileFormatError(f"{path}: {exc}") from None
