"""Exciton Hamiltonians and dipole operators from per-frame chromophore data.

Two qubit encodings of the same aggregate are provided:

* **full space** — one qubit per chromophore (2^N states).  Each chromophore
  is a two-level site with diagonal energies (0, E_m) and real dipole matrix
  elements mu00/mu11/mu01; all pairwise interactions are point-dipole
  couplings between the symmetric/antisymmetric/transition dipole
  combinations, which lands directly on an {I, X, Z} Pauli expansion with at
  most two-qubit terms.
* **Frenkel** — ground state plus the N single-excitation states packed into
  L = ceil(log2(N+1)) qubits via binary-index projectors.  State 0 is the
  shared ground state (energy zero, uncoupled); unused basis states are
  zero-padded.

Energies are eV, dipoles atomic units, positions Angstrom (see
:mod:`excitonspec.constants`).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .constants import DIPOLE_COUPLING_EV
from .pauli import PauliOperator, PauliString

__all__ = [
    "MIN_SEPARATION_ANG",
    "ChromophoreFrame",
    "FullSpaceCoefficients",
    "dipole_dipole_coupling",
    "full_space_coefficients",
    "full_space_hamiltonian",
    "dipole_full",
    "frenkel_hamiltonian",
    "frenkel_qubits",
    "encode_projector",
    "encode_frenkel",
    "dipole_frenkel",
]

#: Chromophore centers closer than this (Angstrom) make the point-dipole
#: expansion meaningless; treated as invalid input.
MIN_SEPARATION_ANG = 0.1


def _as_array(x, shape, name):
    arr = np.array(x, dtype=float, copy=True)
    if arr.shape != shape:
        raise ValueError(f"{name}: expected shape {shape}, got {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name}: non-finite entries")
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True)
class ChromophoreFrame:
    """One snapshot of an N-chromophore aggregate.

    Parameters
    ----------
    energies : (N,) array
        Excitation energy of each chromophore in eV.
    mu00, mu11, mu01 : (N, 3) arrays
        Ground-state, excited-state, and transition dipole vectors (au).
    com : (N, 3) array
        Centers of mass in Angstrom.
    """

    energies: np.ndarray
    mu00: np.ndarray
    mu11: np.ndarray
    mu01: np.ndarray
    com: np.ndarray

    def __post_init__(self):
        e = np.array(self.energies, dtype=float, copy=True)
        if e.ndim != 1 or e.size < 1:
            raise ValueError("energies must be a non-empty 1-D array")
        if not np.all(np.isfinite(e)):
            raise ValueError("energies: non-finite entries")
        e.flags.writeable = False
        object.__setattr__(self, "energies", e)
        n = e.size
        for name in ("mu00", "mu11", "mu01", "com"):
            object.__setattr__(
                self, name, _as_array(getattr(self, name), (n, 3), name)
            )
        if n > 1:
            deltas = self.com[:, None, :] - self.com[None, :, :]
            dist = np.linalg.norm(deltas, axis=-1)
            np.fill_diagonal(dist, np.inf)
            if dist.min() <= MIN_SEPARATION_ANG:
                i, j = np.unravel_index(np.argmin(dist), dist.shape)
                raise ValueError(
                    f"chromophores {i + 1} and {j + 1} are "
                    f"{dist[i, j]:.3g} Ang apart (min {MIN_SEPARATION_ANG})"
                )

    @property
    def n_chromophores(self) -> int:
        return self.energies.size


def dipole_dipole_coupling(mu_a, mu_b, com_a, com_b) -> float:
    """Point-dipole interaction energy in eV.

    ``[mu_a . mu_b - 3 (mu_a . r_hat)(mu_b . r_hat)] / r^3`` with dipoles in
    au and the separation in Angstrom, converted by
    :data:`~excitonspec.constants.DIPOLE_COUPLING_EV`.
    """
    mu_a = np.asarray(mu_a, dtype=float)
    mu_b = np.asarray(mu_b, dtype=float)
    r = np.asarray(com_b, dtype=float) - np.asarray(com_a, dtype=float)
    d = float(np.linalg.norm(r))
    if d <= MIN_SEPARATION_ANG:
        raise ValueError(f"separation {d:.3g} Ang below {MIN_SEPARATION_ANG}")
    rhat = r / d
    kappa = float(mu_a @ mu_b) - 3.0 * float(mu_a @ rhat) * float(mu_b @ rhat)
    return DIPOLE_COUPLING_EV * kappa / d**3


@dataclass(frozen=True)
class FullSpaceCoefficients:
    """Pauli coefficients of the full-space Hamiltonian (all values eV).

    ``identity`` multiplies I; ``z[m]``/``x[m]`` multiply Z/X on qubit m+1;
    the pair arrays are lower-triangular, entry ``[m, n]`` (n < m) multiplying
    the two-qubit string with the first letter on qubit m+1 and the second on
    qubit n+1 (e.g. ``xz[m, n]`` goes with X_{m+1} Z_{n+1}).
    """

    identity: float
    z: np.ndarray
    x: np.ndarray
    xx: np.ndarray
    xz: np.ndarray
    zx: np.ndarray
    zz: np.ndarray


def full_space_coefficients(frame: ChromophoreFrame) -> FullSpaceCoefficients:
    """Expand the aggregate Hamiltonian over {I, X_m, Z_m, pair} strings.

    Each two-level site contributes half-splitting terms
    ``S_m = E_m / 2`` (identity) and ``D_m = -E_m / 2`` (Z); its permanent and
    transition dipoles enter through the symmetric / difference / transition
    combinations, whose pairwise point-dipole couplings multiply the
    corresponding Pauli products.  One-body X/Z coefficients collect the mean
    field of every other site's symmetric dipole.
    """
    n = frame.n_chromophores
    s_e = frame.energies / 2.0
    d_e = -frame.energies / 2.0
    mu_s = (frame.mu00 + frame.mu11) / 2.0
    mu_d = (frame.mu00 - frame.mu11) / 2.0
    mu_t = frame.mu01

    def vv(mu_m, m, mu_n, nn):
        return dipole_dipole_coupling(mu_m, mu_n, frame.com[m], frame.com[nn])

    identity = float(np.sum(s_e))
    z = d_e.copy()
    x = np.zeros(n)
    xx = np.zeros((n, n))
    xz = np.zeros((n, n))
    zx = np.zeros((n, n))
    zz = np.zeros((n, n))
    for m in range(n):
        for k in range(n):
            if k == m:
                continue
            z[m] += vv(mu_d[m], m, mu_s[k], k)
            x[m] += vv(mu_t[m], m, mu_s[k], k)
    for m in range(n):
        for k in range(m):
            identity += vv(mu_s[m], m, mu_s[k], k)
            xx[m, k] = vv(mu_t[m], m, mu_t[k], k)
            xz[m, k] = vv(mu_t[m], m, mu_d[k], k)
            zx[m, k] = vv(mu_d[m], m, mu_t[k], k)
            zz[m, k] = vv(mu_d[m], m, mu_d[k], k)
    return FullSpaceCoefficients(identity, z, x, xx, xz, zx, zz)


def _pair_string(n, m, letter_m, k, letter_k):
    letters = ["I"] * n
    letters[m] = letter_m
    letters[k] = letter_k
    return PauliString(n, tuple(letters))


def full_space_hamiltonian(frame: ChromophoreFrame) -> PauliOperator:
    """Aggregate Hamiltonian on one qubit per chromophore (qubit m = site m)."""
    n = frame.n_chromophores
    c = full_space_coefficients(frame)
    terms = [(complex(c.identity), PauliString.identity(n))]
    for m in range(n):
        terms.append((complex(c.z[m]), PauliString.single(n, m + 1, "Z")))
        terms.append((complex(c.x[m]), PauliString.single(n, m + 1, "X")))
    for m in range(n):
        for k in range(m):
            terms.append((complex(c.xx[m, k]), _pair_string(n, m, "X", k, "X")))
            terms.append((complex(c.xz[m, k]), _pair_string(n, m, "X", k, "Z")))
            terms.append((complex(c.zx[m, k]), _pair_string(n, m, "Z", k, "X")))
            terms.append((complex(c.zz[m, k]), _pair_string(n, m, "Z", k, "Z")))
    return PauliOperator.from_terms(n, terms)


def dipole_full(frame: ChromophoreFrame, component: int) -> PauliOperator:
    """Cartesian component of the total dipole in the full-space encoding.

    Per site: ``(mu00+mu11)/2 * I + (mu00-mu11)/2 * Z_m + mu01 * X_m``.
    """
    n = frame.n_chromophores
    mu_i = (frame.mu00[:, component] + frame.mu11[:, component]) / 2.0
    mu_z = (frame.mu00[:, component] - frame.mu11[:, component]) / 2.0
    mu_x = frame.mu01[:, component]
    terms = [(complex(np.sum(mu_i)), PauliString.identity(n))]
    for m in range(n):
        terms.append((complex(mu_z[m]), PauliString.single(n, m + 1, "Z")))
        terms.append((complex(mu_x[m]), PauliString.single(n, m + 1, "X")))
    return PauliOperator.from_terms(n, terms)


def frenkel_hamiltonian(frame: ChromophoreFrame) -> np.ndarray:
    """N x N single-excitation Hamiltonian: site energies and transition
    dipole couplings."""
    n = frame.n_chromophores
    h = np.diag(frame.energies.astype(float))
    for m in range(n):
        for k in range(m):
            v = dipole_dipole_coupling(
                frame.mu01[m], frame.mu01[k], frame.com[m], frame.com[k]
            )
            h[m, k] = h[k, m] = v
    return h


def frenkel_qubits(n_sites: int) -> int:
    """Qubits needed for the ground state plus ``n_sites`` excitations."""
    if n_sites < 1:
        raise ValueError("need at least one site")
    return max(1, math.ceil(math.log2(n_sites + 1)))


# Single-qubit factors of |bit_m><bit_n| as (coeff, letter) expansions.
_PROJ_FACTOR = {
    (0, 0): ((0.5, "I"), (0.5, "Z")),
    (1, 1): ((0.5, "I"), (-0.5, "Z")),
    (0, 1): ((0.5, "X"), (0.5j, "Y")),
    (1, 0): ((0.5, "X"), (-0.5j, "Y")),
}


def encode_projector(m: int, n: int, n_qubits: int) -> PauliOperator:
    """|m><n| on a binary-indexed register, expanded over Pauli strings.

    Built as the tensor product over qubits of two-term single-qubit
    expansions (|0><0| = (I+Z)/2, |0><1| = (X+iY)/2, ...), so the result has
    up to 2^n_qubits strings.
    """
    dim = 1 << n_qubits
    if not (0 <= m < dim and 0 <= n < dim):
        raise ValueError(f"indices ({m}, {n}) outside 0..{dim - 1}")
    terms = [(1.0 + 0.0j, [])]
    for q in range(n_qubits):
        bits = ((m >> q) & 1, (n >> q) & 1)
        terms = [
            (c * fc, letters + [fl])
            for c, letters in terms
            for fc, fl in _PROJ_FACTOR[bits]
        ]
    return PauliOperator.from_terms(
        n_qubits, [(c, PauliString(n_qubits, tuple(ls))) for c, ls in terms]
    )


def encode_frenkel(h_site: np.ndarray, n_qubits: int | None = None) -> PauliOperator:
    """Qubit operator for a site Hamiltonian in the Frenkel encoding.

    Basis state 0 is the shared ground state at energy zero; basis state m
    (1 <= m <= N) carries site m's energy ``h_site[m-1, m-1]`` and couplings
    ``h_site[m-1, k-1]``; any remaining padding states are left at zero
    energy, uncoupled.
    """
    h = np.asarray(h_site, dtype=float)
    if h.ndim != 2 or h.shape[0] != h.shape[1]:
        raise ValueError(f"site Hamiltonian must be square, got {h.shape}")
    if not np.allclose(h, h.T, atol=1e-12):
        raise ValueError("site Hamiltonian must be symmetric")
    n = h.shape[0]
    auto = frenkel_qubits(n)
    if n_qubits is None:
        n_qubits = auto
    elif n_qubits < auto:
        raise ValueError(f"{n} sites need at least {auto} qubits, got {n_qubits}")
    op = PauliOperator.zero(n_qubits)
    terms = []
    for m in range(n):
        for k in range(n):
            if h[m, k] == 0.0:
                continue
            proj = encode_projector(m + 1, k + 1, n_qubits)
            terms.extend((h[m, k] * c, s) for c, s in proj.terms)
    return op + PauliOperator.from_terms(n_qubits, terms)


def dipole_frenkel(frame: ChromophoreFrame, component: int, n_qubits: int | None = None) -> PauliOperator:
    """Cartesian dipole component in the Frenkel encoding:
    sum_m mu01_m (|0><m| + |m><0|)."""
    n = frame.n_chromophores
    if n_qubits is None:
        n_qubits = frenkel_qubits(n)
    terms = []
    for m in range(n):
        mu = float(frame.mu01[m, component])
        if mu == 0.0:
            continue
        up = encode_projector(0, m + 1, n_qubits)
        down = encode_projector(m + 1, 0, n_qubits)
        terms.extend((mu * c, s) for c, s in up.terms)
        terms.extend((mu * c, s) for c, s in down.terms)
    return PauliOperator.from_terms(n_qubits, terms)
