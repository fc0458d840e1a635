"""Pauli-string operators and statevectors for few-qubit wavepacket dynamics.

Conventions
-----------
* Qubits are numbered 1..n.  Qubit 1 is the *least-significant* bit of a
  basis-state index: ``|x_n ... x_2 x_1>`` has index
  ``m = x_1*2^0 + x_2*2^1 + ... + x_n*2^(n-1)``.
* A :class:`PauliString` stores one letter per qubit; ``letters[i]`` acts on
  qubit ``i + 1``.  Text labels therefore read qubit 1 leftmost
  (``"XZ"`` = X on qubit 1, Z on qubit 2).
* A :class:`PauliOperator` is a complex-weighted sum of strings, kept in a
  canonical form: duplicate strings merged, coefficients below
  :data:`COEFF_TOL` dropped, terms sorted by letters.

The action of a string on a statevector never builds a matrix: with
``x``/``z`` bit masks marking X- or Z-component letters,

``(P s)[j] = (-i)^n_Y * (-1)^popcount(j & z) * s[j ^ x]``

which is the kernel primitive used by the propagation engines.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

__all__ = [
    "COEFF_TOL",
    "PauliString",
    "PauliOperator",
    "StateVector",
    "mul_strings",
    "apply_operator",
    "to_dense",
    "inner",
    "pack_strings",
    "pack_operator",
    "format_operator",
    "parse_operator",
]

#: Coefficients with magnitude below this are dropped by canonicalization.
COEFF_TOL = 1e-14

_LETTERS = "IXYZ"

_DENSE = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex),
    "Y": np.array([[0.0, -1.0j], [1.0j, 0.0]], dtype=complex),
    "Z": np.array([[1.0, 0.0], [0.0, -1.0]], dtype=complex),
}

# Single-qubit products (a, b) -> (phase, a*b), e.g. X*Y = i Z.
_MUL = {
    ("I", "I"): (1.0, "I"),
    ("I", "X"): (1.0, "X"),
    ("I", "Y"): (1.0, "Y"),
    ("I", "Z"): (1.0, "Z"),
    ("X", "I"): (1.0, "X"),
    ("Y", "I"): (1.0, "Y"),
    ("Z", "I"): (1.0, "Z"),
    ("X", "X"): (1.0, "I"),
    ("Y", "Y"): (1.0, "I"),
    ("Z", "Z"): (1.0, "I"),
    ("X", "Y"): (1.0j, "Z"),
    ("Y", "X"): (-1.0j, "Z"),
    ("Y", "Z"): (1.0j, "X"),
    ("Z", "Y"): (-1.0j, "X"),
    ("Z", "X"): (1.0j, "Y"),
    ("X", "Z"): (-1.0j, "Y"),
}


def _popcount(values: np.ndarray) -> np.ndarray:
    if hasattr(np, "bitwise_count"):
        return np.bitwise_count(values).astype(np.int64)
    out = np.zeros_like(values)
    v = values.copy()
    while np.any(v):
        out += v & 1
        v >>= 1
    return out


@dataclass(frozen=True)
class PauliString:
    """Tensor product of single-qubit Pauli letters, one per qubit."""

    n_qubits: int
    letters: tuple[str, ...]

    def __post_init__(self):
        if self.n_qubits < 1:
            raise ValueError(f"need at least one qubit, got {self.n_qubits}")
        if len(self.letters) != self.n_qubits:
            raise ValueError(
                f"{len(self.letters)} letters for {self.n_qubits} qubits"
            )
        bad = set(self.letters) - set(_LETTERS)
        if bad:
            raise ValueError(f"unknown Pauli letters {sorted(bad)}")

    @classmethod
    def from_label(cls, label: str) -> "PauliString":
        """Build from a text label with qubit 1 leftmost."""
        return cls(len(label), tuple(label))

    @classmethod
    def identity(cls, n_qubits: int) -> "PauliString":
        return cls(n_qubits, ("I",) * n_qubits)

    @classmethod
    def single(cls, n_qubits: int, qubit: int, letter: str) -> "PauliString":
        """One non-identity letter on ``qubit`` (1-based), identity elsewhere."""
        if not 1 <= qubit <= n_qubits:
            raise ValueError(f"qubit {qubit} outside 1..{n_qubits}")
        letters = ["I"] * n_qubits
        letters[qubit - 1] = letter
        return cls(n_qubits, tuple(letters))

    @property
    def label(self) -> str:
        return "".join(self.letters)

    @property
    def x_mask(self) -> int:
        m = 0
        for i, p in enumerate(self.letters):
            if p in ("X", "Y"):
                m |= 1 << i
        return m

    @property
    def z_mask(self) -> int:
        m = 0
        for i, p in enumerate(self.letters):
            if p in ("Z", "Y"):
                m |= 1 << i
        return m

    @property
    def weight(self) -> int:
        """Number of non-identity letters."""
        return sum(p != "I" for p in self.letters)

    def dense(self) -> np.ndarray:
        """2^n x 2^n matrix; qubit 1 is the fastest (least-significant) index."""
        out = np.array([[1.0 + 0.0j]])
        for letter in reversed(self.letters):
            out = np.kron(out, _DENSE[letter])
        return out

    def __str__(self) -> str:
        return self.label


def mul_strings(a: PauliString, b: PauliString) -> tuple[complex, PauliString]:
    """Product of two strings as ``(phase, string)`` with phase in {1,-1,i,-i}.

    Computed qubit-by-qubit from the single-letter multiplication table, so
    ``a.dense() @ b.dense() == phase * string.dense()`` exactly.
    """
    if a.n_qubits != b.n_qubits:
        raise ValueError(f"qubit counts differ: {a.n_qubits} vs {b.n_qubits}")
    phase = 1.0 + 0.0j
    letters = []
    for pa, pb in zip(a.letters, b.letters):
        ph, pc = _MUL[(pa, pb)]
        phase *= ph
        letters.append(pc)
    return phase, PauliString(a.n_qubits, tuple(letters))


def _canonical_terms(
    n_qubits: int, terms: Iterable[tuple[complex, PauliString]]
) -> tuple[tuple[complex, PauliString], ...]:
    acc: dict[tuple[str, ...], complex] = {}
    for coeff, string in terms:
        if string.n_qubits != n_qubits:
            raise ValueError(
                f"term on {string.n_qubits} qubits in {n_qubits}-qubit operator"
            )
        acc[string.letters] = acc.get(string.letters, 0.0) + complex(coeff)
    kept = [
        (c, PauliString(n_qubits, ls))
        for ls, c in acc.items()
        if abs(c) >= COEFF_TOL
    ]
    kept.sort(key=lambda t: t[1].letters)
    return tuple(kept)


@dataclass(frozen=True)
class PauliOperator:
    """Canonical complex-weighted sum of Pauli strings on a fixed register."""

    n_qubits: int
    terms: tuple[tuple[complex, PauliString], ...]

    @classmethod
    def from_terms(
        cls, n_qubits: int, terms: Iterable[tuple[complex, PauliString]]
    ) -> "PauliOperator":
        """Canonicalize: merge duplicates, drop tiny coefficients, sort."""
        return cls(n_qubits, _canonical_terms(n_qubits, terms))

    @classmethod
    def zero(cls, n_qubits: int) -> "PauliOperator":
        return cls(n_qubits, ())

    @property
    def n_terms(self) -> int:
        return len(self.terms)

    def coefficient(self, string: PauliString) -> complex:
        for c, s in self.terms:
            if s.letters == string.letters:
                return c
        return 0.0

    def is_hermitian(self, tol: float = 1e-12) -> bool:
        """True iff every canonical coefficient is real (Paulis are Hermitian)."""
        return all(abs(c.imag) <= tol for c, _ in self.terms)

    def adjoint(self) -> "PauliOperator":
        """Hermitian conjugate: strings are self-adjoint, coefficients conjugate."""
        return PauliOperator(
            self.n_qubits, tuple((c.conjugate(), s) for c, s in self.terms)
        )

    def __add__(self, other: "PauliOperator") -> "PauliOperator":
        if self.n_qubits != other.n_qubits:
            raise ValueError("qubit counts differ")
        return PauliOperator.from_terms(
            self.n_qubits, list(self.terms) + list(other.terms)
        )

    def __sub__(self, other: "PauliOperator") -> "PauliOperator":
        return self + (-1.0) * other

    def __rmul__(self, scalar: complex) -> "PauliOperator":
        return PauliOperator.from_terms(
            self.n_qubits, [(scalar * c, s) for c, s in self.terms]
        )

    def __matmul__(self, other: "PauliOperator") -> "PauliOperator":
        """Operator product, expanded term-by-term via :func:`mul_strings`."""
        if self.n_qubits != other.n_qubits:
            raise ValueError("qubit counts differ")
        out = []
        for ca, sa in self.terms:
            for cb, sb in other.terms:
                phase, sc = mul_strings(sa, sb)
                out.append((ca * cb * phase, sc))
        return PauliOperator.from_terms(self.n_qubits, out)


@dataclass(frozen=True)
class StateVector:
    """Normalized-by-convention complex amplitudes over 2^n basis states.

    Amplitudes are copied on construction and marked read-only; treat the
    object as an immutable value.
    """

    n_qubits: int
    amplitudes: np.ndarray

    def __post_init__(self):
        arr = np.array(self.amplitudes, dtype=complex, copy=True)
        if arr.shape != (1 << self.n_qubits,):
            raise ValueError(
                f"expected {1 << self.n_qubits} amplitudes, got {arr.shape}"
            )
        arr.flags.writeable = False
        object.__setattr__(self, "amplitudes", arr)

    @classmethod
    def basis_state(cls, n_qubits: int, index: int) -> "StateVector":
        if not 0 <= index < (1 << n_qubits):
            raise ValueError(f"basis index {index} outside register")
        amp = np.zeros(1 << n_qubits, dtype=complex)
        amp[index] = 1.0
        return cls(n_qubits, amp)

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))


def inner(bra: StateVector, ket: StateVector) -> complex:
    """<bra|ket>, conjugate-linear in the first argument."""
    if bra.n_qubits != ket.n_qubits:
        raise ValueError("qubit counts differ")
    return complex(np.vdot(bra.amplitudes, ket.amplitudes))


def pack_strings(
    strings: Sequence[PauliString], n_qubits: int
) -> tuple[np.ndarray, np.ndarray]:
    """Precompute the action of each string as a permutation and a phase table.

    Returns ``(perms, phases)`` of shapes (K, 2^n) such that
    ``(P_k s)[j] = phases[k, j] * s[perms[k, j]]``.
    """
    dim = 1 << n_qubits
    idx = np.arange(dim, dtype=np.int64)
    perms = np.empty((len(strings), dim), dtype=np.int64)
    phases = np.empty((len(strings), dim), dtype=complex)
    for k, string in enumerate(strings):
        if string.n_qubits != n_qubits:
            raise ValueError("string register size mismatch")
        x, z = string.x_mask, string.z_mask
        n_y = int(bin(x & z).count("1"))
        sign = 1.0 - 2.0 * (_popcount(idx & z) & 1)
        perms[k] = idx ^ x
        phases[k] = (-1.0j) ** (n_y % 4) * sign
    return perms, phases


@dataclass(frozen=True)
class PackedOperator:
    """Kernel-ready form of a :class:`PauliOperator`."""

    n_qubits: int
    perms: np.ndarray
    phases: np.ndarray
    coeffs: np.ndarray

    @property
    def one_norm(self) -> float:
        """Sum of |coeff|, an upper bound on the spectral norm."""
        return float(np.sum(np.abs(self.coeffs)))


def pack_operator(op: PauliOperator) -> PackedOperator:
    strings = [s for _, s in op.terms]
    perms, phases = pack_strings(strings, op.n_qubits)
    coeffs = np.array([c for c, _ in op.terms], dtype=complex)
    return PackedOperator(op.n_qubits, perms, phases, coeffs)


def apply_operator(op: PauliOperator, state: StateVector) -> StateVector:
    """Apply a sum of strings to a state via bit-mask index arithmetic."""
    if op.n_qubits != state.n_qubits:
        raise ValueError("qubit counts differ")
    from . import _kernels

    if not op.terms:
        return StateVector(op.n_qubits, np.zeros_like(state.amplitudes))
    packed = pack_operator(op)
    out = _kernels.apply_terms(
        packed.perms, packed.phases, packed.coeffs, state.amplitudes
    )
    return StateVector(op.n_qubits, out)


def to_dense(op: PauliOperator) -> np.ndarray:
    """Dense matrix, sum of coefficient-weighted letter tensor products.

    Exponential in qubit count by construction; guarded at 12 qubits.
    """
    if op.n_qubits > 12:
        raise ValueError(
            f"dense form of {op.n_qubits}-qubit operator would need "
            f"{(1 << op.n_qubits)**2} entries; limit is 12 qubits"
        )
    dim = 1 << op.n_qubits
    out = np.zeros((dim, dim), dtype=complex)
    for coeff, string in op.terms:
        out += coeff * string.dense()
    return out


def format_operator(op: PauliOperator) -> str:
    """Text dump, one term per line: ``coeff_re coeff_im letters``."""
    lines = [
        f"{c.real:+.17e} {c.imag:+.17e} {s.label}" for c, s in op.terms
    ]
    return "\n".join(lines) + ("\n" if lines else "")


def parse_operator(text: str) -> PauliOperator:
    """Inverse of :func:`format_operator`."""
    terms = []
    n_qubits = None
    for ln, line in enumerate(text.splitlines(), start=1):
        line = line.strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) != 3:
            raise ValueError(f"line {ln}: expected 're im letters', got {line!r}")
        re_s, im_s, label = parts
        if n_qubits is None:
            n_qubits = len(label)
        terms.append(
            (float(re_s) + 1.0j * float(im_s), PauliString.from_label(label))
        )
    if n_qubits is None:
        raise ValueError("empty operator dump")
    return PauliOperator.from_terms(n_qubits, terms)
