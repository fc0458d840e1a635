"""Pauli algebra and statevector checks.

Oracles are built independently of the module under test: dense matrices come
from explicit numpy.kron chains over literal 2x2 arrays, so string products,
operator application, and packing are all cross-checked against plain matrix
arithmetic.
"""

import numpy as np
import pytest

from excitonspec import _kernels
from excitonspec.pauli import (
    COEFF_TOL,
    PauliOperator,
    PauliString,
    StateVector,
    apply_operator,
    format_operator,
    inner,
    mul_strings,
    pack_operator,
    pack_strings,
    parse_operator,
    to_dense,
)

SIGMA = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}


def dense_oracle(letters):
    """kron chain with qubit 1 as the least-significant factor."""
    out = np.array([[1.0 + 0j]])
    for p in reversed(letters):
        out = np.kron(out, SIGMA[p])
    return out


def random_string(rng, n):
    return PauliString(n, tuple(rng.choice(list("IXYZ")) for _ in range(n)))


def random_operator(rng, n, n_terms, hermitian=False):
    terms = []
    for _ in range(n_terms):
        c = complex(rng.normal(), 0.0 if hermitian else rng.normal())
        terms.append((c, random_string(rng, n)))
    return PauliOperator.from_terms(n, terms)


def random_state(rng, n):
    amp = rng.normal(size=1 << n) + 1j * rng.normal(size=1 << n)
    return StateVector(n, amp / np.linalg.norm(amp))


class TestPauliString:
    def test_masks_and_label(self):
        s = PauliString.from_label("XZYI")
        assert s.label == "XZYI"
        # qubit 1 = X -> bit 0 of x_mask; qubit 3 = Y -> bits 2 of both masks
        assert s.x_mask == 0b0101
        assert s.z_mask == 0b0110
        assert s.weight == 3

    def test_single_and_identity(self):
        assert PauliString.single(3, 2, "Z").label == "IZI"
        assert PauliString.identity(2).label == "II"

    def test_dense_ordering(self):
        # Z on qubit 1 of two qubits: diag over index bit 0 -> (1,-1,1,-1)
        z1 = PauliString.from_label("ZI").dense()
        assert np.allclose(np.diag(z1), [1, -1, 1, -1])
        z2 = PauliString.from_label("IZ").dense()
        assert np.allclose(np.diag(z2), [1, 1, -1, -1])

    def test_validation(self):
        with pytest.raises(ValueError):
            PauliString(2, ("X",))
        with pytest.raises(ValueError):
            PauliString(1, ("Q",))


class TestMulStrings:
    def test_xy_gives_iz(self):
        phase, s = mul_strings(
            PauliString.from_label("X"), PauliString.from_label("Y")
        )
        assert phase == 1j and s.label == "Z"

    def test_identity_absorbs(self):
        a = PauliString.from_label("IZ")
        e = PauliString.from_label("II")
        phase, s = mul_strings(a, e)
        assert phase == 1.0 and s.label == "IZ"

    def test_against_dense_products(self):
        rng = np.random.default_rng(7)
        for _ in range(200):
            n = int(rng.integers(1, 6))
            a, b = random_string(rng, n), random_string(rng, n)
            phase, c = mul_strings(a, b)
            assert phase in (1, -1, 1j, -1j)
            lhs = dense_oracle(a.letters) @ dense_oracle(b.letters)
            assert np.allclose(lhs, phase * dense_oracle(c.letters), atol=1e-14)

    def test_size_mismatch(self):
        with pytest.raises(ValueError):
            mul_strings(PauliString.from_label("X"), PauliString.from_label("XX"))


class TestPauliOperator:
    def test_canonicalization_merges_and_drops(self):
        x = PauliString.from_label("X")
        op = PauliOperator.from_terms(1, [(1.0, x), (1.0, x), (1e-16, PauliString.from_label("Z"))])
        assert op.n_terms == 1
        assert op.coefficient(x) == 2.0

    def test_canonical_order_deterministic(self):
        terms = [(1.0, PauliString.from_label(l)) for l in ("ZZ", "IX", "YI")]
        op = PauliOperator.from_terms(2, terms)
        assert [s.label for _, s in op.terms] == ["IX", "YI", "ZZ"]

    def test_cancellation(self):
        x = PauliString.from_label("X")
        op = PauliOperator.from_terms(1, [(1.0, x), (-1.0, x)])
        assert op.n_terms == 0
        assert np.allclose(to_dense(op), 0.0)

    def test_adjoint_matches_dense_conjugate_transpose(self):
        rng = np.random.default_rng(29)
        for _ in range(20):
            op = random_operator(rng, 2, 5)
            assert np.allclose(
                to_dense(op.adjoint()), to_dense(op).conj().T, atol=1e-14
            )

    def test_adjoint_of_hermitian_is_itself(self):
        op = PauliOperator.from_terms(
            2,
            [(1.5, PauliString.from_label("XZ")), (-0.5, PauliString.from_label("YY"))],
        )
        assert op.adjoint().terms == op.terms

    def test_arithmetic_matches_dense(self):
        rng = np.random.default_rng(11)
        a = random_operator(rng, 3, 5)
        b = random_operator(rng, 3, 4)
        assert np.allclose(to_dense(a + b), to_dense(a) + to_dense(b))
        assert np.allclose(to_dense(2.5j * a), 2.5j * to_dense(a))
        assert np.allclose(to_dense(a @ b), to_dense(a) @ to_dense(b))

    def test_hermitian_flag_matches_dense(self):
        rng = np.random.default_rng(13)
        for _ in range(20):
            herm = bool(rng.integers(0, 2))
            op = random_operator(rng, 3, 6, hermitian=herm)
            dense = to_dense(op)
            dense_herm = np.allclose(dense, dense.conj().T, atol=1e-12)
            assert op.is_hermitian() == dense_herm

    def test_dense_guard(self):
        op = PauliOperator.from_terms(13, [(1.0, PauliString.identity(13))])
        with pytest.raises(ValueError):
            to_dense(op)


class TestStateVector:
    def test_basis_state(self):
        s = StateVector.basis_state(2, 2)
        assert np.allclose(s.amplitudes, [0, 0, 1, 0])
        assert s.norm == 1.0

    def test_immutable(self):
        s = StateVector.basis_state(1, 0)
        with pytest.raises(ValueError):
            s.amplitudes[0] = 2.0

    def test_inner(self):
        a = StateVector(1, np.array([1j, 0.0]))
        b = StateVector(1, np.array([1.0, 0.0]))
        # conjugate-linear in the bra
        assert inner(a, b) == pytest.approx(-1j)
        assert inner(b, a) == pytest.approx(1j)


class TestApplyOperator:
    def test_z_eigenstate(self):
        z = PauliOperator.from_terms(1, [(1.0, PauliString.from_label("Z"))])
        s0 = StateVector.basis_state(1, 0)
        s1 = StateVector.basis_state(1, 1)
        assert np.allclose(apply_operator(z, s0).amplitudes, s0.amplitudes)
        assert np.allclose(apply_operator(z, s1).amplitudes, -s1.amplitudes)

    def test_x_flips(self):
        x2 = PauliOperator.from_terms(2, [(1.0, PauliString.from_label("IX"))])
        s = StateVector.basis_state(2, 0)
        assert np.allclose(apply_operator(x2, s).amplitudes, StateVector.basis_state(2, 2).amplitudes)

    def test_y_phase(self):
        y = PauliOperator.from_terms(1, [(1.0, PauliString.from_label("Y"))])
        s0 = StateVector.basis_state(1, 0)
        assert np.allclose(apply_operator(y, s0).amplitudes, [0.0, 1j])

    def test_against_dense_random(self):
        rng = np.random.default_rng(23)
        for _ in range(100):
            n = int(rng.integers(1, 5))
            op = random_operator(rng, n, int(rng.integers(1, 8)))
            s = random_state(rng, n)
            expected = to_dense(op) @ s.amplitudes
            got = apply_operator(op, s).amplitudes
            assert np.allclose(got, expected, atol=1e-12)

    def test_zero_operator(self):
        op = PauliOperator.zero(2)
        s = StateVector.basis_state(2, 1)
        assert np.allclose(apply_operator(op, s).amplitudes, 0.0)

    def test_linearity_under_canonicalization(self):
        # raw duplicate terms and their canonical merge act identically
        rng = np.random.default_rng(29)
        x = PauliString.from_label("XI")
        raw = PauliOperator(2, ((0.5, x), (0.25, x)))
        canon = PauliOperator.from_terms(2, [(0.75, x)])
        s = random_state(rng, 2)
        assert np.allclose(
            apply_operator(raw, s).amplitudes, apply_operator(canon, s).amplitudes
        )


class TestPacking:
    def test_pack_strings_action(self):
        rng = np.random.default_rng(31)
        for _ in range(50):
            n = int(rng.integers(1, 6))
            s = random_string(rng, n)
            perms, phases = pack_strings([s], n)
            v = random_state(rng, n).amplitudes
            got = phases[0] * v[perms[0]]
            assert np.allclose(got, dense_oracle(s.letters) @ v, atol=1e-13)

    def test_apply_terms_batch(self):
        rng = np.random.default_rng(37)
        op = random_operator(rng, 3, 5)
        packed = pack_operator(op)
        batch = np.stack([random_state(rng, 3).amplitudes for _ in range(4)])
        got = _kernels.apply_terms(packed.perms, packed.phases, packed.coeffs, batch)
        dense = to_dense(op)
        for i in range(4):
            assert np.allclose(got[i], dense @ batch[i], atol=1e-12)

    def test_expm_apply_against_scipy(self):
        from scipy.linalg import expm

        rng = np.random.default_rng(41)
        for _ in range(10):
            n = int(rng.integers(1, 4))
            op = random_operator(rng, n, 4, hermitian=True)
            packed = pack_operator(op)
            v = random_state(rng, n).amplitudes
            alpha = -0.3j
            got = _kernels.expm_apply(
                packed.perms, packed.phases, packed.coeffs, v, alpha
            )
            expected = expm(alpha * to_dense(op)) @ v
            assert np.allclose(got, expected, atol=1e-12)


class TestTextFormat:
    def test_round_trip(self):
        rng = np.random.default_rng(43)
        op = random_operator(rng, 3, 6)
        text = format_operator(op)
        back = parse_operator(text)
        assert back.n_qubits == op.n_qubits
        assert np.allclose(to_dense(back), to_dense(op), atol=1e-15)

    def test_layout(self):
        op = PauliOperator.from_terms(2, [(1.5 - 0.25j, PauliString.from_label("XZ"))])
        line = format_operator(op).strip()
        re_s, im_s, label = line.split()
        assert float(re_s) == 1.5 and float(im_s) == -0.25 and label == "XZ"

    def test_parse_errors(self):
        with pytest.raises(ValueError):
            parse_operator("1.0 0.0\n")
        with pytest.raises(ValueError):
            parse_operator("")
