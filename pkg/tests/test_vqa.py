"""Tests for the McLachlan variational engine.

Oracles: dense matrix exponentials for the circuit map, central finite
differences for tangent vectors and the Gram matrix, and the exact
propagator for end-to-end evolution fidelity.
"""

import numpy as np
import pytest
from numpy.testing import assert_allclose
from scipy.linalg import expm

from excitonspec.constants import HBAR_EV_FS
from excitonspec.exact import propagate_array
from excitonspec.exceptions import NumericError
from excitonspec.grids import PropagationGrid
from excitonspec.pauli import (
    PauliOperator,
    PauliString,
    StateVector,
    to_dense,
)
from excitonspec.trajectory import TimeDependentOperator
from excitonspec.vqa import (
    Ansatz,
    ansatz_state,
    build_ansatz,
    evolve_variational,
    mclachlan_system,
    solve_step,
    tangent_state,
)


def random_state(rng, n_qubits):
    amps = rng.standard_normal(2**n_qubits) + 1j * rng.standard_normal(2**n_qubits)
    return StateVector(n_qubits, amps / np.linalg.norm(amps))


def random_hermitian(rng, n_qubits, n_terms):
    labels = set()
    while len(labels) < n_terms:
        labels.add("".join(rng.choice(list("IXYZ"), size=n_qubits)))
    coeffs = rng.standard_normal(len(labels))
    return PauliOperator.from_terms(
        n_qubits,
        [(c, PauliString.from_label(l)) for c, l in zip(coeffs, sorted(labels))],
    )


def dense_circuit_state(a, theta):
    """Product of dense exponentials, factor k = 0 applied first."""
    psi = a.initial_state.amplitudes.copy()
    for angle, generator in zip(theta, a.generators):
        psi = expm(1j * angle * generator.dense()) @ psi
    return psi


class TestBuildAnsatz:
    @pytest.mark.parametrize("n_qubits,count", [(1, 2), (2, 13), (3, 33), (4, 62)])
    def test_parameter_count(self, n_qubits, count):
        assert build_ansatz(n_qubits).n_parameters == count
        assert count == 2 * n_qubits + 9 * n_qubits * (n_qubits - 1) // 2

    def test_single_qubit_generators(self):
        a = build_ansatz(1)
        assert [g.label for g in a.generators] == ["X", "Z"]

    def test_two_qubit_ordering(self):
        a = build_ansatz(2)
        singles = ["XI", "ZI", "IX", "IZ"]
        pairs = [p + q for p in "XYZ" for q in "XYZ"]
        assert [g.label for g in a.generators] == singles + pairs

    def test_default_initial_state_is_ground(self):
        a = build_ansatz(2)
        assert_allclose(a.initial_state.amplitudes, [1, 0, 0, 0])

    def test_custom_initial_state(self):
        rng = np.random.default_rng(7)
        prepared = random_state(rng, 2)
        a = build_ansatz(2, prepared)
        assert_allclose(a.initial_state.amplitudes, prepared.amplitudes)

    def test_mismatched_initial_state_rejected(self):
        with pytest.raises(ValueError, match="initial state"):
            build_ansatz(2, StateVector.basis_state(3, 0))

    def test_empty_generators_rejected(self):
        with pytest.raises(ValueError, match="generator"):
            Ansatz(1, (), StateVector.basis_state(1, 0))


class TestAnsatzState:
    def test_zero_theta_is_initial_state(self):
        rng = np.random.default_rng(0)
        prepared = random_state(rng, 2)
        a = build_ansatz(2, prepared)
        out = ansatz_state(a, np.zeros(a.n_parameters))
        assert_allclose(out.amplitudes, prepared.amplitudes, atol=1e-15)

    def test_quarter_turn_x(self):
        a = build_ansatz(1)
        out = ansatz_state(a, [np.pi / 2, 0.0])
        assert_allclose(out.amplitudes, [0.0, 1.0j], atol=1e-14)

    def test_matches_dense_product(self):
        rng = np.random.default_rng(11)
        for n_qubits in (1, 2, 3):
            a = build_ansatz(n_qubits, random_state(rng, n_qubits))
            for _ in range(5):
                theta = rng.standard_normal(a.n_parameters)
                out = ansatz_state(a, theta)
                assert_allclose(
                    out.amplitudes, dense_circuit_state(a, theta), atol=1e-12
                )

    def test_application_order(self):
        # exp(i b Z) exp(i a X)|0> differs from the reverse order; the first
        # listed generator must act first.
        a = Ansatz(
            1,
            (PauliString.from_label("X"), PauliString.from_label("Z")),
            StateVector.basis_state(1, 0),
        )
        alpha, beta = 0.7, -0.4
        out = ansatz_state(a, [alpha, beta])
        x, z = a.generators[0].dense(), a.generators[1].dense()
        expected = expm(1j * beta * z) @ expm(1j * alpha * x) @ [1, 0]
        assert_allclose(out.amplitudes, expected, atol=1e-14)

    def test_preserves_norm(self):
        rng = np.random.default_rng(3)
        a = build_ansatz(3)
        for _ in range(10):
            theta = 3.0 * rng.standard_normal(a.n_parameters)
            assert abs(ansatz_state(a, theta).norm - 1.0) < 1e-12

    def test_wrong_length_rejected(self):
        a = build_ansatz(2)
        with pytest.raises(ValueError, match="parameters"):
            ansatz_state(a, np.zeros(5))


class TestTangentState:
    def test_matches_finite_difference(self):
        rng = np.random.default_rng(21)
        a = build_ansatz(2, random_state(rng, 2))
        theta = rng.standard_normal(a.n_parameters)
        eps = 1e-4
        for k in range(a.n_parameters):
            tangent = tangent_state(a, theta, k).amplitudes
            shift = np.zeros(a.n_parameters)
            shift[k] = eps
            numeric = (
                ansatz_state(a, theta + shift).amplitudes
                - ansatz_state(a, theta - shift).amplitudes
            ) / (2 * eps)
            assert np.linalg.norm(tangent - numeric) < 1e-6

    def test_last_generator_tangent_at_origin(self):
        # With theta = 0 every factor is the identity, so d/dtheta_k gives
        # i R_k acting on the prepared state.
        rng = np.random.default_rng(4)
        prepared = random_state(rng, 2)
        a = build_ansatz(2, prepared)
        for k in (0, 5, a.n_parameters - 1):
            tangent = tangent_state(a, np.zeros(a.n_parameters), k).amplitudes
            expected = 1j * a.generators[k].dense() @ prepared.amplitudes
            assert_allclose(tangent, expected, atol=1e-13)

    def test_single_generator_analytic(self):
        a = Ansatz(1, (PauliString.from_label("X"),), StateVector.basis_state(1, 0))
        theta = np.array([0.3])
        tangent = tangent_state(a, theta, 0).amplitudes
        x = a.generators[0].dense()
        expected = 1j * x @ expm(1j * 0.3 * x) @ [1, 0]
        assert_allclose(tangent, expected, atol=1e-14)

    def test_index_out_of_range(self):
        a = build_ansatz(1)
        with pytest.raises(ValueError, match="index"):
            tangent_state(a, np.zeros(2), 2)


class TestMcLachlanSystem:
    def test_single_x_generator_against_hand_values(self):
        # psi = exp(i theta X)|0>; at theta = 0 the tangent is i X|0> = i|1>,
        # so M = [[1]] and V = Im<iX 0|X|0>/hbar = -1/hbar.
        a = Ansatz(1, (PauliString.from_label("X"),), StateVector.basis_state(1, 0))
        h = PauliOperator.from_terms(1, [(1.0, PauliString.from_label("X"))])
        m, v = mclachlan_system(a, [0.0], h)
        assert_allclose(m, [[1.0]], atol=1e-14)
        assert_allclose(v, [-1.0 / HBAR_EV_FS], atol=1e-14)

    def test_identity_hamiltonian_drives_nothing_through_v_symmetry(self):
        # For H = c I, V_k = c Im<d_k psi|psi>/hbar; the norm of psi(theta)
        # is constant, so Re<d_k psi|psi> = 0 but the imaginary part is what
        # V sees — for the X generator on |0> it vanishes identically.
        a = Ansatz(1, (PauliString.from_label("X"),), StateVector.basis_state(1, 0))
        h = PauliOperator.from_terms(1, [(2.5, PauliString.identity(1))])
        for theta in (0.0, 0.4, -1.1):
            _, v = mclachlan_system(a, [theta], h)
            assert_allclose(v, [0.0], atol=1e-14)

    def test_gram_matrix_against_finite_difference(self):
        rng = np.random.default_rng(31)
        a = build_ansatz(2, random_state(rng, 2))
        theta = 0.5 * rng.standard_normal(a.n_parameters)
        h = random_hermitian(rng, 2, 4)
        m, _ = mclachlan_system(a, theta, h)
        eps = 1e-4
        tangents = []
        for k in range(a.n_parameters):
            shift = np.zeros(a.n_parameters)
            shift[k] = eps
            tangents.append(
                (
                    ansatz_state(a, theta + shift).amplitudes
                    - ansatz_state(a, theta - shift).amplitudes
                )
                / (2 * eps)
            )
        numeric = np.array(
            [[np.vdot(tk, tl).real for tl in tangents] for tk in tangents]
        )
        assert np.max(np.abs(m - numeric)) < 1e-6

    def test_driving_vector_against_dense_formula(self):
        rng = np.random.default_rng(32)
        a = build_ansatz(2, random_state(rng, 2))
        theta = 0.5 * rng.standard_normal(a.n_parameters)
        h = random_hermitian(rng, 2, 5)
        _, v = mclachlan_system(a, theta, h)
        h_dense = to_dense(h)
        psi = ansatz_state(a, theta).amplitudes
        expected = np.array(
            [
                np.vdot(tangent_state(a, theta, k).amplitudes, h_dense @ psi).imag
                / HBAR_EV_FS
                for k in range(a.n_parameters)
            ]
        )
        assert_allclose(v, expected, atol=1e-12)

    def test_gram_matrix_symmetric_positive_semidefinite(self):
        rng = np.random.default_rng(33)
        a = build_ansatz(2)
        h = random_hermitian(rng, 2, 3)
        for _ in range(5):
            theta = rng.standard_normal(a.n_parameters)
            m, _ = mclachlan_system(a, theta, h)
            assert_allclose(m, m.T, atol=1e-13)
            assert np.linalg.eigvalsh(m).min() > -1e-12

    def test_non_hermitian_rejected(self):
        a = build_ansatz(1)
        h = PauliOperator.from_terms(1, [(1.0j, PauliString.from_label("X"))])
        with pytest.raises(ValueError, match="non-real"):
            mclachlan_system(a, np.zeros(2), h)

    def test_qubit_mismatch_rejected(self):
        a = build_ansatz(1)
        h = PauliOperator.from_terms(2, [(1.0, PauliString.from_label("XI"))])
        with pytest.raises(ValueError, match="qubits"):
            mclachlan_system(a, np.zeros(2), h)


class TestSolveStep:
    def test_identity_system(self):
        v = np.array([0.3, -0.7, 1.1])
        out = solve_step(np.eye(3), v)
        assert_allclose(out, v, atol=1e-7)

    def test_zero_system_gives_zero(self):
        out = solve_step(np.zeros((2, 2)), np.zeros(2))
        assert_allclose(out, 0.0, atol=1e-15)

    def test_singular_gram_matrix_is_regularized(self):
        # Rank-1 M with V in its range: the regularized solution stays
        # finite and reproduces V after applying M.
        m = np.array([[1.0, 1.0], [1.0, 1.0]])
        v = np.array([2.0, 2.0])
        out = solve_step(m, v)
        assert np.all(np.isfinite(out))
        assert_allclose(m @ out, v, atol=1e-6)

    def test_explicit_regularization(self):
        m = np.array([[1.0]])
        v = np.array([1.0])
        out = solve_step(m, v, eps=1.0)
        assert_allclose(out, [0.5], atol=1e-12)


def constant_series(op):
    return TimeDependentOperator.constant(op)


def two_level_series(e_x, e_z, n_qubits=1):
    terms = [
        (e_x, PauliString.single(n_qubits, 1, "X")),
        (e_z, PauliString.single(n_qubits, 1, "Z")),
    ]
    return constant_series(PauliOperator.from_terms(n_qubits, terms))


def exact_reference(h, psi0, grid):
    return propagate_array(h, psi0, grid).states[:, 0, :]


def fidelities(trajectory, reference):
    overlaps = np.einsum("rd,rd->r", reference.conj(), trajectory.states)
    return np.abs(overlaps) ** 2


class TestEvolveVariational:
    def test_zero_hamiltonian_keeps_theta_zero(self):
        a = build_ansatz(2)
        h = constant_series(PauliOperator.zero(2))
        grid = PropagationGrid.window(1.0, 0.25, substep_fs=0.05)
        out = evolve_variational(h, a, grid)
        assert_allclose(out.thetas, 0.0, atol=1e-14)
        assert np.max(np.abs(out.states - a.initial_state.amplitudes)) < 1e-14

    def test_two_level_rabi_tracks_exact(self):
        # The {X, Z} two-parameter manifold covers the Bloch sphere but not
        # the global phase; the joint phase column must recover both the
        # fidelity and the complex amplitudes.
        a = build_ansatz(1)
        h = two_level_series(0.8, 1.9)
        grid = PropagationGrid.window(10.0, 0.5, substep_fs=0.005)
        out = evolve_variational(h, a, grid)
        reference = exact_reference(h, a.initial_state.amplitudes, grid)
        assert fidelities(out, reference).min() > 1.0 - 1e-6
        assert np.max(np.abs(out.states - reference)) < 1e-5

    def test_bare_flow_degrades_on_deficient_span(self):
        # Without the phase column the same system wastes tangent budget
        # chasing global phase and visibly loses the physical state — the
        # measured contrast that motivates the joint default.
        a = build_ansatz(1)
        h = two_level_series(0.8, 1.9)
        grid = PropagationGrid.window(10.0, 0.5, substep_fs=0.005)
        bare = evolve_variational(h, a, grid, phase_mode="none")
        reference = exact_reference(h, a.initial_state.amplitudes, grid)
        assert fidelities(bare, reference).min() < 0.99

    @pytest.mark.parametrize("phase_mode", ["joint", "none"])
    def test_monomer_tracks_exact_including_global_phase(self, phase_mode):
        # H = E|1><1| on the excited preparation: the exact state is
        # exp(-i E t / hbar)|1>, a pure phase.  Both phase conventions must
        # reproduce the full complex amplitude, not just its magnitude.
        energy = 4.5
        terms = [
            (0.5 * energy, PauliString.identity(1)),
            (-0.5 * energy, PauliString.from_label("Z")),
        ]
        h = constant_series(PauliOperator.from_terms(1, terms))
        a = build_ansatz(1, StateVector.basis_state(1, 1))
        grid = PropagationGrid.window(2.0, 0.1, substep_fs=0.002)
        out = evolve_variational(h, a, grid, phase_mode=phase_mode)
        expected = np.zeros((grid.n_records, 2), dtype=complex)
        expected[:, 1] = np.exp(-1j * energy * grid.record_times_fs / HBAR_EV_FS)
        assert np.max(np.abs(out.states - expected)) < 1e-6

    def test_phase_modes_agree_on_complete_tangent_space(self):
        # On a ground-state preparation the Z rotations already supply the
        # i*psi direction, so the explicit phase column is redundant and the
        # two modes must produce the same physical states.
        rng = np.random.default_rng(41)
        h = constant_series(random_hermitian(rng, 2, 6))
        a = build_ansatz(2)
        grid = PropagationGrid.window(2.0, 0.2, substep_fs=0.005)
        plain = evolve_variational(h, a, grid, phase_mode="none")
        joint = evolve_variational(h, a, grid, phase_mode="joint")
        assert np.max(np.abs(plain.states - joint.states)) < 1e-6

    def test_random_two_qubit_tracks_exact(self):
        rng = np.random.default_rng(42)
        h = constant_series(random_hermitian(rng, 2, 6))
        a = build_ansatz(2)
        grid = PropagationGrid.window(5.0, 0.5, substep_fs=0.005)
        out = evolve_variational(h, a, grid)
        reference = exact_reference(h, a.initial_state.amplitudes, grid)
        assert fidelities(out, reference).min() > 1.0 - 1e-6

    def test_time_dependent_hamiltonian_tracks_exact(self):
        # Linear ramp between two random Hermitian operators.
        rng = np.random.default_rng(43)
        start = random_hermitian(rng, 2, 5)
        stop = random_hermitian(rng, 2, 5)
        strings = sorted(
            {s.letters for _, s in start.terms} | {s.letters for _, s in stop.terms}
        )
        strings = tuple(PauliString(2, letters) for letters in strings)
        coeffs = np.array(
            [
                [start.coefficient(s) for s in strings],
                [stop.coefficient(s) for s in strings],
            ],
            dtype=complex,
        )
        h = TimeDependentOperator(2, strings, np.array([0.0, 4.0]), coeffs)
        a = build_ansatz(2)
        grid = PropagationGrid.window(4.0, 0.4, substep_fs=0.004)
        out = evolve_variational(h, a, grid)
        reference = exact_reference(h, a.initial_state.amplitudes, grid)
        assert fidelities(out, reference).min() > 1.0 - 1e-6

    def test_duplicate_generator_leaves_states_unchanged(self):
        # An overcomplete generator list changes the parameter path but not
        # the physical trajectory: the regularized solve picks the minimum
        # norm flow and the projected dynamics is gauge invariant.
        rng = np.random.default_rng(44)
        h = constant_series(random_hermitian(rng, 2, 5))
        base = build_ansatz(2)
        padded = Ansatz(
            2,
            base.generators + (base.generators[0],),
            base.initial_state,
        )
        grid = PropagationGrid.window(3.0, 0.3, substep_fs=0.005)
        out_base = evolve_variational(h, base, grid)
        out_padded = evolve_variational(h, padded, grid)
        assert np.max(np.abs(out_base.states - out_padded.states)) < 1e-6

    def test_euler_converges_to_rk4_result(self):
        a = build_ansatz(1)
        h = two_level_series(0.6, 1.2)
        fine = PropagationGrid.window(2.0, 0.2, substep_fs=0.0005)
        coarse = PropagationGrid.window(2.0, 0.2, substep_fs=0.005)
        euler = evolve_variational(h, a, fine, integrator="euler")
        rk4 = evolve_variational(h, a, coarse)
        assert np.max(np.abs(euler.states - rk4.states)) < 1e-3

    def test_residual_abort_raises(self):
        a = build_ansatz(1)
        h = two_level_series(0.8, 1.9)
        grid = PropagationGrid.window(1.0, 0.5, substep_fs=0.005)
        with pytest.raises(NumericError, match="residual"):
            evolve_variational(h, a, grid, residual_abort=0.0)

    def test_residuals_stay_tiny_for_overcomplete_ansatz(self):
        # V always lies in the range of M (both are built from the same
        # tangent vectors), so the regularized residual tracks eps * |theta_dot|.
        rng = np.random.default_rng(45)
        h = constant_series(random_hermitian(rng, 2, 6))
        a = build_ansatz(2)
        grid = PropagationGrid.window(2.0, 0.2, substep_fs=0.005)
        out = evolve_variational(h, a, grid)
        assert out.max_residual < 1e-6

    def test_trajectory_record_layout(self):
        a = build_ansatz(1)
        h = two_level_series(0.5, 1.0)
        grid = PropagationGrid.window(1.0, 0.25, substep_fs=0.05)
        out = evolve_variational(h, a, grid)
        assert out.n_records == grid.n_records
        assert_allclose(out.times_fs, grid.record_times_fs)
        assert_allclose(out.thetas[0], 0.0)
        assert out.phases[0] == 0.0
        bare = evolve_variational(h, a, grid, phase_mode="none")
        assert_allclose(bare.phases, 0.0)  # bare mode carries no phase
        assert out.diag_times_fs.size == grid.n_intervals * grid.substeps_per_record
        assert np.all(np.diff(out.diag_times_fs) > 0)
        assert out.state_at(0).n_qubits == 1

    def test_diagnostics_text_format(self):
        a = build_ansatz(1)
        h = two_level_series(0.5, 1.0)
        grid = PropagationGrid.window(0.2, 0.1, substep_fs=0.05)
        out = evolve_variational(h, a, grid)
        lines = out.diagnostics_text().strip().splitlines()
        assert len(lines) == out.diag_times_fs.size
        first = lines[0].split()
        assert len(first) == 3
        assert float(first[0]) == pytest.approx(0.0)
        assert float(first[1]) == pytest.approx(0.0)  # theta starts at zero

    def test_invalid_options_rejected(self):
        a = build_ansatz(1)
        h = two_level_series(0.5, 1.0)
        grid = PropagationGrid.window(1.0, 0.5, substep_fs=0.05)
        with pytest.raises(ValueError, match="integrator"):
            evolve_variational(h, a, grid, integrator="heun")
        with pytest.raises(ValueError, match="phase_mode"):
            evolve_variational(h, a, grid, phase_mode="global")
        h2 = constant_series(PauliOperator.zero(2))
        with pytest.raises(ValueError, match="qubits"):
            evolve_variational(h2, a, grid)
