# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled statevector kernels; the typed twin of ``_numpy``.

Same functions, same argument order, same semantics.  States arrive as
``(dim,)`` vectors or ``(B, dim)`` batches of complex128; packed Pauli
actions are ``(T, dim)`` permutations (int64) with matching unit-modulus
phase tables.  The per-term gather loops here replace the numpy fancy-
indexing passes, which removes the temporary-array traffic that dominates
at statevector sizes of a few dozen amplitudes.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport cos, sin, sqrt

ctypedef cnp.int64_t idx_t
ctypedef double complex cplx


cdef void _terms_into(
    const idx_t[:, ::1] perms,
    const cplx[:, ::1] phases,
    const cplx[::1] coeffs,
    const cplx[:, ::1] psi,
    cplx[:, ::1] out,
) noexcept nogil:
    """out[b, j] = sum_t coeffs[t] * phases[t, j] * psi[b, perms[t, j]]."""
    cdef Py_ssize_t n_terms = perms.shape[0]
    cdef Py_ssize_t batch = psi.shape[0]
    cdef Py_ssize_t dim = psi.shape[1]
    cdef Py_ssize_t t, b, j
    cdef cplx c
    for b in range(batch):
        for j in range(dim):
            out[b, j] = 0
    for t in range(n_terms):
        c = coeffs[t]
        for b in range(batch):
            for j in range(dim):
                out[b, j] = out[b, j] + c * phases[t, j] * psi[b, perms[t, j]]


cdef double _scaled_terms_accumulate(
    const idx_t[:, ::1] perms,
    const cplx[:, ::1] phases,
    const cplx[::1] coeffs,
    const cplx[:, ::1] term_in,
    cplx[:, ::1] term_out,
    cplx[:, ::1] acc,
    cplx scale,
) noexcept nogil:
    """term_out = scale * H @ term_in; acc += term_out; returns ||term_out||^2."""
    cdef Py_ssize_t n_terms = perms.shape[0]
    cdef Py_ssize_t batch = term_in.shape[0]
    cdef Py_ssize_t dim = term_in.shape[1]
    cdef Py_ssize_t t, b, j
    cdef cplx c, v
    cdef double norm_sq = 0.0
    for b in range(batch):
        for j in range(dim):
            term_out[b, j] = 0
    for t in range(n_terms):
        c = scale * coeffs[t]
        for b in range(batch):
            for j in range(dim):
                term_out[b, j] = term_out[b, j] + c * phases[t, j] * term_in[b, perms[t, j]]
    for b in range(batch):
        for j in range(dim):
            v = term_out[b, j]
            acc[b, j] = acc[b, j] + v
            norm_sq += v.real * v.real + v.imag * v.imag
    return norm_sq


cdef void _rotate_rows(
    const idx_t[::1] perm,
    const cplx[::1] phase,
    double c,
    double s,
    cplx[:, ::1] rows,
    Py_ssize_t n_rows,
    cplx[::1] scratch,
) noexcept nogil:
    """rows[m] <- c * rows[m] + i s * phase * rows[m][perm] for m < n_rows."""
    cdef Py_ssize_t m, j
    cdef Py_ssize_t dim = perm.shape[0]
    cdef cplx i_s = 1.0j * s
    for m in range(n_rows):
        for j in range(dim):
            scratch[j] = c * rows[m, j] + i_s * phase[j] * rows[m, perm[j]]
        for j in range(dim):
            rows[m, j] = scratch[j]


cdef _as_batch(object psi):
    """View any state array as a C-contiguous (B, dim) complex batch."""
    arr = np.ascontiguousarray(psi, dtype=np.complex128)
    return arr, arr.reshape(-1, arr.shape[arr.ndim - 1])


def apply_terms(perms, phases, coeffs, psi):
    perms_arr = np.ascontiguousarray(perms, dtype=np.int64)
    phases_arr = np.ascontiguousarray(phases, dtype=np.complex128)
    coeffs_arr = np.ascontiguousarray(coeffs, dtype=np.complex128)
    arr, flat = _as_batch(psi)
    out = np.zeros_like(flat)
    _terms_into(perms_arr, phases_arr, coeffs_arr, flat, out)
    return out.reshape(arr.shape)


def expm_apply(perms, phases, coeffs, psi, alpha, tol=1e-14, max_terms=128):
    perms_arr = np.ascontiguousarray(perms, dtype=np.int64)
    phases_arr = np.ascontiguousarray(phases, dtype=np.complex128)
    coeffs_arr = np.ascontiguousarray(coeffs, dtype=np.complex128)
    arr, flat = _as_batch(psi)
    out = flat.copy()
    term = flat.copy()
    scratch = np.empty_like(flat)
    cdef double ref = np.linalg.norm(flat)
    cdef double threshold = tol * ref
    cdef cplx a = alpha
    cdef Py_ssize_t k
    cdef double norm_sq
    for k in range(1, max_terms + 1):
        norm_sq = _scaled_terms_accumulate(
            perms_arr, phases_arr, coeffs_arr, term, scratch, out, a / k
        )
        term, scratch = scratch, term
        if sqrt(norm_sq) <= threshold:
            return out.reshape(arr.shape)
    raise RuntimeError(
        f"Taylor series for exp(alpha*H) not converged in {max_terms} terms; "
        "reduce the step"
    )


def exp_factors_apply(perms, phases, thetas, psi):
    perms_arr = np.ascontiguousarray(perms, dtype=np.int64)
    phases_arr = np.ascontiguousarray(phases, dtype=np.complex128)
    thetas_arr = np.ascontiguousarray(thetas, dtype=np.float64)
    arr, flat = _as_batch(psi)
    out = flat.copy()
    cdef cplx[:, ::1] state = out
    cdef const idx_t[:, ::1] pv = perms_arr
    cdef const cplx[:, ::1] fv = phases_arr
    cdef const double[::1] tv = thetas_arr
    scratch_arr = np.empty(flat.shape[1], dtype=np.complex128)
    cdef cplx[::1] scratch = scratch_arr
    cdef Py_ssize_t k
    cdef Py_ssize_t n_gen = pv.shape[0]
    with nogil:
        for k in range(n_gen):
            _rotate_rows(
                pv[k], fv[k], cos(tv[k]), sin(tv[k]),
                state, state.shape[0], scratch,
            )
    return out.reshape(arr.shape)


def tangent_sweep(perms, phases, thetas, psi):
    perms_arr = np.ascontiguousarray(perms, dtype=np.int64)
    phases_arr = np.ascontiguousarray(phases, dtype=np.complex128)
    thetas_arr = np.ascontiguousarray(thetas, dtype=np.float64)
    state_arr = np.array(psi, dtype=np.complex128, order="C", copy=True)
    if state_arr.ndim != 1:
        raise ValueError("tangent_sweep expects a single state vector")
    cdef Py_ssize_t n_gen = perms_arr.shape[0]
    cdef Py_ssize_t dim = state_arr.shape[0]
    w_arr = np.empty((n_gen, dim), dtype=np.complex128)
    scratch_arr = np.empty(dim, dtype=np.complex128)

    cdef const idx_t[:, ::1] pv = perms_arr
    cdef const cplx[:, ::1] fv = phases_arr
    cdef const double[::1] tv = thetas_arr
    cdef cplx[:, ::1] w = w_arr
    cdef cplx[::1] scratch = scratch_arr
    cdef cplx[::1] state = state_arr
    cdef cplx[:, ::1] state_row = state_arr[None, :]
    cdef Py_ssize_t k, j
    cdef double c, s
    with nogil:
        for k in range(n_gen):
            c = cos(tv[k])
            s = sin(tv[k])
            _rotate_rows(pv[k], fv[k], c, s, state_row, 1, scratch)
            if k:
                _rotate_rows(pv[k], fv[k], c, s, w, k, scratch)
            for j in range(dim):
                w[k, j] = 1.0j * fv[k, j] * state[pv[k, j]]
    return state_arr, w_arr
