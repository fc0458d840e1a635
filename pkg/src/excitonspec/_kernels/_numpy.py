"""Pure-numpy kernel backend.

Every function here has a compiled twin in ``_core.pyx``; keep semantics and
argument order identical.  States may be a single vector ``(dim,)`` or a batch
``(B, dim)``; the batch axis is leading so per-term gathers stay contiguous.
"""

from __future__ import annotations

import numpy as np


def apply_terms(perms, phases, coeffs, psi):
    psi = np.asarray(psi)
    out = np.zeros_like(psi, dtype=complex)
    for t in range(perms.shape[0]):
        out += (coeffs[t] * phases[t]) * psi[..., perms[t]]
    return out


def expm_apply(perms, phases, coeffs, psi, alpha, tol=1e-14, max_terms=128):
    psi = np.asarray(psi, dtype=complex)
    out = psi.copy()
    term = psi.copy()
    ref = np.linalg.norm(out)
    for k in range(1, max_terms + 1):
        term = (alpha / k) * apply_terms(perms, phases, coeffs, term)
        out += term
        if np.linalg.norm(term) <= tol * ref:
            return out
    raise RuntimeError(
        f"Taylor series for exp(alpha*H) not converged in {max_terms} terms; "
        "reduce the step"
    )


def exp_factors_apply(perms, phases, thetas, psi):
    psi = np.asarray(psi, dtype=complex).copy()
    for k in range(perms.shape[0]):
        c = np.cos(thetas[k])
        s = np.sin(thetas[k])
        psi = c * psi + (1.0j * s) * (phases[k] * psi[..., perms[k]])
    return psi


def tangent_sweep(perms, phases, thetas, psi):
    n_gen, dim = perms.shape
    w = np.empty((n_gen, dim), dtype=complex)
    psi = np.asarray(psi, dtype=complex).copy()
    for k in range(n_gen):
        c = np.cos(thetas[k])
        s = np.sin(thetas[k])
        pk = perms[k]
        fk = phases[k]
        psi = c * psi + (1.0j * s) * (fk * psi[pk])
        if k:
            w[:k] = c * w[:k] + (1.0j * s) * (fk * w[:k, pk])
        w[k] = 1.0j * (fk * psi[pk])
    return psi, w
