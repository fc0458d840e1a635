"""Numerical hot-loop kernels with two interchangeable backends.

``_core`` is a compiled Cython extension; ``_numpy`` is a vectorized
pure-numpy twin with identical semantics.  The compiled backend is used when
the extension imported successfully, unless ``EXCITONSPEC_KERNELS=numpy`` is
set or :func:`set_backend` is called.  All kernel functions take plain
numpy arrays (packed Pauli actions from :func:`excitonspec.pauli.pack_strings`)
so both backends stay trivially swappable.
"""

from __future__ import annotations

import os

from . import _numpy

try:  # pragma: no cover - exercised only when the extension is built
    from . import _core
except ImportError:  # pragma: no cover
    _core = None

_BACKENDS = {"numpy": _numpy}
if _core is not None:
    _BACKENDS["compiled"] = _core

_requested = os.environ.get("EXCITONSPEC_KERNELS", "")
if _requested and _requested not in _BACKENDS:
    raise ImportError(
        f"EXCITONSPEC_KERNELS={_requested!r} but available backends are "
        f"{sorted(_BACKENDS)}"
    )
_active = _requested or ("compiled" if _core is not None else "numpy")


def available_backends() -> tuple[str, ...]:
    return tuple(sorted(_BACKENDS))


def get_backend() -> str:
    return _active


def set_backend(name: str) -> None:
    """Switch kernel implementations (used by tests and benchmarks)."""
    global _active
    if name not in _BACKENDS:
        raise ValueError(f"unknown backend {name!r}; have {sorted(_BACKENDS)}")
    _active = name


def apply_terms(perms, phases, coeffs, psi):
    """out = sum_t coeffs[t] * phases[t] * psi[..., perms[t]]."""
    return _BACKENDS[_active].apply_terms(perms, phases, coeffs, psi)


def expm_apply(perms, phases, coeffs, psi, alpha, tol=1e-14, max_terms=128):
    """exp(alpha * H) @ psi by Taylor summation, H = sum_t coeffs[t] P_t."""
    return _BACKENDS[_active].expm_apply(
        perms, phases, coeffs, psi, alpha, tol, max_terms
    )


def exp_factors_apply(perms, phases, thetas, psi):
    """prod_k exp(i thetas[k] R_k) @ psi, factor k=0 applied first."""
    return _BACKENDS[_active].exp_factors_apply(perms, phases, thetas, psi)


def tangent_sweep(perms, phases, thetas, psi):
    """Ansatz state and all parameter derivatives in one forward sweep.

    Returns ``(psi_out, W)`` where ``psi_out = prod_k exp(i theta_k R_k) psi``
    and ``W[k] = d psi_out / d theta_k``.
    """
    return _BACKENDS[_active].tangent_sweep(perms, phases, thetas, psi)
