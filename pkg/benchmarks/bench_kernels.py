"""Benchmark the statevector kernels across backends.

Times each kernel on workloads shaped like the simulations in this package
(2-4 qubits, tens of Pauli terms, thousands of repeated applications) plus
one larger statevector to show where the crossover lies.  Run as::

    python3 benchmarks/bench_kernels.py [--repeats 7] [--inner 200]

The compiled backend's advantage is largest for the variational tangent
sweep, whose per-factor work is far too small to amortize numpy's
temporary-array overhead.
"""

import argparse
import time

import numpy as np

from excitonspec._kernels import _BACKENDS, available_backends
from excitonspec.pauli import PauliString, pack_strings

LETTERS = np.array(["I", "X", "Y", "Z"])


def random_packed(rng, n_qubits, n_terms):
    strings = [
        PauliString(n_qubits, tuple(rng.choice(LETTERS, size=n_qubits)))
        for _ in range(n_terms)
    ]
    perms, phases = pack_strings(strings, n_qubits)
    coeffs = rng.normal(size=n_terms) + 1.0j * rng.normal(size=n_terms)
    return perms, phases, coeffs


def random_state(rng, dim):
    psi = rng.normal(size=dim) + 1.0j * rng.normal(size=dim)
    return psi / np.linalg.norm(psi)


def time_call(fn, repeats, inner):
    best = np.inf
    for _ in range(repeats):
        start = time.perf_counter()
        for _ in range(inner):
            fn()
        best = min(best, (time.perf_counter() - start) / inner)
    return best


def workloads(rng):
    for n_qubits, n_terms, n_gen, label in (
        (2, 6, 13, "dimer (2 qubits)"),
        (4, 24, 62, "aggregate (4 qubits)"),
        (8, 60, 100, "large (8 qubits)"),
    ):
        perms, phases, coeffs = random_packed(rng, n_qubits, n_terms)
        gen_perms, gen_phases, _ = random_packed(rng, n_qubits, n_gen)
        thetas = rng.normal(scale=0.3, size=n_gen)
        psi = random_state(rng, 2**n_qubits)
        yield label, {
            "apply_terms": lambda b: b.apply_terms(perms, phases, coeffs, psi),
            "expm_apply": lambda b: b.expm_apply(
                perms, phases, coeffs, psi, -0.05j
            ),
            "exp_factors": lambda b: b.exp_factors_apply(
                gen_perms, gen_phases, thetas, psi
            ),
            "tangent_sweep": lambda b: b.tangent_sweep(
                gen_perms, gen_phases, thetas, psi
            ),
        }


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeats", type=int, default=7)
    parser.add_argument("--inner", type=int, default=200)
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args()

    backends = available_backends()
    print(f"backends: {', '.join(backends)}")
    header = f"{'workload':<22}{'kernel':<15}" + "".join(
        f"{name:>12}" for name in backends
    )
    if len(backends) > 1:
        header += f"{'speedup':>10}"
    print(header)
    print("-" * len(header))

    rng = np.random.default_rng(args.seed)
    for label, kernels in workloads(rng):
        for kernel_name, call in kernels.items():
            row = f"{label:<22}{kernel_name:<15}"
            times = {}
            for backend_name in backends:
                backend = _BACKENDS[backend_name]
                times[backend_name] = time_call(
                    lambda: call(backend), args.repeats, args.inner
                )
                row += f"{times[backend_name] * 1e6:>10.1f}us"
            if "compiled" in times and "numpy" in times:
                row += f"{times['numpy'] / times['compiled']:>9.1f}x"
            print(row)
    print("\n(times are best-of-{} means over {} inner calls)".format(
        args.repeats, args.inner
    ))


if __name__ == "__main__":
    main()
