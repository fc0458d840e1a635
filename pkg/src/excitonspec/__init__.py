"""excitonspec: linear absorption of fluctuating exciton aggregates.

Workflow: encode per-frame chromophore data as qubit Hamiltonians and dipole
operators, propagate dipole-kicked statevectors exactly or with a McLachlan
variational ansatz, accumulate dipole time-correlation functions, and Fourier
transform them into spectra.  See the README for the CLI front end.

The top-level namespace re-exports the working vocabulary of each layer;
the layer modules (:mod:`~excitonspec.pauli`, :mod:`~excitonspec.exciton`,
:mod:`~excitonspec.trajectory`, :mod:`~excitonspec.exact`,
:mod:`~excitonspec.vqa`, :mod:`~excitonspec.correlation`,
:mod:`~excitonspec.spectrum`, :mod:`~excitonspec.config`) hold the rest.
"""

from ._kernels import available_backends, get_backend, set_backend
from .config import JobConfig, parse_config
from .constants import DIPOLE_COUPLING_EV, HBAR_EV_FS
from .correlation import (
    EvolutionCache,
    TcfSeries,
    ensemble_average,
    isotropic_average,
    load_tcf,
    save_tcf,
    tcf_direct,
    tcf_small_lambda,
)
from .exact import ground_state, propagate, propagate_array
from .exceptions import (
    ConfigError,
    ExcitonSpecError,
    FileFormatError,
    NumericError,
)
from .exciton import (
    ChromophoreFrame,
    dipole_frenkel,
    dipole_full,
    encode_frenkel,
    frenkel_hamiltonian,
    frenkel_qubits,
    full_space_hamiltonian,
)
from .grids import PropagationGrid
from .pauli import (
    PauliOperator,
    PauliString,
    StateVector,
    apply_operator,
    inner,
    mul_strings,
    to_dense,
)
from .spectrum import (
    Spectrum,
    damped_fourier,
    load_spectrum,
    peak_analysis,
    save_spectrum,
    static_spectrum,
)
from .trajectory import (
    OUConfig,
    TimeDependentOperator,
    Trajectory,
    dipole_series,
    hamiltonian_series,
    load_trajectory,
    save_trajectory,
    synthesize_ou,
)
from .vqa import Ansatz, build_ansatz, evolve_variational

__version__ = "0.1.0"

__all__ = [
    "__version__",
    # constants and infrastructure
    "HBAR_EV_FS",
    "DIPOLE_COUPLING_EV",
    "available_backends",
    "get_backend",
    "set_backend",
    "ExcitonSpecError",
    "ConfigError",
    "NumericError",
    "FileFormatError",
    # operators and states
    "PauliString",
    "PauliOperator",
    "StateVector",
    "apply_operator",
    "inner",
    "mul_strings",
    "to_dense",
    # models
    "ChromophoreFrame",
    "full_space_hamiltonian",
    "dipole_full",
    "frenkel_hamiltonian",
    "frenkel_qubits",
    "encode_frenkel",
    "dipole_frenkel",
    # trajectories
    "Trajectory",
    "OUConfig",
    "synthesize_ou",
    "save_trajectory",
    "load_trajectory",
    "TimeDependentOperator",
    "hamiltonian_series",
    "dipole_series",
    # propagation
    "PropagationGrid",
    "ground_state",
    "propagate",
    "propagate_array",
    "Ansatz",
    "build_ansatz",
    "evolve_variational",
    # correlation functions
    "TcfSeries",
    "EvolutionCache",
    "tcf_direct",
    "tcf_small_lambda",
    "isotropic_average",
    "ensemble_average",
    "save_tcf",
    "load_tcf",
    # spectra
    "Spectrum",
    "damped_fourier",
    "static_spectrum",
    "peak_analysis",
    "save_spectrum",
    "load_spectrum",
    # jobs
    "JobConfig",
    "parse_config",
]
