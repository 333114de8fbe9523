"""Exact diagonalization for a ring of resonators with interleaved qubits.

Each qubit sits between two resonators and exchanges excitations with
both, so photon transport is mediated entirely by the qubits.  The
package enumerates fixed-excitation sectors, builds the sparse
Hamiltonian, finds the lowest eigenpairs, and derives the quantities
that witness the localized-to-extended crossover: excitation and charge
gaps, photonic one-particle coherence, filling staircases, and phase
boundaries in the chemical potential.
"""

__version__ = "0.1.0"

from .analysis import (
    EstimateError,
    ExtrapolationError,
    GceConfig,
    couplings_from_lambda,
    critical_mus,
    critical_ratio_estimate,
    delta_eps,
    density_curve,
    dressed_coefficients,
    effective_U,
    extrapolate,
    extrapolated_charge_gap,
    gce_ground,
    hopping_element,
    jc_spectrum,
    phase_diagram_delta,
    phase_diagram_lambda,
    rabi_splitting,
)
from .basis import (
    DEFAULT_DIMENSION_CAP,
    DimensionCapError,
    SectorBasis,
    SectorError,
    enumerate_sector,
    sector_dimension,
)
from .config import ConfigError, parse_file, parse_text
from .eigensolver import (
    EigenConfig,
    GroundState,
    NoConvergenceError,
    SolveCache,
    ground_energy,
    lowest_eigenpairs,
    solve_sector,
)
from .hamiltonian import (
    LadderMap,
    MatrixFreeHamiltonian,
    SparseOperator,
    build_hamiltonian,
    build_ladder,
    dump_coo,
)
from .model import LatticeParams, ParameterError, swap_couplings, validate
from .observables import (
    GapRecord,
    Rho1Profile,
    gaps,
    photon_occupation,
    qubit_correlation,
    qubit_occupation,
    quadrature_correlation,
    rho1,
    rho1_profile,
    total_excitation,
)
from .sweep import SweepResult, SweepSpec, run

__all__ = [
    "__version__",
    "DEFAULT_DIMENSION_CAP",
    "ConfigError",
    "DimensionCapError",
    "EigenConfig",
    "EstimateError",
    "ExtrapolationError",
    "GapRecord",
    "GceConfig",
    "GroundState",
    "LadderMap",
    "LatticeParams",
    "MatrixFreeHamiltonian",
    "NoConvergenceError",
    "ParameterError",
    "Rho1Profile",
    "SectorBasis",
    "SectorError",
    "SolveCache",
    "SparseOperator",
    "SweepResult",
    "SweepSpec",
    "build_hamiltonian",
    "build_ladder",
    "couplings_from_lambda",
    "critical_mus",
    "critical_ratio_estimate",
    "delta_eps",
    "density_curve",
    "dressed_coefficients",
    "dump_coo",
    "effective_U",
    "enumerate_sector",
    "extrapolate",
    "extrapolated_charge_gap",
    "gaps",
    "gce_ground",
    "ground_energy",
    "hopping_element",
    "jc_spectrum",
    "lowest_eigenpairs",
    "parse_file",
    "parse_text",
    "phase_diagram_delta",
    "phase_diagram_lambda",
    "photon_occupation",
    "qubit_correlation",
    "qubit_occupation",
    "quadrature_correlation",
    "rabi_splitting",
    "rho1",
    "rho1_profile",
    "run",
    "sector_dimension",
    "solve_sector",
    "swap_couplings",
    "total_excitation",
]
