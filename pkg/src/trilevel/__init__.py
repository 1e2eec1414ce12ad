"""Ground-state engine for three-level atoms coupled to one quantized field mode.

Three cross-validating descriptions of the same system: a semiclassical
coherent-state minimization, exact block diagonalization over the conserved
total excitation number, and an excitation-projected variational state.
"""

from .errors import (
    CapSaturatedError,
    ConfigError,
    ContractViolationError,
    DegenerateLevelsError,
    EmptyProjectionError,
    InvalidDetuningError,
    InvalidParametersError,
    LatticeBoundaryError,
    NotOnSeparatrixError,
    TrilevelError,
)
from .model import (
    LAMBDA,
    V,
    XI,
    AtomConfig,
    AtomKind,
    BasisState,
    BlockBasis,
    Detunings,
    ModelParams,
    block_dimension_cap,
    build_block_hamiltonian,
    enumerate_block_basis,
    lambdas_for,
    matter_matrix_element,
    matter_operator_matrix,
    omegas_from_detuning,
)
from .projected import (
    delta_n,
    m_dis,
    projected_norm,
    projected_photon_moments,
    projected_state_vector,
)
from .quantum import GroundResult, block_ground, eigensolve_symmetric, global_ground
from .semiclassical import (
    CoherentExpectations,
    CriticalPoint,
    LatticeSearch,
    MDistribution,
    TransitionReport,
    VariationalCoords,
    analytic_critical,
    classify_transition,
    coherent_expectations,
    critical_field_amplitude,
    energy_gradient_mu,
    energy_per_particle,
    m_distribution,
    minimize_lattice,
    reduced_energy,
    separatrix_margin,
)

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
