"""Finite-dimensional consistent-histories engine."""

__version__ = "0.1.0"

from .decoherence import (
    ConsistencyReport,
    DecoherenceMatrix,
    InterferenceRecord,
    ProbabilityTable,
    check_consistency,
    collapse_oracle,
    decoherence_matrix,
    interference_decomposition,
    probabilities,
    time_symmetric_decoherence_matrix,
    validate_generalized_functional,
)
from .families import (
    FamilyRelationReport,
    are_compatible,
    common_refinement,
    find_obstruction,
    is_refinement,
)
from .histories import (
    ChainOperator,
    History,
    HistoryFamily,
    QuantumEvent,
    TemporalSupport,
    branch_dependent_family,
    chain_operator,
    coarse_grain,
    coarse_label_blocks,
    completeness_check,
    drop_identity_times,
    partition_matrix,
    product_family,
)
from .kinematics import (
    DecompositionOfUnity,
    DensityOperator,
    Dynamics,
    HilbertSpace,
    Projector,
    bloch_state,
    heisenberg_projector,
    mixed_state,
    propagator,
    pure_state,
    spin_decomposition,
    validate_decomposition,
)
from .matrix_core import Tolerance
from .scenarios import Scenario, load_scenario, save_scenario

__all__ = [name for name in dir() if not name.startswith("_")]
