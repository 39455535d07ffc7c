"""Statevector VQE over parameterized subspaces: single-state, hard- and soft-orthogonal frames."""

from .ansatz import (
    AnsatzSpec,
    Frame,
    FrameEvaluator,
    FrameSpec,
    build_ansatz_circuit,
    hard_cost,
    materialize_frame,
    pairwise_overlaps,
    soft_cost,
)
from .errors import (
    CapabilityError,
    ConfigError,
    DegenerateSubspaceError,
    DomainError,
    InconsistentEstimateError,
    NumericalError,
)
from .estimator import (
    EstimationMode,
    GroundSolution,
    TruncatedProblem,
    estimate_hamiltonian_entry,
    estimate_hard_offdiagonals,
    estimate_overlap_entry,
    estimate_soft_problem,
    hadamard_test_state,
    solve_generalized,
)
from .hamiltonians import (
    LatticeGraph,
    ModelSpec,
    SpectrumResult,
    build_hamiltonian,
    build_lattice,
    dense_spectrum,
    extremal_spectrum,
    sample_ea_couplings,
    spectral_projector_overlap,
)
from .metrics import (
    bootstrap_median_error,
    cumulative_infidelity,
    gain_factors,
    htrc_fidelity,
    normalized_cost,
    subspace_fidelity,
)
from .optimizer import OptimizerConfig, RunTrace, init_parameters, nft_update, optimize
from .statevector import (
    Circuit,
    ControlledBlock,
    Gate,
    PauliString,
    PauliSumOperator,
    StateVector,
    apply_circuit,
    apply_gate,
    expectation,
    init_basis_state,
    inner_product,
    sample_ancilla,
)

__version__ = "0.1.0"
