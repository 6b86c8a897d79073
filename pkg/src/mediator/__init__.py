"""Simulate probe-mediator-probe dynamics and test correlations against decomposability bounds."""

__version__ = "0.1.0"

from .core import (
    DensityOperator,
    StateVector,
    SystemLayout,
    bosonic_annihilation,
    displacement,
    max_entangled_state,
    partial_trace,
    partial_transpose,
    qubit_ladder,
    spectral_decompose,
    tensor_product,
)
from .correlations import (
    CorrelationTrajectory,
    MeasureKind,
    classical_lower_bound,
    correlation_capacity,
    dimension_witness,
    discord_lower_bound,
    evaluate_trajectory,
    initial_correlation_term,
    mutual_information,
    negativity,
    von_neumann_entropy,
)
from .dynamics import (
    HamiltonianSpec,
    LindbladSpec,
    TimeGrid,
    build_dipole_hamiltonian,
    build_jc_hamiltonian,
    commutator_norm,
    evolve_unitary,
    lindblad_evolve,
    total_excitation_operator,
    trotter_evolve,
)
