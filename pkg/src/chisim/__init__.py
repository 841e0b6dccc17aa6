"""chisim: matrix-product-state circuit simulation with an entanglement budget."""

__version__ = "0.1.0"

from .mps import (
    MPS,
    EntropySnapshot,
    TruncationPolicy,
    amplitude,
    apply_single_qubit_gate,
    canonicalize,
    compress,
    entropy_profile,
    fidelity,
    inner,
    product_state,
    to_statevector,
)
from .mpo import MPO, GateSpec, apply_mpo, controlled_mpo, gate_mpo, mpo_to_dense, swap_mpo
from .circuits import (
    Circuit,
    EntropyMap,
    GroverProblem,
    build_aqft,
    build_counting_circuit,
    build_grover_circuit,
    build_grover_diffuser,
    build_grover_oracle,
    build_qft,
    build_random_state_circuit,
    grover_fidelity,
    invert,
    optimal_iterations,
    random_problem,
    run_circuit,
)
from .sampling import Histogram, NumericalFailureError, sample_histogram, sample_one
from .experiments import (
    ConfigError,
    ExperimentConfig,
    RunRecord,
    aqft_fidelity_sweep,
    aux_qubits,
    counting_experiment,
    crk_distance_stats,
    delta_m,
    estimate_m,
    estimate_m_argmax,
    grover_sweep,
    hilbert_fraction,
    qft_fidelity_sweep,
    required_chi,
    run_sweep,
)

__all__ = [name for name in dir() if not name.startswith("_")]
