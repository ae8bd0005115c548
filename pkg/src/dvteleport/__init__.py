"""Teleportation of single-photon (discrete-variable) qubits over lossy
two-mode squeezed vacuum resource channels.

Fock-space simulation of the homodyne (CV-BSM) and hybrid Bell-measurement
protocols, quantum-scissors / photon-catalysis distillation, imperfect
single-photon detectors, Bloch-averaged fidelity and success probability,
and reproducible parameter sweeps.
"""

from .fock import (
    CapacityError,
    DensityOperator,
    KetVector,
    ModeSpace,
    NullOutcome,
    apply_kraus,
    displacement_block,
    displacement_operator,
    fidelity_pure,
    fock_ket,
    partial_trace,
    project,
    tensor_product,
    vacuum_ket,
)
from .states import (
    DensityCharFn,
    QubitCharFn,
    TmsvParams,
    TwoModeGaussianCharFn,
    charfn_from_density,
    choose_truncation_dim,
    loss_channel,
    lossy_tmsv,
    lossy_tmsv_charfn,
    qubit_charfn,
    squeezing_from_db,
    squeezing_to_db,
    tmsv_charfn,
    tmsv_ket,
    transmissivity_from_db,
    transmissivity_to_db,
)
from .distill import (
    PcParams,
    QsParams,
    distill_both_modes,
    pc_charfn,
    photon_catalysis,
    quantum_scissors,
    quantum_scissors_inefficient,
    truncate_qubit_subspace,
)
from .bellmeas import (
    ArrayReport,
    ArraySpec,
    BellState,
    array_analyzer,
    bell_ket,
    correction_unitary,
    detector_loss_map,
    four_state_projection,
    splitter_matrix,
    two_state_hbsm,
    two_state_hbsm_inefficient,
)
from .teleport import (
    AverageResult,
    ProtocolConfig,
    ProtocolResult,
    QuadratureError,
    QubitSpec,
    average_fidelity,
    average_fidelity_cvbsm,
    classical_limit,
    classical_limit_bruteforce,
    cvbsm_fidelity,
    hbsm_teleport,
    optimize_parameter,
)
from .sweep import PRESETS, ResultRecord, SweepConfig, emit, preset, run_sweep

__version__ = "0.1.0"
