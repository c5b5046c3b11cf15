"""Perfect discrimination of single-qubit unitaries: protocol synthesis, waveplate
compilation and photon-counting simulation."""

from .arc import ArcResult, DiscriminationPlan, eigenphase_arc, min_runs
from .parallel import ParallelProtocol, ResourceReport, build_parallel, compare_schemes, feasible_weights
from .photonsim import CountReport, NoiseModel, avg_process_fidelity, click_probabilities, noise_sweep, run_trials
from .qmat import EigenPair, eigenphases_2x2, phase_invariant_distance, tensor_power, unitary_check
from .sequential import SequentialProtocol, aux_rotation_angle, build_sequential, verify_protocol
from .waveplate import (
    Convention,
    OpticalTrain,
    PlateSetting,
    calibrate_convention,
    compile_measurement,
    compile_protocol,
    compile_state_prep,
    compile_unitary,
    evaluate_stage,
    plate_matrix,
)

__version__ = "0.1.0"
