"""sfqsim: pulse-level simulation of SFQ-driven transmon qubit control.

Subpackages cover the d-level transmon core (kicks, free evolution,
decoherence channels), SFQ pulse scheduling and Clifford compilation, the
experiment suite (Rabi, chevron, Ramsey, polar Rabi, staircase), randomized
benchmarking with depolarizing fits, and the quasiparticle poisoning model
(generation per phase slip, trapping, decay-law fits, loss-dispersion ratio).
"""

__version__ = "0.1.0"

from .backend import backend_name, set_backend
from .engine import Physics, Timeline, paper_device, simulate
from .transmon import (
    CouplingParams,
    DecoherenceParams,
    DensityMatrix,
    TransmonParams,
    apply_decoherence,
    delta_theta,
    free_evolve,
    level_energies,
    sfq_kick,
)
from .sequencer import (
    CliffordSequence,
    GateDef,
    PulseTrain,
    axis_angle,
    calibrate_gate,
    compile_clifford,
    count_phase_slips,
    make_gate,
    make_gateset,
    pulse_times,
)
from .quasiparticles import (
    DispersionParams,
    QPDecayModel,
    QPModel,
    decay_law,
    dispersion_ratio,
    fit_decay,
    qp_added,
    qp_relax,
    qp_trajectory,
    rates_from_nqp,
)
from .experiments import (
    ExperimentResult,
    SweepSpec,
    run_chevron,
    run_rabi,
    run_rabi_bias,
    run_rabi2d,
    run_ramsey,
    run_staircase,
)
from .rb import (
    DepolarizingFit,
    RBConfig,
    extract_fidelity,
    fit_depolarizing,
    generate_rb_sequence,
    run_rb,
)
