"""Robust malware-filtering control laboratory.

Synthesizes worst-case-optimal dynamic packet-filtering controllers for a
linear network traffic model and evaluates them against heuristic and LQG
alternatives in a fluid-flow simulator and a packet-level simulator.
"""

from .model import SystemMatrices, ValidationError, network_system, propagation_matrix
from .riccati import (
    RiccatiSolution,
    SolverFailure,
    SynthesisInfeasible,
    find_gamma_star,
    solve_controller_gare,
    solve_estimator_gare,
    solve_gares,
    spectral_radius,
)
from .controllers import (
    ControllerPolicy,
    HinfController,
    load_gains,
    make_policy,
    policy_output,
    save_gains,
    step_estimator,
    synthesize_decentralized,
    synthesize_hinf,
    synthesize_lqg,
    worst_case_disturbance,
)
from .fluidsim import (
    AttackSpec,
    NetworkState,
    NoiseSpec,
    SimTrace,
    attack_spec,
    cost_ratio,
    run_scenario,
    write_trace_csv,
)
from .packetsim import (
    FilterState,
    Packet,
    PacketSimTrace,
    ScoreModel,
    calibrated_score_model,
    run_packet_scenario,
    score_packet,
    translate_rate_to_threshold,
)
from .config import ScenarioConfig, load_config, write_config
from .batch import emit_figure_data, run_batch, run_cell

__version__ = "0.1.0"
