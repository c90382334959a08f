"""Cooperative pilot-spoofing attack design and evaluation toolkit."""

from .channel import (
    AttackInstance,
    ChannelRealization,
    SystemParams,
    build_detection_aware,
    build_unaware_known_user,
    build_unaware_unknown_user,
    dbm_to_linear,
    evaluate_snr,
    generate_channels,
    noncooperative_snr,
    objective,
    read_channels,
    write_channels,
)
from .detection import (
    DetectionModel,
    DetectorCase,
    detect_prob,
    evasion_power_cap,
    simulate_detector,
)
from .experiments import ExperimentSpec, ExperimentResult, Scenario, grid_search, run_experiment, timing_run
from .mm_admm import SolveResult, SolveStatus, SolverConfig, solve
from .sdr import SdpInstance, SdpSolution, build_sdp, extract_rank_one, rank_ratio, solve_sdp

__version__ = "0.1.0"
