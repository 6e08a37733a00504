"""Intent-to-trajectory pipeline for spacecraft proximity operations."""

from proxops.graph import (
    BehaviorSequence,
    WaypointPlan,
    domain_of,
    nearest_domain,
    sample_campaign,
    sample_heuristic_waypoints,
    sequence_feasible,
)
from proxops.harness import (
    ConfigError,
    EvalReport,
    default_config,
    evaluate_end_to_end,
    evaluate_grid,
    evaluate_waypoint_policy,
    generate_policy_dataset,
    load_config,
    train_waypoint_policy,
)
from proxops.orbits import (
    J2_EARTH,
    MU_EARTH,
    R_EARTH,
    Impulse,
    OrbitalElements,
    RoeState,
    RtnState,
    control_input_matrix,
    mean_motion,
    orbital_period,
    propagate,
    propagate_chief,
    roe_to_rtn,
    rtn_range,
    stm,
)
from proxops.pipeline import (
    PlanOutcome,
    ScenarioSpec,
    SolveContext,
    sample_scenario,
    solve_plan,
    solve_scenario_plan,
)
from proxops.policy import WaypointPolicy, infer, load_weights, save_weights
from proxops.reasoning import (
    ReasoningInput,
    ReasoningOutput,
    build_reasoning_dataset,
    generate_candidates,
    heuristic_reason,
    llm_reason,
    make_client,
)
from proxops.rewards import MetricVector, Trajectory, composite_reward, metric_vector
from proxops.scp import MissionSpec, ScpConfig, solve_mission, solve_phase

__all__ = [
    "J2_EARTH",
    "MU_EARTH",
    "R_EARTH",
    "BehaviorSequence",
    "ConfigError",
    "EvalReport",
    "Impulse",
    "MetricVector",
    "MissionSpec",
    "OrbitalElements",
    "PlanOutcome",
    "ReasoningInput",
    "ReasoningOutput",
    "RoeState",
    "RtnState",
    "ScenarioSpec",
    "ScpConfig",
    "SolveContext",
    "Trajectory",
    "WaypointPlan",
    "WaypointPolicy",
    "build_reasoning_dataset",
    "composite_reward",
    "control_input_matrix",
    "default_config",
    "domain_of",
    "evaluate_end_to_end",
    "evaluate_grid",
    "evaluate_waypoint_policy",
    "generate_candidates",
    "generate_policy_dataset",
    "heuristic_reason",
    "infer",
    "llm_reason",
    "load_config",
    "load_weights",
    "make_client",
    "mean_motion",
    "metric_vector",
    "nearest_domain",
    "orbital_period",
    "propagate",
    "propagate_chief",
    "roe_to_rtn",
    "rtn_range",
    "sample_campaign",
    "sample_heuristic_waypoints",
    "sample_scenario",
    "save_weights",
    "sequence_feasible",
    "solve_mission",
    "solve_phase",
    "solve_plan",
    "solve_scenario_plan",
    "stm",
    "train_waypoint_policy",
]

__version__ = "0.1.0"
