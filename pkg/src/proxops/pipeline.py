"""Scenario sampling and the plan-to-trajectory solve path.

Shared plumbing for the decision layer, the evaluation harness and the HTTP
service: a scenario fixes the chief orbit, keep-out zone and uncertainty
scale; a waypoint plan then becomes a mission spec whose phases are solved
between fixed waypoints, and the resulting trajectory is scored.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from proxops.graph import (
    B_PLUSV_SAFE,
    C_PLUSV_AXIS,
    D_MINUSV_SAFE,
    DOMAIN_BOXES,
    E_MINUSV_AXIS,
    WaypointPlan,
)
from proxops.orbits import OrbitalElements, RoeState
from proxops.rewards import (
    DEFAULT_LAMBDA,
    INTENT_KEYS,
    MetricVector,
    TRAIN_SENTINEL,
    Trajectory,
    composite_reward,
    metric_vector,
    mission_trajectory,
    validate_intent,
)
from proxops.safety import KeepOutZone
from proxops.scp import N_MAX, MissionResult, MissionSegment, MissionSpec, ScpConfig, solve_mission
from proxops.uncertainty import UncertaintyConfig

DT = 900.0

# Reference chief orbit: near-circular LEO; only the mean anomaly varies
# between scenarios, on a fixed 20-point grid.
CHIEF_A = 6.73814e6
CHIEF_E = 5.581e-4
CHIEF_I = math.radians(51.64)
CHIEF_RAAN = math.radians(301.04)
CHIEF_ARGP = math.radians(26.18)
M_GRID = tuple(float(v) for v in np.linspace(0.0, 2.0 * np.pi, 20))

R_KOZ_CHOICES = (20.0, 30.0, 40.0)
BETA_CHOICES = (0.75, 1.0, 1.25, 1.5, 2.0)

# Campaigns never start from the central domain, so scenario starts exclude it.
START_DOMAINS = (B_PLUSV_SAFE, C_PLUSV_AXIS, D_MINUSV_SAFE, E_MINUSV_AXIS)


def chief_elements(mean_anomaly: float) -> OrbitalElements:
    return OrbitalElements(
        a=CHIEF_A, e=CHIEF_E, i=CHIEF_I, raan=CHIEF_RAAN, argp=CHIEF_ARGP, M=mean_anomaly
    )


@dataclass(frozen=True)
class ScenarioSpec:
    """One randomized evaluation scenario plus its derived child seed."""

    oe: OrbitalElements
    r_koz: float
    beta: float
    x0: RoeState
    intent: tuple[str, ...]
    seed: int
    index: int = 0

    def __post_init__(self):
        object.__setattr__(self, "intent", validate_intent(self.intent))
        if self.r_koz <= 0:
            raise ValueError(f"r_koz must be positive, got {self.r_koz}")
        if self.beta <= 0:
            raise ValueError(f"beta must be positive, got {self.beta}")

    def to_dict(self) -> dict:
        oe = self.oe
        return {
            "oe": {"a": oe.a, "e": oe.e, "i": oe.i, "raan": oe.raan, "argp": oe.argp, "M": oe.M},
            "r_koz": self.r_koz,
            "beta": self.beta,
            "x0": [float(v) for v in self.x0.as_array()],
            "intent": list(self.intent),
            "seed": int(self.seed),
            "index": int(self.index),
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "ScenarioSpec":
        return cls(
            oe=OrbitalElements(**{k: float(v) for k, v in doc["oe"].items()}),
            r_koz=float(doc["r_koz"]),
            beta=float(doc["beta"]),
            x0=RoeState.from_array(doc["x0"]),
            intent=tuple(doc["intent"]),
            seed=int(doc["seed"]),
            index=int(doc.get("index", 0)),
        )


def sample_scenario(
    global_seed: int,
    index: int,
    r_koz_choices=R_KOZ_CHOICES,
    beta_choices=BETA_CHOICES,
) -> ScenarioSpec:
    """Scenario number `index` of the stream keyed by `global_seed`.

    Each scenario owns an independent seed sequence, so regenerating any
    single index reproduces it without replaying the ones before it.
    """
    draw_ss, child_ss = np.random.SeedSequence((global_seed, index)).spawn(2)
    rng = np.random.default_rng(draw_ss)
    mean_anomaly = M_GRID[int(rng.integers(len(M_GRID)))]
    r_koz = float(r_koz_choices[int(rng.integers(len(r_koz_choices)))])
    beta = float(beta_choices[int(rng.integers(len(beta_choices)))])
    start = START_DOMAINS[int(rng.integers(len(START_DOMAINS)))]
    box = DOMAIN_BOXES[start]
    d_lambda = float(rng.uniform(*box.d_lambda))
    d_eyiy = float(rng.uniform(*box.d_eyiy))
    intent = tuple(INTENT_KEYS[int(i)] for i in rng.permutation(len(INTENT_KEYS)))
    return ScenarioSpec(
        oe=chief_elements(mean_anomaly),
        r_koz=r_koz,
        beta=beta,
        x0=RoeState(d_a=0.0, d_lambda=d_lambda, d_ex=0.0, d_ey=d_eyiy, d_ix=0.0, d_iy=d_eyiy),
        intent=intent,
        seed=int(child_ss.generate_state(1, np.uint64)[0]),
        index=index,
    )


@dataclass(frozen=True)
class SolveContext:
    """Run-wide solve settings; per-scenario fields are filled at call time."""

    dt: float = DT
    delta_r_obs: float = 50.0
    scp: ScpConfig = field(default_factory=ScpConfig)
    uncertainty: UncertaintyConfig = field(default_factory=UncertaintyConfig)
    n_max: int = N_MAX
    lam: float = DEFAULT_LAMBDA

    def koz_for(self, r_koz: float) -> KeepOutZone:
        return KeepOutZone(r_koz=r_koz, delta_r_obs=self.delta_r_obs)

    def uncertainty_for(self, beta: float) -> UncertaintyConfig:
        return replace(self.uncertainty, beta=beta)


@dataclass
class PlanOutcome:
    plan: WaypointPlan
    mission: MissionResult
    trajectory: Trajectory
    metrics: MetricVector | None
    reward: float | None

    @property
    def status(self) -> str:
        return self.mission.status

    @property
    def converged(self) -> bool:
        return self.mission.converged


def mission_spec_for(
    x0: RoeState,
    oe: OrbitalElements,
    r_koz: float,
    beta: float,
    plan: WaypointPlan,
    ctx: SolveContext,
    t_start: float = 0.0,
) -> MissionSpec:
    segments = tuple(
        MissionSegment(x_target=state.as_array(), n_steps=int(steps))
        for state, steps in zip(plan.states(), plan.durations)
    )
    return MissionSpec(
        oe=oe,
        t_start=t_start,
        dt=ctx.dt,
        x_start=x0.as_array(),
        segments=segments,
        koz=ctx.koz_for(r_koz),
        uncertainty=ctx.uncertainty_for(beta),
    )


def solve_plan(
    x0: RoeState,
    oe: OrbitalElements,
    r_koz: float,
    beta: float,
    plan: WaypointPlan,
    ctx: SolveContext | None = None,
    warm_starts=None,
    t_start: float = 0.0,
) -> PlanOutcome:
    """Solve the mission behind a waypoint plan and score the trajectory.

    Metrics and reward stay None unless every phase converged; the stitched
    trajectory is returned either way so failures can still be inspected.
    """
    ctx = ctx or SolveContext()
    spec = mission_spec_for(x0, oe, r_koz, beta, plan, ctx, t_start=t_start)
    mission = solve_mission(spec, ctx.scp, warm_starts=warm_starts, n_max=ctx.n_max)
    trajectory = mission_trajectory(mission)
    metrics = None
    reward = None
    if mission.converged:
        koz = ctx.koz_for(r_koz)
        metrics = metric_vector(trajectory, koz, oe, ctx.dt)
        reward = composite_reward(trajectory, ctx.lam, koz, oe, empty_mode=TRAIN_SENTINEL)
    return PlanOutcome(
        plan=plan, mission=mission, trajectory=trajectory, metrics=metrics, reward=reward
    )


def solve_scenario_plan(
    scenario: ScenarioSpec,
    plan: WaypointPlan,
    ctx: SolveContext | None = None,
    warm_starts=None,
) -> PlanOutcome:
    return solve_plan(
        scenario.x0, scenario.oe, scenario.r_koz, scenario.beta, plan, ctx, warm_starts=warm_starts
    )
