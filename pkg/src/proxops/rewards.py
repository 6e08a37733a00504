"""Trajectory scoring: fuel cost, observation shaping, and the four metrics.

The composite reward trades fuel against time spent observing the target:
R = -lambda * R_c + R_o with R_c the summed impulse norms and R_o the
(negative) mean range over the contiguous span of epochs whose range enters
the observation shell of radius r_koz + delta_r.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from proxops.orbits import OrbitalElements, psi_batch
from proxops.safety import KeepOutZone
from proxops.scp import MissionResult

METRIC_NAMES = ("fuel_dv", "transfer_time_sec", "observation_score", "safety_margin_m")

# Preference direction per metric: -1 lower is better, +1 higher is better.
METRIC_DIRECTIONS = {
    "fuel_dv": -1,
    "transfer_time_sec": -1,
    "observation_score": +1,
    "safety_margin_m": +1,
}

INTENT_TO_METRIC = {
    "fuel": "fuel_dv",
    "time": "transfer_time_sec",
    "observation": "observation_score",
    "safety_margin": "safety_margin_m",
}
INTENT_KEYS = tuple(INTENT_TO_METRIC)

DEFAULT_LAMBDA = 10.0

REPORT_ZERO = "zero"
TRAIN_SENTINEL = "sentinel"


@dataclass
class Trajectory:
    """Node-gridded relative trajectory: pre-impulse states and impulses."""

    states: np.ndarray  # (N+1, 6) qnsROE at the node epochs
    impulses: np.ndarray  # (N, 3) RTN impulses at nodes 0..N-1
    epochs: np.ndarray  # (N+1,) seconds from the chief element epoch

    def __post_init__(self):
        self.states = np.asarray(self.states, dtype=float)
        self.impulses = np.asarray(self.impulses, dtype=float)
        self.epochs = np.asarray(self.epochs, dtype=float)
        n = self.states.shape[0] - 1
        if n < 1 or self.states.shape != (n + 1, 6):
            raise ValueError(f"states must be (N+1, 6) with N >= 1, got {self.states.shape}")
        if self.impulses.shape != (n, 3):
            raise ValueError(f"impulses must be ({n}, 3), got {self.impulses.shape}")
        if self.epochs.shape != (n + 1,):
            raise ValueError(f"epochs must be ({n + 1},), got {self.epochs.shape}")

    @property
    def n_steps(self) -> int:
        return self.states.shape[0] - 1

    def ranges(self, oe: OrbitalElements) -> np.ndarray:
        """RTN separation (m) at every node epoch."""
        psi_pos = psi_batch(oe, self.epochs)[:, :3, :]
        rel = np.einsum("jkl,jl->jk", psi_pos, self.states)
        return np.linalg.norm(rel, axis=1)


def mission_trajectory(result: MissionResult) -> Trajectory:
    """Stitch per-phase node grids into one mission trajectory.

    Consecutive phases share the boundary node (a phase's arrival state is
    the next phase's start), so each phase after the first drops its row 0.
    """
    if not result.phases:
        raise ValueError("mission result has no phases")
    states = [result.phases[0].states]
    epochs = [result.phases[0].epochs]
    impulses = [p.impulses for p in result.phases]
    for phase in result.phases[1:]:
        states.append(phase.states[1:])
        epochs.append(phase.epochs[1:])
    return Trajectory(
        states=np.concatenate(states, axis=0),
        impulses=np.concatenate(impulses, axis=0),
        epochs=np.concatenate(epochs),
    )


def control_cost(traj: Trajectory) -> float:
    """Total delta-v: sum of Euclidean impulse norms (m/s)."""
    return float(np.linalg.norm(traj.impulses, axis=1).sum())


def observation_window(traj: Trajectory, koz: KeepOutZone, oe: OrbitalElements):
    """Indices (j_first, j_last) of the contiguous observation span, or None.

    The span runs from the first to the last node whose range is inside the
    shell r_koz + delta_r_obs; interior nodes count even if they pop outside.
    """
    rho = traj.ranges(oe)
    inside = np.flatnonzero(rho <= koz.r_koz + koz.delta_r_obs)
    if inside.size == 0:
        return None, rho
    return (int(inside[0]), int(inside[-1])), rho


def observation_reward(
    traj: Trajectory,
    koz: KeepOutZone,
    oe: OrbitalElements,
    empty_mode: str = REPORT_ZERO,
) -> float:
    """Negative mean range over the observation span, divided by step count.

    Never entering the shell scores 0 when reporting; training weights use
    the sentinel -r_koz instead so such plans cannot dominate the batch.
    """
    window, rho = observation_window(traj, koz, oe)
    if window is None:
        if empty_mode == REPORT_ZERO:
            return 0.0
        if empty_mode == TRAIN_SENTINEL:
            return -float(koz.r_koz)
        raise ValueError(f"unknown empty_mode {empty_mode!r}")
    j_first, j_last = window
    return -float(rho[j_first : j_last + 1].sum()) / traj.n_steps


def composite_reward(
    traj: Trajectory,
    lam: float = DEFAULT_LAMBDA,
    koz: KeepOutZone | None = None,
    oe: OrbitalElements | None = None,
    empty_mode: str = TRAIN_SENTINEL,
) -> float:
    if lam < 0:
        raise ValueError(f"lambda must be nonnegative, got {lam}")
    if koz is None or oe is None:
        raise ValueError("composite_reward needs koz and oe")
    return -lam * control_cost(traj) + observation_reward(traj, koz, oe, empty_mode)


@dataclass(frozen=True)
class MetricVector:
    fuel_dv: float
    transfer_time_sec: float
    observation_score: float
    safety_margin_m: float

    def as_dict(self) -> dict[str, float]:
        return {name: float(getattr(self, name)) for name in METRIC_NAMES}

    @classmethod
    def from_dict(cls, doc: dict) -> "MetricVector":
        return cls(**{name: float(doc[name]) for name in METRIC_NAMES})


def metric_vector(
    traj: Trajectory, koz: KeepOutZone, oe: OrbitalElements, dt: float
) -> MetricVector:
    rho = traj.ranges(oe)
    return MetricVector(
        fuel_dv=control_cost(traj),
        transfer_time_sec=float(traj.n_steps * dt),
        observation_score=observation_reward(traj, koz, oe, empty_mode=REPORT_ZERO),
        safety_margin_m=float(rho.min() - koz.r_koz),
    )


def parse_intent(text: str) -> tuple[str, ...]:
    """Comma-separated priority permutation of fuel/time/observation/safety_margin."""
    keys = tuple(part.strip() for part in text.split(","))
    return validate_intent(keys)


def validate_intent(keys) -> tuple[str, ...]:
    keys = tuple(keys)
    if sorted(keys) != sorted(INTENT_KEYS):
        raise ValueError(f"intent must be a permutation of {INTENT_KEYS}, got {keys}")
    return keys


def intent_metrics(intent) -> tuple[str, ...]:
    """Wire metric names in intent priority order."""
    return tuple(INTENT_TO_METRIC[k] for k in validate_intent(intent))


def batch_weights(rewards) -> np.ndarray:
    """Nonnegative weights (R_i - R_min) / sum, uniform when all equal."""
    r = np.asarray(rewards, dtype=float)
    if r.ndim != 1 or r.size == 0:
        raise ValueError("rewards must be a non-empty 1-D sequence")
    shifted = r - r.min()
    total = shifted.sum()
    if total <= 0.0:
        return np.full(r.size, 1.0 / r.size)
    return shifted / total
