"""Behavior graph over canonical relative-orbit domains.

Five boxes in the (delta_lambda, delta_e_y = delta_i_y) plane, eleven named
transition primitives between them, and three campaign templates that admit
specific 3-phase domain paths. Waypoint sampling stays inside the boxes with
the remaining four coordinates pinned to zero (no along-track drift, parallel
e/i vectors), so the 6-D waypoint space reduces to 2-D per node.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from proxops.orbits import RoeState
from proxops.scp import N_MAX

K_MAX = 3

A_CENTRAL = "A_central"
B_PLUSV_SAFE = "B_plusV_safe"
C_PLUSV_AXIS = "C_plusV_axis"
D_MINUSV_SAFE = "D_minusV_safe"
E_MINUSV_AXIS = "E_minusV_axis"

DOMAIN_IDS = (A_CENTRAL, B_PLUSV_SAFE, C_PLUSV_AXIS, D_MINUSV_SAFE, E_MINUSV_AXIS)


@dataclass(frozen=True)
class DomainBox:
    """Axis-aligned box in the reduced (d_lambda, d_eyiy) plane, meters."""

    d_lambda: tuple[float, float]
    d_eyiy: tuple[float, float]

    def __post_init__(self):
        if self.d_lambda[0] > self.d_lambda[1] or self.d_eyiy[0] > self.d_eyiy[1]:
            raise ValueError("box bounds must satisfy lo <= hi")

    def contains(self, d_lambda: float, d_eyiy: float) -> bool:
        return (
            self.d_lambda[0] <= d_lambda <= self.d_lambda[1]
            and self.d_eyiy[0] <= d_eyiy <= self.d_eyiy[1]
        )


DOMAIN_BOXES: dict[str, DomainBox] = {
    A_CENTRAL: DomainBox((-5.0, 5.0), (30.0, 70.0)),
    B_PLUSV_SAFE: DomainBox((100.0, 250.0), (30.0, 70.0)),
    C_PLUSV_AXIS: DomainBox((100.0, 250.0), (-5.0, 5.0)),
    D_MINUSV_SAFE: DomainBox((-250.0, -100.0), (30.0, 70.0)),
    E_MINUSV_AXIS: DomainBox((-250.0, -100.0), (-5.0, 5.0)),
}


@dataclass(frozen=True)
class BehaviorPrimitive:
    id: int
    name: str
    edges: tuple[tuple[str, str], ...]


_SELF_LOOPS = tuple((d, d) for d in DOMAIN_IDS)

PRIMITIVES: dict[int, BehaviorPrimitive] = {
    p.id: p
    for p in (
        BehaviorPrimitive(1, "Station-Keeping", _SELF_LOOPS),
        BehaviorPrimitive(
            2,
            "Drift +V-dir.",
            ((D_MINUSV_SAFE, A_CENTRAL), (A_CENTRAL, B_PLUSV_SAFE), (D_MINUSV_SAFE, B_PLUSV_SAFE)),
        ),
        BehaviorPrimitive(
            3,
            "Drift -V-dir.",
            ((B_PLUSV_SAFE, A_CENTRAL), (A_CENTRAL, D_MINUSV_SAFE), (B_PLUSV_SAFE, D_MINUSV_SAFE)),
        ),
        BehaviorPrimitive(
            4,
            "Expand R/N separation",
            ((E_MINUSV_AXIS, D_MINUSV_SAFE), (C_PLUSV_AXIS, B_PLUSV_SAFE)),
        ),
        BehaviorPrimitive(
            5,
            "Shrink R/N separation",
            ((B_PLUSV_SAFE, C_PLUSV_AXIS), (D_MINUSV_SAFE, E_MINUSV_AXIS)),
        ),
        BehaviorPrimitive(6, "Approach from -V-bar", ((E_MINUSV_AXIS, A_CENTRAL),)),
        BehaviorPrimitive(7, "Retreat to +V-bar", ((A_CENTRAL, C_PLUSV_AXIS),)),
        BehaviorPrimitive(8, "Approach from +V-bar", ((C_PLUSV_AXIS, A_CENTRAL),)),
        BehaviorPrimitive(9, "Retreat to -V-bar", ((A_CENTRAL, E_MINUSV_AXIS),)),
        BehaviorPrimitive(10, "Ducking (fast drift) +V-dir.", ((E_MINUSV_AXIS, C_PLUSV_AXIS),)),
        BehaviorPrimitive(11, "Ducking (fast drift) -V-dir.", ((C_PLUSV_AXIS, E_MINUSV_AXIS),)),
    )
}

# Steps per phase, inclusive, keyed by primitive id. Station-keeping holds
# shorter, transfers hold longer, ducking passes are quick by design.
DEFAULT_DURATION_WINDOWS: dict[int, tuple[int, int]] = {
    1: (4, 16),
    2: (8, 40),
    3: (8, 40),
    4: (8, 40),
    5: (8, 40),
    6: (8, 40),
    7: (8, 40),
    8: (8, 40),
    9: (8, 40),
    10: (4, 12),
    11: (4, 12),
}

CIRCUMNAVIGATION = "Circumnavigation"
FLYBY = "Flyby"
DUCKING = "Ducking"

# Each row: three phases, each phase a list of admissible (from, to) steps.
# A self step is a station-keeping (no-op) phase.
_CAMPAIGN_ROWS: dict[str, tuple[tuple[list[tuple[str, str]], ...], ...]] = {
    CIRCUMNAVIGATION: (
        (
            [(s, A_CENTRAL) for s in (B_PLUSV_SAFE, C_PLUSV_AXIS, D_MINUSV_SAFE, E_MINUSV_AXIS)],
            [(A_CENTRAL, A_CENTRAL)],
            [(A_CENTRAL, t) for t in (B_PLUSV_SAFE, C_PLUSV_AXIS, D_MINUSV_SAFE, E_MINUSV_AXIS)],
        ),
    ),
    FLYBY: (
        (
            [(C_PLUSV_AXIS, B_PLUSV_SAFE), (B_PLUSV_SAFE, B_PLUSV_SAFE)],
            [(B_PLUSV_SAFE, D_MINUSV_SAFE)],
            [(D_MINUSV_SAFE, E_MINUSV_AXIS), (D_MINUSV_SAFE, D_MINUSV_SAFE)],
        ),
        (
            [(E_MINUSV_AXIS, D_MINUSV_SAFE), (D_MINUSV_SAFE, D_MINUSV_SAFE)],
            [(D_MINUSV_SAFE, B_PLUSV_SAFE)],
            [(B_PLUSV_SAFE, C_PLUSV_AXIS), (B_PLUSV_SAFE, B_PLUSV_SAFE)],
        ),
    ),
    DUCKING: (
        (
            [(B_PLUSV_SAFE, C_PLUSV_AXIS), (C_PLUSV_AXIS, C_PLUSV_AXIS)],
            [(C_PLUSV_AXIS, E_MINUSV_AXIS)],
            [(E_MINUSV_AXIS, D_MINUSV_SAFE), (E_MINUSV_AXIS, E_MINUSV_AXIS)],
        ),
        (
            [(D_MINUSV_SAFE, E_MINUSV_AXIS), (E_MINUSV_AXIS, E_MINUSV_AXIS)],
            [(E_MINUSV_AXIS, C_PLUSV_AXIS)],
            [(C_PLUSV_AXIS, B_PLUSV_SAFE), (C_PLUSV_AXIS, C_PLUSV_AXIS)],
        ),
    ),
}

CAMPAIGN_TYPES = tuple(_CAMPAIGN_ROWS)


def _expand_rows(rows) -> tuple[tuple[str, str, str, str], ...]:
    paths = []
    for row in rows:
        for p1 in row[0]:
            for p2 in row[1]:
                if p2[0] != p1[1]:
                    continue
                for p3 in row[2]:
                    if p3[0] != p2[1]:
                        continue
                    paths.append((p1[0], p1[1], p2[1], p3[1]))
    return tuple(paths)


CAMPAIGN_PATHS: dict[str, tuple[tuple[str, str, str, str], ...]] = {
    name: _expand_rows(rows) for name, rows in _CAMPAIGN_ROWS.items()
}


def _build_edge_index() -> dict[tuple[str, str], int]:
    index: dict[tuple[str, str], int] = {}
    for prim in PRIMITIVES.values():
        for edge in prim.edges:
            if edge in index:
                raise AssertionError(f"edge {edge} claimed by primitives {index[edge]} and {prim.id}")
            index[edge] = prim.id
    return index


PRIMITIVE_BY_EDGE: dict[tuple[str, str], int] = _build_edge_index()


def _boxes_disjoint() -> bool:
    items = list(DOMAIN_BOXES.items())
    for i, (_, p) in enumerate(items):
        for _, q in items[i + 1 :]:
            overlap_l = p.d_lambda[0] <= q.d_lambda[1] and q.d_lambda[0] <= p.d_lambda[1]
            overlap_e = p.d_eyiy[0] <= q.d_eyiy[1] and q.d_eyiy[0] <= p.d_eyiy[1]
            if overlap_l and overlap_e:
                return False
    return True


assert _boxes_disjoint(), "domain boxes must be pairwise disjoint"


def _interval_distance(v: float, lo: float, hi: float) -> float:
    if v < lo:
        return lo - v
    if v > hi:
        return v - hi
    return 0.0


def domain_distance(x: RoeState, domain: str) -> float:
    """L-inf distance from x to the reduced waypoint set of one domain.

    The set is {d_a = d_ex = d_ix = 0, d_ey = d_iy in box_e, d_lambda in
    box_l}. The e/i coupling is projected exactly: the cheapest common value
    t for (d_ey, d_iy) is their midpoint clipped into the box.
    """
    box = DOMAIN_BOXES[domain]
    t = min(max(0.5 * (x.d_ey + x.d_iy), box.d_eyiy[0]), box.d_eyiy[1])
    cost_e = max(abs(x.d_ey - t), abs(x.d_iy - t))
    cost_l = _interval_distance(x.d_lambda, *box.d_lambda)
    return max(abs(x.d_a), abs(x.d_ex), abs(x.d_ix), cost_e, cost_l)


def domain_of(x: RoeState, tolerance: float = 1e-6) -> tuple[str | None, float]:
    """Nearest domain and its distance; id is None when outside tolerance."""
    best_id = None
    best = np.inf
    for domain in DOMAIN_IDS:
        dist = domain_distance(x, domain)
        if dist < best:
            best_id, best = domain, dist
    if best > tolerance:
        return None, best
    return best_id, best


def nearest_domain(x: RoeState) -> tuple[str, float]:
    """Nearest domain regardless of tolerance, for diagnostics."""
    domain, dist = domain_of(x, tolerance=np.inf)
    assert domain is not None
    return domain, dist


def transition_valid(primitive: int | BehaviorPrimitive, from_domain: str, to_domain: str) -> bool:
    prim = PRIMITIVES[primitive.id if isinstance(primitive, BehaviorPrimitive) else primitive]
    return (from_domain, to_domain) in prim.edges


@dataclass(frozen=True)
class BehaviorSequence:
    start_domain: str
    primitives: tuple[int, ...]

    def __post_init__(self):
        if self.start_domain not in DOMAIN_BOXES:
            raise ValueError(f"unknown domain {self.start_domain!r}")
        if any(p not in PRIMITIVES for p in self.primitives):
            raise ValueError(f"unknown primitive in {self.primitives}")


def sequence_feasible(seq: BehaviorSequence) -> tuple[bool, list[str] | None]:
    """Whether some node path realizes the primitive sequence, plus a witness.

    Primitives can have several exits from one node (e.g. a drift can stop at
    the central domain or carry on past it), so this is a depth-first search,
    not a single walk. The witness is the first path in domain-table order.
    """

    def search(node: str, k: int, path: list[str]) -> list[str] | None:
        if k == len(seq.primitives):
            return path
        for f, t in PRIMITIVES[seq.primitives[k]].edges:
            if f == node:
                found = search(t, k + 1, path + [t])
                if found is not None:
                    return found
        return None

    witness = search(seq.start_domain, 0, [seq.start_domain])
    return (witness is not None), witness


@dataclass(frozen=True)
class WaypointPlan:
    """Per-phase target waypoints in reduced coordinates plus step counts."""

    coords: tuple[tuple[float, float], ...]
    durations: tuple[int, ...]

    def __post_init__(self):
        if not 1 <= len(self.coords) <= K_MAX:
            raise ValueError(f"plan must have 1..{K_MAX} waypoints, got {len(self.coords)}")
        if len(self.durations) != len(self.coords):
            raise ValueError("one duration per waypoint required")
        if any(int(d) != d or d < 1 for d in self.durations):
            raise ValueError(f"durations must be integers >= 1, got {self.durations}")
        if sum(self.durations) > N_MAX:
            raise ValueError(f"total steps {sum(self.durations)} exceed N_max {N_MAX}")

    @property
    def total_steps(self) -> int:
        return int(sum(self.durations))

    def states(self) -> list[RoeState]:
        return [
            RoeState(d_a=0.0, d_lambda=dl, d_ex=0.0, d_ey=de, d_ix=0.0, d_iy=de)
            for dl, de in self.coords
        ]

    def to_dict(self) -> dict:
        return {
            "waypoints": [{"d_lambda": dl, "d_eyiy": de} for dl, de in self.coords],
            "durations": [int(d) for d in self.durations],
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "WaypointPlan":
        coords = tuple((float(w["d_lambda"]), float(w["d_eyiy"])) for w in doc["waypoints"])
        return cls(coords=coords, durations=tuple(int(d) for d in doc["durations"]))


@dataclass(frozen=True)
class CampaignSample:
    campaign: str
    path: tuple[str, str, str, str]
    primitives: tuple[int, ...]
    durations: tuple[int, ...]

    def sequence(self) -> BehaviorSequence:
        return BehaviorSequence(start_domain=self.path[0], primitives=self.primitives)


def admissible_starts(campaign: str) -> tuple[str, ...]:
    if campaign not in CAMPAIGN_PATHS:
        raise ValueError(f"unknown campaign {campaign!r}, expected one of {CAMPAIGN_TYPES}")
    return tuple(sorted({p[0] for p in CAMPAIGN_PATHS[campaign]}))


def path_primitives(path) -> tuple[int, ...]:
    """Primitive ids realizing consecutive steps of a node path."""
    prims = []
    for f, t in zip(path[:-1], path[1:]):
        if (f, t) not in PRIMITIVE_BY_EDGE:
            raise ValueError(f"no primitive covers transition {f} -> {t}")
        prims.append(PRIMITIVE_BY_EDGE[(f, t)])
    return tuple(prims)


def sample_durations(
    primitives,
    rng: np.random.Generator,
    windows: dict[int, tuple[int, int]] | None = None,
    n_max: int = N_MAX,
) -> tuple[int, ...]:
    """Integer steps per phase, each in its primitive window, total <= n_max."""
    windows = DEFAULT_DURATION_WINDOWS if windows is None else windows
    for p in primitives:
        lo, hi = windows[p]
        if lo < 1 or hi < lo:
            raise ValueError(f"bad duration window {windows[p]} for primitive {p}")
    if sum(windows[p][0] for p in primitives) > n_max:
        raise ValueError("minimum phase durations already exceed n_max")
    for _ in range(1000):
        durs = tuple(int(rng.integers(windows[p][0], windows[p][1] + 1)) for p in primitives)
        if sum(durs) <= n_max:
            return durs
    raise RuntimeError("duration rejection sampling failed to fit n_max")


def sample_campaign(
    campaign: str,
    start: str,
    rng: np.random.Generator,
    windows: dict[int, tuple[int, int]] | None = None,
    n_max: int = N_MAX,
) -> CampaignSample:
    """Uniform admissible path for (campaign, start) plus phase durations."""
    options = [p for p in CAMPAIGN_PATHS[campaign] if p[0] == start]
    if not options:
        raise ValueError(
            f"start {start!r} not admissible for {campaign}; "
            f"admissible starts: {', '.join(admissible_starts(campaign))}"
        )
    path = options[int(rng.integers(len(options)))]
    prims = path_primitives(path)
    durs = sample_durations(prims, rng, windows=windows, n_max=n_max)
    return CampaignSample(campaign=campaign, path=path, primitives=prims, durations=durs)


def sample_heuristic_waypoints(
    path,
    rng: np.random.Generator,
    durations=None,
    windows: dict[int, tuple[int, int]] | None = None,
    n_max: int = N_MAX,
) -> WaypointPlan:
    """Uniform waypoint per visited node after the start, inside its box.

    Durations default to a fresh draw from the per-primitive windows of the
    path's transitions; pass the campaign sample's durations to reuse them.
    """
    nodes = list(path)
    if len(nodes) < 2:
        raise ValueError("path must visit at least one node beyond the start")
    if durations is None:
        durations = sample_durations(path_primitives(nodes), rng, windows=windows, n_max=n_max)
    coords = []
    for node in nodes[1:]:
        box = DOMAIN_BOXES[node]
        dl = float(rng.uniform(*box.d_lambda))
        de = float(rng.uniform(*box.d_eyiy))
        coords.append((dl, de))
    return WaypointPlan(coords=tuple(coords), durations=tuple(int(d) for d in durations))


def graph_tables() -> dict:
    """Machine-readable export of the domain, transition and campaign tables."""
    return {
        "domains": {
            d: {"d_lambda": list(box.d_lambda), "d_eyiy": list(box.d_eyiy)}
            for d, box in DOMAIN_BOXES.items()
        },
        "primitives": [
            {"id": p.id, "name": p.name, "edges": [list(e) for e in p.edges]}
            for p in PRIMITIVES.values()
        ],
        "campaigns": {
            name: {
                "paths": [list(p) for p in paths],
                "admissible_starts": list(admissible_starts(name)),
            }
            for name, paths in CAMPAIGN_PATHS.items()
        },
        "duration_windows": {str(k): list(v) for k, v in DEFAULT_DURATION_WINDOWS.items()},
        "k_max": K_MAX,
        "n_max": N_MAX,
    }
