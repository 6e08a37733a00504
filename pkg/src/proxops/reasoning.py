"""Intent-to-behavior decision layer.

Turns a scenario plus an intent priority into a behavior sequence and
horizon, either by sampling the campaign tables directly (heuristic) or by
asking a chat model (remote endpoint or the deterministic offline mock).
Also hosts the candidate-annotation pipeline that converts solved candidate
metrics into one-line reasoning traces for dataset bootstrapping.
"""

from __future__ import annotations

import hashlib
import json
import logging
import os
import re
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Protocol

import numpy as np

from proxops.graph import (
    A_CENTRAL,
    CAMPAIGN_TYPES,
    K_MAX,
    PRIMITIVES,
    BehaviorSequence,
    WaypointPlan,
    domain_of,
    nearest_domain,
    sample_campaign,
    sample_durations,
    sample_heuristic_waypoints,
    sequence_feasible,
)
from proxops.orbits import OrbitalElements, RoeState
from proxops.pipeline import (
    DT,
    ScenarioSpec,
    SolveContext,
    sample_scenario,
    solve_plan,
)
from proxops.policy import WaypointPolicy, infer, project_durations
from proxops.rewards import (
    INTENT_TO_METRIC,
    METRIC_DIRECTIONS,
    MetricVector,
    Trajectory,
    intent_metrics,
    validate_intent,
)
from proxops.scp import N_MAX

logger = logging.getLogger(__name__)

# One probabilistic phrase per metric; extract_metrics recovers the metric
# from each phrase, so traces built from these round-trip exactly.
METRIC_PHRASES = {
    "fuel_dv": "it seems to lead to low delta-v",
    "transfer_time_sec": "is expected to keep transfer time short",
    "observation_score": "has a high chance of supporting observation",
    "safety_margin_m": "appears to maintain a generous clearance",
}

_KEYWORD_GROUPS = {
    "fuel_dv": ("fuel", "delta-v", "control cost"),
    "transfer_time_sec": ("time", "transfer time", "tof"),
    "observation_score": ("observation",),
    "safety_margin_m": ("safety", "safety margin", "clearance"),
}

FLAG_UNPARSEABLE = "unparseable_response"
FLAG_INFEASIBLE = "infeasible_sequence"
FLAG_TF_CLAMPED = "tf_clamped"
_FALLBACK_FLAGS = (FLAG_UNPARSEABLE, FLAG_INFEASIBLE)

ANSWER_MARK = "<|answer|>"
END_MARK = "<|end|>"


# ---------------------------------------------------------------------------
# domain types


@dataclass(frozen=True)
class ReasoningInput:
    """Scenario context and intent handed to a reasoner."""

    x0: RoeState
    oe: OrbitalElements
    r_koz: float
    beta: float
    intent: tuple[str, ...]

    def __post_init__(self):
        object.__setattr__(self, "intent", validate_intent(self.intent))
        if self.r_koz <= 0:
            raise ValueError(f"r_koz must be positive, got {self.r_koz}")
        if self.beta <= 0:
            raise ValueError(f"beta must be positive, got {self.beta}")

    @classmethod
    def from_scenario(cls, scenario: ScenarioSpec) -> "ReasoningInput":
        return cls(
            x0=scenario.x0,
            oe=scenario.oe,
            r_koz=scenario.r_koz,
            beta=scenario.beta,
            intent=scenario.intent,
        )


@dataclass(frozen=True)
class ReasoningOutput:
    """A feasible behavior decision plus its one-sentence trace."""

    reasoning: str
    t_f: float
    behaviors: BehaviorSequence
    durations: tuple[int, ...]
    path: tuple[str, ...]
    campaign: str | None = None
    dt: float = DT
    flags: tuple[str, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "durations", tuple(int(d) for d in self.durations))
        object.__setattr__(self, "path", tuple(self.path))
        object.__setattr__(self, "flags", tuple(self.flags))
        if len(self.durations) != len(self.behaviors.primitives):
            raise ValueError("one duration per behavior required")
        if any(d < 1 for d in self.durations):
            raise ValueError(f"durations must be >= 1, got {self.durations}")
        feasible, _ = sequence_feasible(self.behaviors)
        if not feasible:
            raise ValueError(f"behavior sequence {self.behaviors} is infeasible")
        if self.path[0] != self.behaviors.start_domain:
            raise ValueError("path must start at the sequence start domain")
        expected = sum(self.durations) * self.dt
        if abs(self.t_f - expected) > 1e-6 * max(1.0, abs(expected)):
            raise ValueError(f"t_f {self.t_f} does not match durations ({expected})")

    @property
    def used_fallback(self) -> bool:
        return any(f in _FALLBACK_FLAGS for f in self.flags)

    def to_dict(self) -> dict:
        return {
            "reasoning": self.reasoning,
            "t_f": float(self.t_f),
            "start_domain": self.behaviors.start_domain,
            "behaviors": [int(p) for p in self.behaviors.primitives],
            "durations": [int(d) for d in self.durations],
            "path": list(self.path),
            "campaign": self.campaign,
            "dt": float(self.dt),
            "flags": list(self.flags),
        }


@dataclass
class Candidate:
    """One sampled decision, its realized plan, and the solved outcome."""

    behaviors: BehaviorSequence
    campaign: str | None
    path: tuple[str, ...]
    durations: tuple[int, ...]
    t_f: float
    plan: WaypointPlan
    scp_status: str
    metrics: MetricVector | None
    trajectory: Trajectory | None = None

    @property
    def successful(self) -> bool:
        return self.metrics is not None

    def to_record(self, candidate_id: int) -> dict:
        return {
            "id": int(candidate_id),
            "campaign": self.campaign,
            "start_domain": self.behaviors.start_domain,
            "behaviors": [int(p) for p in self.behaviors.primitives],
            "path": list(self.path),
            "durations": [int(d) for d in self.durations],
            "t_f": float(self.t_f),
            "plan": self.plan.to_dict(),
            "scp_status": self.scp_status,
            "metrics": self.metrics.as_dict() if self.metrics is not None else None,
        }


@dataclass
class CandidateSet:
    input: ReasoningInput
    candidates: list[Candidate]

    def successful(self) -> list[tuple[int, Candidate]]:
        return [(i, c) for i, c in enumerate(self.candidates) if c.successful]

    def to_records(self) -> list[dict]:
        return [c.to_record(i) for i, c in enumerate(self.candidates)]


@dataclass(frozen=True)
class ChatRequest:
    system: str
    user: str
    temperature: float = 0.0
    max_tokens: int = 512


@dataclass(frozen=True)
class ChatResponse:
    content: str


class ChatClient(Protocol):
    def complete(self, request: ChatRequest) -> ChatResponse: ...


# ---------------------------------------------------------------------------
# prompt templates

ANNOTATION_SYSTEM = """\
You're an expert spacecraft operator for rendezvous missions.
You select one trajectory candidate from metric tables.
Follow the priority order (lexicographic), not weighted sum.
Output only valid JSON.
For one_line_reason, use probabilistic wording to describe why the selected candidate seems favorable based on its metrics and the intent priority.
Avoid absolute superlatives or explicit comparisons, as the candidates may have tradeoffs and there are no guarantees.
Focus on the strengths of the chosen candidate in relation to the mission intent, without directly stating it is the best or comparing it to others."""

ANNOTATION_USER = """\
Priority order: {priority}
Metrics: {metrics}
Rules:
- Lower is better for fuel_dv and time_sec.
- Higher is better for obs and safety_margin.
- All candidates are already safe; safety_margin is a metric of conservatism.

Candidates CSV:
{csv}

Return JSON with keys: {{"best_candidate_id": <int>, "one_line_reason": "<short sentence>"}}

Reasoning style constraints:
- one_line_reason must be exactly one short sentence.
- Do not mention candidate IDs or names.
- Avoid comparative/superlative words: lower, higher, lowest, highest, better, best, worse, worst, more, less.
- Avoid ranking symbols or explicit comparisons: >, <, >=, <=, versus, than.
- Prefer probabilistic phrasing like: it seems to lead to low delta-v, is expected to keep transfer time short, has a high chance of supporting observation."""

CSV_HEADER = "id,policy,fuel_dv,time_sec,obs,safety_margin"

GENERATION_SYSTEM = """\
You are an assistant that selects trajectory-level decisions from structured mission context.
Follow intent priority and constraints, reason briefly, and return a strict JSON answer."""

GENERATION_USER = """\
You're an expert spacecraft operator for rendezvous missions.
Task: choose (b_seq, tf) based on mission context and intent priority.
Then provide one-line reasoning and justification.

x0_roe_m = {x0}
r_koz = {r_koz}
beta = {beta}
intent_priority = {intent}

Return JSON with keys: reasoning, tf, b_seq."""

EXTRACTION_SYSTEM = "Extract metric names exactly from the allowed list."

EXTRACTION_USER = """\
From the reasoning sentence, select up to two metrics mentioned in order of appearance.
Allowed metrics: fuel_dv, transfer_time_sec, observation_score, safety_margin_m.
Some words to check for each metric:
- fuel_dv: fuel, delta-v, control cost
- transfer_time_sec: time, transfer time, tof
- observation_score: observation
- safety_margin_m: safety, safety margin, clearance
Return strict JSON only: {{"focused_metrics": ["..."]}}
Reasoning sentence:
{sentence}"""


def _fmt(value: float) -> str:
    return format(float(value), ".9g")


def candidate_csv(rows: list[tuple[int, str, MetricVector]]) -> str:
    """CSV table of (id, policy label, metrics) rows under the fixed header."""
    lines = [CSV_HEADER]
    for cid, label, m in rows:
        lines.append(
            f"{cid},{label},{_fmt(m.fuel_dv)},{_fmt(m.transfer_time_sec)},"
            f"{_fmt(m.observation_score)},{_fmt(m.safety_margin_m)}"
        )
    return "\n".join(lines)


def render_annotation_prompt(rows, intent) -> ChatRequest:
    intent = validate_intent(intent)
    return ChatRequest(
        system=ANNOTATION_SYSTEM,
        user=ANNOTATION_USER.format(
            priority=" > ".join(intent),
            metrics=", ".join(intent_metrics(intent)),
            csv=candidate_csv(rows),
        ),
    )


def render_generation_prompt(inp: ReasoningInput) -> ChatRequest:
    return ChatRequest(
        system=GENERATION_SYSTEM,
        user=GENERATION_USER.format(
            x0=json.dumps([float(v) for v in inp.x0.as_array()]),
            r_koz=_fmt(inp.r_koz),
            beta=_fmt(inp.beta),
            intent=json.dumps(list(inp.intent)),
        ),
    )


def render_extraction_prompt(sentence: str) -> ChatRequest:
    return ChatRequest(system=EXTRACTION_SYSTEM, user=EXTRACTION_USER.format(sentence=sentence))


def reason_sentence(intent, n_metrics: int = 2) -> str:
    """Template sentence naming the top intent metrics in priority order."""
    metrics = intent_metrics(intent)[: max(1, min(n_metrics, 2))]
    return " and ".join(METRIC_PHRASES[m] for m in metrics)


# ---------------------------------------------------------------------------
# chat clients


def _prompt_seed(request: ChatRequest) -> int:
    digest = hashlib.sha256((request.system + "\x00" + request.user).encode()).digest()
    return int.from_bytes(digest[:8], "big")


class MockChatClient:
    """Deterministic offline stand-in for the chat endpoint.

    Routes on prompt shape: the annotation prompt is answered by replaying
    the lexicographic rule on the embedded CSV, the generation prompt by a
    graph sample seeded from the prompt hash, and the extraction prompt by
    the keyword rules. Same prompt, same answer, always.
    """

    def __init__(self, dt: float = DT):
        self.dt = dt

    def complete(self, request: ChatRequest) -> ChatResponse:
        if "Candidates CSV:" in request.user:
            return ChatResponse(content=self._annotate(request))
        if "Task: choose (b_seq, tf)" in request.user:
            return ChatResponse(content=self._generate(request))
        if "focused_metrics" in request.user:
            return ChatResponse(content=self._extract(request))
        raise ValueError("mock chat client received an unrecognized prompt")

    def _annotate(self, request: ChatRequest) -> str:
        lines = request.user.splitlines()
        priority = None
        for line in lines:
            if line.startswith("Priority order: "):
                priority = tuple(p.strip() for p in line[len("Priority order: ") :].split(">"))
                break
        header = lines.index(CSV_HEADER)
        ids, rows = [], []
        for line in lines[header + 1 :]:
            if not line.strip():
                break
            parts = line.split(",")
            ids.append(int(parts[0]))
            rows.append(
                MetricVector(
                    fuel_dv=float(parts[2]),
                    transfer_time_sec=float(parts[3]),
                    observation_score=float(parts[4]),
                    safety_margin_m=float(parts[5]),
                )
            )
        best = ids[lexicographic_select(rows, priority)]
        reason = reason_sentence(priority)
        return json.dumps({"best_candidate_id": best, "one_line_reason": reason})

    def _generate(self, request: ChatRequest) -> str:
        fields = {}
        for line in request.user.splitlines():
            if " = " in line:
                key, _, value = line.partition(" = ")
                fields[key.strip()] = value.strip()
        x0 = RoeState.from_array(json.loads(fields["x0_roe_m"]))
        intent = tuple(json.loads(fields["intent_priority"]))
        rng = np.random.default_rng(_prompt_seed(request))
        start, _ = domain_of(x0)
        if start is None:
            start, _ = nearest_domain(x0)
        _, _, primitives, durations = _sample_decision(start, rng)
        answer = {
            "reasoning": reason_sentence(intent),
            "tf": float(sum(durations) * self.dt),
            "b_seq": [int(p) for p in primitives],
        }
        return (
            "<|think|>\n"
            + answer["reasoning"]
            + "\n"
            + ANSWER_MARK
            + "\n"
            + json.dumps(answer)
            + "\n"
            + END_MARK
        )

    def _extract(self, request: ChatRequest) -> str:
        sentence = request.user.rsplit("Reasoning sentence:\n", 1)[-1]
        return json.dumps({"focused_metrics": _keyword_metrics(sentence)})


class RemoteChatClient:
    """Chat-completion endpoint client configured from the environment."""

    def __init__(
        self,
        endpoint: str | None = None,
        api_key: str | None = None,
        model: str | None = None,
        timeout: float = 30.0,
    ):
        self.endpoint = endpoint or os.environ.get("LLM_ENDPOINT")
        self.api_key = api_key or os.environ.get("LLM_API_KEY")
        self.model = model or os.environ.get("LLM_MODEL")
        self.timeout = timeout
        if not self.endpoint:
            raise ValueError("remote chat client needs an endpoint (LLM_ENDPOINT)")
        if not self.model:
            raise ValueError("remote chat client needs a model name (LLM_MODEL)")

    def complete(self, request: ChatRequest) -> ChatResponse:
        import httpx

        headers = {"Content-Type": "application/json"}
        if self.api_key:
            headers["Authorization"] = f"Bearer {self.api_key}"
        payload = {
            "model": self.model,
            "messages": [
                {"role": "system", "content": request.system},
                {"role": "user", "content": request.user},
            ],
            "temperature": request.temperature,
            "max_tokens": request.max_tokens,
        }
        response = httpx.post(self.endpoint, json=payload, headers=headers, timeout=self.timeout)
        response.raise_for_status()
        content = response.json()["choices"][0]["message"]["content"]
        if not content:
            raise ValueError("chat endpoint returned empty content")
        return ChatResponse(content=content)


def make_client(kind: str = "mock", **kwargs) -> ChatClient:
    if kind == "mock":
        return MockChatClient(**kwargs)
    if kind == "remote":
        return RemoteChatClient(**kwargs)
    raise ValueError(f"unknown chat client kind {kind!r}, expected mock or remote")


# ---------------------------------------------------------------------------
# reasoners


def _start_domain(x0: RoeState, tolerance: float) -> str:
    domain, _ = domain_of(x0, tolerance=tolerance)
    if domain is None:
        name, dist = nearest_domain(x0)
        raise ValueError(
            f"x0 lies outside every waypoint domain; nearest is {name!r} at {dist:.3f} m"
        )
    return domain


def _sample_decision(start: str, rng, windows=None, n_max: int = N_MAX):
    """Random feasible (campaign, path, primitives, durations) from `start`.

    Campaign rows never start at the central domain, so a start there falls
    back to a uniform feasible walk of up to K_MAX transitions.
    """
    if start != A_CENTRAL:
        campaign = CAMPAIGN_TYPES[int(rng.integers(len(CAMPAIGN_TYPES)))]
        sample = sample_campaign(campaign, start, rng, windows=windows, n_max=n_max)
        return sample.campaign, sample.path, sample.primitives, sample.durations

    steps = int(rng.integers(1, K_MAX + 1))
    node = start
    path = [start]
    primitives = []
    for _ in range(steps):
        options = [(p.id, e) for p in PRIMITIVES.values() for e in p.edges if e[0] == node]
        pid, edge = options[int(rng.integers(len(options)))]
        primitives.append(pid)
        path.append(edge[1])
        node = edge[1]
    durations = sample_durations(primitives, rng, windows=windows, n_max=n_max)
    return None, tuple(path), tuple(primitives), durations


def heuristic_reason(
    inp: ReasoningInput,
    rng,
    dt: float = DT,
    windows=None,
    n_max: int = N_MAX,
    tolerance: float = 1e-6,
) -> ReasoningOutput:
    """Sample a campaign admissible from the start domain of x0."""
    start = _start_domain(inp.x0, tolerance)
    campaign, path, primitives, durations = _sample_decision(start, rng, windows, n_max)
    return ReasoningOutput(
        reasoning=reason_sentence(inp.intent, n_metrics=1),
        t_f=float(sum(durations) * dt),
        behaviors=BehaviorSequence(start_domain=start, primitives=tuple(primitives)),
        durations=tuple(durations),
        path=tuple(path),
        campaign=campaign,
        dt=dt,
    )


def _parse_answer_block(content: str) -> dict | None:
    segment = content
    idx = content.find(ANSWER_MARK)
    if idx >= 0:
        segment = content[idx + len(ANSWER_MARK) :]
        end = segment.find(END_MARK)
        if end >= 0:
            segment = segment[:end]
    try:
        parsed = json.loads(segment.strip())
    except json.JSONDecodeError:
        return None
    return parsed if isinstance(parsed, dict) else None


def llm_reason(
    inp: ReasoningInput,
    client: ChatClient,
    dt: float = DT,
    rng=None,
    windows=None,
    n_max: int = N_MAX,
    tolerance: float = 1e-6,
) -> ReasoningOutput:
    """Ask the chat model for (b_seq, tf); fall back to the heuristic on junk.

    The returned sequence is always feasible: an unparseable response or one
    violating the behavior graph is replaced by a heuristic draw and flagged.
    A tf off the step grid is clamped to the nearest valid horizon.
    """
    start = _start_domain(inp.x0, tolerance)
    request = render_generation_prompt(inp)
    content = client.complete(request).content

    def fallback(flag: str) -> ReasoningOutput:
        logger.warning("llm_reason fallback (%s)", flag)
        fb_rng = rng if rng is not None else np.random.default_rng(_prompt_seed(request))
        out = heuristic_reason(inp, fb_rng, dt=dt, windows=windows, n_max=n_max)
        return replace(out, flags=out.flags + (flag,))

    parsed = _parse_answer_block(content)
    if parsed is None:
        return fallback(FLAG_UNPARSEABLE)
    reasoning = parsed.get("reasoning")
    tf = parsed.get("tf")
    b_seq = parsed.get("b_seq")
    tf_ok = isinstance(tf, (int, float)) and not isinstance(tf, bool) and np.isfinite(tf)
    if not isinstance(reasoning, str) or not tf_ok or not b_seq:
        return fallback(FLAG_UNPARSEABLE)

    try:
        sequence = BehaviorSequence(
            start_domain=start, primitives=tuple(int(b) for b in b_seq)
        )
    except (TypeError, ValueError):
        return fallback(FLAG_INFEASIBLE)
    feasible, path = sequence_feasible(sequence)
    k = len(sequence.primitives)
    if not feasible or k > K_MAX:
        return fallback(FLAG_INFEASIBLE)

    flags = []
    total = int(np.rint(float(tf) / dt))
    total = min(max(total, k), n_max)
    if abs(total * dt - float(tf)) > 1e-6 * max(1.0, dt):
        flags.append(FLAG_TF_CLAMPED)
    durations = project_durations(np.full(k, total / k), total)
    return ReasoningOutput(
        reasoning=reasoning,
        t_f=float(total * dt),
        behaviors=sequence,
        durations=durations,
        path=tuple(path),
        campaign=None,
        dt=dt,
        flags=tuple(flags),
    )


# ---------------------------------------------------------------------------
# candidates, selection, annotation


def generate_candidates(
    inp: ReasoningInput,
    policy: WaypointPolicy | None,
    ctx: SolveContext | None,
    rng,
    m: int = 4,
    windows=None,
    tolerance: float = 1e-6,
    max_tries: int = 200,
) -> CandidateSet:
    """Sample m distinct decisions, realize waypoints, and solve each one.

    With a policy the waypoints are its mean prediction; without one they
    are drawn uniformly from the visited domain boxes. Candidates whose SCP
    failed keep their status but are excluded from selection downstream.
    """
    if m < 2:
        raise ValueError(f"need at least 2 candidates to compare, got {m}")
    ctx = ctx or SolveContext()
    start = _start_domain(inp.x0, tolerance)

    decisions = []
    seen = set()
    tries = 0
    while len(decisions) < m:
        tries += 1
        if tries > max_tries:
            raise RuntimeError(f"could not sample {m} distinct candidates in {max_tries} tries")
        campaign, path, primitives, durations = _sample_decision(start, rng, windows, ctx.n_max)
        key = (campaign, path, sum(durations))
        if key in seen:
            continue
        seen.add(key)
        decisions.append((campaign, path, primitives, durations))

    candidates = []
    for campaign, path, primitives, durations in decisions:
        t_f = float(sum(durations) * ctx.dt)
        if policy is None:
            plan = sample_heuristic_waypoints(path, rng, durations=durations)
        else:
            plan = infer(
                policy, inp.x0, t_f, primitives, inp.oe.M, inp.r_koz, inp.beta, dt=ctx.dt
            )
        outcome = solve_plan(inp.x0, inp.oe, inp.r_koz, inp.beta, plan, ctx)
        candidates.append(
            Candidate(
                behaviors=BehaviorSequence(start_domain=start, primitives=tuple(primitives)),
                campaign=campaign,
                path=tuple(path),
                durations=tuple(plan.durations),
                t_f=t_f,
                plan=plan,
                scp_status=outcome.status,
                metrics=outcome.metrics,
                trajectory=outcome.trajectory,
            )
        )

    if not any(c.successful for c in candidates):
        statuses = "; ".join(f"candidate {i}: {c.scp_status}" for i, c in enumerate(candidates))
        raise RuntimeError(f"all {m} candidates failed to solve ({statuses})")
    return CandidateSet(input=inp, candidates=candidates)


def lexicographic_select(metrics, intent) -> int:
    """Index of the best metric row under the intent priority order.

    Each metric is compared in its better-direction; exact ties move to the
    next metric in the priority, and a full tie picks the lowest index.
    """
    rows = [m.as_dict() if isinstance(m, MetricVector) else dict(m) for m in metrics]
    if not rows:
        raise ValueError("need at least one candidate to select from")
    pool = list(range(len(rows)))
    for metric in intent_metrics(intent):
        direction = METRIC_DIRECTIONS[metric]
        best = max(direction * float(rows[i][metric]) for i in pool)
        pool = [i for i in pool if direction * float(rows[i][metric]) == best]
        if len(pool) == 1:
            break
    return pool[0]


def _parse_annotation(content: str) -> dict | None:
    try:
        parsed = json.loads(content)
    except json.JSONDecodeError:
        return None
    if not isinstance(parsed, dict):
        return None
    best = parsed.get("best_candidate_id")
    reason = parsed.get("one_line_reason")
    if isinstance(best, bool) or not isinstance(best, int) or not isinstance(reason, str):
        return None
    return {"best_candidate_id": best, "one_line_reason": reason}


def annotate(candidates: CandidateSet, intent, client: ChatClient) -> dict:
    """Ask the client to pick the best solved candidate and phrase a reason.

    Malformed JSON gets one retry with the identical prompt; a second
    failure or an id outside the table is an error.
    """
    intent = validate_intent(intent)
    solved = candidates.successful()
    if not solved:
        raise ValueError("annotation needs at least one successful candidate")
    rows = [(cid, c.campaign or "walk", c.metrics) for cid, c in solved]
    request = render_annotation_prompt(rows, intent)

    parsed = _parse_annotation(client.complete(request).content)
    if parsed is None:
        logger.warning("annotation response malformed; retrying once")
        parsed = _parse_annotation(client.complete(request).content)
    if parsed is None:
        raise ValueError("annotation response stayed malformed after one retry")
    valid_ids = {cid for cid, _, _ in rows}
    if parsed["best_candidate_id"] not in valid_ids:
        raise ValueError(
            f"annotated candidate id {parsed['best_candidate_id']} is not in {sorted(valid_ids)}"
        )
    return parsed


# ---------------------------------------------------------------------------
# metric extraction


def _keyword_metrics(text: str) -> list[str]:
    low = text.lower()
    hits = []
    for metric, words in _KEYWORD_GROUPS.items():
        positions = []
        for word in words:
            match = re.search(rf"\b{re.escape(word)}\b", low)
            if match:
                positions.append(match.start())
        if positions:
            hits.append((min(positions), metric))
    hits.sort()
    return [metric for _, metric in hits[:2]]


def extract_metrics(reason_text: str, client: ChatClient | None = None) -> list[str]:
    """Up to two metric wire names referenced by a trace, in appearance order.

    Rule-based by default; with a client the extraction prompt is used and
    its answer validated against the closed metric set, falling back to the
    rules if the response does not parse.
    """
    if not reason_text or not reason_text.strip():
        raise ValueError("reason text must be non-empty")
    if client is None:
        return _keyword_metrics(reason_text)
    response = client.complete(render_extraction_prompt(reason_text))
    try:
        parsed = json.loads(response.content)
        names = parsed["focused_metrics"]
    except (json.JSONDecodeError, TypeError, KeyError):
        return _keyword_metrics(reason_text)
    if not isinstance(names, list):
        return _keyword_metrics(reason_text)
    out = []
    for name in names:
        if name in METRIC_DIRECTIONS and name not in out:
            out.append(name)
    return out[:2]


# ---------------------------------------------------------------------------
# dataset bootstrapping


def build_reasoning_dataset(
    n_scenarios: int,
    policy: WaypointPolicy | None,
    client: ChatClient,
    sink,
    ctx: SolveContext | None = None,
    seed: int = 0,
    m: int = 4,
    windows=None,
) -> dict:
    """Annotate sampled scenarios into line-delimited decision records.

    Per scenario: sample, generate candidates, annotate, persist one JSON
    line carrying the scenario, the candidate table, the selected id and
    the reason. Scenario failures are logged, skipped and counted.
    """
    ctx = ctx or SolveContext()
    records = 0
    failures = []

    def run(stream) -> None:
        nonlocal records
        for index in range(n_scenarios):
            scenario = sample_scenario(seed, index)
            inp = ReasoningInput.from_scenario(scenario)
            rng = np.random.default_rng(scenario.seed)
            try:
                cset = generate_candidates(inp, policy, ctx, rng, m=m, windows=windows)
                annotation = annotate(cset, inp.intent, client)
            except (ValueError, RuntimeError) as exc:
                logger.warning("scenario %d skipped: %s", index, exc)
                failures.append({"index": index, "error": str(exc)})
                continue
            record = {
                "scenario": scenario.to_dict(),
                "intent": list(inp.intent),
                "candidates": cset.to_records(),
                "selected_id": annotation["best_candidate_id"],
                "reason": annotation["one_line_reason"],
                "seed": int(scenario.seed),
            }
            stream.write(json.dumps(record, sort_keys=True) + "\n")
            records += 1

    if hasattr(sink, "write"):
        run(sink)
    else:
        with Path(sink).open("w", encoding="utf-8") as stream:
            run(stream)
    return {
        "requested": int(n_scenarios),
        "written": records,
        "failed": len(failures),
        "failures": failures,
    }
