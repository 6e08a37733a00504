"""Dataset generation, evaluation folds, reporting, and the run config.

Every generator and evaluator writes line-delimited JSON rows to a sink and
derives its summary report as a pure fold over those rows, so any report can
be recomputed from the persisted file alone. All randomness is keyed by
(global seed, scenario index) and runs are byte-identical given a seed.
"""

from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import yaml

from proxops.graph import (
    DEFAULT_DURATION_WINDOWS,
    WaypointPlan,
    domain_distance,
    sample_heuristic_waypoints,
    sequence_feasible,
)
from proxops.orbits import J2_EARTH, psi_batch
from proxops.pipeline import (
    BETA_CHOICES,
    R_KOZ_CHOICES,
    PlanOutcome,
    ScenarioSpec,
    SolveContext,
    sample_scenario,
    solve_scenario_plan,
)
from proxops.policy import WaypointPolicy, encode_plan, featurize, infer, save_weights
from proxops.reasoning import (
    MockChatClient,
    ReasoningInput,
    _sample_decision,
    extract_metrics,
    heuristic_reason,
    llm_reason,
)
from proxops.rewards import METRIC_DIRECTIONS, intent_metrics
from proxops.scp import ScpConfig
from proxops.uncertainty import UncertaintyConfig

logger = logging.getLogger(__name__)

SCHEMA_VERSION = 1

# full-scale numbers the desk-scale defaults stand in for
PAPER_TRAIN_ROWS = 50_000
PAPER_TEST_SCENARIOS = 500

REASONERS = ("heuristic", "llm")
WAYPOINT_MODES = ("heuristic", "policy")


class ConfigError(Exception):
    """Bad or missing run configuration; maps to CLI exit code 2."""


# ---------------------------------------------------------------------------
# run configuration


def default_config() -> dict:
    """Every tunable default in one editable document."""
    return {
        "dynamics": {
            "dt": 900.0,
            "n_max": 100,
            "j2": J2_EARTH,
        },
        "uncertainty": {
            "beta": 1.0,
            "beta_choices": list(BETA_CHOICES),
            "q_process_diag": [1e-4] * 6,
            "gates_mag_frac": 0.01,
            "gates_mag_fixed": 1e-4,
            "gates_point_sigma": 0.0175,
            "tau_s": None,
            "delta_risk": 0.01,
        },
        "koz": {
            "r_koz_choices": list(R_KOZ_CHOICES),
            "delta_r_obs": 50.0,
        },
        "scp": {
            "max_iters": 20,
            "conv_tol_state": 0.1,
            "conv_tol_cost": 1e-4,
            "slack_penalty": 1e3,
            "feas_tol": 1e-6,
            "trust_radius": 0.1,
            "trust_min": 1e-9,
            "trust_max": 1.0,
            "ratio_reject": 0.1,
            "ratio_grow": 0.9,
            "screen_margin": 3.0,
        },
        "graph_durations": {
            str(pid): [int(lo), int(hi)]
            for pid, (lo, hi) in sorted(DEFAULT_DURATION_WINDOWS.items())
        },
        "reward": {
            "lam": 10.0,
        },
        "policy": {
            "hidden_units": 128,
            "hidden_layers": 3,
            "learning_rate": 1e-3,
            "momentum": 0.9,
            "epochs": 400,
            "batch_size": 256,
            "val_fraction": 0.1,
            "weighted": True,
            "clamp_lo": -5.0,
            "clamp_hi": 2.0,
            "clip_norm": 10.0,
            "seed": 0,
        },
        "reasoning": {
            "client": "mock",
            "m": 4,
            "timeout": 30.0,
        },
        "harness": {
            "seed": 0,
            "train_rows": 5000,
            "test_scenarios": 100,
        },
    }


def load_config(path=None) -> dict:
    """Defaults overlaid with a YAML document; unknown keys are rejected."""
    cfg = default_config()
    if path is None:
        return cfg
    p = Path(path)
    if not p.exists():
        raise ConfigError(f"config file not found: {p}")
    try:
        doc = yaml.safe_load(p.read_text())
    except yaml.YAMLError as exc:
        raise ConfigError(f"config is not valid YAML: {exc}") from exc
    if doc is None:
        return cfg
    if not isinstance(doc, dict):
        raise ConfigError("config root must be a mapping of sections")
    for section, values in doc.items():
        if section not in cfg:
            raise ConfigError(f"unknown config section {section!r}")
        if not isinstance(values, dict):
            raise ConfigError(f"config section {section!r} must be a mapping")
        for key, value in values.items():
            if key not in cfg[section]:
                raise ConfigError(f"unknown config key {section}.{key}")
            cfg[section][key] = value
    return cfg


def save_config(cfg: dict, path) -> None:
    Path(path).write_text(yaml.safe_dump(cfg, sort_keys=True))


def context_from_config(cfg: dict) -> SolveContext:
    try:
        unc = UncertaintyConfig(
            beta=float(cfg["uncertainty"]["beta"]),
            q_process=np.diag(np.asarray(cfg["uncertainty"]["q_process_diag"], dtype=float)),
            gates_mag_frac=float(cfg["uncertainty"]["gates_mag_frac"]),
            gates_mag_fixed=float(cfg["uncertainty"]["gates_mag_fixed"]),
            gates_point_sigma=float(cfg["uncertainty"]["gates_point_sigma"]),
            tau_s=None if cfg["uncertainty"]["tau_s"] is None else float(cfg["uncertainty"]["tau_s"]),
            delta_risk=float(cfg["uncertainty"]["delta_risk"]),
        )
        scp = ScpConfig(j2=float(cfg["dynamics"]["j2"]), **{
            key: type(default)(cfg["scp"][key])
            for key, default in default_config()["scp"].items()
        })
        return SolveContext(
            dt=float(cfg["dynamics"]["dt"]),
            delta_r_obs=float(cfg["koz"]["delta_r_obs"]),
            scp=scp,
            uncertainty=unc,
            n_max=int(cfg["dynamics"]["n_max"]),
            lam=float(cfg["reward"]["lam"]),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"invalid solve settings: {exc}") from exc


def windows_from_config(cfg: dict) -> dict[int, tuple[int, int]]:
    try:
        return {
            int(pid): (int(lo), int(hi))
            for pid, (lo, hi) in cfg["graph_durations"].items()
        }
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"invalid graph_durations: {exc}") from exc


def policy_from_config(cfg: dict) -> WaypointPolicy:
    try:
        return WaypointPolicy(**cfg["policy"])
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"invalid policy settings: {exc}") from exc


def desk_scale_header(train_rows: int | None = None, test_scenarios: int | None = None) -> dict:
    """Report header naming the scale this run stands in for."""
    header = {"schema_version": SCHEMA_VERSION}
    if train_rows is not None:
        header["train_rows"] = int(train_rows)
        header["paper_train_rows"] = PAPER_TRAIN_ROWS
        header["train_scale"] = train_rows / PAPER_TRAIN_ROWS
    if test_scenarios is not None:
        header["test_scenarios"] = int(test_scenarios)
        header["paper_test_scenarios"] = PAPER_TEST_SCENARIOS
        header["test_scale"] = test_scenarios / PAPER_TEST_SCENARIOS
    return header


# ---------------------------------------------------------------------------
# sinks


def _write_rows(sink, rows_iter) -> list[dict]:
    """Stream rows to a file-like object or path; returns the rows."""
    rows = []

    def run(stream):
        for row in rows_iter:
            stream.write(json.dumps(row, sort_keys=True) + "\n")
            rows.append(row)

    if sink is None:
        for row in rows_iter:
            rows.append(row)
    elif hasattr(sink, "write"):
        run(sink)
    else:
        with Path(sink).open("w", encoding="utf-8") as stream:
            run(stream)
    return rows


def read_rows(path) -> list[dict]:
    with Path(path).open(encoding="utf-8") as stream:
        return [json.loads(line) for line in stream if line.strip()]


# ---------------------------------------------------------------------------
# waypoint policy dataset


def generate_policy_dataset(
    n: int,
    sink,
    seed: int = 0,
    ctx: SolveContext | None = None,
    windows=None,
    r_koz_choices=R_KOZ_CHOICES,
    beta_choices=BETA_CHOICES,
) -> dict:
    """One (features, targets, reward) row per sampled scenario.

    Rows whose mission solve failed are kept with failed=true so the report
    side can count them; training skips them by default.
    """
    if n < 1:
        raise ValueError(f"need at least one row, got {n}")
    ctx = ctx or SolveContext()
    failed = 0

    def rows():
        nonlocal failed
        for index in range(n):
            sc = sample_scenario(seed, index, r_koz_choices, beta_choices)
            rng = np.random.default_rng(sc.seed)
            decision = heuristic_reason(
                ReasoningInput.from_scenario(sc), rng, dt=ctx.dt, windows=windows, n_max=ctx.n_max
            )
            plan = sample_heuristic_waypoints(decision.path, rng, durations=decision.durations)
            outcome = solve_scenario_plan(sc, plan, ctx)
            if not outcome.converged:
                failed += 1
                logger.warning("dataset row %d failed: %s", index, outcome.status)
            feats = featurize(
                sc.x0, decision.t_f, decision.behaviors.primitives, sc.oe.M, sc.r_koz, sc.beta
            )
            yield {
                "schema_version": SCHEMA_VERSION,
                "index": index,
                "scenario": sc.to_dict(),
                "campaign": decision.campaign,
                "path": list(decision.path),
                "behaviors": [int(p) for p in decision.behaviors.primitives],
                "durations": [int(d) for d in plan.durations],
                "t_f": float(decision.t_f),
                "plan": plan.to_dict(),
                "features": [float(v) for v in feats],
                "targets": [float(v) for v in encode_plan(plan)],
                "scp_status": outcome.status,
                "failed": not outcome.converged,
                "reward": None if outcome.reward is None else float(outcome.reward),
            }

    _write_rows(sink, rows())
    return {"requested": int(n), "written": int(n), "failed": failed}


def load_policy_dataset(source, include_failed: bool = False):
    """(X, y, rewards, rows) from a dataset file or iterable of row dicts."""
    rows = read_rows(source) if isinstance(source, (str, Path)) else list(source)
    kept = [r for r in rows if include_failed or not r["failed"]]
    if not kept:
        raise ValueError("dataset has no trainable rows")
    x = np.array([r["features"] for r in kept], dtype=float)
    y = np.array([r["targets"] for r in kept], dtype=float)
    rewards = np.array(
        [0.0 if r["reward"] is None else r["reward"] for r in kept], dtype=float
    )
    return x, y, rewards, kept


def train_waypoint_policy(data, out_path=None, cfg: dict | None = None) -> tuple[WaypointPolicy, dict]:
    """Fit the waypoint policy on a stored dataset; optionally save weights."""
    cfg = cfg or default_config()
    x, y, rewards, kept = load_policy_dataset(data)
    policy = policy_from_config(cfg)
    policy.fit(x, y, rewards=rewards if cfg["policy"]["weighted"] else None)
    if out_path is not None:
        save_weights(policy, out_path)
    summary = {
        "rows_total": len(kept),
        "features": int(x.shape[1]),
        "validation_nll": float(policy.validation_nll()),
    }
    return policy, summary


# ---------------------------------------------------------------------------
# waypoint evaluation (Table 1 protocol)


def waypoint_domain_error(plan: WaypointPlan, path) -> float:
    """Largest L-inf distance from any waypoint to its target domain box."""
    path = tuple(path)
    if len(plan.coords) != len(path) - 1:
        raise ValueError(
            f"plan has {len(plan.coords)} waypoints but path visits {len(path) - 1} targets"
        )
    return float(
        max(domain_distance(state, dom) for state, dom in zip(plan.states(), path[1:]))
    )


def _reward_stats(rows) -> tuple[float | None, float | None]:
    rewards = [r["reward"] for r in rows if not r["failed"] and r["reward"] is not None]
    if not rewards:
        return None, None
    arr = np.asarray(rewards, dtype=float)
    return float(arr.mean()), float(arr.std())


@dataclass(frozen=True)
class EvalReport:
    """Aggregate percentages; every field recomputable from stored rows."""

    n_scenarios: int
    scp_success_pct: float
    reward_mean: float | None
    reward_std: float | None
    waypoint_error_buckets: dict | None = None
    behavior_feasibility_pct: float | None = None
    intent_reason_match: dict | None = None
    wins: dict | None = None
    header: dict = field(default_factory=dict)

    def __post_init__(self):
        pcts = [self.scp_success_pct]
        if self.waypoint_error_buckets is not None:
            pcts += list(self.waypoint_error_buckets.values())
        if self.behavior_feasibility_pct is not None:
            pcts.append(self.behavior_feasibility_pct)
        if self.intent_reason_match is not None:
            pcts += list(self.intent_reason_match.values())
            total = sum(self.intent_reason_match.values())
            if not math.isclose(total, 100.0, abs_tol=1e-6):
                raise ValueError(f"match categories must sum to 100, got {total}")
        if self.wins is not None:
            pcts += list(self.wins.values())
        for pct in pcts:
            if not 0.0 <= pct <= 100.0:
                raise ValueError(f"percentage out of range: {pct}")

    def to_dict(self) -> dict:
        return {
            "header": dict(self.header),
            "n_scenarios": self.n_scenarios,
            "scp_success_pct": self.scp_success_pct,
            "reward_mean": self.reward_mean,
            "reward_std": self.reward_std,
            "waypoint_error_buckets": self.waypoint_error_buckets,
            "behavior_feasibility_pct": self.behavior_feasibility_pct,
            "intent_reason_match": self.intent_reason_match,
            "wins": self.wins,
        }


def report_from_waypoint_rows(rows, header: dict | None = None) -> EvalReport:
    """Pure fold of persisted waypoint-evaluation rows into a report."""
    rows = list(rows)
    if not rows:
        raise ValueError("no rows to fold")
    n = len(rows)
    errs = [float(r["domain_error_m"]) for r in rows]
    mean_r, std_r = _reward_stats(rows)
    return EvalReport(
        n_scenarios=n,
        scp_success_pct=100.0 * sum(not r["failed"] for r in rows) / n,
        reward_mean=mean_r,
        reward_std=std_r,
        waypoint_error_buckets={
            "exact_pct": 100.0 * sum(e == 0.0 for e in errs) / n,
            "lt5m_pct": 100.0 * sum(e < 5.0 for e in errs) / n,
            "lt10m_pct": 100.0 * sum(e < 10.0 for e in errs) / n,
        },
        header=header or {},
    )


def evaluate_waypoint_policy(
    policy: WaypointPolicy | None,
    n_test: int,
    sink=None,
    seed: int = 0,
    ctx: SolveContext | None = None,
    windows=None,
    header: dict | None = None,
) -> tuple[EvalReport, list[dict]]:
    """Solve one sampled decision per test scenario and fold the results.

    policy=None runs the heuristic waypoint baseline through the identical
    protocol, so the two arms differ only in where the waypoints come from.
    """
    if n_test < 1:
        raise ValueError(f"need at least one test scenario, got {n_test}")
    ctx = ctx or SolveContext()

    def rows():
        for index in range(n_test):
            sc = sample_scenario(seed, index)
            rng = np.random.default_rng(sc.seed)
            decision = heuristic_reason(
                ReasoningInput.from_scenario(sc), rng, dt=ctx.dt, windows=windows, n_max=ctx.n_max
            )
            if policy is None:
                plan = sample_heuristic_waypoints(decision.path, rng, durations=decision.durations)
            else:
                plan = infer(
                    policy,
                    sc.x0,
                    decision.t_f,
                    decision.behaviors.primitives,
                    sc.oe.M,
                    sc.r_koz,
                    sc.beta,
                    dt=ctx.dt,
                )
            outcome = solve_scenario_plan(sc, plan, ctx)
            yield {
                "schema_version": SCHEMA_VERSION,
                "index": index,
                "scenario": sc.to_dict(),
                "campaign": decision.campaign,
                "path": list(decision.path),
                "durations": [int(d) for d in plan.durations],
                "plan": plan.to_dict(),
                "waypoint_mode": "heuristic" if policy is None else "policy",
                "domain_error_m": waypoint_domain_error(plan, decision.path),
                "scp_status": outcome.status,
                "failed": not outcome.converged,
                "reward": None if outcome.reward is None else float(outcome.reward),
                "metrics": None if outcome.metrics is None else outcome.metrics.as_dict(),
            }

    stored = _write_rows(sink, rows())
    return report_from_waypoint_rows(stored, header=header), stored


# ---------------------------------------------------------------------------
# end-to-end evaluation (Table 2 protocol)


def _outperforms_all(selected: dict, alternatives: list[dict | None], metric: str) -> bool:
    # an alternative with no metrics failed its solve and cannot win the metric
    d = METRIC_DIRECTIONS[metric]
    return all(
        alt is None or d * selected[metric] > d * alt[metric] for alt in alternatives
    )


def _win_flags(selected: dict | None, alternatives: list[dict | None], pair) -> tuple[bool, bool]:
    """(dual, single) win flags for a metric pair; ties never outperform."""
    pair = list(pair)
    if selected is None or not pair:
        return False, False
    hits = sum(_outperforms_all(selected, alternatives, m) for m in pair)
    return (len(pair) == 2 and hits == 2), hits == 1


def report_from_e2e_rows(rows, header: dict | None = None) -> EvalReport:
    """Pure fold of persisted end-to-end rows into a report."""
    rows = list(rows)
    if not rows:
        raise ValueError("no rows to fold")
    n = len(rows)
    matches = [int(r["match_count"]) for r in rows]
    mean_r, std_r = _reward_stats(rows)
    return EvalReport(
        n_scenarios=n,
        scp_success_pct=100.0 * sum(not r["failed"] for r in rows) / n,
        reward_mean=mean_r,
        reward_std=std_r,
        behavior_feasibility_pct=100.0 * sum(bool(r["feasible"]) for r in rows) / n,
        intent_reason_match={
            "both_pct": 100.0 * sum(m == 2 for m in matches) / n,
            "one_pct": 100.0 * sum(m == 1 for m in matches) / n,
            "zero_pct": 100.0 * sum(m == 0 for m in matches) / n,
        },
        wins={
            key: 100.0 * sum(bool(r["wins"][key]) for r in rows) / n
            for key in ("reason_dual", "reason_single", "intent_dual", "intent_single")
        },
        header=header or {},
    )


def evaluate_end_to_end(
    reasoner: str,
    waypoint_mode: str,
    n_test: int,
    sink=None,
    seed: int = 0,
    policy: WaypointPolicy | None = None,
    client=None,
    ctx: SolveContext | None = None,
    windows=None,
    n_alternatives: int = 3,
    header: dict | None = None,
) -> tuple[EvalReport, list[dict]]:
    """One grid cell of the end-to-end comparison.

    Per scenario: reason, realize waypoints, solve, compare the reasoning
    trace against the intent's top-2 metrics, and classify dual/single wins
    against alternatives sampled from the same scenario input.
    """
    if reasoner not in REASONERS:
        raise ValueError(f"reasoner must be one of {REASONERS}, got {reasoner!r}")
    if waypoint_mode not in WAYPOINT_MODES:
        raise ValueError(f"waypoint_mode must be one of {WAYPOINT_MODES}, got {waypoint_mode!r}")
    if waypoint_mode == "policy" and policy is None:
        raise ValueError("waypoint_mode 'policy' needs trained weights")
    if n_test < 1:
        raise ValueError(f"need at least one test scenario, got {n_test}")
    ctx = ctx or SolveContext()
    if reasoner == "llm" and client is None:
        client = MockChatClient(dt=ctx.dt)

    def realize(path, primitives, durations, sc, rng) -> WaypointPlan:
        if waypoint_mode == "policy":
            t_f = float(sum(durations) * ctx.dt)
            return infer(
                policy, sc.x0, t_f, primitives, sc.oe.M, sc.r_koz, sc.beta, dt=ctx.dt
            )
        return sample_heuristic_waypoints(path, rng, durations=durations)

    def rows():
        for index in range(n_test):
            sc = sample_scenario(seed, index)
            inp = ReasoningInput.from_scenario(sc)
            rng = np.random.default_rng(sc.seed)
            if reasoner == "llm":
                out = llm_reason(inp, client, dt=ctx.dt, rng=rng, windows=windows, n_max=ctx.n_max)
            else:
                out = heuristic_reason(inp, rng, dt=ctx.dt, windows=windows, n_max=ctx.n_max)
            feasible, _ = sequence_feasible(out.behaviors)
            plan = realize(out.path, out.behaviors.primitives, out.durations, sc, rng)
            outcome = solve_scenario_plan(sc, plan, ctx)

            trace_metrics = extract_metrics(out.reasoning)
            top2 = list(intent_metrics(sc.intent)[:2])
            match_count = len(set(trace_metrics) & set(top2))

            selected_key = (out.campaign, tuple(out.path), sum(out.durations))
            seen = {selected_key}
            alternatives = []
            tries = 0
            while len(alternatives) < n_alternatives and tries < 200:
                tries += 1
                campaign, path, primitives, durations = _sample_decision(
                    out.path[0], rng, windows, ctx.n_max
                )
                key = (campaign, tuple(path), sum(durations))
                if key in seen:
                    continue
                seen.add(key)
                alt_plan = realize(path, primitives, durations, sc, rng)
                alt_outcome = solve_scenario_plan(sc, alt_plan, ctx)
                alternatives.append(
                    {
                        "campaign": campaign,
                        "path": list(path),
                        "durations": [int(d) for d in alt_plan.durations],
                        "scp_status": alt_outcome.status,
                        "metrics": None
                        if alt_outcome.metrics is None
                        else alt_outcome.metrics.as_dict(),
                    }
                )

            selected_metrics = None if outcome.metrics is None else outcome.metrics.as_dict()
            alt_metric_dicts = [a["metrics"] for a in alternatives]
            reason_dual, reason_single = _win_flags(selected_metrics, alt_metric_dicts, trace_metrics)
            intent_dual, intent_single = _win_flags(selected_metrics, alt_metric_dicts, top2)

            yield {
                "schema_version": SCHEMA_VERSION,
                "index": index,
                "scenario": sc.to_dict(),
                "reasoner": reasoner,
                "waypoint_mode": waypoint_mode,
                "reasoning": out.to_dict(),
                "feasible": bool(feasible),
                "plan": plan.to_dict(),
                "scp_status": outcome.status,
                "failed": not outcome.converged,
                "reward": None if outcome.reward is None else float(outcome.reward),
                "metrics": selected_metrics,
                "trace_metrics": trace_metrics,
                "intent_top2": top2,
                "match_count": match_count,
                "alternatives": alternatives,
                "wins": {
                    "reason_dual": reason_dual,
                    "reason_single": reason_single,
                    "intent_dual": intent_dual,
                    "intent_single": intent_single,
                },
            }

    stored = _write_rows(sink, rows())
    return report_from_e2e_rows(stored, header=header), stored


def evaluate_grid(
    n_test: int,
    out_dir=None,
    seed: int = 0,
    policy: WaypointPolicy | None = None,
    client=None,
    ctx: SolveContext | None = None,
    windows=None,
    cells=None,
) -> dict[str, EvalReport]:
    """All four reasoner x waypoint cells over the same scenario stream."""
    chosen = []
    for reasoner in REASONERS:
        for mode in WAYPOINT_MODES:
            name = f"{reasoner}_{mode}"
            if cells is None or name in cells:
                chosen.append((name, reasoner, mode))
    if cells is not None:
        unknown = set(cells) - {name for name, _, _ in chosen}
        if unknown:
            raise ValueError(f"unknown grid cells: {sorted(unknown)}")
    reports = {}
    header = desk_scale_header(test_scenarios=n_test)
    for name, reasoner, mode in chosen:
        sink = None if out_dir is None else Path(out_dir) / f"{name}.jsonl"
        report, _ = evaluate_end_to_end(
            reasoner,
            mode,
            n_test,
            sink=sink,
            seed=seed,
            policy=policy,
            client=client,
            ctx=ctx,
            windows=windows,
            header=dict(header, cell=name),
        )
        reports[name] = report
    return reports


# ---------------------------------------------------------------------------
# trajectory export


def trajectory_record(outcome: PlanOutcome, scenario: ScenarioSpec, ctx: SolveContext) -> dict:
    """JSON-ready record of one solved plan, with RTN samples for rendering."""
    traj = outcome.trajectory
    rtn = np.einsum("jkl,jl->jk", psi_batch(scenario.oe, traj.epochs), traj.states)
    return {
        "schema_version": SCHEMA_VERSION,
        "scenario": scenario.to_dict(),
        "plan": outcome.plan.to_dict(),
        "scp_status": outcome.status,
        "phases": [
            {
                "status": p.status,
                "iterations": int(p.iterations),
                "fuel_mps": float(p.fuel),
                "max_margin_m": None if p.max_margin is None else float(p.max_margin),
            }
            for p in outcome.mission.phases
        ],
        "epochs_s": [float(t) for t in traj.epochs],
        "states_roe_m": [[float(v) for v in row] for row in traj.states],
        "impulses_mps": [[float(v) for v in row] for row in traj.impulses],
        "rtn_states": [[float(v) for v in row] for row in rtn],
        "ranges_m": [float(v) for v in traj.ranges(scenario.oe)],
        "metrics": None if outcome.metrics is None else outcome.metrics.as_dict(),
        "reward": None if outcome.reward is None else float(outcome.reward),
    }
