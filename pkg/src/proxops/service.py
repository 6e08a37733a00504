"""HTTP facade over the planning pipeline.

Sessions live in memory, one mutex each; every override is re-validated and
appended to the session history. Model weights are loaded once at startup.
Errors use a flat {code, message, detail} body.
"""

from __future__ import annotations

import itertools
import threading
from dataclasses import dataclass, field, replace

import numpy as np
from fastapi import Body, FastAPI, Request
from fastapi.exceptions import RequestValidationError
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse

from proxops.graph import (
    CAMPAIGN_PATHS,
    DEFAULT_DURATION_WINDOWS,
    DOMAIN_BOXES,
    K_MAX,
    PRIMITIVES,
    BehaviorSequence,
    WaypointPlan,
    domain_distance,
    domain_of,
    nearest_domain,
    sample_heuristic_waypoints,
    sequence_feasible,
)
from proxops.harness import context_from_config, default_config, trajectory_record, windows_from_config
from proxops.pipeline import ScenarioSpec, SolveContext, solve_scenario_plan
from proxops.policy import WaypointPolicy, infer
from proxops.reasoning import (
    MockChatClient,
    ReasoningInput,
    generate_candidates,
    heuristic_reason,
    lexicographic_select,
    llm_reason,
    make_client,
)
from proxops.rewards import parse_intent, validate_intent


class ApiError(Exception):
    def __init__(self, status: int, code: str, message: str, detail=None):
        super().__init__(message)
        self.status = status
        self.code = code
        self.message = message
        self.detail = detail


@dataclass
class Session:
    id: str
    scenario: ScenarioSpec
    reasoning: dict
    path: tuple[str, ...]
    behaviors: tuple[int, ...]
    durations: tuple[int, ...]
    behaviors_origin: str = "model"
    coords: tuple[tuple[float, float], ...] | None = None
    waypoints_origin: str = "model"
    last_solution: dict | None = None
    history: list = field(default_factory=list)
    lock: threading.Lock = field(default_factory=threading.Lock)

    def plan(self) -> WaypointPlan | None:
        if self.coords is None:
            return None
        return WaypointPlan(coords=self.coords, durations=self.durations)

    def record_override(self, payload: dict) -> None:
        # append-only log of operator edits; replaying the payloads onto a
        # fresh session with the same scenario reproduces the current state
        self.history.append(
            {
                "event": "override",
                "payload": payload,
                "state": {
                    "behaviors": list(self.behaviors),
                    "durations": list(self.durations),
                    "coords": [list(c) for c in self.coords],
                    "path": list(self.path),
                },
            }
        )


def create_app(
    cfg: dict | None = None,
    policy: WaypointPolicy | None = None,
    client=None,
    static_dir=None,
) -> FastAPI:
    cfg = cfg or default_config()
    ctx = context_from_config(cfg)
    windows = windows_from_config(cfg)
    reasoner_kind = cfg["reasoning"]["client"]
    if client is None and reasoner_kind != "heuristic":
        if reasoner_kind == "mock":
            client = MockChatClient(dt=ctx.dt)
        else:
            client = make_client(reasoner_kind, timeout=float(cfg["reasoning"]["timeout"]))

    app = FastAPI(title="proxops", version="1")
    app.add_middleware(
        CORSMiddleware,
        allow_origins=["*"],
        allow_methods=["*"],
        allow_headers=["*"],
    )
    app.state.cfg = cfg
    app.state.ctx = ctx
    app.state.windows = windows
    app.state.policy = policy
    app.state.client = client
    app.state.sessions = {}
    app.state.registry_lock = threading.Lock()
    ids = itertools.count(1)

    @app.exception_handler(ApiError)
    async def api_error_handler(request: Request, exc: ApiError):
        return JSONResponse(
            status_code=exc.status,
            content={"code": exc.code, "message": exc.message, "detail": exc.detail},
        )

    @app.exception_handler(RequestValidationError)
    async def body_error_handler(request: Request, exc: RequestValidationError):
        return JSONResponse(
            status_code=400,
            content={"code": "bad_request", "message": "malformed request body", "detail": None},
        )

    def get_session(sid: str) -> Session:
        session = app.state.sessions.get(sid)
        if session is None:
            raise ApiError(404, "unknown_session", f"no session {sid!r}")
        return session

    def reason(sc: ScenarioSpec):
        inp = ReasoningInput.from_scenario(sc)
        rng = np.random.default_rng(sc.seed)
        if reasoner_kind == "heuristic":
            return heuristic_reason(inp, rng, dt=ctx.dt, windows=windows, n_max=ctx.n_max)
        return llm_reason(inp, client, dt=ctx.dt, rng=rng, windows=windows, n_max=ctx.n_max)

    def realize_coords(session: Session) -> tuple[tuple[float, float], ...]:
        sc = session.scenario
        if app.state.policy is not None:
            t_f = float(sum(session.durations) * ctx.dt)
            plan = infer(
                app.state.policy,
                sc.x0,
                t_f,
                session.behaviors,
                sc.oe.M,
                sc.r_koz,
                sc.beta,
                dt=ctx.dt,
            )
            return plan.coords
        rng = np.random.default_rng(sc.seed)
        plan = sample_heuristic_waypoints(session.path, rng, durations=session.durations)
        return plan.coords

    def domain_errors(session: Session) -> list[float]:
        plan = session.plan()
        return [
            float(domain_distance(state, dom))
            for state, dom in zip(plan.states(), session.path[1:])
        ]

    def waypoints_payload(session: Session) -> dict:
        errors = domain_errors(session)
        return {
            "plan": session.plan().to_dict(),
            "path": list(session.path),
            "behaviors": list(session.behaviors),
            "origin": session.waypoints_origin,
            "behaviors_origin": session.behaviors_origin,
            "domain_errors_m": errors,
            "warnings": [
                f"waypoint {i} sits {err:g} m outside {dom}"
                for i, (err, dom) in enumerate(zip(errors, session.path[1:]))
                if err > 0.0
            ],
            "history_len": len(session.history),
        }

    @app.post("/api/v1/sessions", status_code=201)
    def create_session(payload: dict = Body(...)):
        if not isinstance(payload, dict) or "scenario" not in payload:
            raise ApiError(400, "invalid_scenario", "body needs a 'scenario' object")
        try:
            sc = ScenarioSpec.from_dict(payload["scenario"])
        except (KeyError, TypeError, ValueError, AttributeError) as exc:
            raise ApiError(400, "invalid_scenario", f"scenario does not parse: {exc}")
        if payload.get("intent") is not None:
            wanted = payload["intent"]
            try:
                intent = parse_intent(wanted) if isinstance(wanted, str) else validate_intent(wanted)
                sc = replace(sc, intent=intent)
            except (TypeError, ValueError) as exc:
                raise ApiError(400, "invalid_intent", str(exc))
        name, dist = domain_of(sc.x0)
        if name is None:
            near, near_dist = nearest_domain(sc.x0)
            raise ApiError(
                422,
                "x0_outside_domains",
                "initial state is not inside any relative-orbit domain",
                detail={"nearest_domain": near, "distance_m": float(near_dist)},
            )
        out = reason(sc)
        with app.state.registry_lock:
            sid = f"s-{next(ids):04d}"
            session = Session(
                id=sid,
                scenario=sc,
                reasoning=out.to_dict(),
                path=tuple(out.path),
                behaviors=tuple(out.behaviors.primitives),
                durations=tuple(out.durations),
            )
            app.state.sessions[sid] = session
        return {
            "session_id": sid,
            "scenario": sc.to_dict(),
            "domain": {"name": name, "distance_m": float(dist)},
            "reasoning": session.reasoning,
            "history_len": len(session.history),
        }

    def apply_behavior_override(session: Session, behaviors, durations) -> None:
        try:
            primitives = tuple(int(b) for b in behaviors)
        except (TypeError, ValueError):
            raise ApiError(422, "invalid_behaviors", "behavior ids must be integers")
        unknown = [b for b in primitives if b not in PRIMITIVES]
        if unknown:
            raise ApiError(422, "invalid_behaviors", f"unknown behavior ids: {unknown}")
        try:
            seq = BehaviorSequence(start_domain=session.path[0], primitives=primitives)
        except ValueError as exc:
            raise ApiError(422, "infeasible_sequence", str(exc))
        ok, witness = sequence_feasible(seq)
        if not ok:
            raise ApiError(
                422,
                "infeasible_sequence",
                f"no domain path from {session.path[0]} through {list(primitives)}",
            )
        session.behaviors = primitives
        session.path = tuple(witness)
        session.behaviors_origin = "operator"
        if durations is None:
            # operator gave no timing: take each phase window's midpoint
            session.durations = tuple(
                (windows[b][0] + windows[b][1]) // 2 for b in primitives
            )
        session.coords = None

    def apply_duration_patches(session: Session, patches) -> None:
        durations = list(session.durations)
        if isinstance(patches, list) and all(isinstance(p, dict) for p in patches):
            for patch in patches:
                try:
                    idx, steps = int(patch["index"]), int(patch["steps"])
                except (KeyError, TypeError, ValueError):
                    raise ApiError(422, "invalid_durations", f"bad duration patch: {patch}")
                if not 0 <= idx < len(durations):
                    raise ApiError(422, "invalid_durations", f"duration index {idx} out of range")
                durations[idx] = steps
        elif isinstance(patches, list):
            try:
                durations = [int(v) for v in patches]
            except (TypeError, ValueError):
                raise ApiError(422, "invalid_durations", "durations must be integers")
            if len(durations) != len(session.behaviors):
                raise ApiError(
                    422,
                    "invalid_durations",
                    f"need {len(session.behaviors)} durations, got {len(durations)}",
                )
        else:
            raise ApiError(422, "invalid_durations", "durations must be a list")
        if any(d < 1 for d in durations):
            raise ApiError(422, "invalid_durations", "each phase needs at least one step")
        session.durations = tuple(durations)

    def apply_waypoint_patches(session: Session, patches) -> None:
        if not isinstance(patches, list) or not all(isinstance(p, dict) for p in patches):
            raise ApiError(422, "invalid_waypoints", "waypoints must be a list of patches")
        coords = [list(c) for c in session.coords]
        for patch in patches:
            try:
                idx = int(patch["index"])
            except (KeyError, TypeError, ValueError):
                raise ApiError(422, "invalid_waypoints", f"bad waypoint patch: {patch}")
            if not 0 <= idx < len(coords):
                raise ApiError(422, "invalid_waypoints", f"waypoint index {idx} out of range")
            for key, pos in (("d_lambda", 0), ("d_eyiy", 1)):
                if key in patch and patch[key] is not None:
                    try:
                        coords[idx][pos] = float(patch[key])
                    except (TypeError, ValueError):
                        raise ApiError(422, "invalid_waypoints", f"{key} must be a number")
        session.coords = tuple((c[0], c[1]) for c in coords)

    @app.post("/api/v1/sessions/{sid}/waypoints")
    def waypoints(sid: str, payload: dict | None = Body(default=None)):
        session = get_session(sid)
        payload = payload or {}
        override = any(payload.get(k) is not None for k in ("waypoints", "durations", "behaviors"))
        with session.lock:
            if payload.get("behaviors") is not None:
                apply_behavior_override(session, payload["behaviors"], payload.get("durations"))
            if payload.get("durations") is not None:
                apply_duration_patches(session, payload["durations"])
            total = sum(session.durations)
            if total > ctx.n_max:
                raise ApiError(
                    422,
                    "durations_exceed_n_max",
                    f"plan needs {total} steps but the horizon allows {ctx.n_max}",
                )
            if session.coords is None or len(session.coords) != len(session.path) - 1:
                session.coords = realize_coords(session)
                session.waypoints_origin = "model"
            if payload.get("waypoints") is not None:
                apply_waypoint_patches(session, payload["waypoints"])
            if override:
                session.waypoints_origin = "operator"
                session.record_override(payload)
            return waypoints_payload(session)

    @app.post("/api/v1/sessions/{sid}/solve")
    def solve(sid: str):
        session = get_session(sid)
        with session.lock:
            plan = session.plan()
            if plan is None:
                raise ApiError(409, "no_plan", "generate or override waypoints before solving")
            outcome = solve_scenario_plan(session.scenario, plan, ctx)
            record = trajectory_record(outcome, session.scenario, ctx)
            record["failed_phase"] = next(
                (i for i, p in enumerate(record["phases"]) if p["status"] != "converged"),
                None,
            )
            session.last_solution = record
            return record

    @app.post("/api/v1/sessions/{sid}/candidates")
    def candidates(sid: str, payload: dict | None = Body(default=None)):
        session = get_session(sid)
        payload = payload or {}
        m = int(payload.get("m") or cfg["reasoning"]["m"])
        with session.lock:
            sc = session.scenario
            rng = np.random.default_rng(sc.seed)
            try:
                cand_set = generate_candidates(
                    ReasoningInput.from_scenario(sc),
                    app.state.policy,
                    ctx,
                    rng,
                    m=m,
                    windows=windows,
                )
            except ValueError as exc:
                raise ApiError(422, "invalid_candidates", str(exc))
            except RuntimeError as exc:
                return {
                    "candidates": [],
                    "selected_id": None,
                    "empty_success": True,
                    "detail": str(exc),
                }
            records = cand_set.to_records()
            ok = cand_set.successful()
            remaining = list(range(len(ok)))
            ranked = []
            while remaining:
                pos = lexicographic_select(
                    [ok[i][1].metrics for i in remaining], sc.intent
                )
                ranked.append(remaining.pop(pos))
            for rank, pos in enumerate(ranked):
                records[ok[pos][0]]["rank"] = rank
            selected_id = ok[ranked[0]][0]
            for record in records:
                record.setdefault("rank", None)
                record["selected"] = record["id"] == selected_id
            return {
                "candidates": records,
                "selected_id": selected_id,
                "empty_success": False,
            }

    @app.get("/api/v1/sessions/{sid}")
    def session_state(sid: str):
        session = get_session(sid)
        with session.lock:
            return {
                "session_id": session.id,
                "scenario": session.scenario.to_dict(),
                "reasoning": session.reasoning,
                "path": list(session.path),
                "behaviors": list(session.behaviors),
                "behaviors_origin": session.behaviors_origin,
                "durations": list(session.durations),
                "plan": None if session.coords is None else session.plan().to_dict(),
                "waypoints_origin": session.waypoints_origin,
                "last_solution": session.last_solution,
                "history": list(session.history),
            }

    @app.get("/api/v1/domains")
    def domains():
        return {
            "domains": [
                {
                    "name": name,
                    "d_lambda": [box.d_lambda[0], box.d_lambda[1]],
                    "d_eyiy": [box.d_eyiy[0], box.d_eyiy[1]],
                }
                for name, box in DOMAIN_BOXES.items()
            ],
            "primitives": [
                {
                    "id": p.id,
                    "name": p.name,
                    "edges": [[a, b] for a, b in p.edges],
                    "window": list(windows.get(p.id, DEFAULT_DURATION_WINDOWS[p.id])),
                }
                for p in PRIMITIVES.values()
            ],
            "campaigns": {
                name: [list(path) for path in paths]
                for name, paths in CAMPAIGN_PATHS.items()
            },
            "k_max": K_MAX,
            "n_max": ctx.n_max,
            "dt": ctx.dt,
            "r_koz_choices": [float(v) for v in cfg["koz"]["r_koz_choices"]],
            "delta_r_obs": ctx.delta_r_obs,
        }

    if static_dir is not None:
        from fastapi.staticfiles import StaticFiles

        app.mount("/", StaticFiles(directory=static_dir, html=True), name="console")

    return app
