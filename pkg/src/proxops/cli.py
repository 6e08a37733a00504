"""Command-line entry point.

Exit codes: 0 success, 1 domain error (bad inputs, failed run), 2 config
error (bad flags, bad or missing config document).
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys
from pathlib import Path

import numpy as np

from proxops.graph import sample_heuristic_waypoints
from proxops.harness import (
    ConfigError,
    desk_scale_header,
    evaluate_end_to_end,
    evaluate_waypoint_policy,
    load_config,
    context_from_config,
    generate_policy_dataset,
    policy_from_config,
    train_waypoint_policy,
    windows_from_config,
    trajectory_record,
    REASONERS,
    WAYPOINT_MODES,
)
from proxops.pipeline import ScenarioSpec, sample_scenario, solve_scenario_plan
from proxops.policy import infer, load_weights
from proxops.reasoning import (
    MockChatClient,
    ReasoningInput,
    build_reasoning_dataset,
    heuristic_reason,
    llm_reason,
    make_client,
)
from proxops.rewards import parse_intent


def _parser() -> argparse.ArgumentParser:
    shared = argparse.ArgumentParser(add_help=False)
    shared.add_argument("--config", default=argparse.SUPPRESS, help="path to a YAML run config")
    shared.add_argument("--seed", type=int, default=argparse.SUPPRESS, help="global seed")
    shared.add_argument("--out", default=argparse.SUPPRESS, help="output path")

    parser = argparse.ArgumentParser(prog="proxops", parents=[shared])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-data", parents=[shared], help="generate a waypoint training dataset")
    p.add_argument("--n", type=int, default=None, help="rows (default: harness.train_rows)")
    p.set_defaults(func=_cmd_gen_data)

    p = sub.add_parser("train-waypoint", parents=[shared], help="train the waypoint policy")
    p.add_argument("--data", required=True, help="dataset file from gen-data")
    p.set_defaults(func=_cmd_train_waypoint)

    p = sub.add_parser("eval-waypoint", parents=[shared], help="evaluate waypoint generation")
    p.add_argument("--weights", default=None, help="policy weights (omit for heuristic baseline)")
    p.add_argument("--n", type=int, default=None, help="scenarios (default: harness.test_scenarios)")
    p.set_defaults(func=_cmd_eval_waypoint)

    p = sub.add_parser(
        "build-reasoning-data", parents=[shared], help="generate annotated reasoning records"
    )
    p.add_argument("--n", type=int, default=None, help="scenarios (default: harness.train_rows)")
    p.add_argument("--weights", default=None, help="policy weights for candidate waypoints")
    p.set_defaults(func=_cmd_build_reasoning_data)

    p = sub.add_parser("solve", parents=[shared], help="solve one scenario end to end")
    p.add_argument("--scenario", default=None, help="scenario JSON file")
    p.add_argument("--index", type=int, default=None, help="sample scenario at this index instead")
    p.add_argument("--intent", default=None, help="comma-separated intent override")
    p.add_argument("--weights", default=None, help="policy weights (omit for heuristic waypoints)")
    p.add_argument("--reasoner", choices=REASONERS, default="heuristic")
    p.set_defaults(func=_cmd_solve)

    p = sub.add_parser("eval-e2e", parents=[shared], help="run the end-to-end evaluation grid")
    p.add_argument("--n", type=int, default=None, help="scenarios (default: harness.test_scenarios)")
    p.add_argument("--weights", default=None, help="policy weights for the policy cells")
    p.add_argument("--cells", default=None, help="comma list, e.g. heuristic_heuristic,llm_policy")
    p.set_defaults(func=_cmd_eval_e2e)

    p = sub.add_parser("serve", parents=[shared], help="run the HTTP service")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)
    p.add_argument("--weights", default=None, help="policy weights loaded at startup")
    p.add_argument("--static", default=None, help="directory of console assets to serve at /")
    p.set_defaults(func=_cmd_serve)

    return parser


def _out(args, required: bool = True) -> Path | None:
    path = getattr(args, "out", None)
    if path is None and required:
        raise ConfigError(f"{args.command} needs --out")
    return None if path is None else Path(path)


def _emit(payload: dict) -> None:
    sys.stdout.write(json.dumps(payload, sort_keys=True, indent=2) + "\n")


def _report_table(name: str, report) -> str:
    lines = [name, "-" * len(name)]
    for key, value in report.to_dict().items():
        if value is None or key == "header":
            continue
        if isinstance(value, dict):
            shown = "  ".join(f"{k}={v:.2f}" for k, v in sorted(value.items()))
        elif isinstance(value, float):
            shown = f"{value:.4f}"
        else:
            shown = str(value)
        lines.append(f"{key:>28}  {shown}")
    return "\n".join(lines)


def _client_from_config(cfg: dict):
    kind = cfg["reasoning"]["client"]
    try:
        if kind == "mock":
            return MockChatClient(dt=float(cfg["dynamics"]["dt"]))
        return make_client(kind, timeout=float(cfg["reasoning"]["timeout"]))
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def _cmd_gen_data(args, cfg, seed) -> int:
    n = args.n if args.n is not None else int(cfg["harness"]["train_rows"])
    summary = generate_policy_dataset(
        n,
        _out(args),
        seed=seed,
        ctx=context_from_config(cfg),
        windows=windows_from_config(cfg),
        r_koz_choices=[float(v) for v in cfg["koz"]["r_koz_choices"]],
        beta_choices=[float(v) for v in cfg["uncertainty"]["beta_choices"]],
    )
    _emit(summary)
    return 0


def _cmd_train_waypoint(args, cfg, seed) -> int:
    del seed  # training randomness comes from policy.seed in the config
    _, summary = train_waypoint_policy(args.data, out_path=_out(args), cfg=cfg)
    _emit(summary)
    return 0


def _cmd_eval_waypoint(args, cfg, seed) -> int:
    n = args.n if args.n is not None else int(cfg["harness"]["test_scenarios"])
    policy = None if args.weights is None else load_weights(args.weights)
    out = _out(args, required=False)
    report, _ = evaluate_waypoint_policy(
        policy,
        n,
        sink=out,
        seed=seed,
        ctx=context_from_config(cfg),
        windows=windows_from_config(cfg),
        header=desk_scale_header(test_scenarios=n),
    )
    if out is not None:
        Path(str(out) + ".report.json").write_text(
            json.dumps(report.to_dict(), sort_keys=True, indent=2) + "\n"
        )
    name = "heuristic waypoints" if policy is None else "policy waypoints"
    sys.stdout.write(_report_table(name, report) + "\n")
    return 0


def _cmd_build_reasoning_data(args, cfg, seed) -> int:
    n = args.n if args.n is not None else int(cfg["harness"]["train_rows"])
    policy = None if args.weights is None else load_weights(args.weights)
    summary = build_reasoning_dataset(
        n,
        policy,
        _client_from_config(cfg),
        _out(args),
        ctx=context_from_config(cfg),
        seed=seed,
        m=int(cfg["reasoning"]["m"]),
        windows=windows_from_config(cfg),
    )
    _emit(summary)
    return 0


def _load_scenario(args, cfg, seed) -> ScenarioSpec:
    if (args.scenario is None) == (args.index is None):
        raise ConfigError("solve needs exactly one of --scenario or --index")
    if args.scenario is not None:
        path = Path(args.scenario)
        if not path.exists():
            raise ConfigError(f"scenario file not found: {path}")
        sc = ScenarioSpec.from_dict(json.loads(path.read_text()))
    else:
        sc = sample_scenario(seed, args.index)
    if args.intent is not None:
        sc = dataclasses.replace(sc, intent=parse_intent(args.intent))
    return sc


def _cmd_solve(args, cfg, seed) -> int:
    sc = _load_scenario(args, cfg, seed)
    ctx = context_from_config(cfg)
    windows = windows_from_config(cfg)
    policy = None if args.weights is None else load_weights(args.weights)
    rng = np.random.default_rng(sc.seed)
    inp = ReasoningInput.from_scenario(sc)
    if args.reasoner == "llm":
        decision = llm_reason(
            inp, _client_from_config(cfg), dt=ctx.dt, rng=rng, windows=windows, n_max=ctx.n_max
        )
    else:
        decision = heuristic_reason(inp, rng, dt=ctx.dt, windows=windows, n_max=ctx.n_max)
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
    record = trajectory_record(outcome, sc, ctx)
    record["reasoning"] = decision.to_dict()
    out = _out(args, required=False)
    if out is None:
        _emit(record)
    else:
        out.write_text(json.dumps(record, sort_keys=True, indent=2) + "\n")
        _emit({"out": str(out), "scp_status": record["scp_status"], "metrics": record["metrics"]})
    return 0


def _cmd_eval_e2e(args, cfg, seed) -> int:
    n = args.n if args.n is not None else int(cfg["harness"]["test_scenarios"])
    cells = None if args.cells is None else [c.strip() for c in args.cells.split(",") if c.strip()]
    known = {f"{r}_{w}" for r in REASONERS for w in WAYPOINT_MODES}
    if cells is not None:
        unknown = sorted(set(cells) - known)
        if unknown:
            raise ConfigError(f"unknown grid cells: {unknown}")
    wants_policy = any(c.endswith("_policy") for c in (cells or sorted(known)))
    if wants_policy and args.weights is None:
        raise ConfigError("policy cells need --weights (or restrict --cells)")
    policy = None if args.weights is None else load_weights(args.weights)
    out = _out(args)
    out.mkdir(parents=True, exist_ok=True)
    header = desk_scale_header(test_scenarios=n)
    reports = {}
    for name in sorted(known) if cells is None else cells:
        reasoner, mode = name.rsplit("_", 1)
        report, _ = evaluate_end_to_end(
            reasoner,
            mode,
            n,
            sink=out / f"{name}.jsonl",
            seed=seed,
            policy=policy,
            client=_client_from_config(cfg) if reasoner == "llm" else None,
            ctx=context_from_config(cfg),
            windows=windows_from_config(cfg),
            header=dict(header, cell=name),
        )
        reports[name] = report
        sys.stdout.write(_report_table(name, report) + "\n\n")
    (out / "report.json").write_text(
        json.dumps({k: r.to_dict() for k, r in reports.items()}, sort_keys=True, indent=2) + "\n"
    )
    return 0


def _cmd_serve(args, cfg, seed) -> int:
    del seed
    import uvicorn

    from proxops.service import create_app

    policy = None if args.weights is None else load_weights(args.weights)
    app = create_app(cfg=cfg, policy=policy, static_dir=args.static)
    uvicorn.run(app, host=args.host, port=args.port)
    return 0


def main(argv=None) -> int:
    try:
        args = _parser().parse_args(argv)
    except SystemExit as exc:
        code = exc.code
        return int(code) if code else 0
    try:
        cfg = load_config(getattr(args, "config", None))
        seed = getattr(args, "seed", None)
        if seed is None:
            seed = int(cfg["harness"]["seed"])
        return args.func(args, cfg, seed)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (ValueError, RuntimeError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
