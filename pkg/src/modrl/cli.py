"""Command-line entry point: train, eval, mission, report.

Exit codes: 0 success, 1 runtime failure, 2 usage/config error, 3 mission
timeout. Every command writes its outputs under ``<outdir>/<run-name>/`` and
is deterministic for a fixed (config, seed) pair.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path

from . import scripted
from .config import ConfigError, parse_run_config
from .coord.mission import run_mission
from .coord.timeline import EmptyLogError, TimelineLog, timeline_report
from .neuralnet import CheckpointFormatError
from .rl import training
from .rl.training import AGENT_KINDS

EXIT_OK = 0
EXIT_RUNTIME = 1
EXIT_USAGE = 2
EXIT_TIMEOUT = 3

ORACLE_POLICIES = {
    "wheel": lambda: scripted.ScriptedWheelPolicy(),
    "steer": lambda: scripted.ScriptedSteerPolicy(),
    "manip": lambda: scripted.ScriptedManipPolicy(),
    "random-wheel": lambda: scripted.RandomPolicy(2, seed=0),
}

ENV_KIND_FOR_AGENT = {"wheel-sac": "wheel", "steer-ppo": "steer", "manip-ppo": "manip"}


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="modrl",
                                     description="module policies: train, evaluate, compose")
    sub = parser.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="run-config file (INI format)")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--outdir", default="runs")
    common.add_argument("--name", help="run name (default derived from command)")

    p_train = sub.add_parser("train", parents=[common], help="train one module policy")
    p_train.add_argument("--agent", required=True)
    p_train.add_argument("--episodes", type=int, help="wheel-sac episode budget")
    p_train.add_argument("--steps", type=int, help="ppo total env-step budget")

    p_eval = sub.add_parser("eval", parents=[common], help="evaluate a policy")
    p_eval.add_argument("--checkpoint", help="checkpoint file to evaluate")
    p_eval.add_argument("--oracle", choices=sorted(ORACLE_POLICIES),
                        help="evaluate a scripted policy instead of a checkpoint")
    p_eval.add_argument("--env", choices=("wheel", "steer", "manip"),
                        help="environment kind (default: from checkpoint/oracle)")
    p_eval.add_argument("--episodes", type=int, default=50,
                        help="episodes (wheel/manip) or grid points (steer)")
    p_eval.add_argument("--sweep", action="store_true",
                        help="manip only: evaluate the 13-distance sweep")

    p_mission = sub.add_parser("mission", parents=[common],
                               help="run the three-phase reconfiguration mission")
    p_mission.add_argument("--checkpoint", action="append", default=[],
                           help="checkpoint file; repeat for wheel/steer/manip")
    p_mission.add_argument("--oracle", action="store_true",
                           help="use scripted policies instead of checkpoints")
    p_mission.add_argument("--timeout", type=float, help="simulated-seconds limit")

    p_report = sub.add_parser("report", parents=[common],
                              help="summarize a mission timeline")
    p_report.add_argument("--timeline", required=True, help="timeline JSONL file")
    return parser


def _outdir(args, default_name: str) -> Path:
    name = args.name or default_name
    path = Path(args.outdir) / name
    path.mkdir(parents=True, exist_ok=True)
    return path


def _write_json(path: Path, payload: dict) -> None:
    with open(path, "w") as fh:
        json.dump(payload, fh, sort_keys=True, indent=2)
        fh.write("\n")


def cmd_train(args) -> int:
    if args.agent not in AGENT_KINDS:
        print(f"error: unknown agent {args.agent!r}; expected one of {AGENT_KINDS}",
              file=sys.stderr)
        return EXIT_USAGE
    cfg = parse_run_config(args.config, overrides={
        "run": {"episodes": args.episodes, "steps": args.steps, "seed": args.seed},
    })
    seed = cfg.get("run", "seed", args.seed)
    budget = cfg.budget()
    env_config = {
        "wheel-sac": cfg.wheel_env, "steer-ppo": cfg.steer_env, "manip-ppo": cfg.manip_env,
    }[args.agent]()
    algo_config = cfg.sac() if args.agent == "wheel-sac" else cfg.ppo()

    agent, rows = training.train(args.agent, seed=seed, env_config=env_config,
                                 algo_config=algo_config, budget=budget)
    out = _outdir(args, f"{args.agent}-seed{seed}")
    training.save_agent(out / "checkpoint.bin", args.agent, agent)
    training.write_metrics_csv(out / "metrics.csv", rows)
    last = rows[-1] if rows else {}
    print(f"trained {args.agent} seed={seed} rows={len(rows)} "
          f"last={json.dumps(last, sort_keys=True)}")
    print(f"outputs: {out / 'checkpoint.bin'} {out / 'metrics.csv'}")
    return EXIT_OK


def _eval_policy(args):
    if args.oracle:
        policy = ORACLE_POLICIES[args.oracle]()
        kind = args.env or args.oracle.replace("random-", "")
        return policy, kind
    if not args.checkpoint:
        raise ConfigError("eval needs --checkpoint or --oracle")
    ckpt = Path(args.checkpoint)
    if not ckpt.exists():
        raise ConfigError(f"checkpoint not found: {ckpt}")
    agent_kind, policy = training.load_policy(ckpt)
    return policy, args.env or ENV_KIND_FOR_AGENT[agent_kind]


def cmd_eval(args) -> int:
    cfg = parse_run_config(args.config)
    policy, env_kind = _eval_policy(args)
    env_config = {"wheel": cfg.wheel_env, "steer": cfg.steer_env,
                  "manip": cfg.manip_env}[env_kind]()
    if env_kind == "manip" and args.sweep:
        summary = training.evaluate_manip_sweep(policy, env_config, seed=args.seed)
    else:
        summary = training.evaluate(policy, env_kind, args.episodes, args.seed,
                                    env_config)
    if env_kind == "wheel":
        baseline = training.torque_baseline(env_config, seed=args.seed)
        summary["baseline_mean_abs_torque"] = baseline
        if baseline > 0 and summary["mean_abs_torque"] is not None:
            summary["torque_reduction"] = 1.0 - summary["mean_abs_torque"] / baseline
    out = _outdir(args, f"eval-{env_kind}-seed{args.seed}")
    _write_json(out / "summary.json", summary)
    print(json.dumps(summary, sort_keys=True))
    return EXIT_OK


def cmd_mission(args) -> int:
    cfg = parse_run_config(args.config)
    mission_cfg = cfg.mission()
    if args.timeout is not None:
        from dataclasses import replace
        mission_cfg = replace(mission_cfg, timeout=args.timeout)

    if args.oracle:
        policies = {
            "wheel": scripted.ScriptedWheelPolicy(),
            "steer": scripted.ScriptedSteerPolicy(),
            "manip": scripted.ScriptedManipPolicy(),
        }
    else:
        policies = {}
        for path in args.checkpoint:
            ckpt = Path(path)
            if not ckpt.exists():
                raise ConfigError(f"checkpoint not found: {ckpt}")
            kind, policy = training.load_policy(ckpt)
            policies[ENV_KIND_FOR_AGENT[kind]] = policy
        missing = {"wheel", "steer", "manip"} - set(policies)
        if missing:
            raise ConfigError(f"mission needs checkpoints for {sorted(missing)}")

    log, summary = run_mission(policies, mission_cfg, seed=args.seed)
    out = _outdir(args, f"mission-seed{args.seed}")
    log.write_jsonl(out / "timeline.jsonl")
    summary["report"] = timeline_report(log) if len(log) else None
    _write_json(out / "summary.json", summary)
    print(json.dumps({k: summary[k] for k in
                      ("success", "timed_out", "final_ee_distance", "path_efficiency",
                       "duration_s")}, sort_keys=True))
    if summary["timed_out"]:
        return EXIT_TIMEOUT
    return EXIT_OK if summary["success"] else EXIT_RUNTIME


def cmd_report(args) -> int:
    path = Path(args.timeline)
    if not path.exists():
        raise ConfigError(f"timeline not found: {path}")
    try:
        log = TimelineLog.read_jsonl(path)
        report = timeline_report(log)
    except (EmptyLogError, KeyError, ValueError) as exc:
        print(f"error: malformed timeline log: {exc}", file=sys.stderr)
        return EXIT_USAGE
    out = _outdir(args, "report")
    _write_json(out / "report.json", report)
    with open(out / "timeline_points.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["t", "mode", "distance_to_target"])
        for rec in log.records:
            writer.writerow([rec.t, rec.mode, rec.distance_to_target])
    print("mode shares (% of mission time):")
    for mode, share in sorted(report["mode_shares_pct"].items()):
        print(f"  {mode:12s} {share:6.2f}")
    print(f"transitions: {report['transition_count']} "
          f"(mean gap {report['mean_transition_gap_s']:.2f} s); "
          f"steering events: {report['steering_events']['total']}")
    return EXIT_OK


def main(argv=None) -> int:
    try:
        args = _build_parser().parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code else 0
    handlers = {"train": cmd_train, "eval": cmd_eval,
                "mission": cmd_mission, "report": cmd_report}
    try:
        return handlers[args.command](args)
    except (ConfigError, CheckpointFormatError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except Exception as exc:  # noqa: BLE001 - CLI boundary
        print(f"runtime failure: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
