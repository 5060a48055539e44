"""Command-line entry point: train / evaluate / matrix / design-rewards /
validate-fixtures.

Exit codes: 0 success, 1 config/validation failure, 2 runtime error. One
global seed fans out deterministically to every stream, so identical
invocations produce byte-identical metrics files.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys
from pathlib import Path

from . import evalharness, fixtures, ppo, reward_designer
from .env import CyberArena
from .errors import (ChecksumMismatch, DecoyArenaError, ParseError, SchemaError,
                     ValidationError)
from .rewards import load_rewards

_VALIDATION_ERRORS = (ParseError, ValidationError, SchemaError, ChecksumMismatch,
                      FileNotFoundError, KeyError)


def _qualified(exc: BaseException) -> str:
    module = type(exc).__module__
    prefix = module.rsplit(".", 1)[-1] if module != "builtins" else ""
    return f"{prefix}.{type(exc).__name__}" if prefix else type(exc).__name__


def _resolve_reward_text(agent: str, name_or_path: str) -> str:
    path = Path(name_or_path)
    if path.suffix in (".yaml", ".yml") or path.exists():
        return path.read_text()
    return fixtures.reward_fixture_text(agent, name_or_path)


def _resolve_network_text(name_or_path: str | None) -> str:
    if name_or_path is None:
        return fixtures.default_network_text()
    return Path(name_or_path).read_text()


def _prepare_out_dir(path_str: str, force: bool) -> Path:
    out = Path(path_str)
    if out.exists() and not force and any(out.iterdir()):
        raise ValidationError(f"output directory {out} is not empty (use --force)")
    out.mkdir(parents=True, exist_ok=True)
    return out


def _echo_config(out: Path, payload: dict) -> None:
    (out / "run_config.json").write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")


def _ppo_config(args) -> ppo.PPOConfig:
    cfg = ppo.PPOConfig(seed=args.seed)
    overrides = {}
    for name in ("total_timesteps", "rollout_length", "num_envs", "learning_rate",
                 "hidden_dim"):
        value = getattr(args, name, None)
        if value is not None:
            overrides[name] = value
    if getattr(args, "no_anneal", False):
        overrides["anneal_lr"] = False
    return dataclasses.replace(cfg, **overrides) if overrides else cfg


def _add_common_training_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--network", default=None, help="network config path (default: shipped 15-host)")
    parser.add_argument("--steps", type=int, default=100, help="episode length")
    parser.add_argument("--decoy-hit-scale", type=float, default=1.0)
    parser.add_argument("--total-timesteps", type=int, default=None, dest="total_timesteps")
    parser.add_argument("--rollout-length", type=int, default=None, dest="rollout_length")
    parser.add_argument("--num-envs", type=int, default=None, dest="num_envs")
    parser.add_argument("--learning-rate", type=float, default=None, dest="learning_rate")
    parser.add_argument("--hidden-dim", type=int, default=None, dest="hidden_dim")
    parser.add_argument("--no-anneal", action="store_true")


def cmd_validate_fixtures(args) -> int:
    expected = {
        ("blue", "baseline"): {"nothing": (0.0, 0.0), "decoy0": (-20.0, 0.0),
                               "remove_decoy": (-1.0, 0.0)},
        ("blue", "proactive_v1"): {"nothing": (-5.0, -1.0), "decoy0": (20.0, 2.0),
                                   "remove_decoy": (-10.0, -2.0)},
        ("blue", "proactive_v2"): {"nothing": (-5.0, -1.0), "decoy0": (-5.0, -0.5),
                                   "remove_decoy": (-10.0, 0.0)},
        ("red", "baseline"): {"pingsweep": (1.0, 0.0), "portscan": (2.0, 0.0),
                              "discovery": (5.0, 0.0), "lateral_movement": (10.0, 0.0),
                              "privilege_escalation": (20.0, 0.0), "impact": (50.0, 0.0)},
        ("red", "aggressive"): {"pingsweep": (5.0, 2.0), "portscan": (10.0, 3.0),
                                "discovery": (20.0, 5.0), "lateral_movement": (40.0, 15.0),
                                "privilege_escalation": (75.0, 25.0), "impact": (150.0, 50.0)},
        ("red", "stealthy"): {"pingsweep": (0.5, 3.0), "portscan": (1.0, 5.0),
                              "discovery": (3.0, 8.0), "lateral_movement": (5.0, 20.0),
                              "privilege_escalation": (8.0, 25.0), "impact": (15.0, 50.0)},
    }
    failures = 0
    checks = 0
    for (agent, persona), table in expected.items():
        structure = load_rewards(fixtures.reward_fixture_text(agent, persona))
        for action, (immediate, recurring) in table.items():
            entry = structure.entries[action]
            for label, got, want in (("immediate", entry.immediate, immediate),
                                     ("recurring", entry.recurring, recurring)):
                checks += 1
                ok = got == want
                failures += 0 if ok else 1
                print(f"{'ok' if ok else 'FAIL'} {agent}/{persona} {action} "
                      f"{label}={got!r} expected={want!r}")
    print(f"{checks - failures}/{checks} fixture values verified")
    return 0 if failures == 0 else 1


def cmd_train(args) -> int:
    out = _prepare_out_dir(args.out, args.force)
    network_text = _resolve_network_text(args.network)
    blue_rs = load_rewards(_resolve_reward_text("blue", args.blue))
    red_rs = load_rewards(_resolve_reward_text("red", args.red))
    cfg = _ppo_config(args)
    _echo_config(out, {"command": "train", "blue": args.blue, "red": args.red,
                       "steps": args.steps, "decoy_hit_scale": args.decoy_hit_scale,
                       "ppo": dataclasses.asdict(cfg)})

    def factory(env_seed: int) -> CyberArena:
        return CyberArena(network_text, blue_rs, red_rs, episode_length=args.steps,
                          decoy_hit_scale=args.decoy_hit_scale, seed_source=env_seed)

    result = ppo.train(factory, cfg, out_dir=out,
                       fixture_hashes=evalharness.fixture_hashes(blue_rs, red_rs,
                                                                 network_text))
    print(f"trained {result.global_step} steps; checkpoint at {result.checkpoint_base}")
    print(f"metrics: {result.metrics_path}")
    return 0


def cmd_evaluate(args) -> int:
    out = _prepare_out_dir(args.out, args.force)
    network_text = _resolve_network_text(args.network)
    blue_rs = load_rewards(_resolve_reward_text("blue", args.blue))
    red_rs = load_rewards(_resolve_reward_text("red", args.red))
    _echo_config(out, {"command": "evaluate", "checkpoint": args.checkpoint,
                       "blue": args.blue, "red": args.red, "episodes": args.episodes,
                       "steps": args.steps, "seed": args.seed, "greedy": args.greedy})
    sink = evalharness.TrajectoryWriter(out / "trajectories.csv") if args.trajectories else None
    try:
        records = evalharness.evaluate(
            args.checkpoint, blue_rs, red_rs, n_episodes=args.episodes, steps=args.steps,
            base_seed=args.seed, greedy=args.greedy, network_config_text=network_text,
            decoy_hit_scale=args.decoy_hit_scale, verify_hashes=not args.no_verify_hashes,
            trajectory_sink=sink)
    finally:
        if sink is not None:
            sink.close()
    evalharness.write_episode_csv(out / "episodes.csv", records)
    summary = evalharness.summarize_records(records, args.steps)
    (out / "summary.json").write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n")
    curve = evalharness.ccdf(evalharness.impact_samples(records), censored_at=args.steps)
    evalharness.write_ccdf_points(out / "ccdf.csv", curve)
    print(f"evaluated {len(records)} episodes; "
          f"exceedance p95 = {summary['exceedance_p95']} "
          f"(order-stat convention: {summary['exceedance_p95_order_stat']})")
    return 0


def cmd_matrix(args) -> int:
    out = _prepare_out_dir(args.out, args.force)
    seeds = tuple(int(s) for s in args.seeds.split(","))
    cfg = evalharness.MatrixConfig(
        seeds=seeds, ppo=_ppo_config(args),
        eval_episodes=args.episodes, eval_steps=args.steps,
        eval_base_seed=args.eval_seed, greedy=args.greedy,
        decoy_hit_scale=args.decoy_hit_scale,
        network_config_text=_resolve_network_text(args.network),
        include_random_baseline=not args.no_random_baseline)
    _echo_config(out, {"command": "matrix", "seeds": list(seeds),
                       "episodes": args.episodes, "steps": args.steps,
                       "ppo": dataclasses.asdict(cfg.ppo)})
    report = evalharness.run_matrix(cfg, out_dir=out)
    print(f"{len(report['cells'])} cells x {len(seeds)} seeds -> {out / 'matrix.json'}")
    for red in cfg.red_personas:
        print(f"best blue vs {red}: {report['mixed_strategy'][red]}")
    return 0


def cmd_design_rewards(args) -> int:
    persona_prompt = Path(args.persona).read_text()
    baseline_text = _resolve_reward_text(args.agent, args.baseline)
    context = [("baseline_rewards.yaml", baseline_text)]
    if args.context:
        for path in args.context:
            context.append((Path(path).name, Path(path).read_text()))
    else:
        context.append(("environment_context.md", fixtures.prompt_text("environment_context.md")))
    request = reward_designer.DesignRequest(
        persona_prompt=persona_prompt,
        context_documents=tuple(context),
        model_endpoint=args.endpoint,
        model_name=args.model,
        auth_token_env_var=args.token_env)
    transport = reward_designer.HttpTransport()
    result = reward_designer.design_rewards(request, transport)
    out_path = Path(args.out)
    out_path.parent.mkdir(parents=True, exist_ok=True)
    out_path.write_text(result.extracted_config)
    reward_designer.write_transcript(out_path, request, result)
    print(f"validated {result.validated.agent}/{result.validated.persona} -> {out_path}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="decoyarena",
                                     description="Cyber decoy-defense arena: "
                                                 "train/evaluate PPO defenders "
                                                 "against kill-chain attackers.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate-fixtures", help="check shipped persona tables")
    p.set_defaults(func=cmd_validate_fixtures)

    p = sub.add_parser("train", help="train one blue policy")
    p.add_argument("--blue", required=True, help="blue persona name or reward config path")
    p.add_argument("--red", required=True, help="red persona name or reward config path")
    p.add_argument("--seed", type=int, default=1)
    p.add_argument("--out", required=True)
    p.add_argument("--force", action="store_true")
    _add_common_training_flags(p)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("evaluate", help="evaluate a checkpoint")
    p.add_argument("--checkpoint", required=True, help="checkpoint base path (no extension)")
    p.add_argument("--blue", required=True)
    p.add_argument("--red", required=True)
    p.add_argument("--episodes", type=int, default=50)
    p.add_argument("--steps", type=int, default=100)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--greedy", action="store_true")
    p.add_argument("--network", default=None)
    p.add_argument("--decoy-hit-scale", type=float, default=1.0)
    p.add_argument("--no-verify-hashes", action="store_true")
    p.add_argument("--trajectories", action="store_true",
                   help="also write per-step red/blue trajectory logs")
    p.add_argument("--out", required=True)
    p.add_argument("--force", action="store_true")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("matrix", help="train+evaluate the full persona matrix")
    p.add_argument("--seeds", default="1", help="comma-separated training seeds")
    p.add_argument("--seed", type=int, default=1, help="base PPO seed (overridden per cell)")
    p.add_argument("--episodes", type=int, default=50)
    p.add_argument("--eval-seed", type=int, default=10_000)
    p.add_argument("--greedy", action="store_true")
    p.add_argument("--no-random-baseline", action="store_true")
    p.add_argument("--out", required=True)
    p.add_argument("--force", action="store_true")
    _add_common_training_flags(p)
    p.set_defaults(func=cmd_matrix)

    p = sub.add_parser("design-rewards", help="ask an LLM service for a persona config")
    p.add_argument("--persona", required=True, help="persona prompt text file")
    p.add_argument("--baseline", required=True, help="baseline persona name or config path")
    p.add_argument("--agent", choices=("red", "blue"), required=True)
    p.add_argument("--endpoint", required=True)
    p.add_argument("--model", required=True)
    p.add_argument("--token-env", default="DECOYARENA_LLM_TOKEN")
    p.add_argument("--context", nargs="*", default=None,
                   help="extra context document paths")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_design_rewards)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except _VALIDATION_ERRORS as exc:
        print(f"{_qualified(exc)}: {exc}", file=sys.stderr)
        return 1
    except DecoyArenaError as exc:
        print(f"{_qualified(exc)}: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"{_qualified(exc)}: {exc}", file=sys.stderr)
        return 2


def entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entry()
