"""Frozen-policy evaluation: episode records, time-to-first-impact CCDFs,
exceedance percentiles, action frequencies, and the persona experiment matrix.
"""

from __future__ import annotations

import csv
import hashlib
import json
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import fixtures, nets, ppo
from .blueteam import BLUE_ACTION_NAMES
from .env import CyberArena
from .errors import ChecksumMismatch, EmptySamples
from .redteam import RED_ACTION_NAMES
from .rewards import RewardStructure, structure_hash

# Single-run reference results published for this persona matrix; reported
# side by side for context, never asserted (they are seed-dependent).
REFERENCE_EXCEEDANCE_P95 = {
    ("baseline", "baseline"): 15,
    ("proactive_v1", "baseline"): 11,
    ("proactive_v2", "baseline"): 11,
    ("baseline", "stealthy"): 13,
    ("proactive_v1", "stealthy"): 13,
    ("proactive_v2", "stealthy"): 18,
    ("baseline", "aggressive"): 10,
    ("proactive_v1", "aggressive"): 12,
    ("proactive_v2", "aggressive"): 15,
}


@dataclass
class EpisodeRecord:
    seed: int
    steps: int
    first_impact_step: int | None
    blue_action_counts: dict[str, int]
    blue_action_counts_pre_impact: dict[str, int]
    red_action_counts: dict[str, int]
    total_reward: float


def network_hash(network_config_text: str) -> str:
    return hashlib.sha256(network_config_text.encode()).hexdigest()


def fixture_hashes(blue_rs: RewardStructure, red_rs: RewardStructure,
                   network_config_text: str) -> dict[str, str]:
    return {
        "blue_rewards": structure_hash(blue_rs),
        "red_rewards": structure_hash(red_rs),
        "network": network_hash(network_config_text),
    }


def _run_episodes(policy_fn, blue_rs: RewardStructure, red_rs: RewardStructure,
                  n_episodes: int, steps: int, base_seed: int,
                  network_config_text: str, decoy_hit_scale: float,
                  trajectory_sink=None) -> list[EpisodeRecord]:
    env = CyberArena(network_config_text, blue_rs, red_rs, episode_length=steps,
                     decoy_hit_scale=decoy_hit_scale)
    records = []
    for episode in range(n_episodes):
        seed = base_seed + episode
        obs = env.reset(seed=[seed, 0])
        action_rng = np.random.default_rng([seed, 1])
        done = False
        while not done:
            obs, _, done, _ = env.step(policy_fn(obs, action_rng))
        if trajectory_sink is not None:
            trajectory_sink(seed, env)
        first_impact = env.first_impact_step()
        blue_counts = {name: 0 for name in BLUE_ACTION_NAMES}
        pre_counts = {name: 0 for name in BLUE_ACTION_NAMES}
        cutoff = first_impact if first_impact is not None else steps + 1
        for entry in env.blue_log:
            blue_counts[entry.action_name] += 1
            if entry.step < cutoff:
                pre_counts[entry.action_name] += 1
        red_counts = {name: int(count)
                      for name, count in zip(RED_ACTION_NAMES, env.red_action_counts)}
        records.append(EpisodeRecord(
            seed=seed, steps=steps, first_impact_step=first_impact,
            blue_action_counts=blue_counts, blue_action_counts_pre_impact=pre_counts,
            red_action_counts=red_counts, total_reward=env.episode_return))
    return records


def evaluate(checkpoint_base, blue_rs: RewardStructure, red_rs: RewardStructure,
             n_episodes: int = 50, steps: int = 100, base_seed: int = 0,
             greedy: bool = False, network_config_text: str | None = None,
             decoy_hit_scale: float = 1.0, verify_hashes: bool = True,
             trajectory_sink=None) -> list[EpisodeRecord]:
    """Run evaluation episodes with seeds base_seed..base_seed+n-1.

    Actions are sampled from the stochastic policy by default; ``greedy``
    switches to argmax. The checkpoint's recorded fixture hashes must match
    the structures passed in unless ``verify_hashes`` is off.
    ``trajectory_sink(seed, env)`` is called after each episode while its
    red/blue step logs are still attached, for trajectory-plot exports.
    """
    if network_config_text is None:
        network_config_text = fixtures.default_network_text()
    policy, _, meta = ppo.load_checkpoint(checkpoint_base)
    recorded = meta.get("fixture_hashes") or {}
    if verify_hashes and recorded:
        expected = fixture_hashes(blue_rs, red_rs, network_config_text)
        for key, value in expected.items():
            if key in recorded and recorded[key] != value:
                raise ChecksumMismatch(
                    f"checkpoint was trained against a different {key} fixture")

    if greedy:
        def policy_fn(obs, rng):
            logits, _ = policy.forward(obs[None, :])
            return int(np.argmax(logits[0]))
    else:
        def policy_fn(obs, rng):
            logits, _ = policy.forward(obs[None, :])
            actions, _ = nets.sample_actions(logits, rng)
            return int(actions[0])

    return _run_episodes(policy_fn, blue_rs, red_rs, n_episodes, steps, base_seed,
                         network_config_text, decoy_hit_scale, trajectory_sink)


def evaluate_uniform_random(blue_rs: RewardStructure, red_rs: RewardStructure,
                            n_episodes: int = 50, steps: int = 100, base_seed: int = 0,
                            network_config_text: str | None = None,
                            decoy_hit_scale: float = 1.0) -> list[EpisodeRecord]:
    """Control defender: uniform-random over the flattened action space."""
    if network_config_text is None:
        network_config_text = fixtures.default_network_text()
    probe = CyberArena(network_config_text, blue_rs, red_rs, episode_length=steps)
    n_actions = probe.action_count

    def policy_fn(obs, rng):
        return int(rng.integers(n_actions))

    return _run_episodes(policy_fn, blue_rs, red_rs, n_episodes, steps, base_seed,
                         network_config_text, decoy_hit_scale)


@dataclass
class CCDF:
    """Empirical exceedance function P(X > x) on the integer grid 0..censored_at."""

    xs: np.ndarray
    ps: np.ndarray
    n_samples: int
    censored_at: int


def impact_samples(records: list[EpisodeRecord], include_censored: bool = True) -> list[int]:
    """Time-to-first-impact samples; censored episodes encode as the episode length."""
    samples = []
    for record in records:
        if record.first_impact_step is not None:
            samples.append(record.first_impact_step)
        elif include_censored:
            samples.append(record.steps)
    return samples


def ccdf(samples: list[int], censored_at: int) -> CCDF:
    """Counting estimator of P(X > x) for x in 0..censored_at.

    Censored samples are passed in as the value ``censored_at`` itself, so
    they count as exceeding every x < censored_at and nothing beyond.
    """
    if not samples:
        raise EmptySamples("ccdf needs at least one sample")
    data = np.sort(np.asarray(samples))
    xs = np.arange(censored_at + 1)
    exceed_counts = len(data) - np.searchsorted(data, xs, side="right")
    return CCDF(xs=xs, ps=exceed_counts / len(data), n_samples=len(data),
                censored_at=censored_at)


def exceedance_percentile(c: CCDF, p: float = 0.95) -> int:
    """Largest x with P(X > x) >= p; 0 when even x=0 fails the bar."""
    hits = np.nonzero(c.ps >= p)[0]
    if hits.size == 0:
        return 0
    return int(c.xs[hits[-1]])


def percentile_order_statistic(samples: list[int], p: float = 0.95) -> int:
    """The ceil((1-p)*n)-th smallest sample: the value the published results use
    (for 50 samples all equal to v this reports v, where the exceedance
    convention reports v-1)."""
    if not samples:
        raise EmptySamples("need at least one sample")
    k = max(1, math.ceil((1.0 - p) * len(samples)))
    return int(sorted(samples)[k - 1])


def action_frequencies(records: list[EpisodeRecord], pre_impact: bool = False,
                       agent: str = "blue") -> dict[str, float]:
    """Aggregate action fractions across episodes (fractions sum to 1)."""
    if not records:
        raise EmptySamples("no episode records")
    if agent == "blue":
        names = BLUE_ACTION_NAMES
        counts_of = (lambda r: r.blue_action_counts_pre_impact) if pre_impact \
            else (lambda r: r.blue_action_counts)
    elif agent == "red":
        if pre_impact:
            raise ValueError("pre-impact restriction is tracked for blue actions only")
        names = RED_ACTION_NAMES
        counts_of = lambda r: r.red_action_counts
    else:
        raise ValueError(f"agent must be blue or red, got {agent!r}")
    totals = {name: 0 for name in names}
    for record in records:
        for name, count in counts_of(record).items():
            totals[name] += count
    denominator = sum(totals.values())
    if denominator == 0:
        return {name: 0.0 for name in names}
    return {name: totals[name] / denominator for name in names}


@dataclass
class MatrixConfig:
    blue_personas: tuple[str, ...] = fixtures.BLUE_PERSONAS
    red_personas: tuple[str, ...] = fixtures.RED_PERSONAS
    seeds: tuple[int, ...] = (1,)
    ppo: ppo.PPOConfig = field(default_factory=ppo.PPOConfig)
    eval_episodes: int = 50
    eval_steps: int = 100
    eval_base_seed: int = 10_000
    greedy: bool = False
    decoy_hit_scale: float = 1.0
    network_config_text: str | None = None
    include_random_baseline: bool = True


def _seed_stats(values: list) -> dict:
    arr = np.asarray(values, dtype=float)
    return {"median": float(np.median(arr)), "min": float(arr.min()),
            "max": float(arr.max()), "values": [float(v) for v in arr]}


def summarize_records(records: list[EpisodeRecord], steps: int) -> dict:
    samples = impact_samples(records, include_censored=True)
    curve = ccdf(samples, censored_at=steps)
    uncensored = impact_samples(records, include_censored=False)
    summary = {
        "episodes": len(records),
        "censored_episodes": sum(1 for r in records if r.first_impact_step is None),
        "exceedance_p95": exceedance_percentile(curve, 0.95),
        "exceedance_p95_order_stat": percentile_order_statistic(samples, 0.95),
        "mean_total_reward": float(np.mean([r.total_reward for r in records])),
        "blue_frequencies": action_frequencies(records, pre_impact=False, agent="blue"),
        "blue_frequencies_pre_impact": action_frequencies(records, pre_impact=True, agent="blue"),
        "red_frequencies": action_frequencies(records, pre_impact=False, agent="red"),
    }
    if uncensored:
        summary["exceedance_p95_uncensored_only"] = exceedance_percentile(
            ccdf(uncensored, censored_at=steps), 0.95)
    else:
        summary["exceedance_p95_uncensored_only"] = None
    return summary


def write_episode_csv(path: Path, records: list[EpisodeRecord]) -> None:
    with open(path, "w", newline="") as handle:
        writer = csv.writer(handle)
        blue_cols = [f"blue_{n}" for n in BLUE_ACTION_NAMES]
        pre_cols = [f"blue_pre_impact_{n}" for n in BLUE_ACTION_NAMES]
        red_cols = [f"red_{n}" for n in RED_ACTION_NAMES]
        writer.writerow(["seed", "steps", "first_impact_step", "total_reward"]
                        + blue_cols + pre_cols + red_cols)
        for r in records:
            writer.writerow(
                [r.seed, r.steps,
                 "" if r.first_impact_step is None else r.first_impact_step,
                 repr(r.total_reward)]
                + [r.blue_action_counts[n] for n in BLUE_ACTION_NAMES]
                + [r.blue_action_counts_pre_impact[n] for n in BLUE_ACTION_NAMES]
                + [r.red_action_counts[n] for n in RED_ACTION_NAMES])


class TrajectoryWriter:
    """Streams per-step red/blue trajectory logs into one CSV (Fig.-style
    plot source: red action with source/destination subnet and decoy flag,
    plus the blue action taken the same step)."""

    COLUMNS = ["episode_seed", "step", "red_action", "source_subnet",
               "destination_subnet", "target_was_decoy", "blue_action",
               "blue_subnet", "blue_outcome"]

    def __init__(self, path: Path):
        self._handle = open(path, "w", newline="")
        self._writer = csv.writer(self._handle)
        self._writer.writerow(self.COLUMNS)

    def __call__(self, seed: int, env: CyberArena) -> None:
        for red, blue in zip(env.red_log, env.blue_log):
            self._writer.writerow([seed, red.step, red.action, red.source_subnet,
                                   red.destination_subnet, int(red.target_was_decoy),
                                   blue.action_name, blue.subnet or "",
                                   blue.outcome])

    def close(self) -> None:
        self._handle.close()


def write_ccdf_points(path: Path, curve: CCDF) -> None:
    with open(path, "w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(["x", "p_exceed"])
        for x, p in zip(curve.xs, curve.ps):
            writer.writerow([int(x), repr(float(p))])


def train_cell(blue_persona: str, red_persona: str, seed: int, base_cfg: ppo.PPOConfig,
               out_dir: Path | None, network_config_text: str,
               decoy_hit_scale: float = 1.0, episode_length: int = 100) -> Path | ppo.TrainResult:
    """Train one matrix cell (or load it when its checkpoint already exists)."""
    blue_rs = fixtures.blue_structure(blue_persona)
    red_rs = fixtures.red_structure(red_persona)
    if out_dir is not None:
        out_dir = Path(out_dir)
        base = out_dir / "checkpoint"
        if base.with_suffix(".json").exists() and base.with_suffix(".bin").exists():
            return base

    def factory(env_seed: int) -> CyberArena:
        return CyberArena(network_config_text, blue_rs, red_rs,
                          episode_length=episode_length,
                          decoy_hit_scale=decoy_hit_scale, seed_source=env_seed)

    cfg = ppo.PPOConfig(**{**asdict(base_cfg), "seed": seed})
    result = ppo.train(factory, cfg, out_dir=out_dir,
                       fixture_hashes=fixture_hashes(blue_rs, red_rs, network_config_text))
    return result.checkpoint_base if out_dir is not None else result


def run_matrix(cfg: MatrixConfig, out_dir: str | Path | None = None) -> dict:
    """Train and evaluate every (blue, red) persona cell across the seeds.

    Existing checkpoints under ``out_dir`` are reused instead of retrained.
    Returns the full report; when ``out_dir`` is given, also writes
    ``matrix.json`` plus per-cell episode CSVs and CCDF point files.
    """
    network_text = cfg.network_config_text or fixtures.default_network_text()
    out_root = Path(out_dir) if out_dir is not None else None
    report: dict = {"cells": {}, "random_blue": {}, "mixed_strategy": {},
                    "seeds": list(cfg.seeds),
                    "eval": {"episodes": cfg.eval_episodes, "steps": cfg.eval_steps,
                             "base_seed": cfg.eval_base_seed, "greedy": cfg.greedy}}

    def eval_base_for(seed_index: int) -> int:
        return cfg.eval_base_seed + seed_index * 100_000

    for blue_persona in cfg.blue_personas:
        blue_rs = fixtures.blue_structure(blue_persona)
        for red_persona in cfg.red_personas:
            red_rs = fixtures.red_structure(red_persona)
            cell_key = f"{blue_persona}|{red_persona}"
            per_seed = []
            for seed_index, seed in enumerate(cfg.seeds):
                cell_dir = (out_root / "cells" / cell_key.replace("|", "__")
                            / f"seed{seed}") if out_root is not None else None
                trained = train_cell(blue_persona, red_persona, seed, cfg.ppo,
                                     cell_dir, network_text, cfg.decoy_hit_scale,
                                     cfg.eval_steps)
                if isinstance(trained, ppo.TrainResult):
                    # In-memory path (no out_dir): evaluate the nets directly.
                    checkpoint = None
                    records = _evaluate_result(trained, blue_rs, red_rs, cfg,
                                               eval_base_for(seed_index), network_text)
                else:
                    checkpoint = trained
                    records = evaluate(checkpoint, blue_rs, red_rs,
                                       n_episodes=cfg.eval_episodes, steps=cfg.eval_steps,
                                       base_seed=eval_base_for(seed_index),
                                       greedy=cfg.greedy, network_config_text=network_text,
                                       decoy_hit_scale=cfg.decoy_hit_scale)
                summary = summarize_records(records, cfg.eval_steps)
                summary["seed"] = seed
                summary["checkpoint"] = str(checkpoint) if checkpoint else None
                per_seed.append(summary)
                if cell_dir is not None:
                    write_episode_csv(cell_dir / "episodes.csv", records)
                    curve = ccdf(impact_samples(records), censored_at=cfg.eval_steps)
                    write_ccdf_points(cell_dir / "ccdf.csv", curve)
                    (cell_dir / "summary.json").write_text(
                        json.dumps(summary, indent=2, sort_keys=True) + "\n")
            cell = {
                "blue": blue_persona,
                "red": red_persona,
                "per_seed": per_seed,
                "exceedance_p95": _seed_stats([s["exceedance_p95"] for s in per_seed]),
                "reference_exceedance_p95": REFERENCE_EXCEEDANCE_P95.get(
                    (blue_persona, red_persona)),
            }
            report["cells"][cell_key] = cell

    if cfg.include_random_baseline:
        for red_persona in cfg.red_personas:
            red_rs = fixtures.red_structure(red_persona)
            per_seed = []
            for seed_index, seed in enumerate(cfg.seeds):
                records = evaluate_uniform_random(
                    fixtures.blue_structure("baseline"), red_rs,
                    n_episodes=cfg.eval_episodes, steps=cfg.eval_steps,
                    base_seed=eval_base_for(seed_index),
                    network_config_text=network_text,
                    decoy_hit_scale=cfg.decoy_hit_scale)
                summary = summarize_records(records, cfg.eval_steps)
                summary["seed"] = seed
                per_seed.append(summary)
            report["random_blue"][red_persona] = {
                "per_seed": per_seed,
                "exceedance_p95": _seed_stats([s["exceedance_p95"] for s in per_seed]),
            }

    for red_persona in cfg.red_personas:
        best = max(cfg.blue_personas,
                   key=lambda b: report["cells"][f"{b}|{red_persona}"]
                   ["exceedance_p95"]["median"])
        report["mixed_strategy"][red_persona] = best

    if out_root is not None:
        out_root.mkdir(parents=True, exist_ok=True)
        (out_root / "matrix.json").write_text(
            json.dumps(report, indent=2, sort_keys=True) + "\n")
    return report


def _evaluate_result(result: ppo.TrainResult, blue_rs, red_rs, cfg: MatrixConfig,
                     base_seed: int, network_text: str) -> list[EpisodeRecord]:
    policy = result.policy
    if cfg.greedy:
        def policy_fn(obs, rng):
            logits, _ = policy.forward(obs[None, :])
            return int(np.argmax(logits[0]))
    else:
        def policy_fn(obs, rng):
            logits, _ = policy.forward(obs[None, :])
            actions, _ = nets.sample_actions(logits, rng)
            return int(actions[0])
    return _run_episodes(policy_fn, blue_rs, red_rs, cfg.eval_episodes,
                         cfg.eval_steps, base_seed, network_text,
                         cfg.decoy_hit_scale)
