"""Persona reward structures and the composite per-step reward.

Each persona config lists the agent's actions with an immediate reward and a
recurring reward. The composite reward seen by the learning defender at step
t is

    blue_immediate + sign * red_immediate + (sum of recurring amounts accrued
    at strictly earlier steps)

where sign is -1 when the red action hit a real asset and +decoy_hit_scale
when it hit a decoy. Recurring amounts accrued at step t start charging at
step t+1 and persist to episode end; their sign is fixed when they accrue.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from math import isfinite

import yaml

from .blueteam import BLUE_ACTION_NAMES, BlueAction
from .errors import ParseError, SchemaError, UnknownAction
from .redteam import RED_ACTION_NAMES, RedStep

AGENT_ACTION_NAMES = {"red": RED_ACTION_NAMES, "blue": BLUE_ACTION_NAMES}


@dataclass(frozen=True)
class RewardEntry:
    action_name: str
    immediate: float
    recurring: float


@dataclass(frozen=True)
class RewardStructure:
    """Validated reward table for one persona of one agent."""

    agent: str
    persona: str
    entries: dict[str, RewardEntry]

    def immediate(self, action_name: str) -> float:
        entry = self.entries.get(action_name)
        if entry is None:
            raise UnknownAction(f"{self.agent}/{self.persona}: no action {action_name!r}")
        return entry.immediate

    def recurring(self, action_name: str) -> float:
        entry = self.entries.get(action_name)
        if entry is None:
            raise UnknownAction(f"{self.agent}/{self.persona}: no action {action_name!r}")
        return entry.recurring

    def scaled(self, factor: float) -> "RewardStructure":
        return RewardStructure(
            agent=self.agent,
            persona=self.persona,
            entries={
                name: RewardEntry(name, e.immediate * factor, e.recurring * factor)
                for name, e in self.entries.items()
            },
        )


def validate_reward_dict(doc) -> tuple[RewardStructure | None, list[str]]:
    """Schema-check a parsed reward document; returns (structure, diagnostics)."""
    diagnostics: list[str] = []
    if not isinstance(doc, dict):
        return None, ["reward config must be a mapping"]
    agent = doc.get("agent")
    if agent not in AGENT_ACTION_NAMES:
        diagnostics.append(f"agent must be one of {sorted(AGENT_ACTION_NAMES)}, got {agent!r}")
        return None, diagnostics
    persona = doc.get("persona")
    if not isinstance(persona, str) or not persona:
        diagnostics.append("persona must be a non-empty string")
    actions = doc.get("actions")
    if not isinstance(actions, list):
        diagnostics.append("actions must be a list")
        return None, diagnostics

    expected = AGENT_ACTION_NAMES[agent]
    entries: dict[str, RewardEntry] = {}
    for item in actions:
        if not isinstance(item, dict) or "name" not in item:
            diagnostics.append(f"action entries need a name: {item!r}")
            continue
        name = item["name"]
        if name in entries:
            diagnostics.append(f"duplicate action {name!r}")
            continue
        values = []
        for key in ("immediate_reward", "recurring_reward"):
            raw = item.get(key)
            if isinstance(raw, bool) or not isinstance(raw, (int, float)) or not isfinite(float(raw)):
                diagnostics.append(f"action {name!r}: {key} must be a finite number, got {raw!r}")
                raw = 0.0
            values.append(float(raw))
        entries[name] = RewardEntry(name, values[0], values[1])

    for name in expected:
        if name not in entries:
            diagnostics.append(f"missing action {name!r}")
    for name in entries:
        if name not in expected:
            diagnostics.append(f"unexpected action {name!r} for agent {agent!r}")
    if diagnostics:
        return None, diagnostics
    ordered = {name: entries[name] for name in expected}
    return RewardStructure(agent=agent, persona=persona, entries=ordered), []


def load_rewards(config_text: str) -> RewardStructure:
    """Parse and validate one persona reward config."""
    try:
        doc = yaml.safe_load(config_text)
    except yaml.YAMLError as exc:
        raise ParseError(f"reward config is not valid YAML: {exc}") from exc
    structure, diagnostics = validate_reward_dict(doc)
    if structure is None:
        raise SchemaError("invalid reward config: " + "; ".join(diagnostics),
                          diagnostics=diagnostics)
    return structure


def structure_to_config(rs: RewardStructure) -> dict:
    return {
        "agent": rs.agent,
        "persona": rs.persona,
        "actions": [
            {"name": e.action_name, "immediate_reward": e.immediate, "recurring_reward": e.recurring}
            for e in rs.entries.values()
        ],
    }


def structure_hash(rs: RewardStructure) -> str:
    """Stable digest of a reward structure, recorded in checkpoints."""
    canonical = yaml.safe_dump(structure_to_config(rs), sort_keys=True)
    return hashlib.sha256(canonical.encode()).hexdigest()


@dataclass
class RecurringLedger:
    """Per-episode log of accrued recurring amounts with an O(1) running total."""

    entries: list[tuple[int, float]] = field(default_factory=list)
    total: float = 0.0

    def append(self, source_step: int, amount: float) -> None:
        self.entries.append((source_step, amount))
        self.total += amount


def step_reward(blue_action: BlueAction, red_step: RedStep, target_is_decoy: bool,
                blue_rs: RewardStructure, red_rs: RewardStructure,
                ledger: RecurringLedger, step: int,
                decoy_hit_scale: float = 1.0) -> float:
    """Composite defender reward for one step; accrues this step's recurring terms.

    The ledger total read here covers entries from strictly earlier steps;
    this step's recurring amounts are appended afterwards so they first charge
    at the next step.
    """
    sign = decoy_hit_scale if target_is_decoy else -1.0
    blue_entry = blue_rs.entries.get(blue_action.base_name)
    if blue_entry is None:
        raise UnknownAction(f"blue structure lacks action {blue_action.base_name!r}")
    red_entry = red_rs.entries.get(red_step.action.value)
    if red_entry is None:
        raise UnknownAction(f"red structure lacks action {red_step.action.value!r}")
    reward = blue_entry.immediate + sign * red_entry.immediate + ledger.total
    ledger.append(step, blue_entry.recurring)
    ledger.append(step, sign * red_entry.recurring)
    return reward


def episode_return(per_step_rewards, gamma: float) -> float:
    """Discounted return sum_t gamma^t * r_t; gamma=1 gives the plain episodic sum."""
    if not 0.0 < gamma <= 1.0:
        raise ValueError(f"gamma must be in (0, 1], got {gamma}")
    total = 0.0
    factor = 1.0
    for r in per_step_rewards:
        total += factor * r
        factor *= gamma
    return total
