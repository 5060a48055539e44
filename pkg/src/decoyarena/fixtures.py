"""Access to the packaged config fixtures (network, personas, prompts)."""

from __future__ import annotations

from importlib import resources

from .rewards import RewardStructure, load_rewards

BLUE_PERSONAS = ("baseline", "proactive_v1", "proactive_v2")
RED_PERSONAS = ("baseline", "stealthy", "aggressive")


def _read(relative: str) -> str:
    return (resources.files("decoyarena") / "configs" / relative).read_text()


def default_network_text() -> str:
    return _read("networks/15-host.yaml")


def reward_fixture_text(agent: str, persona: str) -> str:
    personas = BLUE_PERSONAS if agent == "blue" else RED_PERSONAS
    if persona not in personas:
        raise KeyError(f"no shipped {agent} persona {persona!r}; have {personas}")
    return _read(f"rewards/{agent}_{persona}.yaml")


def blue_structure(persona: str) -> RewardStructure:
    return load_rewards(reward_fixture_text("blue", persona))


def red_structure(persona: str) -> RewardStructure:
    return load_rewards(reward_fixture_text("red", persona))


def prompt_text(name: str) -> str:
    return _read(f"prompts/{name}")
