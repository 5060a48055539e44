"""Episode loop binding the network, the red heuristic, blue actions, and rewards.

Step order, fixed for the whole package: the red agent acts against the
current network, the detector fires, and only then does the blue action
apply. A decoy deployed at step t is therefore attackable (and alertable)
from step t+1 on.

Any object with ``reset(seed) -> obs``, ``step(action) -> (obs, reward,
done, info)``, ``observation_size`` and ``action_count`` can be trained by
the PPO module; :class:`CyberArena` is the real one.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import blueteam, redteam, rewards, topology
from .blueteam import ACTION_DEPLOY, BlueAction
from .redteam import RED_ACTION_INDEX, RedStep
from .rewards import RecurringLedger, RewardStructure


@dataclass(frozen=True)
class RedLogEntry:
    """Plot-ready red trajectory record."""

    step: int
    action: str
    source_subnet: str
    destination_subnet: str
    target_was_decoy: bool


@dataclass(frozen=True)
class BlueLogEntry:
    step: int
    action_name: str
    subnet: str | None
    outcome: str


class CyberArena:
    """Single red-vs-blue environment over one declared network."""

    def __init__(self, network_config_text: str, blue_rs: RewardStructure,
                 red_rs: RewardStructure, episode_length: int = 100,
                 decoy_hit_scale: float = 1.0, seed_source=None):
        self._parsed = topology.parse_network_config(network_config_text)
        self.blue_rs = blue_rs
        self.red_rs = red_rs
        self.episode_length = episode_length
        self.decoy_hit_scale = decoy_hit_scale
        self._seed_seq = (seed_source if isinstance(seed_source, np.random.SeedSequence)
                          else np.random.SeedSequence(seed_source))

        template = topology.build_network(self._parsed)
        self.actions: list[BlueAction] = blueteam.blue_action_space(template)
        self.action_count = len(self.actions)
        self.slot_count = blueteam.observation_slot_count(template)
        self.observation_size = 2 * self.slot_count
        self._real_slots = blueteam.real_host_slots(template)

        self.state: topology.NetworkState | None = None
        self.knowledge: redteam.RedKnowledge | None = None
        self._rng: np.random.Generator | None = None

    def reset(self, seed=None) -> np.ndarray:
        if seed is None:
            seed = self._seed_seq.spawn(1)[0]
        self._rng = np.random.default_rng(seed)
        self.state = topology.build_network(self._parsed)
        self.knowledge = redteam.red_reset(self.state, self._rng)
        self._slot_map = dict(self._real_slots)
        self._obs = blueteam.empty_observation(self.slot_count)
        self._ledger = RecurringLedger()
        self._t = 0
        self._return_sum = 0.0
        self.red_trajectory: list[RedStep] = []
        self.red_log: list[RedLogEntry] = []
        self.blue_log: list[BlueLogEntry] = []
        self.red_action_counts = np.zeros(len(RED_ACTION_INDEX), dtype=np.int64)
        return self._obs.vector()

    def step(self, action_index: int) -> tuple[np.ndarray, float, bool, dict]:
        if self.state is None:
            raise RuntimeError("call reset() before step()")
        self._t += 1
        step = self._t
        action = self.actions[action_index]
        state = self.state

        record = redteam.red_step(self.knowledge, state, self._rng)
        self.red_trajectory.append(record)
        self.red_action_counts[RED_ACTION_INDEX[record.action]] += 1
        hosts = state.hosts
        source_subnet = hosts[record.source_host].spec.subnet
        if record.action is redteam.RedActionType.PINGSWEEP:
            destination_subnet = record.target
        else:
            destination_subnet = hosts[record.target].spec.subnet

        alert = blueteam.detect(record, state, step)
        target_was_decoy = alert is not None
        self.red_log.append(RedLogEntry(step, record.action.value, source_subnet,
                                        destination_subnet, target_was_decoy))

        outcome = blueteam.apply_blue_action(action, state)
        alerts = [alert] if alert is not None else []
        previous = self._obs
        if outcome.host_id is not None:
            if action.base_name == ACTION_DEPLOY:
                self._slot_map[outcome.host_id] = outcome.slot_index
            else:  # removal forgets the slot's alert memory
                self._slot_map.pop(outcome.host_id, None)
                previous = blueteam.clear_slot(previous, outcome.slot_index)
                alerts = [a for a in alerts if a.target_host != outcome.host_id]
        self._obs = blueteam.build_observation(alerts, previous, self._slot_map)
        self.blue_log.append(BlueLogEntry(step, action.base_name, action.subnet,
                                          outcome.outcome))

        reward = rewards.step_reward(action, record, target_was_decoy,
                                     self.blue_rs, self.red_rs, self._ledger,
                                     step, self.decoy_hit_scale)
        self._return_sum += reward
        done = step >= self.episode_length
        info = {"red_step": record, "alert": alert, "blue_outcome": outcome}
        if done:
            info["episode_return"] = self._return_sum
            info["first_impact_step"] = redteam.first_impact_step(self.red_trajectory)
        return self._obs.vector(), reward, done, info

    @property
    def episode_return(self) -> float:
        return self._return_sum

    def first_impact_step(self) -> int | None:
        return redteam.first_impact_step(self.red_trajectory)


@dataclass
class ScriptedBlue:
    """Fixed blue action schedule for control experiments: step -> action index.

    Steps not in the schedule do nothing (action 0). Schedules are 1-based,
    matching episode step numbering.
    """

    schedule: dict[int, int] = field(default_factory=dict)

    def action_for(self, step: int) -> int:
        return self.schedule.get(step, 0)


def run_scripted_episode(env: CyberArena, blue: ScriptedBlue, seed=None):
    """Run one full episode under a scripted blue; returns (rewards, env)."""
    env.reset(seed=seed)
    step_rewards = []
    done = False
    while not done:
        _, reward, done, _ = env.step(blue.action_for(len(step_rewards) + 1))
        step_rewards.append(reward)
    return step_rewards, env
