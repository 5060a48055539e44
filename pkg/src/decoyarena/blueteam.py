"""Defender action space, decoy-alert detector, and Boolean observations.

The observation reserves one slot per real host plus one per (subnet, decoy
slot) pair, so its length is fixed for the whole run no matter how decoys
churn. Alerts only ever land on decoy slots; real-host slots exist to keep
the layout static.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import topology
from .errors import UnknownSubnet, UnmappedHost
from .redteam import RedActionType, RedStep
from .topology import NetworkState

ACTION_NOTHING = "nothing"
ACTION_DEPLOY = "decoy0"
ACTION_REMOVE = "remove_decoy"
BLUE_ACTION_NAMES: tuple[str, ...] = (ACTION_NOTHING, ACTION_DEPLOY, ACTION_REMOVE)


@dataclass(frozen=True)
class BlueAction:
    """One flattened discrete action: index 0 is nothing, then deploy per subnet, then remove."""

    index: int
    base_name: str
    subnet: str | None


@dataclass(frozen=True)
class Alert:
    step: int
    target_host: str
    triggering_action: RedActionType


@dataclass(frozen=True)
class Observation:
    """Current-step alert bits plus sticky history bits, each of length L."""

    current_alerts: np.ndarray
    alert_history: np.ndarray

    def vector(self) -> np.ndarray:
        """Policy input: [current | history] as float64 of length 2L."""
        out = np.empty(2 * len(self.current_alerts))
        out[: len(self.current_alerts)] = self.current_alerts
        out[len(self.current_alerts):] = self.alert_history
        return out


def blue_action_space(state: NetworkState) -> list[BlueAction]:
    """Flattened action list of size 1 + 2*S for S subnets."""
    actions = [BlueAction(0, ACTION_NOTHING, None)]
    subnets = state.subnet_ids
    for i, subnet in enumerate(subnets):
        actions.append(BlueAction(1 + i, ACTION_DEPLOY, subnet))
    for i, subnet in enumerate(subnets):
        actions.append(BlueAction(1 + len(subnets) + i, ACTION_REMOVE, subnet))
    return actions


def observation_slot_count(state: NetworkState) -> int:
    return len(state.real_host_ids) + len(state.subnets) * state.decoy_capacity


def real_host_slots(state: NetworkState) -> dict[str, int]:
    """Static slots for real hosts, in config order."""
    return {host_id: i for i, host_id in enumerate(state.real_host_ids)}


def decoy_slot_index(state: NetworkState, subnet: str, slot_position: int) -> int:
    """Observation index of a (subnet, decoy slot) pair, after the real-host block."""
    return (len(state.real_host_ids)
            + state.subnet_ids.index(subnet) * state.decoy_capacity
            + slot_position)


def empty_observation(length: int) -> Observation:
    return Observation(np.zeros(length, dtype=bool), np.zeros(length, dtype=bool))


def detect(step_record: RedStep, state: NetworkState, step: int) -> Alert | None:
    """Alert iff the red action targeted a decoy.

    A pingsweep (subnet target) alerts when the swept subnet holds at least
    one decoy; the alert is attributed to the lowest-indexed occupied slot.
    """
    if step_record.action is RedActionType.PINGSWEEP:
        for occupant in state.decoy_slots[step_record.target]:
            if occupant is not None:
                return Alert(step, occupant, step_record.action)
        return None
    runtime = state.hosts.get(step_record.target)
    if runtime is not None and runtime.is_decoy:
        return Alert(step, step_record.target, step_record.action)
    return None


def build_observation(alerts_this_step: list[Alert], previous: Observation,
                      slot_map: dict[str, int]) -> Observation:
    """Set current bits for this step's alerts; history is the running OR."""
    current = np.zeros_like(previous.current_alerts)
    for alert in alerts_this_step:
        index = slot_map.get(alert.target_host)
        if index is None:
            raise UnmappedHost(f"alert on host {alert.target_host!r} with no observation slot")
        current[index] = True
    return Observation(current, previous.alert_history | current)


def clear_slot(observation: Observation, index: int) -> Observation:
    """Forget a slot entirely (its decoy was removed)."""
    current = observation.current_alerts.copy()
    history = observation.alert_history.copy()
    current[index] = False
    history[index] = False
    return Observation(current, history)


@dataclass(frozen=True)
class BlueOutcome:
    """Result of applying a blue action: ok/noop plus the affected decoy, if any."""

    outcome: str  # "ok" | "noop"
    host_id: str | None = None
    slot_index: int | None = None


def apply_blue_action(action: BlueAction, state: NetworkState) -> BlueOutcome:
    """Apply one defender action; no-ops are legal (their reward is still charged)."""
    if action.base_name == ACTION_NOTHING:
        return BlueOutcome("ok")
    if action.base_name == ACTION_DEPLOY:
        host_id = topology.deploy_decoy(state, action.subnet, ACTION_DEPLOY)
        if host_id is None:
            return BlueOutcome("noop")
        position = topology.decoy_slot_position(state, action.subnet, host_id)
        return BlueOutcome("ok", host_id, decoy_slot_index(state, action.subnet, position))
    if action.base_name == ACTION_REMOVE:
        if action.subnet not in state.subnets:
            raise UnknownSubnet(f"no such subnet {action.subnet!r}")
        stack = state.decoy_stacks[action.subnet]
        if not stack:
            return BlueOutcome("noop")
        position = topology.decoy_slot_position(state, action.subnet, stack[-1])
        removed = topology.remove_decoy(state, action.subnet)
        return BlueOutcome("ok", removed, decoy_slot_index(state, action.subnet, position))
    raise ValueError(f"unknown blue action {action.base_name!r}")
