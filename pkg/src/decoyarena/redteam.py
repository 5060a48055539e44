"""Heuristic kill-chain attacker.

The red agent always takes the lowest kill-chain phase that has an eligible
target, so it sweeps and scans everything it can see before it ever moves
laterally, and escalates before it impacts. Per-host progression is strictly
ordered: portscan -> discovery -> lateral_movement -> privilege_escalation ->
impact. Ties among eligible targets are broken uniformly at random.

Knowledge sets use insertion-ordered dicts (value None) rather than Python
sets so candidate ordering, and therefore tie-breaking, is reproducible
across processes regardless of hash randomization.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .errors import EmptyNetwork
from .topology import CompromiseLevel, NetworkState


class RedActionType(Enum):
    """The six attacker actions; values match reward-config action names."""

    PINGSWEEP = "pingsweep"
    PORTSCAN = "portscan"
    DISCOVERY = "discovery"
    LATERAL_MOVEMENT = "lateral_movement"
    PRIVILEGE_ESCALATION = "privilege_escalation"
    IMPACT = "impact"


KILL_CHAIN_ORDER: tuple[RedActionType, ...] = tuple(RedActionType)
RED_ACTION_INDEX: dict[RedActionType, int] = {a: i for i, a in enumerate(KILL_CHAIN_ORDER)}
RED_ACTION_NAMES: tuple[str, ...] = tuple(a.value for a in KILL_CHAIN_ORDER)


@dataclass(frozen=True)
class RedStep:
    """One attacker action. ``target`` is a subnet id for pingsweep, else a host id."""

    action: RedActionType
    source_host: str
    target: str
    success: bool


@dataclass
class RedKnowledge:
    """The attacker's partial view of the network.

    Deliberately contains nothing from which a host's decoy status could be
    derived. All collections only grow within an episode; hosts that
    disappear (removed decoys) are filtered at target-selection time.
    """

    known_subnets: dict[str, None] = field(default_factory=dict)
    known_hosts: dict[str, None] = field(default_factory=dict)
    scanned_hosts: dict[str, tuple[int, ...]] = field(default_factory=dict)
    discovered: dict[str, None] = field(default_factory=dict)
    footholds: dict[str, None] = field(default_factory=dict)
    escalated: dict[str, None] = field(default_factory=dict)
    impacted: dict[str, None] = field(default_factory=dict)
    swept_subnets: dict[str, None] = field(default_factory=dict)
    current_position: str = ""
    seen_version: int = -1

    def host_view(self, host_id: str) -> dict:
        """What the attacker can say about a host: its id and any scanned ports."""
        view = {"host": host_id, "known": host_id in self.known_hosts}
        ports = self.scanned_hosts.get(host_id)
        view["ports"] = sorted(ports) if ports is not None else None
        return view


def red_reset(state: NetworkState, rng_seed) -> RedKnowledge:
    """Start an episode: uniform-random entry host gains a foothold.

    ``rng_seed`` is anything ``numpy.random.default_rng`` accepts (an integer
    seed or an existing Generator).
    """
    reals = state.real_host_ids
    if not reals:
        raise EmptyNetwork("cannot start an attack on a network with no real hosts")
    rng = np.random.default_rng(rng_seed)
    entry = reals[int(rng.integers(len(reals)))]
    knowledge = RedKnowledge(current_position=entry)
    knowledge.known_subnets[state.hosts[entry].spec.subnet] = None
    knowledge.known_hosts[entry] = None
    knowledge.footholds[entry] = None
    state.hosts[entry].compromise_level = CompromiseLevel.FOOTHOLD
    knowledge.seen_version = state.version
    return knowledge


def _refresh_visibility(knowledge: RedKnowledge, state: NetworkState) -> None:
    # A swept subnet stays enumerable: hosts added later (decoys) become known.
    if knowledge.seen_version == state.version:
        return
    known = knowledge.known_hosts
    for subnet in knowledge.swept_subnets:
        for host_id in state.subnets[subnet]:
            if host_id not in known:
                known[host_id] = None
    knowledge.seen_version = state.version


def _pick(candidates: list[str], rng: np.random.Generator) -> str:
    if len(candidates) == 1:
        return candidates[0]
    return candidates[int(rng.integers(len(candidates)))]


def red_step(knowledge: RedKnowledge, state: NetworkState, rng: np.random.Generator) -> RedStep:
    """Take one attacker action, mutating ``knowledge`` and host runtime state."""
    hosts = state.hosts
    k = knowledge
    if k.current_position not in hosts:
        # Our platform was torn down (a removed decoy); fall back to the most
        # recent surviving foothold. The entry host always survives.
        for h in reversed(k.footholds):
            if h in hosts:
                k.current_position = h
                break
    _refresh_visibility(k, state)
    source = k.current_position

    candidates = [s for s in k.known_subnets if s not in k.swept_subnets]
    if candidates:
        target = _pick(candidates, rng)
        k.swept_subnets[target] = None
        for host_id in state.subnets[target]:
            if host_id not in k.known_hosts:
                k.known_hosts[host_id] = None
        return RedStep(RedActionType.PINGSWEEP, source, target, True)

    candidates = [h for h in k.known_hosts if h not in k.scanned_hosts and h in hosts]
    if candidates:
        target = _pick(candidates, rng)
        k.scanned_hosts[target] = hosts[target].spec.services
        return RedStep(RedActionType.PORTSCAN, source, target, True)

    candidates = [h for h in k.scanned_hosts if h not in k.discovered and h in hosts]
    if candidates:
        target = _pick(candidates, rng)
        k.discovered[target] = None
        router = state.subnet_routers[hosts[target].spec.subnet]
        for subnet in state.router_subnets[router]:
            if subnet not in k.known_subnets:
                k.known_subnets[subnet] = None
        return RedStep(RedActionType.DISCOVERY, source, target, True)

    candidates = [h for h in k.discovered if h not in k.footholds and h in hosts]
    if candidates:
        target = _pick(candidates, rng)
        k.footholds[target] = None
        k.current_position = target
        runtime = hosts[target]
        if runtime.compromise_level < CompromiseLevel.FOOTHOLD:
            runtime.compromise_level = CompromiseLevel.FOOTHOLD
        return RedStep(RedActionType.LATERAL_MOVEMENT, source, target, True)

    candidates = [h for h in k.footholds if h not in k.escalated and h in hosts]
    if candidates:
        target = _pick(candidates, rng)
        k.escalated[target] = None
        hosts[target].compromise_level = CompromiseLevel.ESCALATED
        return RedStep(RedActionType.PRIVILEGE_ESCALATION, source, target, True)

    # Impact stays eligible for already-impacted hosts, so this never stalls:
    # the entry host is real, always present, and eventually escalated.
    candidates = [h for h in k.escalated if h in hosts]
    target = _pick(candidates, rng)
    k.impacted[target] = None
    runtime = hosts[target]
    # A redeployed decoy resurrects its slot identity with a fresh runtime;
    # red re-imposes the escalated access it already holds for that id.
    runtime.compromise_level = CompromiseLevel.ESCALATED
    runtime.impacted = True
    return RedStep(RedActionType.IMPACT, source, target, True)


def first_impact_step(trajectory: list[RedStep]) -> int | None:
    """1-based index of the first successful impact, or None."""
    for i, step in enumerate(trajectory, start=1):
        if step.action is RedActionType.IMPACT and step.success:
            return i
    return None
