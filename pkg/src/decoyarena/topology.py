"""Network topology: routers, subnets, hosts, and per-subnet decoy slots.

The network is declared in a YAML document (top-level keys ``routers``,
``subnets``, ``hosts``, ``decoys``) and realized as a mutable
:class:`NetworkState`. Real hosts are fixed for the lifetime of an episode;
only decoys come and go.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from enum import Enum, IntEnum

import yaml

from .errors import ParseError, UnknownSubnet, ValidationError

# Config identifiers are restricted so generated decoy ids (which contain a
# '.') can never collide with a declared host name.
IDENTIFIER_RE = re.compile(r"^[A-Za-z0-9_-]+$")

DEFAULT_DECOY_CAPACITY = 2
DEFAULT_DECOY_TYPE = "decoy0"
DEFAULT_DECOY_SERVICES = (22, 80)

_TOP_LEVEL_KEYS = {"routers", "subnets", "hosts", "decoys", "firewall", "routes"}


class HostType(str, Enum):
    WORKSTATION = "workstation"
    MAIL_SERVER = "mail_server"
    FILE_SERVER = "file_server"
    DECOY = "decoy"


SERVER_TYPES = frozenset({HostType.MAIL_SERVER, HostType.FILE_SERVER, HostType.DECOY})


class CompromiseLevel(IntEnum):
    UNTOUCHED = 0
    FOOTHOLD = 1
    ESCALATED = 2


@dataclass(frozen=True)
class HostSpec:
    """Static description of a host as declared (or generated, for decoys)."""

    name: str
    host_type: HostType
    subnet: str
    services: tuple[int, ...]


@dataclass(frozen=True)
class DecoyTypeSpec:
    name: str
    services: tuple[int, ...]


@dataclass
class HostRuntime:
    """Per-episode mutable state of one host."""

    spec: HostSpec
    is_decoy: bool = False
    compromise_level: CompromiseLevel = CompromiseLevel.UNTOUCHED
    impacted: bool = False


@dataclass
class NetworkState:
    """Ground-truth network graph plus live decoys.

    ``subnets`` maps subnet id to the live host-id list (real hosts first, in
    config order, then decoys in deploy order). ``decoy_slots`` holds a
    fixed-capacity slot list per subnet; a deploy takes the lowest free slot.
    ``version`` increments on every membership change so observers can cache.
    """

    routers: list[str]
    subnet_routers: dict[str, str]
    router_subnets: dict[str, list[str]]
    subnets: dict[str, list[str]]
    hosts: dict[str, HostRuntime]
    real_host_ids: list[str]
    decoy_slots: dict[str, list[str | None]]
    decoy_stacks: dict[str, list[str]]
    decoy_types: dict[str, DecoyTypeSpec]
    decoy_capacity: int
    version: int = 0

    @property
    def subnet_ids(self) -> list[str]:
        return list(self.subnets.keys())

    def live_decoy_count(self, subnet: str | None = None) -> int:
        if subnet is None:
            return sum(len(s) for s in self.decoy_stacks.values())
        return len(self.decoy_stacks[subnet])


def _require(cond: bool, message: str) -> None:
    if not cond:
        raise ValidationError(message)


def _check_services(raw, owner: str, required: bool) -> tuple[int, ...]:
    _require(isinstance(raw, list), f"{owner}: services must be a list")
    ports = []
    for p in raw:
        _require(isinstance(p, int) and not isinstance(p, bool), f"{owner}: port {p!r} is not an integer")
        _require(1 <= p <= 65535, f"{owner}: port {p} out of range 1-65535")
        ports.append(p)
    if required:
        _require(len(ports) > 0, f"{owner}: server hosts need at least one service")
    return tuple(ports)


def parse_network_config(config_text: str) -> dict:
    """Parse and validate a network config document into a plain dict.

    Split from :func:`build_network` so callers that reset an environment
    thousands of times pay for YAML parsing once.
    """
    try:
        doc = yaml.safe_load(config_text)
    except yaml.YAMLError as exc:
        raise ParseError(f"network config is not valid YAML: {exc}") from exc
    if not isinstance(doc, dict):
        raise ParseError("network config must be a mapping")
    unknown = set(doc) - _TOP_LEVEL_KEYS
    _require(not unknown, f"unknown top-level keys: {sorted(unknown)}")
    for key in ("routers", "subnets", "hosts"):
        _require(key in doc and isinstance(doc[key], list), f"missing or non-list section {key!r}")

    routers: list[str] = []
    for entry in doc["routers"]:
        _require(isinstance(entry, dict) and "name" in entry, "router entries need a name")
        name = entry["name"]
        _require(isinstance(name, str) and IDENTIFIER_RE.match(name), f"bad router name {name!r}")
        _require(name not in routers, f"duplicate router {name!r}")
        routers.append(name)

    subnet_routers: dict[str, str] = {}
    for entry in doc["subnets"]:
        _require(isinstance(entry, dict) and "name" in entry and "router" in entry,
                 "subnet entries need name and router")
        name, router = entry["name"], entry["router"]
        _require(isinstance(name, str) and IDENTIFIER_RE.match(name), f"bad subnet name {name!r}")
        _require(name not in subnet_routers, f"duplicate subnet {name!r}")
        _require(router in routers, f"subnet {name!r} references undeclared router {router!r}")
        subnet_routers[name] = router

    host_names: set[str] = set()
    hosts: list[dict] = []
    for entry in doc["hosts"]:
        _require(isinstance(entry, dict), "host entries must be mappings")
        for key in ("name", "type", "subnet"):
            _require(key in entry, f"host entry missing {key!r}: {entry!r}")
        name = entry["name"]
        _require(isinstance(name, str) and IDENTIFIER_RE.match(name), f"bad host name {name!r}")
        _require(name not in host_names, f"duplicate host name {name!r}")
        _require(name not in subnet_routers and name not in routers,
                 f"host name {name!r} collides with a subnet/router")
        try:
            host_type = HostType(entry["type"])
        except ValueError:
            raise ValidationError(f"host {name!r}: unknown type {entry['type']!r}") from None
        _require(host_type is not HostType.DECOY, f"host {name!r}: declared hosts cannot be decoys")
        subnet = entry["subnet"]
        _require(subnet in subnet_routers, f"host {name!r} references undeclared subnet {subnet!r}")
        services = _check_services(entry.get("services", []), f"host {name!r}",
                                   required=host_type in SERVER_TYPES)
        host_names.add(name)
        hosts.append({"name": name, "type": host_type.value, "subnet": subnet,
                      "services": list(services)})

    decoys = doc.get("decoys") or {}
    _require(isinstance(decoys, dict), "decoys section must be a mapping")
    capacity = decoys.get("capacity_per_subnet", DEFAULT_DECOY_CAPACITY)
    _require(isinstance(capacity, int) and capacity >= 0, "decoys.capacity_per_subnet must be an integer >= 0")
    raw_types = decoys.get("types")
    if raw_types is None:
        raw_types = [{"name": DEFAULT_DECOY_TYPE, "services": list(DEFAULT_DECOY_SERVICES)}]
    _require(isinstance(raw_types, list) and raw_types, "decoys.types must be a non-empty list")
    decoy_types: list[dict] = []
    seen_types: set[str] = set()
    for entry in raw_types:
        _require(isinstance(entry, dict) and "name" in entry, "decoy type entries need a name")
        name = entry["name"]
        _require(isinstance(name, str) and IDENTIFIER_RE.match(name), f"bad decoy type name {name!r}")
        _require(name not in seen_types, f"duplicate decoy type {name!r}")
        seen_types.add(name)
        services = _check_services(entry.get("services", list(DEFAULT_DECOY_SERVICES)),
                                   f"decoy type {name!r}", required=True)
        decoy_types.append({"name": name, "services": list(services)})

    return {
        "routers": [{"name": r} for r in routers],
        "subnets": [{"name": s, "router": r} for s, r in subnet_routers.items()],
        "hosts": hosts,
        "decoys": {"capacity_per_subnet": capacity, "types": decoy_types},
    }


def build_network(parsed: dict) -> NetworkState:
    """Materialize a fresh NetworkState from a dict parsed by :func:`parse_network_config`."""
    routers = [r["name"] for r in parsed["routers"]]
    subnet_routers = {s["name"]: s["router"] for s in parsed["subnets"]}
    router_subnets: dict[str, list[str]] = {r: [] for r in routers}
    for subnet, router in subnet_routers.items():
        router_subnets[router].append(subnet)

    subnets: dict[str, list[str]] = {s: [] for s in subnet_routers}
    hosts: dict[str, HostRuntime] = {}
    real_host_ids: list[str] = []
    for h in parsed["hosts"]:
        spec = HostSpec(name=h["name"], host_type=HostType(h["type"]),
                        subnet=h["subnet"], services=tuple(h["services"]))
        hosts[spec.name] = HostRuntime(spec=spec)
        subnets[spec.subnet].append(spec.name)
        real_host_ids.append(spec.name)

    capacity = parsed["decoys"]["capacity_per_subnet"]
    decoy_types = {
        t["name"]: DecoyTypeSpec(name=t["name"], services=tuple(t["services"]))
        for t in parsed["decoys"]["types"]
    }
    return NetworkState(
        routers=routers,
        subnet_routers=subnet_routers,
        router_subnets=router_subnets,
        subnets=subnets,
        hosts=hosts,
        real_host_ids=real_host_ids,
        decoy_slots={s: [None] * capacity for s in subnet_routers},
        decoy_stacks={s: [] for s in subnet_routers},
        decoy_types=decoy_types,
        decoy_capacity=capacity,
    )


def load_network(config_text: str) -> NetworkState:
    """Parse, validate, and build a network. All hosts start untouched, no decoys."""
    return build_network(parse_network_config(config_text))


def network_to_config(state: NetworkState) -> dict:
    """Config-shaped dict for the declared network (real hosts only)."""
    return {
        "routers": [{"name": r} for r in state.routers],
        "subnets": [{"name": s, "router": r} for s, r in state.subnet_routers.items()],
        "hosts": [
            {
                "name": hid,
                "type": state.hosts[hid].spec.host_type.value,
                "subnet": state.hosts[hid].spec.subnet,
                "services": list(state.hosts[hid].spec.services),
            }
            for hid in state.real_host_ids
        ],
        "decoys": {
            "capacity_per_subnet": state.decoy_capacity,
            "types": [
                {"name": t.name, "services": list(t.services)}
                for t in state.decoy_types.values()
            ],
        },
    }


def serialize_network(state: NetworkState) -> str:
    """YAML round-trip form; load_network(serialize_network(s)) rebuilds an equivalent network."""
    return yaml.safe_dump(network_to_config(state), sort_keys=False)


def deploy_decoy(state: NetworkState, subnet: str, decoy_type: str = DEFAULT_DECOY_TYPE) -> str | None:
    """Deploy a decoy into ``subnet``; returns the new host id, or None at capacity.

    The decoy occupies the lowest free slot and is enumerated by the same
    membership queries as real hosts. Identities are slot-addressed
    (``type.subnet.slot``), so redeploying into a slot resurrects the same
    host id with a fresh runtime: an attacker that already mapped that
    address sees a familiar host, not a new recon target.
    """
    if subnet not in state.subnets:
        raise UnknownSubnet(f"no such subnet {subnet!r}")
    if decoy_type not in state.decoy_types:
        raise ValidationError(f"undeclared decoy type {decoy_type!r}")
    slots = state.decoy_slots[subnet]
    slot = next((i for i, occupant in enumerate(slots) if occupant is None), None)
    if slot is None:
        return None
    host_id = f"{decoy_type}.{subnet}.{slot}"
    type_spec = state.decoy_types[decoy_type]
    spec = HostSpec(name=host_id, host_type=HostType.DECOY, subnet=subnet,
                    services=type_spec.services)
    state.hosts[host_id] = HostRuntime(spec=spec, is_decoy=True)
    state.subnets[subnet].append(host_id)
    slots[slot] = host_id
    state.decoy_stacks[subnet].append(host_id)
    state.version += 1
    return host_id


def remove_decoy(state: NetworkState, subnet: str) -> str | None:
    """Remove the most recently deployed decoy in ``subnet`` (LIFO); None if empty."""
    if subnet not in state.subnets:
        raise UnknownSubnet(f"no such subnet {subnet!r}")
    stack = state.decoy_stacks[subnet]
    if not stack:
        return None
    host_id = stack.pop()
    slots = state.decoy_slots[subnet]
    slots[slots.index(host_id)] = None
    state.subnets[subnet].remove(host_id)
    del state.hosts[host_id]
    state.version += 1
    return host_id


def decoy_slot_position(state: NetworkState, subnet: str, host_id: str) -> int:
    """Slot index (0..capacity-1) a live decoy occupies within its subnet."""
    return state.decoy_slots[subnet].index(host_id)
