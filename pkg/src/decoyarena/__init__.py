"""decoyarena: a deterministic cyber attack-defense simulation arena.

A heuristic kill-chain red agent plays against a decoy-deploying blue agent
trained with PPO; persona reward structures are loaded from declarative
configs, and an evaluation harness computes time-to-first-impact and
action-frequency statistics across the persona matrix.
"""

__version__ = "0.1.0"

from ._kernels import backend_name
from .env import CyberArena
from .redteam import RedActionType
from .rewards import RewardStructure, load_rewards
from .topology import NetworkState, load_network

__all__ = [
    "CyberArena",
    "NetworkState",
    "RedActionType",
    "RewardStructure",
    "backend_name",
    "load_network",
    "load_rewards",
    "__version__",
]
