import numpy as np
import pytest

from decoyarena import fixtures

TWO_HOST_NET = """\
routers:
  - name: r0
subnets:
  - name: lan
    router: r0
hosts:
  - name: alpha
    type: workstation
    subnet: lan
    services: [22]
  - name: beta
    type: file_server
    subnet: lan
    services: [22, 445]
decoys:
  capacity_per_subnet: 2
  types:
    - name: decoy0
      services: [22]
"""

ONE_HOST_NET = """\
routers:
  - name: r0
subnets:
  - name: lan
    router: r0
hosts:
  - name: solo
    type: workstation
    subnet: lan
    services: [22]
"""


@pytest.fixture(scope="session")
def default_net_text():
    return fixtures.default_network_text()


@pytest.fixture(scope="session")
def blue_baseline():
    return fixtures.blue_structure("baseline")


@pytest.fixture(scope="session")
def red_baseline():
    return fixtures.red_structure("baseline")


class BanditEnv:
    """One-step sanity environment: constant observation, one good arm.

    Action 1 pays +20; every other action pays -1, so the analytically
    optimal policy puts all mass on action 1.
    """

    observation_size = 8
    action_count = 7
    best_action = 1

    def __init__(self, seed=None):
        self._obs = np.ones(self.observation_size)

    def reset(self, seed=None):
        return self._obs

    def step(self, action):
        reward = 20.0 if action == self.best_action else -1.0
        return self._obs, reward, True, {"episode_return": reward}


def make_arena(network_text, blue_persona="baseline", red_persona="baseline",
               episode_length=100, **kwargs):
    from decoyarena.env import CyberArena

    return CyberArena(network_text, fixtures.blue_structure(blue_persona),
                      fixtures.red_structure(red_persona),
                      episode_length=episode_length, **kwargs)
