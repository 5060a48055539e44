import numpy as np
import pytest

from decoyarena import blueteam, topology
from decoyarena.blueteam import (Alert, BlueAction, apply_blue_action,
                                 blue_action_space, build_observation, detect,
                                 empty_observation, observation_slot_count)
from decoyarena.errors import UnknownSubnet, UnmappedHost
from decoyarena.redteam import RedActionType, RedStep
from decoyarena.topology import deploy_decoy, load_network

from conftest import TWO_HOST_NET


def test_action_space_size(default_net_text):
    state = load_network(default_net_text)
    actions = blue_action_space(state)
    assert len(actions) == 1 + 2 * len(state.subnets)
    assert actions[0].base_name == "nothing" and actions[0].subnet is None
    assert [a.base_name for a in actions[1:4]] == ["decoy0"] * 3
    assert [a.base_name for a in actions[4:]] == ["remove_decoy"] * 3
    assert [a.index for a in actions] == list(range(7))


def test_slot_count(default_net_text):
    state = load_network(default_net_text)
    assert observation_slot_count(state) == 15 + 3 * 2


def test_detect_portscan_on_decoy():
    state = load_network(TWO_HOST_NET)
    decoy_id = deploy_decoy(state, "lan")
    record = RedStep(RedActionType.PORTSCAN, "alpha", decoy_id, True)
    alert = detect(record, state, step=4)
    assert alert == Alert(4, decoy_id, RedActionType.PORTSCAN)


def test_detect_ignores_real_targets():
    state = load_network(TWO_HOST_NET)
    deploy_decoy(state, "lan")
    record = RedStep(RedActionType.LATERAL_MOVEMENT, "alpha", "beta", True)
    assert detect(record, state, step=1) is None


def test_detect_pingsweep_lowest_occupied_slot():
    state = load_network(TWO_HOST_NET)
    first = deploy_decoy(state, "lan")
    second = deploy_decoy(state, "lan")
    sweep = RedStep(RedActionType.PINGSWEEP, "alpha", "lan", True)
    assert detect(sweep, state, step=2).target_host == first
    # free slot 0: LIFO removes `second`, then removing again frees slot 0
    topology.remove_decoy(state, "lan")
    topology.remove_decoy(state, "lan")
    third = deploy_decoy(state, "lan")  # takes slot 0
    assert detect(sweep, state, step=3).target_host == third


def test_detect_pingsweep_no_decoys():
    state = load_network(TWO_HOST_NET)
    sweep = RedStep(RedActionType.PINGSWEEP, "alpha", "lan", True)
    assert detect(sweep, state, step=1) is None


def test_observation_empty_and_length():
    obs = empty_observation(21)
    vec = obs.vector()
    assert vec.shape == (42,)
    assert not vec.any()


def test_observation_sticky_history():
    slot_map = {"decoy0.0": 3}
    obs = empty_observation(8)
    alert = Alert(1, "decoy0.0", RedActionType.PORTSCAN)
    obs = build_observation([alert], obs, slot_map)
    assert obs.current_alerts[3] and obs.alert_history[3]
    obs = build_observation([], obs, slot_map)
    assert not obs.current_alerts[3]
    assert obs.alert_history[3]  # sticky


def test_observation_same_slot_idempotent():
    slot_map = {"d": 2}
    obs = empty_observation(4)
    one = build_observation([Alert(1, "d", RedActionType.PORTSCAN)], obs, slot_map)
    two = build_observation([Alert(1, "d", RedActionType.PORTSCAN),
                             Alert(1, "d", RedActionType.DISCOVERY)], obs, slot_map)
    assert (one.current_alerts == two.current_alerts).all()
    assert (one.alert_history == two.alert_history).all()


def test_observation_unmapped_host():
    with pytest.raises(UnmappedHost):
        build_observation([Alert(1, "ghost", RedActionType.PORTSCAN)],
                          empty_observation(4), {})


def test_apply_nothing_is_ok_and_inert():
    state = load_network(TWO_HOST_NET)
    import copy
    snapshot = copy.deepcopy(state)
    outcome = apply_blue_action(BlueAction(0, "nothing", None), state)
    assert outcome.outcome == "ok" and outcome.host_id is None
    assert state == snapshot


def test_apply_deploy_then_saturation():
    state = load_network(TWO_HOST_NET)
    deploy = BlueAction(1, "decoy0", "lan")
    first = apply_blue_action(deploy, state)
    second = apply_blue_action(deploy, state)
    assert first.outcome == "ok" and second.outcome == "ok"
    assert first.slot_index == 2 and second.slot_index == 3  # after 2 real hosts
    assert apply_blue_action(deploy, state).outcome == "noop"


def test_apply_remove_empty_is_noop():
    state = load_network(TWO_HOST_NET)
    outcome = apply_blue_action(BlueAction(2, "remove_decoy", "lan"), state)
    assert outcome.outcome == "noop"


def test_apply_unknown_subnet():
    state = load_network(TWO_HOST_NET)
    with pytest.raises(UnknownSubnet):
        apply_blue_action(BlueAction(1, "decoy0", "dmz"), state)
    with pytest.raises(UnknownSubnet):
        apply_blue_action(BlueAction(2, "remove_decoy", "dmz"), state)
