import numpy as np
import pytest

from decoyarena import fixtures
from decoyarena.blueteam import BlueAction
from decoyarena.errors import ParseError, SchemaError, UnknownAction
from decoyarena.redteam import RED_ACTION_NAMES, RedActionType, RedStep
from decoyarena.rewards import (RecurringLedger, RewardStructure, episode_return,
                                load_rewards, step_reward, structure_hash)

NOTHING = BlueAction(0, "nothing", None)
DEPLOY = BlueAction(1, "decoy0", "lan")
REMOVE = BlueAction(2, "remove_decoy", "lan")

# Tables shipped as fixtures: persona -> action -> (immediate, recurring).
BLUE_TABLES = {
    "baseline": {"nothing": (0.0, 0.0), "decoy0": (-20.0, 0.0), "remove_decoy": (-1.0, 0.0)},
    "proactive_v1": {"nothing": (-5.0, -1.0), "decoy0": (20.0, 2.0), "remove_decoy": (-10.0, -2.0)},
    "proactive_v2": {"nothing": (-5.0, -1.0), "decoy0": (-5.0, -0.5), "remove_decoy": (-10.0, 0.0)},
}
RED_TABLES = {
    "baseline": {"pingsweep": (1, 0), "portscan": (2, 0), "discovery": (5, 0),
                 "lateral_movement": (10, 0), "privilege_escalation": (20, 0),
                 "impact": (50, 0)},
    "aggressive": {"pingsweep": (5, 2), "portscan": (10, 3), "discovery": (20, 5),
                   "lateral_movement": (40, 15), "privilege_escalation": (75, 25),
                   "impact": (150, 50)},
    "stealthy": {"pingsweep": (0.5, 3), "portscan": (1, 5), "discovery": (3, 8),
                 "lateral_movement": (5, 20), "privilege_escalation": (8, 25),
                 "impact": (15, 50)},
}


def red_step_of(action, success=True):
    return RedStep(action, "src", "dst", success)


def test_fixture_fidelity_all_values():
    checked = 0
    for persona, table in BLUE_TABLES.items():
        structure = fixtures.blue_structure(persona)
        assert structure.agent == "blue" and structure.persona == persona
        for action, (immediate, recurring) in table.items():
            assert structure.entries[action].immediate == immediate
            assert structure.entries[action].recurring == recurring
            checked += 2
    for persona, table in RED_TABLES.items():
        structure = fixtures.red_structure(persona)
        assert structure.agent == "red" and structure.persona == persona
        for action, (immediate, recurring) in table.items():
            assert structure.entries[action].immediate == immediate
            assert structure.entries[action].recurring == recurring
            checked += 2
    assert checked == 54


def test_red_structure_has_exactly_kill_chain_actions():
    structure = fixtures.red_structure("baseline")
    assert tuple(structure.entries) == RED_ACTION_NAMES


def test_schema_missing_action():
    text = fixtures.reward_fixture_text("blue", "baseline").replace(
        "  - name: remove_decoy\n    immediate_reward: -1.0\n    recurring_reward: 0.0\n", "")
    with pytest.raises(SchemaError) as excinfo:
        load_rewards(text)
    assert any("remove_decoy" in d for d in excinfo.value.diagnostics)


def test_schema_extra_action():
    text = fixtures.reward_fixture_text("blue", "baseline") + \
        "  - name: quarantine\n    immediate_reward: 1\n    recurring_reward: 0\n"
    with pytest.raises(SchemaError, match="unexpected action"):
        load_rewards(text)


def test_schema_non_numeric_value():
    text = fixtures.reward_fixture_text("red", "baseline").replace(
        "immediate_reward: 50", "immediate_reward: lots")
    with pytest.raises(SchemaError, match="finite number"):
        load_rewards(text)


def test_parse_error():
    with pytest.raises(ParseError):
        load_rewards("agent: [unclosed")


def test_unknown_action_lookup():
    structure = fixtures.blue_structure("baseline")
    with pytest.raises(UnknownAction):
        structure.immediate("quarantine")


def test_step_reward_impact_on_real_host():
    # blue nothing (baseline 0/0) + red impact on real (baseline 50/0) -> -50
    ledger = RecurringLedger()
    reward = step_reward(NOTHING, red_step_of(RedActionType.IMPACT), False,
                         fixtures.blue_structure("baseline"),
                         fixtures.red_structure("baseline"), ledger, step=0)
    assert reward == -50.0
    assert ledger.total == 0.0


def test_step_reward_decoy_hit_with_proactive_blue():
    # blue decoy0 (proactive_v1 +20) + red portscan on decoy (baseline 2) -> +22
    ledger = RecurringLedger()
    reward = step_reward(DEPLOY, red_step_of(RedActionType.PORTSCAN), True,
                         fixtures.blue_structure("proactive_v1"),
                         fixtures.red_structure("baseline"), ledger, step=0)
    assert reward == 22.0


def test_step_reward_two_step_recurring_trace():
    # Stealthy red, proactive_v2 blue. Step 0: blue remove_decoy (-10, recurring 0),
    # red pingsweep on real (0.5/3) -> reward -10.5, ledger accrues -3.
    # Step 1: blue nothing (-5/-1), red portscan on real (1/5):
    # reward = -5 + (-1) + (-3) = -9; ledger then carries -3 -1 -5 for step 2+.
    blue = fixtures.blue_structure("proactive_v2")
    red = fixtures.red_structure("stealthy")
    ledger = RecurringLedger()
    r0 = step_reward(REMOVE, red_step_of(RedActionType.PINGSWEEP), False,
                     blue, red, ledger, step=0)
    assert r0 == pytest.approx(-10.5, abs=0)
    assert ledger.total == -3.0
    r1 = step_reward(NOTHING, red_step_of(RedActionType.PORTSCAN), False,
                     blue, red, ledger, step=1)
    assert r1 == pytest.approx(-9.0, abs=0)
    assert ledger.total == -9.0


def test_all_zero_structures_reward_zero():
    zero_blue = RewardStructure("blue", "zero", {
        name: type(fixtures.blue_structure("baseline").entries[name])(name, 0.0, 0.0)
        for name in ("nothing", "decoy0", "remove_decoy")})
    zero_red = fixtures.red_structure("baseline").scaled(0.0)
    ledger = RecurringLedger()
    rng = np.random.default_rng(0)
    for step in range(200):
        action = RedActionType(RED_ACTION_NAMES[rng.integers(6)])
        reward = step_reward(NOTHING, red_step_of(action), bool(rng.integers(2)),
                             zero_blue, zero_red, ledger, step)
        assert reward == 0.0


def _random_structures(rng, quantized=False):
    """Random persona pair. ``quantized`` draws quarter-integer values (the
    domain the shipped tables use), which float64 sums represent exactly."""
    def draw(scale):
        if quantized:
            return float(rng.integers(-4 * scale, 4 * scale + 1)) / 4.0
        return float(rng.normal() * scale)

    blue_entries = {}
    for name in ("nothing", "decoy0", "remove_decoy"):
        blue_entries[name] = type(fixtures.blue_structure("baseline").entries[name])(
            name, draw(10), draw(1))
    blue = RewardStructure("blue", "rand", blue_entries)
    red_entries = {}
    for name in RED_ACTION_NAMES:
        red_entries[name] = type(blue_entries["nothing"])(name, draw(20), draw(3))
    red = RewardStructure("red", "rand", red_entries)
    return blue, red


def _scripted_episode(rng, length=50):
    blue_actions = [BlueAction(0, ("nothing", "decoy0", "remove_decoy")[rng.integers(3)], None)
                    for _ in range(length)]
    red_actions = [RedActionType(RED_ACTION_NAMES[rng.integers(6)]) for _ in range(length)]
    decoy_flags = [bool(rng.integers(2)) for _ in range(length)]
    return blue_actions, red_actions, decoy_flags


def brute_force_rewards(blue, red, blue_actions, red_actions, decoy_flags, scale=1.0):
    """Straight-line re-evaluation: reward_t = blue_imm + sign*red_imm +
    sum over all k<t of (blue_rec_k + sign_k*red_rec_k)."""
    out = []
    for t in range(len(blue_actions)):
        sign_t = scale if decoy_flags[t] else -1.0
        total = blue.entries[blue_actions[t].base_name].immediate \
            + sign_t * red.entries[red_actions[t].value].immediate
        for k in range(t):
            sign_k = scale if decoy_flags[k] else -1.0
            total += blue.entries[blue_actions[k].base_name].recurring
            total += sign_k * red.entries[red_actions[k].value].recurring
        out.append(total)
    return out


def test_ledger_matches_brute_force_oracle():
    rng = np.random.default_rng(99)
    for _ in range(50):
        blue, red = _random_structures(rng)
        blue_actions, red_actions, decoy_flags = _scripted_episode(rng)
        ledger = RecurringLedger()
        fast = [step_reward(blue_actions[t], red_step_of(red_actions[t]),
                            decoy_flags[t], blue, red, ledger, t)
                for t in range(len(blue_actions))]
        slow = brute_force_rewards(blue, red, blue_actions, red_actions, decoy_flags)
        for a, b in zip(fast, slow):
            assert a == pytest.approx(b, rel=1e-12, abs=1e-12)


def test_linearity_under_scaling():
    rng = np.random.default_rng(7)
    for factor in (2.0, -0.5, 10.0):
        blue, red = _random_structures(rng)
        blue_actions, red_actions, decoy_flags = _scripted_episode(rng)
        ledger_a, ledger_b = RecurringLedger(), RecurringLedger()
        for t in range(len(blue_actions)):
            base = step_reward(blue_actions[t], red_step_of(red_actions[t]),
                               decoy_flags[t], blue, red, ledger_a, t)
            scaled = step_reward(blue_actions[t], red_step_of(red_actions[t]),
                                 decoy_flags[t], blue.scaled(factor),
                                 red.scaled(factor), ledger_b, t)
            assert scaled == pytest.approx(factor * base, rel=1e-12, abs=1e-12)


def test_decoy_sign_flip_changes_only_red_terms():
    blue = fixtures.blue_structure("proactive_v1")
    red = fixtures.red_structure("aggressive")
    for action in RedActionType:
        ledger_real, ledger_decoy = RecurringLedger(), RecurringLedger()
        on_real = step_reward(DEPLOY, red_step_of(action), False, blue, red,
                              ledger_real, 0)
        on_decoy = step_reward(DEPLOY, red_step_of(action), True, blue, red,
                               ledger_decoy, 0)
        immediate = red.entries[action.value].immediate
        recurring = red.entries[action.value].recurring
        assert on_decoy - on_real == pytest.approx(2 * immediate)
        assert ledger_decoy.total - ledger_real.total == pytest.approx(2 * recurring)
        # blue-derived parts identical
        assert on_real + immediate == pytest.approx(on_decoy - immediate)


def test_decoy_hit_scale():
    blue = fixtures.blue_structure("baseline")
    red = fixtures.red_structure("baseline")
    reward = step_reward(NOTHING, red_step_of(RedActionType.IMPACT), True,
                         blue, red, RecurringLedger(), 0, decoy_hit_scale=2.0)
    assert reward == 100.0


def test_episode_return():
    assert episode_return([1.0, 1.0, 1.0], 1.0) == 3.0
    assert episode_return([1.0, 0.0, 0.0], 0.99) == 1.0
    assert episode_return([0.0, 1.0], 0.99) == pytest.approx(0.99)
    with pytest.raises(ValueError):
        episode_return([1.0], 0.0)
    with pytest.raises(ValueError):
        episode_return([1.0], 1.5)


def test_structure_hash_stability():
    a = fixtures.blue_structure("baseline")
    b = fixtures.blue_structure("baseline")
    assert structure_hash(a) == structure_hash(b)
    assert structure_hash(a) != structure_hash(fixtures.blue_structure("proactive_v1"))
