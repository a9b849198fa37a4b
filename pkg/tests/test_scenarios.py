import json

import pytest

from hpqc_aka.sim import scenarios
from hpqc_aka.sim.scenarios import EXPECTED, SCENARIOS, ScenarioVerdict, run_scenario


@pytest.mark.parametrize("name", list(SCENARIOS))
def test_scenario_reaches_expected_verdict(name):
    v = run_scenario(name, seed=0)
    assert v.name == name and v.expected == EXPECTED[name]
    assert v.matches_expected, v.witness
    json.dumps(v.to_json())
    assert v.to_record().startswith(name + "\t")


def test_replay_scenario_carries_trace():
    v = run_scenario("s4-replay")
    assert not v.passed and "endUE_HN_SUPI" in v.witness


def test_only_replay_expected_to_fail():
    assert [n for n, ok in EXPECTED.items() if not ok] == ["s4-replay"]


def test_unknown_name():
    with pytest.raises(KeyError):
        run_scenario("s9")


def test_failing_verdict_needs_witness():
    with pytest.raises(ValueError):
        ScenarioVerdict("x", False, True)


def test_derivation_chain_is_explained():
    v = run_scenario("fs-sanity")
    assert v.passed and "depth 5" in v.detail
    # breaking one primitive with everything else leaked still fails
    assert scenarios.SCENARIOS["break-mlkem"](1).passed
