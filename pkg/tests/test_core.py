"""Domain-type invariants, serialization round-trips, and smoothing properties."""
import math

import pytest
from hypothesis import given, settings, strategies as st

from dialplan.core import (
    DialogueHistory,
    PriorDistribution,
    ReactionLabel,
    SearchConfig,
    Speaker,
    Turn,
    history_from_record,
    history_to_record,
    system_turn,
    user_turn,
    validate_history,
)

from helpers import SPACE, act_id, demo_history


# --- turns and histories -----------------------------------------------------

def test_reaction_scores_are_evenly_spaced():
    assert ReactionLabel.NO_DONATION.score == -1.0
    assert ReactionLabel.NEGATIVE_REACTION.score == -0.5
    assert ReactionLabel.NEUTRAL.score == 0.0
    assert ReactionLabel.POSITIVE_REACTION.score == 0.5
    assert ReactionLabel.DONATE.score == 1.0


def test_system_turn_rejects_reaction_label():
    with pytest.raises(ValueError):
        Turn(Speaker.SYSTEM, "hi", act=0, reaction=ReactionLabel.NEUTRAL)


def test_user_turn_rejects_dialogue_act():
    with pytest.raises(ValueError):
        Turn(Speaker.USER, "hi", act=0)


def test_validate_history_accepts_demo():
    assert validate_history(demo_history()) is None


def test_validate_history_empty_is_valid():
    assert validate_history(DialogueHistory()) is None


def test_validate_history_must_start_with_system():
    history = DialogueHistory((user_turn("hi"),))
    assert validate_history(history) == "must start with System"


def test_validate_history_flags_non_alternation():
    history = DialogueHistory((
        system_turn(0, "a"),
        system_turn(0, "b"),
    ))
    assert validate_history(history) == "non-alternating at turn 1"


def test_validate_history_flags_missing_act():
    history = DialogueHistory((Turn(Speaker.SYSTEM, "a"),))
    assert validate_history(history) == "system turn 0 missing dialogue act"


def test_history_append_is_persistent():
    base = demo_history()
    longer = base.append(system_turn(0, "more"))
    assert len(base) == 4
    assert len(longer) == 5
    assert longer.turns[:4] == base.turns


def test_system_turn_count():
    assert demo_history().system_turn_count() == 2
    assert DialogueHistory().system_turn_count() == 0


def test_ends_with():
    assert demo_history().ends_with(Speaker.USER)
    assert not demo_history().ends_with(Speaker.SYSTEM)
    assert not DialogueHistory().ends_with(Speaker.USER)


# --- record serialization ----------------------------------------------------

def test_history_record_round_trip():
    dialog_id, restored = history_from_record(
        history_to_record(demo_history(), SPACE, "d1"), SPACE)
    assert dialog_id == "d1"
    assert restored == demo_history()


def test_history_from_record_rejects_unknown_act():
    record = history_to_record(demo_history(), SPACE)
    record["turns"][0]["act"] = "mystery appeal"
    with pytest.raises(ValueError, match="unknown dialogue act"):
        history_from_record(record, SPACE)


def test_history_from_record_rejects_missing_act():
    record = history_to_record(demo_history(), SPACE)
    record["turns"][0]["act"] = None
    with pytest.raises(ValueError, match="missing act"):
        history_from_record(record, SPACE)


def test_history_from_record_rejects_bad_alternation():
    record = {"dialog_id": "x", "turns": [
        {"speaker": "user", "act": None, "text": "hi"},
    ]}
    with pytest.raises(ValueError, match="must start with System"):
        history_from_record(record, SPACE)


_act_names = st.sampled_from([act.name for act in SPACE])
_labels = st.sampled_from(list(ReactionLabel))
_texts = st.text(min_size=1, max_size=40)


@st.composite
def _histories(draw):
    length = draw(st.integers(min_value=0, max_value=8))
    turns = []
    for i in range(length):
        if i % 2 == 0:
            turns.append(system_turn(act_id(draw(_act_names)), draw(_texts)))
        else:
            turns.append(user_turn(draw(_texts), draw(_labels)))
    return DialogueHistory(tuple(turns))


@settings(deadline=None)
@given(_histories())
def test_record_round_trip_property(history):
    _, restored = history_from_record(history_to_record(history, SPACE), SPACE)
    assert restored == history


# --- prior distribution ------------------------------------------------------

def test_smoothed_prior_add_one():
    prior = PriorDistribution.smoothed([3, 1, 0])
    assert prior.probs == (4 / 7, 2 / 7, 1 / 7)


def test_uniform_prior():
    prior = PriorDistribution.uniform(4)
    assert prior.probs == (0.25, 0.25, 0.25, 0.25)


def test_prior_rejects_negative():
    with pytest.raises(ValueError):
        PriorDistribution((1.5, -0.5))


def test_prior_rejects_non_unit_sum():
    with pytest.raises(ValueError):
        PriorDistribution((0.5, 0.6))


@given(st.lists(st.integers(min_value=0, max_value=500), min_size=1, max_size=12))
def test_smoothed_prior_properties(counts):
    prior = PriorDistribution.smoothed(counts)
    assert abs(sum(prior.probs) - 1.0) <= 1e-9
    # smoothing never zeroes an act and preserves the count ordering
    assert all(p > 0 for p in prior.probs)
    for i in range(len(counts)):
        for j in range(len(counts)):
            if counts[i] > counts[j]:
                assert prior.probs[i] > prior.probs[j]


# --- search config -----------------------------------------------------------

def test_search_config_round_trip():
    cfg = SearchConfig(n_simulations=25, cache_size=2, c_p=0.5, open_loop=False)
    assert SearchConfig.from_dict(cfg.to_dict()) == cfg


def test_search_config_rejects_unknown_field():
    with pytest.raises(ValueError, match="unknown search config"):
        SearchConfig.from_dict({"simulations": 5})


@pytest.mark.parametrize("field,value", [
    ("n_simulations", 0),
    ("cache_size", 0),
    ("c_p", -0.1),
    ("prior_samples", 0),
    ("value_samples", 0),
    ("temp_value", -1.0),
    ("max_depth", 0),
    ("gamma", 1.0),
])
def test_search_config_validation(field, value):
    cfg = SearchConfig(**{field: value})
    with pytest.raises(ValueError):
        cfg.validate()


def test_search_config_defaults_are_valid():
    SearchConfig().validate()
    assert not math.isnan(SearchConfig().c_p)
