"""Generative oracle abstraction, deterministic synthetic oracle, and reference solver.

The synthetic oracle drives a tiny hidden-inclination process so the search can be
verified against exact brute-force values without any network access.
"""
from __future__ import annotations

import abc
import itertools
import json
import random
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

from .core import (
    DialogueHistory,
    ReactionLabel,
    Speaker,
    system_turn,
    user_turn,
)

MIN_STATE = -2
MAX_STATE = 2

#: hidden-state threshold -> reaction label, monotone in the state
_STATE_LABELS = {
    -2: ReactionLabel.NO_DONATION,
    -1: ReactionLabel.NEGATIVE_REACTION,
    0: ReactionLabel.NEUTRAL,
    1: ReactionLabel.POSITIVE_REACTION,
    2: ReactionLabel.DONATE,
}

SOLVER_SIZE_CAP = 10_000_000


class OracleError(Exception):
    """Retryable oracle failure; an in-flight simulation is aborted on this."""


class OracleInterface(abc.ABC):
    """The four generative capabilities the search engine relies on."""

    @abc.abstractmethod
    def generate_system_utterance(self, history: DialogueHistory, act_id: int,
                                  rng: random.Random) -> str:
        ...

    @abc.abstractmethod
    def generate_user_turn(self, history: DialogueHistory,
                           rng: random.Random) -> Tuple[ReactionLabel, str]:
        ...

    @abc.abstractmethod
    def sample_prior_acts(self, history: DialogueHistory, m: int, temp: float,
                          rng: random.Random) -> List[int]:
        ...

    @abc.abstractmethod
    def sample_value_labels(self, history: DialogueHistory, l: int, temp: float,
                            rng: random.Random) -> List[ReactionLabel]:
        ...


def clamp_state(state: int) -> int:
    return max(MIN_STATE, min(MAX_STATE, state))


def label_for_state(state: int) -> ReactionLabel:
    return _STATE_LABELS[clamp_state(state)]


def terminal_value(state: int) -> float:
    """Terminal value equals the score of the state's reaction label."""
    return clamp_state(state) / 2.0


@dataclass
class SyntheticTask:
    """Hidden-inclination process: each (state, act) samples a delta in {-1, 0, +1}."""

    act_count: int
    transitions: Dict[Tuple[int, int], Dict[int, float]]
    start_state: int = 0

    def __post_init__(self) -> None:
        if self.act_count < 1:
            raise ValueError("act_count must be positive")
        for key, dist in self.transitions.items():
            if abs(sum(dist.values()) - 1.0) > 1e-9:
                raise ValueError(f"transition distribution for {key} does not sum to 1")
            if any(d not in (-1, 0, 1) for d in dist):
                raise ValueError(f"deltas must be in {{-1, 0, +1}}, got {dist}")

    def delta_distribution(self, state: int, act_id: int) -> Dict[int, float]:
        dist = self.transitions.get((clamp_state(state), act_id))
        if dist is None:
            raise KeyError(f"no transition entry for state={state}, act={act_id}")
        return dist

    def sample_delta(self, state: int, act_id: int, rng: random.Random) -> int:
        dist = self.delta_distribution(state, act_id)
        r = rng.random()
        acc = 0.0
        for delta in sorted(dist):
            acc += dist[delta]
            if r < acc:
                return delta
        return max(dist)

    def to_dict(self) -> dict:
        return {
            "act_count": self.act_count,
            "start_state": self.start_state,
            "transitions": [
                {"state": s, "act": a, "deltas": {str(d): p for d, p in dist.items()}}
                for (s, a), dist in sorted(self.transitions.items())
            ],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "SyntheticTask":
        transitions = {
            (entry["state"], entry["act"]): {int(d): p for d, p in entry["deltas"].items()}
            for entry in data["transitions"]
        }
        return cls(act_count=data["act_count"], transitions=transitions,
                   start_state=data.get("start_state", 0))

    @classmethod
    def load(cls, path: str) -> "SyntheticTask":
        with open(path, encoding="utf-8") as fh:
            return cls.from_dict(json.load(fh))

    def save(self, path: str) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_dict(), fh, indent=2)


def random_task(act_count: int, rng: random.Random, start_state: int = 0,
                sharpness: float = 1.0) -> SyntheticTask:
    """A task with independently random delta distributions for every (state, act).

    `sharpness` > 1 concentrates each distribution on a dominant delta, which
    lowers simulation noise while keeping transitions stochastic.
    """
    transitions = {}
    for state in range(MIN_STATE, MAX_STATE + 1):
        for act in range(act_count):
            weights = [rng.random() ** sharpness for _ in range(3)]
            total = sum(weights)
            probs = [w / total for w in weights]
            probs[2] = 1.0 - probs[0] - probs[1]  # exact unit sum
            transitions[(state, act)] = {-1: probs[0], 0: probs[1], 1: probs[2]}
    return SyntheticTask(act_count=act_count, transitions=transitions, start_state=start_state)


class SyntheticOracle(OracleInterface):
    """Deterministic stand-in for the LLM oracle.

    Utterances canonically encode only public information: system turns encode
    (act, turn index), user turns encode (turn index, sampled delta). The hidden
    inclination is always re-derived by replaying the transcript, never stored,
    so the oracle is reentrant and the engine cannot shortcut the simulation.
    """

    def __init__(self, task: SyntheticTask):
        self.task = task

    def replay_state(self, history: DialogueHistory) -> int:
        """Hidden state after all complete (system, user) exchanges in `history`."""
        state = self.task.start_state
        for turn in history.turns:
            if turn.speaker is Speaker.USER:
                state = clamp_state(state + _parse_delta(turn.text))
        return state

    def generate_system_utterance(self, history: DialogueHistory, act_id: int,
                                  rng: random.Random) -> str:
        if not 0 <= act_id < self.task.act_count:
            raise ValueError(f"act id {act_id} outside task action space")
        return f"sys|{act_id}|{history.system_turn_count()}"

    def generate_user_turn(self, history: DialogueHistory,
                           rng: random.Random) -> Tuple[ReactionLabel, str]:
        last = history.last
        if last is None or last.speaker is not Speaker.SYSTEM:
            raise ValueError("history must end with a system turn")
        state = self.replay_state(history)
        delta = self.task.sample_delta(state, last.act, rng)
        new_state = clamp_state(state + delta)
        turn_index = history.system_turn_count() - 1
        return label_for_state(new_state), f"usr|{turn_index}|{delta:+d}"

    def sample_prior_acts(self, history: DialogueHistory, m: int, temp: float,
                          rng: random.Random) -> List[int]:
        # Uniform prior stub: the synthetic task has no informative policy.
        if m < 1:
            raise ValueError("m must be at least 1")
        return [rng.randrange(self.task.act_count) for _ in range(m)]

    def sample_value_labels(self, history: DialogueHistory, l: int, temp: float,
                            rng: random.Random) -> List[ReactionLabel]:
        if l < 1:
            raise ValueError("l must be at least 1")
        if not history.ends_with(Speaker.USER):
            raise ValueError("history must end with a user turn")
        label = label_for_state(self.replay_state(history))
        return [label] * l


def _parse_delta(text: str) -> int:
    # Canonical user encoding "usr|<turn>|<delta>"; anything else (e.g. a live
    # human utterance) is treated as a neutral move.
    parts = text.split("|")
    if len(parts) == 3 and parts[0] == "usr":
        try:
            return int(parts[2])
        except ValueError:
            return 0
    return 0


def solve_expectimax(task: SyntheticTask, history: DialogueHistory,
                     depth: int) -> Tuple[int, List[float]]:
    """Exact open-loop reference values by exhaustive enumeration.

    For every fixed action sequence of length `depth` the expected terminal
    value (clamped state / 2) is computed over all delta outcome sequences;
    each first act is scored by its best continuation. Returns the argmax act
    (lowest id on ties) and the per-act value vector.
    """
    if depth < 1:
        raise ValueError("depth must be at least 1")
    if (task.act_count ** depth) * (3 ** depth) > SOLVER_SIZE_CAP:
        raise ValueError("enumeration size exceeds solver cap")

    oracle = SyntheticOracle(task)
    start = oracle.replay_state(history)

    def sequence_value(state: int, seq: Tuple[int, ...]) -> float:
        if not seq:
            return terminal_value(state)
        value = 0.0
        for delta, prob in task.delta_distribution(state, seq[0]).items():
            value += prob * sequence_value(clamp_state(state + delta), seq[1:])
        return value

    values = []
    for first in range(task.act_count):
        best = max(
            sequence_value(start, (first,) + tail)
            for tail in itertools.product(range(task.act_count), repeat=depth - 1)
        )
        values.append(best)
    best_act = max(range(task.act_count), key=lambda a: (values[a], -a))
    return best_act, values
