"""Shared domain types: dialogue transcripts, action spaces, tree statistics, config."""
from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, Iterator, List, Optional, Sequence, Tuple


class Speaker(Enum):
    SYSTEM = "system"
    USER = "user"


class ReactionLabel(Enum):
    """Five-way user reaction, each with a fixed numeric score in [-1, 1]."""

    NO_DONATION = "no donation"
    NEGATIVE_REACTION = "negative reaction"
    NEUTRAL = "neutral"
    POSITIVE_REACTION = "positive reaction"
    DONATE = "donate"

    @property
    def score(self) -> float:
        return _REACTION_SCORES[self]


_REACTION_SCORES: Dict[ReactionLabel, float] = {
    ReactionLabel.NO_DONATION: -1.0,
    ReactionLabel.NEGATIVE_REACTION: -0.5,
    ReactionLabel.NEUTRAL: 0.0,
    ReactionLabel.POSITIVE_REACTION: 0.5,
    ReactionLabel.DONATE: 1.0,
}


@dataclass(frozen=True)
class DialogueAct:
    """A discrete conversational strategy with its natural-language prompt form."""

    id: int
    name: str
    nl_form: str

    def __post_init__(self) -> None:
        if not self.nl_form:
            raise ValueError("nl_form must be non-empty")


@dataclass(frozen=True)
class ActionSpace:
    acts: Tuple[DialogueAct, ...]

    def __post_init__(self) -> None:
        if not self.acts:
            raise ValueError("action space must be non-empty")
        for i, act in enumerate(self.acts):
            if act.id != i:
                raise ValueError(f"act ids must be dense 0..{len(self.acts) - 1}, got {act.id} at {i}")

    def __len__(self) -> int:
        return len(self.acts)

    def __iter__(self) -> Iterator[DialogueAct]:
        return iter(self.acts)

    def __getitem__(self, act_id: int) -> DialogueAct:
        return self.acts[act_id]

    def by_name(self, name: str) -> Optional[DialogueAct]:
        key = " ".join(name.lower().split())
        for act in self.acts:
            if act.name.lower() == key:
                return act
        return None


@dataclass(frozen=True)
class Turn:
    speaker: Speaker
    text: str
    act: Optional[int] = None  # system turns only
    reaction: Optional[ReactionLabel] = None  # user turns only

    def __post_init__(self) -> None:
        if self.speaker is Speaker.SYSTEM and self.reaction is not None:
            raise ValueError("system turns never carry a reaction label")
        if self.speaker is Speaker.USER and self.act is not None:
            raise ValueError("user turns never carry a dialogue act")


def system_turn(act: int, text: str) -> Turn:
    return Turn(Speaker.SYSTEM, text, act=act)


def user_turn(text: str, reaction: Optional[ReactionLabel] = None) -> Turn:
    return Turn(Speaker.USER, text, reaction=reaction)


@dataclass(frozen=True)
class DialogueHistory:
    """Alternating system/user transcript, system first. Equality is structural."""

    turns: Tuple[Turn, ...] = ()

    def __len__(self) -> int:
        return len(self.turns)

    def append(self, *turns: Turn) -> "DialogueHistory":
        return DialogueHistory(self.turns + turns)

    @property
    def last(self) -> Optional[Turn]:
        return self.turns[-1] if self.turns else None

    def ends_with(self, speaker: Speaker) -> bool:
        return bool(self.turns) and self.turns[-1].speaker is speaker

    def system_turn_count(self) -> int:
        return sum(1 for t in self.turns if t.speaker is Speaker.SYSTEM)


def validate_history(history: DialogueHistory) -> Optional[str]:
    """Return a description of the first violated invariant, or None when valid."""
    for i, turn in enumerate(history.turns):
        expected = Speaker.SYSTEM if i % 2 == 0 else Speaker.USER
        if turn.speaker is not expected:
            if i == 0:
                return "must start with System"
            return f"non-alternating at turn {i}"
        if turn.speaker is Speaker.SYSTEM and turn.act is None:
            return f"system turn {i} missing dialogue act"
    return None


@dataclass
class CachedHistory:
    """A concrete simulated transcript with its running value statistics."""

    history: DialogueHistory
    value_mean: float = 0.0
    visits: int = 0


@dataclass
class ActionStats:
    visit_count: int = 0
    q_value: float = 0.0
    prior_p: float = 0.0


@dataclass
class TreeNode:
    """Open-loop node keyed by the action sequence taken from the root."""

    action_sequence: Tuple[int, ...] = ()
    per_action: Dict[int, ActionStats] = field(default_factory=dict)
    children: Dict[int, "TreeNode"] = field(default_factory=dict)
    cache: List[CachedHistory] = field(default_factory=list)
    expanded: bool = False

    def child(self, act_id: int) -> "TreeNode":
        node = self.children.get(act_id)
        if node is None:
            node = TreeNode(action_sequence=self.action_sequence + (act_id,))
            self.children[act_id] = node
        return node


@dataclass(frozen=True)
class PriorDistribution:
    probs: Tuple[float, ...]

    def __post_init__(self) -> None:
        if any(p < 0 for p in self.probs):
            raise ValueError("probabilities must be non-negative")
        if abs(sum(self.probs) - 1.0) > 1e-9:
            raise ValueError("probabilities must sum to 1")

    @classmethod
    def smoothed(cls, counts: Sequence[int]) -> "PriorDistribution":
        """Add-1 smoothing: p_a = (count_a + 1) / (sum(counts) + |A|)."""
        total = sum(counts) + len(counts)
        return cls(tuple((c + 1) / total for c in counts))

    @classmethod
    def uniform(cls, n: int) -> "PriorDistribution":
        return cls(tuple(1.0 / n for _ in range(n)))


@dataclass
class SearchConfig:
    """All search hyperparameters, including ablation switches."""

    n_simulations: int = 10
    cache_size: int = 3
    c_p: float = 1.0
    q0: float = 0.0
    prior_samples: int = 15
    value_samples: int = 10
    temp_prior: float = 1.0
    temp_value: float = 1.1
    temp_gen: float = 1.0
    max_depth: int = 3
    open_loop: bool = True
    response_selection: bool = True
    prior_weighted_puct: bool = True
    gamma: float = 0.9  # stored for the MDP definition; unused by the search itself
    rng_seed: int = 0

    def validate(self) -> None:
        if self.n_simulations < 1:
            raise ValueError("n_simulations must be positive")
        if self.cache_size < 1:
            raise ValueError("cache_size must be positive")
        if self.c_p < 0:
            raise ValueError("c_p must be non-negative")
        if self.prior_samples < 1 or self.value_samples < 1:
            raise ValueError("prior_samples and value_samples must be positive")
        if min(self.temp_prior, self.temp_value, self.temp_gen) < 0:
            raise ValueError("temperatures must be non-negative")
        if self.max_depth < 1:
            raise ValueError("max_depth must be at least 1")
        if not 0.0 <= self.gamma < 1.0:
            raise ValueError("gamma must be in [0, 1)")

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "SearchConfig":
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown search config fields: {sorted(unknown)}")
        cfg = cls(**data)
        cfg.validate()
        return cfg


@dataclass
class PlanResult:
    chosen_act: int
    chosen_utterance: str
    per_act_visits: Tuple[int, ...]
    per_act_q: Tuple[float, ...]
    root_prior: PriorDistribution
    simulations_run: int
    oracle_call_count: int

    def to_dict(self) -> dict:
        return {
            "chosen_act": self.chosen_act,
            "chosen_utterance": self.chosen_utterance,
            "per_act_visits": list(self.per_act_visits),
            "per_act_q": list(self.per_act_q),
            "root_prior": list(self.root_prior.probs),
            "simulations_run": self.simulations_run,
            "oracle_call_count": self.oracle_call_count,
        }


# --- corpus / transcript serialization -------------------------------------

def history_to_record(history: DialogueHistory, space: ActionSpace, dialog_id: str = "") -> dict:
    turns = []
    for turn in history.turns:
        if turn.speaker is Speaker.SYSTEM:
            act = space[turn.act].name if turn.act is not None else None
        else:
            act = turn.reaction.value if turn.reaction is not None else None
        turns.append({"speaker": turn.speaker.value, "act": act, "text": turn.text})
    return {"dialog_id": dialog_id, "turns": turns}


def history_from_record(record: dict, space: ActionSpace) -> Tuple[str, DialogueHistory]:
    turns: List[Turn] = []
    for raw in record["turns"]:
        speaker = Speaker(raw["speaker"])
        tag = raw.get("act")
        if speaker is Speaker.SYSTEM:
            if tag is None:
                raise ValueError("system turn missing act")
            act = space.by_name(tag)
            if act is None:
                raise ValueError(f"unknown dialogue act: {tag!r}")
            turns.append(system_turn(act.id, raw["text"]))
        else:
            reaction = ReactionLabel(tag) if tag is not None else None
            turns.append(user_turn(raw["text"], reaction))
    history = DialogueHistory(tuple(turns))
    problem = validate_history(history)
    if problem is not None:
        raise ValueError(f"invalid dialogue record: {problem}")
    return record.get("dialog_id", ""), history


def load_corpus(path: str, space: ActionSpace) -> List[Tuple[str, DialogueHistory]]:
    """Read a one-dialogue-per-line corpus file."""
    dialogues = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line:
                dialogues.append(history_from_record(json.loads(line), space))
    return dialogues
