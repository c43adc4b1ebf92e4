"""PersuasionForGood task definition: action space, prompt templates, parsing.

All renderers are pure functions of (task data, history, act); the one-shot
exemplar is stored once as structured data and re-rendered per prompt kind.
"""
from __future__ import annotations

import json
import os
import re
from dataclasses import dataclass
from typing import Dict, List, Optional, Tuple

from .core import (
    ActionSpace,
    DialogueAct,
    DialogueHistory,
    ReactionLabel,
    Speaker,
)

Message = Dict[str, str]

BACKGROUND = (
    "Save the Children is head-quartered in London, and they work to help fight "
    "poverty around the world. Children need help in developing countries and war "
    "zones. Small donations like $1 or $2 go a long way to help."
)

#: probe appended before value estimation (the executable prompt wording)
PROBE_UTTERANCE = "Would you be interested in donating to Save the Children?"
#: shorter variant of the probe used in prose descriptions of the method
PROBE_UTTERANCE_SHORT = "Would you like to make a donation?"

_ACT_DEFS: Tuple[Tuple[str, str], ...] = (
    ("logical appeal",
     "The Persuader use of reasoning and evidence to convince the Persuadee."),
    ("emotion appeal",
     "The Persuader uses an emotion appeal to convince the Persuadee."),
    ("credibility appeal",
     "The Persuader establishes credibility of Save the Children by citing its impact."),
    ("task related inquiry",
     "The Persuader asks about the Persuadee's knowledge or opinion related to Save the Children."),
    ("proposition of donation",
     "The Persuader asks if the Persuadee would like to make a small donation."),
    ("greeting",
     "The Persuader greets the Persuadee."),
    ("other",
     "The Persuader responds to the Persuadee without using any persuasive strategy."),
)

#: order in which act names appear in the prior-policy menu
ACT_MENU_ORDER: Tuple[str, ...] = (
    "credibility appeal", "emotion appeal", "proposition of donation",
    "logical appeal", "task related inquiry", "greeting", "other",
)

LABEL_MENU_ORDER: Tuple[str, ...] = (
    "no donation", "negative reaction", "neutral", "positive reaction", "donate",
)


@dataclass(frozen=True)
class ExemplarTurn:
    speaker: str  # "persuader" | "persuadee"
    tag: str  # dialogue act name (persuader) or reaction label (persuadee)
    text: str


_EXEMPLAR: Tuple[ExemplarTurn, ...] = (
    ExemplarTurn("persuadee", "neutral", "Hello. How are you?"),
    ExemplarTurn("persuader", "task related inquiry",
                 "Very well. I'm just up organizing info for my charity called Save the "
                 "Children. Have you heard of this charity before?"),
    ExemplarTurn("persuadee", "neutral", "No, I have not. Can you tell me more?"),
    ExemplarTurn("persuader", "credibility appeal",
                 "Save the Children is an organization that helps children in developing "
                 "countries, by promoting children's rights and providing relief. It is an "
                 "amazing charity that helps kids who are in desperate need. They can help "
                 "with safety, education and more."),
    ExemplarTurn("persuadee", "negative reaction",
                 "That sounds great. I believe in this charity, but still wonder how much "
                 "of the money I donate actually helps. I am always worried if I donate it "
                 "will just go to some higher up that is living the high life."),
    ExemplarTurn("persuader", "emotion appeal",
                 "Every little bit makes a difference. When you have people who are so "
                 "poor, it's amazing what a tiny amount can do. I usually donate in hopes I "
                 "can at least feel like I did my part. If I donated and some corrupt "
                 "person took it, that's the worst karma and even worst scandal imaginable"),
    ExemplarTurn("persuadee", "positive reaction",
                 "With that all said I do feel like any organization that aims to help the "
                 "children I am more inclined to donate to them than most. I think helping "
                 "children is an important thing as they are our future!"),
    ExemplarTurn("persuader", "proposition of donation",
                 "I think donating to this cause would def be a step in the right "
                 "direction to hopefully helping across the world the children that are in "
                 "despair. I don't want you to donate any more than you want, so if you "
                 "want to donate how much do you to do?"),
    ExemplarTurn("persuadee", "donate",
                 "I would donate 1 dollar to this charity and feel good about it I think."),
)


@dataclass(frozen=True)
class P4GTask:
    """Prompt assets for the persuasion task: acts, exemplar, preambles, probe."""

    background: str
    acts: Tuple[Tuple[str, str], ...]
    act_menu_order: Tuple[str, ...]
    label_menu_order: Tuple[str, ...]
    exemplar: Tuple[ExemplarTurn, ...]
    probe: str

    @classmethod
    def default(cls) -> "P4GTask":
        return cls(
            background=BACKGROUND,
            acts=_ACT_DEFS,
            act_menu_order=ACT_MENU_ORDER,
            label_menu_order=LABEL_MENU_ORDER,
            exemplar=_EXEMPLAR,
            probe=PROBE_UTTERANCE,
        )

    @classmethod
    def load(cls, asset_dir: str) -> "P4GTask":
        with open(os.path.join(asset_dir, "task.json"), encoding="utf-8") as fh:
            data = json.load(fh)
        return cls(
            background=data["background"],
            acts=tuple((a["name"], a["nl_form"]) for a in data["acts"]),
            act_menu_order=tuple(data["act_menu_order"]),
            label_menu_order=tuple(data["label_menu_order"]),
            exemplar=tuple(ExemplarTurn(t["speaker"], t["tag"], t["text"])
                           for t in data["exemplar"]),
            probe=data["probe"],
        )

    def save(self, asset_dir: str) -> None:
        os.makedirs(asset_dir, exist_ok=True)
        data = {
            "background": self.background,
            "acts": [{"name": n, "nl_form": f} for n, f in self.acts],
            "act_menu_order": list(self.act_menu_order),
            "label_menu_order": list(self.label_menu_order),
            "exemplar": [{"speaker": t.speaker, "tag": t.tag, "text": t.text}
                         for t in self.exemplar],
            "probe": self.probe,
        }
        with open(os.path.join(asset_dir, "task.json"), "w", encoding="utf-8") as fh:
            json.dump(data, fh, indent=2)

    def action_space(self) -> ActionSpace:
        return ActionSpace(tuple(
            DialogueAct(i, name, nl_form) for i, (name, nl_form) in enumerate(self.acts)
        ))

    def nl_form(self, act_name: str) -> str:
        for name, form in self.acts:
            if name == act_name:
                return form
        raise KeyError(act_name)

    # --- prompt renderers ---------------------------------------------------

    def render_system_prompt(self, history: DialogueHistory,
                             act: DialogueAct) -> List[Message]:
        """Persuader-side generation prompt with act control lines (conditional
        generation of the next system response)."""
        preamble = "\n".join([
            self.background,
            "You are Persuader who is trying to persuade the Persuadee to donate to a "
            "charity called Save the Children.",
            "The following is an example conversation between a Persuader and a Persuadee.",
        ])
        messages: List[Message] = [{"role": "system", "content": preamble}]
        for i, turn in enumerate(self.exemplar):
            if turn.speaker == "persuadee":
                content = f"Persuadee: {turn.text}"
                if i + 1 < len(self.exemplar):
                    content += "\n" + self.nl_form(self.exemplar[i + 1].tag)
                messages.append({"role": "user", "content": content})
            else:
                messages.append({"role": "assistant", "content": f"Persuader: {turn.text}"})
        header = "The following is a new conversation between Persuader (you) and a Persuadee."
        messages.append({"role": "system", "content": header})
        space = self.action_space()
        for turn in history.turns:
            if turn.speaker is Speaker.SYSTEM:
                # the control line precedes each system turn, appended to the
                # previous message (the header for the very first turn)
                messages[-1]["content"] += "\n" + space[turn.act].nl_form
                messages.append({"role": "assistant", "content": f"Persuader: {turn.text}"})
            else:
                messages.append({"role": "user", "content": f"Persuadee: {turn.text}"})
        messages[-1]["content"] += "\n" + act.nl_form
        return messages

    def _render_user_side(self, history: DialogueHistory) -> List[Message]:
        preamble = "\n".join([
            "You are a Persuadee. A Persuader is trying to persuade you to donate to a "
            "charity called Save the Children.",
            "You can choose amongst the following actions during a conversation to "
            "respond to the Persuader:",
            " ".join(f"[{label}]" for label in self.label_menu_order) + ".",
            "The following is an example conversation between a Persuader and some Persuadee.",
        ])
        messages: List[Message] = [{"role": "system", "content": preamble}]
        for turn in self.exemplar:
            if turn.speaker == "persuadee":
                messages.append({"role": "assistant",
                                 "content": f"Persuadee: [{turn.tag}] {turn.text}"})
            else:
                messages.append({"role": "user", "content": f"Persuader: {turn.text}"})
        header = ("The following is a new conversation between a Persuader and a Persuadee "
                  "(you). You may or may not want to donate to Save the Children.")
        messages.append({"role": "system", "content": header})
        for turn in history.turns:
            if turn.speaker is Speaker.SYSTEM:
                messages.append({"role": "user", "content": f"Persuader: {turn.text}"})
            elif turn.reaction is not None:
                messages.append({"role": "assistant",
                                 "content": f"Persuadee: [{turn.reaction.value}] {turn.text}"})
            else:
                messages.append({"role": "assistant", "content": f"Persuadee: {turn.text}"})
        return messages

    def render_user_sim_prompt(self, history: DialogueHistory) -> List[Message]:
        """User-simulator prompt; the next assistant message is the labelled
        persuadee response."""
        return self._render_user_side(history)

    def render_value_prompt(self, history: DialogueHistory) -> List[Message]:
        """User-simulator prompt with the donation probe appended as the final turn."""
        messages = self._render_user_side(history)
        messages.append({"role": "user", "content": f"Persuader: {self.probe}"})
        return messages

    def render_prior_prompt(self, history: DialogueHistory) -> List[Message]:
        """Persuader-side prompt where every system turn carries its bracketed act."""
        preamble = "\n".join([
            self.background,
            "You are Persuader who is trying to persuade the Persuadee to donate to a "
            "charity called Save the Children. You can choose amongst the following "
            "actions during a conversation:",
            " ".join(f"[{name}]" for name in self.act_menu_order) + ".",
            "The following is an example conversation between a Persuader and a Persuadee.",
        ])
        messages: List[Message] = [{"role": "system", "content": preamble}]
        for turn in self.exemplar:
            if turn.speaker == "persuadee":
                messages.append({"role": "user", "content": f"Persuadee: {turn.text}"})
            else:
                messages.append({"role": "assistant",
                                 "content": f"Persuader: [{turn.tag}] {turn.text}"})
        header = "The following is a new conversation between Persuader (you) and a Persuadee."
        messages.append({"role": "system", "content": header})
        space = self.action_space()
        for turn in history.turns:
            if turn.speaker is Speaker.SYSTEM:
                messages.append({"role": "assistant",
                                 "content": f"Persuader: [{space[turn.act].name}] {turn.text}"})
            else:
                messages.append({"role": "user", "content": f"Persuadee: {turn.text}"})
        return messages


_DEFAULT_TASK = P4GTask.default()


def default_task() -> P4GTask:
    return _DEFAULT_TASK


def build_action_space() -> ActionSpace:
    return _DEFAULT_TASK.action_space()


def render_system_prompt(history: DialogueHistory, act: DialogueAct) -> List[Message]:
    return _DEFAULT_TASK.render_system_prompt(history, act)


def render_user_sim_prompt(history: DialogueHistory) -> List[Message]:
    return _DEFAULT_TASK.render_user_sim_prompt(history)


def render_value_prompt(history: DialogueHistory) -> List[Message]:
    return _DEFAULT_TASK.render_value_prompt(history)


def render_prior_prompt(history: DialogueHistory) -> List[Message]:
    return _DEFAULT_TASK.render_prior_prompt(history)


# --- parsing ----------------------------------------------------------------

_BRACKET_RE = re.compile(
    r"^\s*(?:Persuadee:|Persuader:)?\s*\[([^\]]+)\]\s*(.*)$", re.DOTALL)


def parse_bracketed_label(text: str) -> Optional[Tuple[str, str]]:
    """Extract a leading "[...]" group (after an optional speaker prefix).

    Returns (label, trimmed remainder), or None when no leading bracket group
    is present.
    """
    match = _BRACKET_RE.match(text)
    if match is None:
        return None
    return match.group(1).strip(), match.group(2).strip()


_LABEL_ALIASES = {label.value: label for label in ReactionLabel}
_LABEL_ALIASES["donation"] = ReactionLabel.DONATE


def match_reaction_label(name: str) -> Optional[ReactionLabel]:
    """Case-insensitive, whitespace-normalized reaction lookup."""
    return _LABEL_ALIASES.get(" ".join(name.lower().split()))


def match_act(space: ActionSpace, name: str) -> Optional[int]:
    act = space.by_name(name)
    return act.id if act is not None else None
