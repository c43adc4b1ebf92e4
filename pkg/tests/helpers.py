"""Shared fixtures and helpers for the test suite."""
from __future__ import annotations

from dialplan.core import DialogueHistory, ReactionLabel, system_turn, user_turn
from dialplan.task_p4g import build_action_space

SPACE = build_action_space()


def act_id(name: str) -> int:
    act = SPACE.by_name(name)
    assert act is not None, name
    return act.id


def format_messages(messages) -> str:
    blocks = [f"--- {m['role']} ---\n{m['content']}\n" for m in messages]
    return "\n".join(blocks)


def demo_history() -> DialogueHistory:
    """The running example conversation used by the prompt golden files."""
    return DialogueHistory((
        system_turn(act_id("greeting"), "Hello. How are you?"),
        user_turn("I am good. What about you?", ReactionLabel.NEUTRAL),
        system_turn(
            act_id("task related inquiry"),
            "I'm doing well, thanks for asking. I wanted to talk to you about an "
            "important cause that I am passionate about - Save the Children. Have "
            "you heard of them before?"),
        user_turn("No I have not.", ReactionLabel.NEUTRAL),
    ))


CREDIBILITY_RESPONSE = (
    "Save the Children is an international non-governmental organization that is "
    "committed to improving the lives of children through education, healthcare, "
    "and other support programs. They work in over 100 countries around the world "
    "to help children who are living in poverty or affected by conflict.")


def demo_history_after_system() -> DialogueHistory:
    return demo_history().append(
        system_turn(act_id("credibility appeal"), CREDIBILITY_RESPONSE))


def demo_history_after_user() -> DialogueHistory:
    return demo_history_after_system().append(
        user_turn("It sounds like a great cause.", ReactionLabel.POSITIVE_REACTION))
