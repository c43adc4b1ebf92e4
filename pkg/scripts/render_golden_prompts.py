#!/usr/bin/env python3
"""Regenerate the prompt golden files under tests/golden/.

Run this only after a deliberate prompt-template change, then review the diff:
the test suite treats these files as the source of truth.
"""
import sys
from pathlib import Path

REPO = Path(__file__).resolve().parent.parent
sys.path.insert(0, str(REPO / "tests"))

from dialplan.evaluation import render_judge_prompt  # noqa: E402
from dialplan.task_p4g import (  # noqa: E402
    render_prior_prompt,
    render_system_prompt,
    render_user_sim_prompt,
    render_value_prompt,
)

from helpers import (  # noqa: E402
    SPACE,
    act_id,
    demo_history,
    demo_history_after_system,
    demo_history_after_user,
    format_messages,
)


def main() -> int:
    golden = REPO / "tests" / "golden"
    golden.mkdir(exist_ok=True)
    rendered = {
        "system_response_prompt.txt": render_system_prompt(
            demo_history(), SPACE[act_id("credibility appeal")]),
        "user_simulation_prompt.txt": render_user_sim_prompt(
            demo_history_after_system()),
        "value_function_prompt.txt": render_value_prompt(demo_history_after_user()),
        "prior_policy_prompt.txt": render_prior_prompt(demo_history_after_user()),
        "judge_prompt.txt": render_judge_prompt(
            demo_history(),
            "Save the Children helps children in over 100 countries. Even $1 "
            "makes a difference.",
            "Have you heard about Save the Children before?"),
    }
    for name, messages in rendered.items():
        (golden / name).write_text(format_messages(messages), encoding="utf-8")
        print(f"wrote {golden / name}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
