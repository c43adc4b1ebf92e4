"""Pairwise LLM-judge evaluation with position swapping, plus act analytics."""
from __future__ import annotations

import logging
import math
import random
import re
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Dict, List, Optional, Sequence, Tuple

from .core import DialogueHistory, Speaker
from .task_p4g import Message, P4GTask, default_task

log = logging.getLogger(__name__)

#: (messages, sample_count) -> sampled judge completions
JudgeFn = Callable[[List[Message], int], List[str]]
#: dialogue context -> candidate system response
PlannerFn = Callable[[DialogueHistory], str]

JUDGE_SAMPLES = 5


class Verdict(Enum):
    A = "A"
    B = "B"
    CANT_TELL = "C"


@dataclass
class JudgeVerdict:
    verdict: Verdict
    vote_counts: Dict[Verdict, int]
    swapped: bool


@dataclass
class WinRateReport:
    wins: int
    losses: int
    ties: int
    skipped: int
    per_run_rates: List[float]
    mean: float
    std: float

    def to_dict(self) -> dict:
        return {
            "wins": self.wins,
            "losses": self.losses,
            "ties": self.ties,
            "skipped": self.skipped,
            "per_run_rates": self.per_run_rates,
            "mean": self.mean,
            "std": self.std,
        }


def render_judge_prompt(context: DialogueHistory, resp_a: str, resp_b: str,
                        task: Optional[P4GTask] = None) -> List[Message]:
    """Which-response-is-more-persuasive prompt with A/B/C options."""
    if not resp_a or not resp_b:
        raise ValueError("both responses must be non-empty")
    task = task or default_task()
    context_lines = [
        ("Persuader: " if t.speaker is Speaker.SYSTEM else "Persuadee: ") + t.text
        for t in context.turns
    ]
    lines = [
        "The following is background information about Save the Children.",
        task.background,
        "The following is a conversation between a Persuader and a Persuadee about a "
        "charity called Save the Children. The Persuader is trying to persuade the "
        "Persuadee to donate to Save the Children",
        *context_lines,
        "Which of the following responses can better help the Persuader convince the "
        "Persuadee to donate to Save the Children? Why?",
        f"A. Persuader: {resp_a}",
        f"B. Persuader: {resp_b}",
        "C. Can't tell.",
        "Your can choose from either A, B, or C.",
        "Your choice:",
    ]
    return [{"role": "user", "content": "\n".join(lines)}]


_VOTE_RE = re.compile(r"^\W*([ABCabc])\b")


def _parse_vote(text: str) -> Verdict:
    match = _VOTE_RE.match(text.strip())
    if match is None:
        return Verdict.CANT_TELL
    return Verdict(match.group(1).upper())


def judge_pair(context: DialogueHistory, resp_a: str, resp_b: str,
               judge: JudgeFn, rng: random.Random,
               samples: int = JUDGE_SAMPLES,
               task: Optional[P4GTask] = None) -> JudgeVerdict:
    """Majority vote over sampled judgments with random A/B position swapping.

    The returned verdict (and vote counts) always refer to resp_a as A,
    regardless of the presentation order.
    """
    swapped = rng.random() < 0.5
    first, second = (resp_b, resp_a) if swapped else (resp_a, resp_b)
    messages = render_judge_prompt(context, first, second, task)
    votes = [_parse_vote(text) for text in judge(messages, samples)]

    def unswap(v: Verdict) -> Verdict:
        if not swapped or v is Verdict.CANT_TELL:
            return v
        return Verdict.B if v is Verdict.A else Verdict.A

    counts = {v: 0 for v in Verdict}
    for vote in votes:
        counts[unswap(vote)] += 1
    ranked = sorted(counts.items(), key=lambda item: -item[1])
    if ranked[0][1] == ranked[1][1]:
        verdict = Verdict.CANT_TELL
    else:
        verdict = ranked[0][0]
    return JudgeVerdict(verdict=verdict, vote_counts=counts, swapped=swapped)


def eligible_contexts(dialogue: DialogueHistory) -> List[DialogueHistory]:
    """Every prefix at which a system turn is about to be produced."""
    contexts = []
    for i, turn in enumerate(dialogue.turns):
        if turn.speaker is Speaker.SYSTEM:
            contexts.append(DialogueHistory(dialogue.turns[:i]))
    return contexts


def truncate_sentences(text: str, limit: int) -> str:
    """Keep the first `limit` sentences; never splits inside a terminator run."""
    if limit < 1:
        raise ValueError("limit must be at least 1")
    pieces = re.split(r"(?<=[.!?])\s+", text.strip())
    return " ".join(pieces[:limit])


def run_static_eval(corpus: Sequence[Tuple[str, DialogueHistory]],
                    planner_a: PlannerFn, planner_b: PlannerFn,
                    judge: JudgeFn, rng: random.Random, runs: int = 1,
                    truncate: Optional[int] = None,
                    count_ties_in_denominator: bool = True,
                    task: Optional[P4GTask] = None) -> WinRateReport:
    """Judge planner_a vs planner_b on every eligible turn; report mean +/- std."""
    contexts: List[DialogueHistory] = []
    for _, dialogue in corpus:
        contexts.extend(eligible_contexts(dialogue))

    wins = losses = ties = skipped = 0
    rates: List[float] = []
    for _ in range(runs):
        run_wins = run_losses = run_ties = 0
        for context in contexts:
            try:
                resp_a = planner_a(context)
                resp_b = planner_b(context)
                if truncate is not None:
                    resp_a = truncate_sentences(resp_a, truncate)
                    resp_b = truncate_sentences(resp_b, truncate)
                verdict = judge_pair(context, resp_a, resp_b, judge, rng, task=task)
            except Exception as exc:  # planner/judge failures skip the turn
                skipped += 1
                log.warning("skipping turn on failure: %s", exc)
                continue
            if verdict.verdict is Verdict.A:
                run_wins += 1
            elif verdict.verdict is Verdict.B:
                run_losses += 1
            else:
                run_ties += 1
        denominator = run_wins + run_losses + (run_ties if count_ties_in_denominator else 0)
        rates.append(run_wins / denominator if denominator else 0.0)
        wins += run_wins
        losses += run_losses
        ties += run_ties

    mean = sum(rates) / len(rates)
    std = math.sqrt(sum((r - mean) ** 2 for r in rates) / len(rates))
    return WinRateReport(wins=wins, losses=losses, ties=ties, skipped=skipped,
                         per_run_rates=rates, mean=mean, std=std)


TURN_BUCKETS: Tuple[Tuple[str, int, int], ...] = (
    ("1-2", 1, 2),
    ("3-5", 3, 5),
    ("6-10", 6, 10),
)


def da_distribution(transcripts: Sequence[Sequence[str]]) -> Dict[str, Dict[str, float]]:
    """Normalized planned-act frequency per turn bucket and overall.

    Each transcript is the ordered list of planned act names; turn numbering is
    1-based. Turns beyond 10 count only toward the overall bucket.
    """
    counts: Dict[str, Dict[str, int]] = {name: {} for name, _, _ in TURN_BUCKETS}
    counts["overall"] = {}
    for acts in transcripts:
        for turn_no, act in enumerate(acts, start=1):
            counts["overall"][act] = counts["overall"].get(act, 0) + 1
            for name, lo, hi in TURN_BUCKETS:
                if lo <= turn_no <= hi:
                    counts[name][act] = counts[name].get(act, 0) + 1
    result: Dict[str, Dict[str, float]] = {}
    for bucket, bucket_counts in counts.items():
        total = sum(bucket_counts.values())
        result[bucket] = (
            {act: c / total for act, c in sorted(bucket_counts.items())} if total else {}
        )
    return result


def stub_judge_first_option(messages: List[Message], samples: int) -> List[str]:
    """Test judge that always prefers the option presented as A."""
    return ["A"] * samples


def make_llm_judge(client, model: str, temperature: float = 1.0,
                   max_tokens: int = 16) -> JudgeFn:
    from .llm import ChatRequest  # local import to keep this module transport-free

    def judge(messages: List[Message], samples: int) -> List[str]:
        request = ChatRequest.from_messages(model, messages, temperature=temperature,
                                            sample_count=samples, max_tokens=max_tokens)
        return client.chat_complete(request)

    return judge
