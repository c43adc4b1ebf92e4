"""Open-loop Monte Carlo tree search over dialogue-act sequences.

Selection uses PUCT over per-edge statistics, each node keeps a bounded cache of
concrete simulated transcripts, leaves are expanded with a sampled prior policy
and evaluated by sampled user-reaction scores, and the final response is taken
from the best cached simulation ("response selection").
"""
from __future__ import annotations

import hashlib
import logging
import math
import random
from dataclasses import dataclass
from typing import List, Optional, Tuple

from .core import (
    ActionSpace,
    ActionStats,
    CachedHistory,
    DialogueHistory,
    PlanResult,
    PriorDistribution,
    SearchConfig,
    Speaker,
    TreeNode,
    system_turn,
    user_turn,
    validate_history,
)
from .oracle import OracleError, OracleInterface

log = logging.getLogger(__name__)


class SearchError(Exception):
    """Raised when too many simulations abort on oracle failures."""


@dataclass
class SearchStep:
    """One selection step: the edge taken and the concrete history used below it."""

    parent: TreeNode
    act: int
    child: TreeNode
    cached: CachedHistory


SearchPath = List[SearchStep]


class _CountingOracle(OracleInterface):
    """Delegating wrapper that tallies calls per operation."""

    def __init__(self, inner: OracleInterface):
        self.inner = inner
        self.counts = {
            "generate_system_utterance": 0,
            "generate_user_turn": 0,
            "sample_prior_acts": 0,
            "sample_value_labels": 0,
        }

    @property
    def total(self) -> int:
        return sum(self.counts.values())

    def generate_system_utterance(self, history, act_id, rng):
        self.counts["generate_system_utterance"] += 1
        return self.inner.generate_system_utterance(history, act_id, rng)

    def generate_user_turn(self, history, rng):
        self.counts["generate_user_turn"] += 1
        return self.inner.generate_user_turn(history, rng)

    def sample_prior_acts(self, history, m, temp, rng):
        self.counts["sample_prior_acts"] += 1
        return self.inner.sample_prior_acts(history, m, temp, rng)

    def sample_value_labels(self, history, l, temp, rng):
        self.counts["sample_value_labels"] += 1
        return self.inner.sample_value_labels(history, l, temp, rng)


def puct_score(stats: ActionStats, sibling_visit_sum: int, c_p: float,
               prior_weighted: bool) -> float:
    weight = stats.prior_p if prior_weighted else 1.0
    exploration = c_p * weight * math.sqrt(sibling_visit_sum) / (1 + stats.visit_count)
    return stats.q_value + exploration


def select_action(node: TreeNode, cfg: SearchConfig) -> int:
    """Act with the highest PUCT score; ties broken by lowest act id."""
    if not node.expanded:
        raise ValueError("select_action requires an expanded node")
    total = sum(stats.visit_count for stats in node.per_action.values())
    best_act, best_score = -1, -math.inf
    for act_id in sorted(node.per_action):
        score = puct_score(node.per_action[act_id], total, cfg.c_p, cfg.prior_weighted_puct)
        if score > best_score:
            best_act, best_score = act_id, score
    return best_act


def _edge_seed(base_seed: int, sequence: Tuple[int, ...]) -> int:
    digest = hashlib.blake2b(repr((base_seed, sequence)).encode(), digest_size=8).digest()
    return int.from_bytes(digest, "big")


def descend(node: TreeNode, history: DialogueHistory, cfg: SearchConfig,
            oracle: OracleInterface, rng: random.Random) -> Tuple[TreeNode, CachedHistory]:
    """Select an edge and produce the concrete history used below it.

    If the chosen child's cache is not full, a new simulation is generated by
    the oracle and cached; otherwise a cached simulation is sampled uniformly.
    With open_loop disabled the cache bound is forced to 1 and generation is
    seeded from the edge identity, so the single stored history is deterministic.
    """
    act_id = select_action(node, cfg)
    child = node.child(act_id)
    cache_bound = cfg.cache_size if cfg.open_loop else 1

    if len(child.cache) < cache_bound:
        gen_rng = rng
        if not cfg.open_loop:
            gen_rng = random.Random(_edge_seed(cfg.rng_seed, child.action_sequence))
        sys_text = oracle.generate_system_utterance(history, act_id, gen_rng)
        with_system = history.append(system_turn(act_id, sys_text))
        reaction, usr_text = oracle.generate_user_turn(with_system, gen_rng)
        cached = CachedHistory(with_system.append(user_turn(usr_text, reaction)))
        child.cache.append(cached)
        return child, cached
    return child, rng.choice(child.cache)


def expand(node: TreeNode, history: DialogueHistory, cfg: SearchConfig,
           oracle: OracleInterface, rng: random.Random,
           space_size: int) -> PriorDistribution:
    """Initialize per-act statistics from the sampled, add-1-smoothed prior."""
    if node.expanded:
        raise ValueError("node is already expanded")
    samples = oracle.sample_prior_acts(history, cfg.prior_samples, cfg.temp_prior, rng)
    if samples:
        counts = [0] * space_size
        for act_id in samples:
            counts[act_id] += 1
        prior = PriorDistribution.smoothed(counts)
    else:
        log.warning("no parseable prior samples; falling back to uniform prior")
        prior = PriorDistribution.uniform(space_size)
    for act_id in range(space_size):
        node.per_action[act_id] = ActionStats(visit_count=0, q_value=cfg.q0,
                                              prior_p=prior.probs[act_id])
    node.expanded = True
    return prior


def estimate_value(history: DialogueHistory, cfg: SearchConfig,
                   oracle: OracleInterface, rng: random.Random) -> float:
    """Mean reaction score of sampled answers to the donation probe."""
    labels = oracle.sample_value_labels(history, cfg.value_samples, cfg.temp_value, rng)
    return sum(label.score for label in labels) / len(labels)


def backpropagate(path: SearchPath, value: float) -> None:
    """Fold a leaf value into cached-history and edge statistics, leaf to root.

    The visit count is incremented before the Q update, so the increment uses
    the post-increment count: Q += (v - Q) / N.
    """
    for step in reversed(path):
        cached = step.cached
        cached.value_mean = (cached.value_mean * cached.visits + value) / (cached.visits + 1)
        cached.visits += 1
        stats = step.parent.per_action[step.act]
        stats.visit_count += 1
        stats.q_value += (value - stats.q_value) / stats.visit_count


def select_response(root: TreeNode, a_star: int) -> Optional[str]:
    """System utterance for a_star from its highest-valued cached simulation."""
    child = root.children.get(a_star)
    if child is None or not child.cache:
        return None
    best = max(child.cache, key=lambda c: c.value_mean)
    # lowest index wins ties
    for cached in child.cache:
        if cached.value_mean == best.value_mean:
            best = cached
            break
    return best.history.turns[len(root.cache[0].history.turns)].text


def search(root_history: DialogueHistory, cfg: SearchConfig,
           oracle: OracleInterface, space: ActionSpace) -> PlanResult:
    """Run n simulations of selection/expansion/evaluation/backpropagation."""
    cfg.validate()
    problem = validate_history(root_history)
    if problem is not None:
        raise ValueError(f"invalid root history: {problem}")
    if root_history.turns and not root_history.ends_with(Speaker.USER):
        raise ValueError("root history must end with a user turn")

    rng = random.Random(cfg.rng_seed)
    counting = _CountingOracle(oracle)
    root = TreeNode()
    root.cache.append(CachedHistory(root_history))

    completed = 0
    aborted = 0
    while completed < cfg.n_simulations:
        try:
            _simulate(root, cfg, counting, rng, len(space))
        except OracleError as exc:
            aborted += 1
            log.warning("simulation aborted on oracle error: %s", exc)
            if aborted > cfg.n_simulations:
                raise SearchError(
                    f"more than half of simulations aborted ({aborted} aborts)"
                ) from exc
            continue
        completed += 1

    visits = tuple(root.per_action[a].visit_count for a in range(len(space)))
    q_values = tuple(root.per_action[a].q_value for a in range(len(space)))
    prior = PriorDistribution(tuple(root.per_action[a].prior_p for a in range(len(space))))
    a_star = max(range(len(space)), key=lambda a: (visits[a], -a))

    utterance = None
    if cfg.response_selection:
        utterance = select_response(root, a_star)
        if utterance is None:
            log.warning("empty cache for chosen act; generating a fresh response")
    if utterance is None:
        utterance = counting.generate_system_utterance(root_history, a_star, rng)

    return PlanResult(
        chosen_act=a_star,
        chosen_utterance=utterance,
        per_act_visits=visits,
        per_act_q=q_values,
        root_prior=prior,
        simulations_run=completed,
        oracle_call_count=counting.total,
    )


def _simulate(root: TreeNode, cfg: SearchConfig, oracle: OracleInterface,
              rng: random.Random, space_size: int) -> None:
    node = root
    history = root.cache[0].history
    path: SearchPath = []
    while True:
        depth = len(node.action_sequence)
        if depth >= cfg.max_depth:
            break  # depth-capped leaf: evaluate without expansion
        if not node.expanded:
            expand(node, history, cfg, oracle, rng, space_size)
            if path:
                break  # freshly expanded non-root leaf
            # Root expansion happens lazily inside the first simulation, which
            # then continues selecting so every simulation traverses an edge.
        child, cached = descend(node, history, cfg, oracle, rng)
        path.append(SearchStep(node, child.action_sequence[-1], child, cached))
        node, history = child, cached.history
    value = estimate_value(history, cfg, oracle, rng)
    backpropagate(path, value)
