"""Open-loop MCTS dialogue policy planning with a pluggable generative oracle."""

from .core import (
    ActionSpace,
    ActionStats,
    CachedHistory,
    DialogueAct,
    DialogueHistory,
    PlanResult,
    PriorDistribution,
    ReactionLabel,
    SearchConfig,
    Speaker,
    TreeNode,
    Turn,
    validate_history,
)
from .engine import SearchError, search
from .oracle import (
    OracleError,
    OracleInterface,
    SyntheticOracle,
    SyntheticTask,
    solve_expectimax,
)
from .task_p4g import P4GTask, build_action_space

__all__ = [
    "ActionSpace",
    "ActionStats",
    "CachedHistory",
    "DialogueAct",
    "DialogueHistory",
    "OracleError",
    "OracleInterface",
    "P4GTask",
    "PlanResult",
    "PriorDistribution",
    "ReactionLabel",
    "SearchConfig",
    "SearchError",
    "Speaker",
    "SyntheticOracle",
    "SyntheticTask",
    "TreeNode",
    "Turn",
    "build_action_space",
    "search",
    "solve_expectimax",
    "validate_history",
]
