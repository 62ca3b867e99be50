from .actions import (
    ALL_ACTIONS,
    STOP,
    TEMPLATE_FOR,
    ActionKind,
    ReasoningState,
    Step,
    action_slots,
    apply_action,
    is_terminal,
    parse_sql,
    render_history,
    valid_actions,
)
from .mcts import (
    CandidateTrajectory,
    MctsSearch,
    SearchConfig,
    SearchError,
    SearchResult,
    agreement_rate,
    evaluate_reward,
    render_hints,
    run_search,
)
from .tree import SearchNode, backpropagate, select_uct, uct_value

__all__ = [
    "ALL_ACTIONS",
    "STOP",
    "TEMPLATE_FOR",
    "ActionKind",
    "CandidateTrajectory",
    "MctsSearch",
    "ReasoningState",
    "SearchConfig",
    "SearchError",
    "SearchNode",
    "SearchResult",
    "Step",
    "action_slots",
    "agreement_rate",
    "apply_action",
    "backpropagate",
    "evaluate_reward",
    "is_terminal",
    "parse_sql",
    "render_hints",
    "render_history",
    "run_search",
    "select_uct",
    "uct_value",
    "valid_actions",
]
