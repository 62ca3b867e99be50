"""Search tree nodes, UCT scoring and backpropagation."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any

from .actions import ActionKind, ReasoningState

Action = ActionKind | str


def action_key(action: Action) -> str:
    return action.value if isinstance(action, ActionKind) else str(action)


@dataclass(eq=False)
class SearchNode:
    state: ReasoningState
    parent: SearchNode | None = None
    action: Action | None = None
    node_id: int = 0
    children: dict[str, SearchNode] = field(default_factory=dict)
    n_visits: dict[str, int] = field(default_factory=dict)
    q_values: dict[str, float] = field(default_factory=dict)
    terminal: bool = False

    @property
    def n_total(self) -> int:
        return sum(self.n_visits.values())

    def n(self, action: Action) -> int:
        return self.n_visits.get(action_key(action), 0)

    def q(self, action: Action) -> float:
        return self.q_values.get(action_key(action), 0.0)

    def add_child(self, action: Action, child: SearchNode) -> SearchNode:
        key = action_key(action)
        if key in self.children:
            raise ValueError(f"action {key} already expanded")
        if self.terminal:
            raise ValueError("terminal nodes have no children")
        child.parent, child.action = self, action
        self.children[key] = child
        self.n_visits.setdefault(key, 0)
        self.q_values.setdefault(key, 0.0)
        return child

    def to_dict(self) -> dict[str, Any]:
        return {
            "id": self.node_id,
            "action": action_key(self.action) if self.action is not None else None,
            "depth": self.state.depth,
            "terminal": self.terminal,
            "degenerate": self.state.degenerate,
            "sql": self.state.draft_sql,
            "N": dict(self.n_visits),
            "Q": dict(self.q_values),
            "children": [c.to_dict() for c in self.children.values()],
        }


def uct_value(node: SearchNode, action: Action, c: float) -> float:
    """Q/max(1, N(v,a)) + c * sqrt(ln max(1, N(v)) / max(1, N(v,a)))."""
    n_a = max(1, node.n(action))
    n_v = max(1, node.n_total)
    return node.q(action) / n_a + c * math.sqrt(math.log(n_v) / n_a)


def select_uct(node: SearchNode, actions: list[Action], c: float) -> Action:
    """Unvisited actions first (in order); otherwise argmax UCT, first on ties."""
    for a in actions:
        if node.n(a) == 0:
            return a
    best, best_val = actions[0], -math.inf
    for a in actions:
        val = uct_value(node, a, c)
        if val > best_val:
            best, best_val = a, val
    return best


def backpropagate(path: list[tuple[SearchNode, Action]], reward: float) -> None:
    if not 0.0 <= reward <= 1.0:
        raise ValueError(f"reward {reward} outside [0, 1]")
    for node, action in path:
        key = action_key(action)
        node.n_visits[key] = node.n_visits.get(key, 0) + 1
        node.q_values[key] = node.q_values.get(key, 0.0) + reward


def iter_nodes(root: SearchNode):
    stack = [root]
    while stack:
        node = stack.pop()
        yield node
        stack.extend(reversed(list(node.children.values())))
