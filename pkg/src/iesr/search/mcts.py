"""Monte Carlo tree search over reasoning actions with execution-agreement rewards."""

from __future__ import annotations

import logging
import math
import random
from collections.abc import Callable, Sequence
from dataclasses import dataclass, field
from pathlib import Path
from typing import TYPE_CHECKING, Any

from ..core.dataset import DbHandle
from ..core.normalize import ComparePolicy
from ..core.seeds import derive_seed
from ..llm.gateway import Gateway, ModelRole
from ..sqlexec.compare import order_sensitive, results_equal
from ..sqlexec.execute import ExecOutcome, SqlRunner
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
    stop,
    valid_actions,
)
from .tree import Action, SearchNode, action_key, backpropagate, iter_nodes, select_uct

if TYPE_CHECKING:
    from ..understanding.pipeline import ValidatedState

log = logging.getLogger(__name__)

ROLLOUT_POLICIES = ("uniform", "softmax_uct")


class SearchError(RuntimeError):
    pass


@dataclass(frozen=True)
class SearchConfig:
    n_rollout: int = 32
    c: float = 1.414
    t_samp: float = 0.8
    d_max: int = 8
    n_agreement: int = 4
    rollout_policy: str = "uniform"
    seed: int = 0
    enabled_actions: tuple[str, ...] = tuple(a.value for a in ALL_ACTIONS)

    def __post_init__(self) -> None:
        if self.n_rollout < 1:
            raise ValueError("n_rollout must be at least 1")
        if self.c < 0:
            raise ValueError("exploration constant must be non-negative")
        if self.n_agreement < 1:
            raise ValueError("n_agreement must be at least 1")
        if self.d_max < 2:
            raise ValueError("d_max must allow at least two steps")
        if self.t_samp < 0:
            raise ValueError("t_samp must be non-negative")
        if self.rollout_policy not in ROLLOUT_POLICIES:
            raise ValueError(f"rollout_policy must be one of {ROLLOUT_POLICIES}")
        if ActionKind.A5.value not in self.enabled_actions:
            raise ValueError("A5 (SQL generation) cannot be disabled")

    @property
    def enabled(self) -> frozenset[ActionKind]:
        return frozenset(ActionKind(a) for a in self.enabled_actions)


@dataclass
class CandidateTrajectory:
    steps: tuple[Step, ...]
    sql: str
    reward: float
    multiplicity: int = 1
    rewards: list[float] = field(default_factory=list)
    first_rollout: int = 0

    def __post_init__(self) -> None:
        if not 0.0 <= self.reward <= 1.0:
            raise ValueError("reward outside [0, 1]")
        if not self.rewards:
            self.rewards = [self.reward]

    @property
    def depth(self) -> int:
        return len(self.steps)

    def add_occurrence(self, reward: float) -> None:
        self.rewards.append(reward)
        self.multiplicity += 1
        self.reward = sum(self.rewards) / len(self.rewards)

    def to_dict(self) -> dict[str, Any]:
        return {
            "sql": self.sql,
            "reward": self.reward,
            "rewards": list(self.rewards),
            "multiplicity": self.multiplicity,
            "first_rollout": self.first_rollout,
            "steps": [s.summary() for s in self.steps],
        }


@dataclass
class SearchResult:
    candidates: list[CandidateTrajectory]
    root: SearchNode
    rollouts: int
    degenerate_rollouts: int = 0
    nonterminal_rollouts: int = 0
    diagnostics: list[str] = field(default_factory=list)

    def trace(self) -> dict[str, Any]:
        return {
            "rollouts": self.rollouts,
            "degenerate_rollouts": self.degenerate_rollouts,
            "nonterminal_rollouts": self.nonterminal_rollouts,
            "diagnostics": list(self.diagnostics),
            "candidates": [c.to_dict() for c in self.candidates],
            "tree": self.root.to_dict(),
        }


def agreement_rate(agreements: Sequence[bool]) -> float:
    """Fraction of agreeing samples."""
    if not agreements:
        raise ValueError("need at least one sample")
    return sum(1 for a in agreements if a) / len(agreements)


def outcomes_agree(ref: ExecOutcome, other: ExecOutcome, policy: ComparePolicy, ordered: bool) -> bool:
    if not (ref.ok and other.ok):
        return False
    return results_equal(ref.rows, other.rows, policy.with_order(ordered))


def evaluate_reward(
    sql: str,
    samples: Sequence[str | None],
    run: Callable[[str], ExecOutcome],
    policy: ComparePolicy | None = None,
) -> float:
    """0 if ``sql`` fails; otherwise the share of samples whose result equals its result.

    Unparseable (None) or failing samples count as disagreement.
    """
    policy = policy or ComparePolicy()
    ref = run(sql)
    if not ref.ok:
        return 0.0
    ordered = order_sensitive(sql)
    return agreement_rate([s is not None and outcomes_agree(ref, run(s), policy, ordered) for s in samples])


def render_hints(validated: ValidatedState | None) -> str:
    if validated is None:
        return "(none)"
    lines = [f"- relation: {r.text}" + (f" [unit {r.implied_unit}]" if r.implied_unit else "") for r in validated.r_high]
    lines += [f"- entity: {e.surface} -> {e.mention}" for e in validated.state.entities if e.mention]
    lines += [f"- unit: {u.symbol} ({u.dimension})" for u in validated.state.units if u.dimension]
    lines += [f"- field: {p}" for p in validated.state.patterns]
    return "\n".join(lines) if lines else "(none)"


def execution_feedback(outcome: ExecOutcome) -> str:
    if outcome.ok:
        preview = ", ".join(str(tuple(v.to_python() for v in row)) for row in outcome.rows.rows[:3])
        return f"executed; {len(outcome.rows)} row(s){': ' + preview if preview else ''}"
    return f"{outcome.kind} error: {outcome.message}"


class MctsSearch:
    """One search per question; sequential rollouts for bit-exact replay."""

    def __init__(
        self,
        question_id: str,
        question_text: str,
        schema_doc: str,
        config: SearchConfig,
        gateway: Gateway,
        db: DbHandle | Path | str,
        *,
        hints: str = "(none)",
        policy: ComparePolicy | None = None,
        timeout_ms: int = 30_000,
    ):
        path = db.path if isinstance(db, DbHandle) else Path(db)
        if not path.is_file():
            raise SearchError(f"database unavailable: {path}")
        self.qid = question_id
        self.config = config
        self.gateway = gateway
        self.policy = policy or ComparePolicy()
        self.runner = SqlRunner(db, timeout_ms, self.policy)
        self.rng = random.Random(derive_seed(config.seed, question_id, "policy"))
        self._calls = 0
        self._node_ids = 0
        self.global_n: dict[str, int] = {}
        self.global_q: dict[str, float] = {}
        self.root = SearchNode(ReasoningState(question_text, schema_doc, hints))

    def _seed(self) -> int:
        self._calls += 1
        return derive_seed(self.config.seed, self.qid, self._calls)

    def _actions(self, state: ReasoningState) -> list[Action]:
        return valid_actions(state, self.config.d_max, self.config.enabled)

    def step(self, state: ReasoningState, action: Action) -> ReasoningState:
        if action == STOP:
            return stop(state)
        action = ActionKind(action)
        feedback = ""
        if action is ActionKind.A6 and state.draft_sql:
            feedback = execution_feedback(self.runner(state.draft_sql))
        slots = action_slots(state, action, feedback)
        params = self.gateway.default_params(ModelRole.REASONER, seed=self._seed())
        completion = self.gateway.complete(
            ModelRole.REASONER, TEMPLATE_FOR[action], slots, params, question_id=self.qid, stage="search"
        )
        return apply_action(state, action, slots, completion.texts[0])

    def _new_node(self, state: ReasoningState) -> SearchNode:
        self._node_ids += 1
        return SearchNode(state, node_id=self._node_ids, terminal=is_terminal(state, self.config.d_max))

    def _rollout_choice(self, actions: list[Action]) -> Action:
        if self.config.rollout_policy == "uniform" or len(actions) == 1:
            return self.rng.choice(actions)
        total = max(1, sum(self.global_n.values()))
        values = []
        for a in actions:
            n = self.global_n.get(action_key(a), 0)
            if n == 0:
                values.append(math.inf)
            else:
                values.append(self.global_q[action_key(a)] / n + self.config.c * math.sqrt(math.log(total) / n))
        fresh = [a for a, v in zip(actions, values) if v == math.inf]
        if fresh:
            return self.rng.choice(fresh)
        if self.config.t_samp == 0:
            return actions[values.index(max(values))]
        top = max(values)
        weights = [math.exp((v - top) / self.config.t_samp) for v in values]
        return self.rng.choices(actions, weights=weights, k=1)[0]

    def simulate(self, state: ReasoningState) -> tuple[ReasoningState, bool]:
        while not is_terminal(state, self.config.d_max):
            actions = self._actions(state)
            if not actions:
                break
            state = self.step(state, self._rollout_choice(actions))
        return state, is_terminal(state, self.config.d_max)

    def reward(self, state: ReasoningState) -> float:
        sql = state.draft_sql
        step = state.sql_step()
        if sql is None or step is None:
            return 0.0
        if not self.runner(sql).ok:
            return 0.0
        params = self.gateway.default_params(
            ModelRole.REASONER,
            seed=self._seed(),
            temperature=self.config.t_samp,
            n_samples=self.config.n_agreement,
        )
        completion = self.gateway.complete(
            ModelRole.REASONER, step.template_id, step.slots, params, question_id=self.qid, stage="search"
        )
        return evaluate_reward(sql, [parse_sql(t) for t in completion.texts], self.runner, self.policy)

    def run(self) -> SearchResult:
        candidates: dict[str, CandidateTrajectory] = {}
        degenerate = nonterminal = 0
        for m in range(self.config.n_rollout):
            node, path = self.root, []
            while not node.terminal:
                actions = self._actions(node.state)
                if not actions or any(action_key(a) not in node.children for a in actions):
                    break
                a = select_uct(node, actions, self.config.c)
                path.append((node, a))
                node = node.children[action_key(a)]
            if not node.terminal:
                untried = [a for a in self._actions(node.state) if action_key(a) not in node.children]
                if untried:
                    a = self.rng.choice(untried)
                    child = node.add_child(a, self._new_node(self.step(node.state, a)))
                    path.append((node, a))
                    node = child
            final, terminal = self.simulate(node.state)
            r = 0.0
            if terminal:
                r = self.reward(final)
                sql = final.draft_sql
                if sql in candidates:
                    candidates[sql].add_occurrence(r)
                else:
                    candidates[sql] = CandidateTrajectory(final.steps, sql, r, first_rollout=m)
            elif final.degenerate:
                degenerate += 1
            else:
                nonterminal += 1
            backpropagate(path, r)
            for _, a in path:
                key = action_key(a)
                self.global_n[key] = self.global_n.get(key, 0) + 1
                self.global_q[key] = self.global_q.get(key, 0.0) + r
        result = SearchResult(list(candidates.values()), self.root, self.config.n_rollout, degenerate, nonterminal)
        if not result.candidates:
            result.diagnostics.append("no terminal SQL trajectory in any rollout")
        return result


def run_search(
    question_id: str,
    question_text: str,
    schema_doc: str,
    validated: ValidatedState | None,
    config: SearchConfig,
    gateway: Gateway,
    db: DbHandle | Path | str,
    *,
    policy: ComparePolicy | None = None,
    timeout_ms: int = 30_000,
) -> SearchResult:
    search = MctsSearch(
        question_id,
        question_text,
        schema_doc,
        config,
        gateway,
        db,
        hints=render_hints(validated),
        policy=policy,
        timeout_ms=timeout_ms,
    )
    return search.run()


def tree_nodes(result: SearchResult) -> list[SearchNode]:
    return list(iter_nodes(result.root))
