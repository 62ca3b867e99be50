"""Masking-and-completion verification and composite-score trajectory selection."""

from __future__ import annotations

import logging
import random
from collections.abc import Sequence
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

from ..core.dataset import DbHandle
from ..core.normalize import ComparePolicy
from ..core.seeds import derive_seed
from ..llm.gateway import Gateway, GatewayError, ModelRole
from ..search.actions import parse_sql, render_history
from ..search.mcts import CandidateTrajectory
from ..sqlexec.compare import order_sensitive, results_equal
from ..sqlexec.execute import ExecOutcome, SqlRunner

log = logging.getLogger(__name__)

FILTER_POLICIES = ("any", "first", "none")
EXEC_MODES = ("executable", "oracle")
COMPLETION_TEMPLATE = "discriminator-completion"


@dataclass(frozen=True)
class SelectionConfig:
    alpha: float = 0.4
    beta: float = 0.2
    gamma: float = 0.4
    n_probes: int = 3
    probe_seed: int = 0
    filter_policy: str = "any"
    exec_mode: str = "executable"

    def __post_init__(self) -> None:
        weights = (self.alpha, self.beta, self.gamma)
        if any(w < 0 for w in weights):
            raise ValueError("selection weights must be non-negative")
        if abs(sum(weights) - 1.0) > 1e-9:
            raise ValueError(f"selection weights must sum to 1, got {sum(weights)}")
        if self.n_probes < 1:
            raise ValueError("n_probes must be at least 1")
        if self.filter_policy not in FILTER_POLICIES:
            raise ValueError(f"filter_policy must be one of {FILTER_POLICIES}")
        if self.exec_mode not in EXEC_MODES:
            raise ValueError(f"exec_mode must be one of {EXEC_MODES}")


@dataclass(frozen=True)
class MaskProbe:
    mask_index: int
    completion: str = ""
    sql: str | None = None
    failed: bool = False
    error: str = ""
    consistent: bool = False

    def to_dict(self) -> dict[str, Any]:
        return {
            "mask_index": self.mask_index,
            "sql": self.sql,
            "failed": self.failed,
            "error": self.error,
            "consistent": self.consistent,
        }


@dataclass(frozen=True)
class TrajectoryScore:
    exec: float
    disc_conf: float
    cons_vote: float
    total: float

    @classmethod
    def combine(cls, exec_: float, disc: float, vote: float, config: SelectionConfig) -> TrajectoryScore:
        return cls(exec_, disc, vote, config.alpha * exec_ + config.beta * disc + config.gamma * vote)


def mask_and_complete(
    trajectory: CandidateTrajectory,
    i: int,
    gateway: Gateway,
    *,
    question_text: str,
    schema_doc: str,
    question_id: str | None = None,
    seed: int = 0,
) -> MaskProbe:
    """Keep steps 1..i-1, ask the discriminator to finish, and parse its SQL."""
    if not 1 <= i < max(2, trajectory.depth):
        raise ValueError(f"mask index {i} outside [1, {trajectory.depth - 1}]")
    slots = {
        "question": question_text,
        "schema": schema_doc,
        "prefix": render_history(trajectory.steps[: i - 1]),
    }
    params = gateway.default_params(ModelRole.DISCRIMINATOR, seed=seed)
    try:
        completion = gateway.complete(
            ModelRole.DISCRIMINATOR, COMPLETION_TEMPLATE, slots, params, question_id=question_id, stage="selection"
        )
    except GatewayError as exc:
        return MaskProbe(i, failed=True, error=f"gateway: {exc}")
    text = completion.texts[0]
    sql = parse_sql(text)
    if sql is None:
        return MaskProbe(i, text, failed=True, error="no SQL in completion")
    return MaskProbe(i, text, sql)


def same_result(a: ExecOutcome, b: ExecOutcome, sql_a: str, sql_b: str, policy: ComparePolicy) -> bool:
    if not (a.ok and b.ok):
        return False
    ordered = order_sensitive(sql_a) and order_sensitive(sql_b)
    return results_equal(a.rows, b.rows, policy.with_order(ordered))


def judge_consistency(
    probe: MaskProbe, original: CandidateTrajectory, runner: SqlRunner, policy: ComparePolicy | None = None
) -> bool:
    if probe.failed or probe.sql is None:
        return False
    policy = policy or runner.policy
    return same_result(runner(probe.sql), runner(original.sql), probe.sql, original.sql, policy)


def probe_indices(depth: int, n_probes: int, rng: random.Random) -> list[int]:
    """Mask indices drawn uniformly with replacement from [1, depth - 1]."""
    return [rng.randint(1, depth - 1) for _ in range(n_probes)]


def disc_conf(probes: Sequence[MaskProbe], depth: int) -> float:
    if depth < 2:
        return 1.0
    if not probes:
        return 0.0
    return sum(1 for p in probes if p.consistent) / len(probes)


def cluster_by_result(
    candidates: Sequence[CandidateTrajectory], runner: SqlRunner, policy: ComparePolicy | None = None
) -> list[int]:
    """Cluster id per candidate; failing candidates get singleton clusters."""
    policy = policy or runner.policy
    reps: list[int] = []
    labels: list[int] = []
    outcomes = [runner(c.sql) for c in candidates]
    for i, (cand, out) in enumerate(zip(candidates, outcomes)):
        label = -1
        if out.ok:
            for cid, r in enumerate(reps):
                if same_result(out, outcomes[r], cand.sql, candidates[r].sql, policy):
                    label = cid
                    break
        if label < 0:
            label = len(reps)
            reps.append(i)
        labels.append(label)
    return labels


def cons_vote(
    candidates: Sequence[CandidateTrajectory], runner: SqlRunner, policy: ComparePolicy | None = None
) -> list[float]:
    """Multiplicity-weighted share of the candidate's result cluster."""
    if not candidates:
        return []
    labels = cluster_by_result(candidates, runner, policy)
    total = sum(c.multiplicity for c in candidates)
    mass: dict[int, int] = {}
    for c, lab in zip(candidates, labels):
        mass[lab] = mass.get(lab, 0) + c.multiplicity
    return [mass[lab] / total for lab in labels]


def exec_signal(
    trajectory: CandidateTrajectory,
    runner: SqlRunner,
    *,
    mode: str = "executable",
    gold: tuple[str, ExecOutcome] | None = None,
) -> float:
    """1 if the SQL executes; in oracle mode, 1 only if it also matches the gold result."""
    out = runner(trajectory.sql)
    if not out.ok:
        if out.kind == "timeout":
            log.info("exec signal: timeout for %s", trajectory.sql[:60])
        return 0.0
    if mode == "oracle":
        if gold is None:
            raise ValueError("oracle exec mode needs a gold result")
        gold_sql, gold_out = gold
        return 1.0 if gold_out.ok and results_equal(
            out.rows, gold_out.rows, runner.policy.with_order(order_sensitive(gold_sql))
        ) else 0.0
    return 1.0


def select_best(candidates: Sequence[CandidateTrajectory], scores: Sequence[TrajectoryScore]) -> int:
    """Index of the argmax total; ties by higher reward, shorter SQL, lower index."""
    if not candidates:
        raise ValueError("no candidates to select from")
    return min(
        range(len(candidates)),
        key=lambda i: (-scores[i].total, -candidates[i].reward, len(candidates[i].sql), i),
    )


@dataclass
class SelectionResult:
    chosen: CandidateTrajectory | None
    chosen_index: int | None
    scores: list[TrajectoryScore] = field(default_factory=list)
    probes: list[list[MaskProbe]] = field(default_factory=list)
    retained: list[int] = field(default_factory=list)
    filter_fallback: bool = False
    diagnostics: list[str] = field(default_factory=list)

    @property
    def sql(self) -> str | None:
        return self.chosen.sql if self.chosen else None

    def trace(self, candidates: Sequence[CandidateTrajectory]) -> dict[str, Any]:
        return {
            "chosen_index": self.chosen_index,
            "chosen_sql": self.sql,
            "filter_fallback": self.filter_fallback,
            "retained": list(self.retained),
            "diagnostics": list(self.diagnostics),
            "candidates": [
                {
                    "sql": c.sql,
                    "reward": c.reward,
                    "multiplicity": c.multiplicity,
                    "exec": s.exec,
                    "disc_conf": s.disc_conf,
                    "cons_vote": s.cons_vote,
                    "total": s.total,
                    "probes": [p.to_dict() for p in ps],
                }
                for c, s, ps in zip(candidates, self.scores, self.probes)
            ],
        }


def _passes(probes: Sequence[MaskProbe], depth: int, policy: str) -> bool:
    if policy == "none" or depth < 2:
        return True
    if policy == "first":
        return bool(probes) and probes[0].consistent
    return any(p.consistent for p in probes)


def run_selection(
    candidates: Sequence[CandidateTrajectory],
    config: SelectionConfig,
    gateway: Gateway,
    db: DbHandle | Path | str,
    *,
    question_id: str,
    question_text: str,
    schema_doc: str,
    policy: ComparePolicy | None = None,
    timeout_ms: int = 30_000,
    gold_sql: str | None = None,
    runner: SqlRunner | None = None,
) -> SelectionResult:
    if not candidates:
        return SelectionResult(None, None, diagnostics=["no candidates: no answer"])
    runner = runner or SqlRunner(db, timeout_ms, policy)
    policy = policy or runner.policy
    gold = (gold_sql, runner(gold_sql)) if config.exec_mode == "oracle" and gold_sql else None
    if config.exec_mode == "oracle" and gold is None:
        raise ValueError("oracle exec mode needs gold_sql")

    all_probes: list[list[MaskProbe]] = []
    for cand in candidates:
        rng = random.Random(derive_seed(config.probe_seed, question_id, "mask", cand.sql))
        probes: list[MaskProbe] = []
        if cand.depth >= 2:
            for k, i in enumerate(probe_indices(cand.depth, config.n_probes, rng)):
                probe = mask_and_complete(
                    cand,
                    i,
                    gateway,
                    question_text=question_text,
                    schema_doc=schema_doc,
                    question_id=question_id,
                    seed=derive_seed(config.probe_seed, question_id, "probe", cand.sql, k),
                )
                ok = judge_consistency(probe, cand, runner, policy)
                probes.append(MaskProbe(probe.mask_index, probe.completion, probe.sql, probe.failed, probe.error, ok))
        else:
            log.info("trajectory of depth %d: disc_conf set to 1", cand.depth)
        all_probes.append(probes)

    votes = cons_vote(candidates, runner, policy)
    scores = [
        TrajectoryScore.combine(
            exec_signal(c, runner, mode=config.exec_mode, gold=gold),
            disc_conf(ps, c.depth),
            v,
            config,
        )
        for c, ps, v in zip(candidates, all_probes, votes)
    ]
    retained = [i for i, (c, ps) in enumerate(zip(candidates, all_probes)) if _passes(ps, c.depth, config.filter_policy)]
    result = SelectionResult(None, None, scores, all_probes, retained)
    if not retained:
        retained = list(range(len(candidates)))
        result.filter_fallback = True
        result.diagnostics.append("consistency filter removed every candidate; using all")
    pick = select_best([candidates[i] for i in retained], [scores[i] for i in retained])
    result.chosen_index = retained[pick]
    result.chosen = candidates[result.chosen_index]
    return result
