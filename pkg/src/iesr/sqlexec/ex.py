"""Execution accuracy (EX)."""

from __future__ import annotations

from dataclasses import asdict, dataclass, field
from pathlib import Path

from ..core.dataset import DbHandle
from ..core.normalize import ComparePolicy
from .compare import order_sensitive, results_equal
from .execute import DEFAULT_TIMEOUT_MS, ExecOutcome, SqlRunner, execute


@dataclass
class Verdict:
    index: int
    correct: bool
    pred_status: str
    gold_status: str
    invalid_gold: bool = False
    message: str = ""

    @property
    def tag(self) -> str:
        if self.invalid_gold:
            return "invalid_gold"
        if self.correct:
            return "correct"
        if self.pred_status == "no_answer":
            return "no_answer"
        if self.pred_status != "rows":
            return f"pred_{self.pred_status}"
        return "wrong_result"


@dataclass
class ExResult:
    ex: float
    correct: int
    total: int
    verdicts: list[Verdict] = field(default_factory=list)

    @property
    def invalid_gold(self) -> list[int]:
        return [v.index for v in self.verdicts if v.invalid_gold]

    def to_dict(self) -> dict:
        return {
            "ex": self.ex,
            "correct": self.correct,
            "total": self.total,
            "invalid_gold": self.invalid_gold,
            "verdicts": [asdict(v) | {"tag": v.tag} for v in self.verdicts],
        }


DbRef = DbHandle | Path | str


def judge_case(
    pred_sql: str | None,
    gold_sql: str,
    db: DbRef,
    policy: ComparePolicy,
    timeout_ms: int = DEFAULT_TIMEOUT_MS,
    index: int = 0,
    runner: SqlRunner | None = None,
    pred_db: DbRef | None = None,
) -> Verdict:
    run = runner or (lambda sql: execute(sql, db, timeout_ms, policy))
    run_pred = run if pred_db is None else (lambda sql: execute(sql, pred_db, timeout_ms, policy))
    gold: ExecOutcome = run(gold_sql)
    if not gold.ok:
        return Verdict(index, False, "skipped", gold.kind, invalid_gold=True, message=gold.message)
    if not pred_sql or not pred_sql.strip():
        return Verdict(index, False, "no_answer", "rows")
    pred = run_pred(pred_sql)
    if not pred.ok:
        return Verdict(index, False, pred.kind, "rows", message=pred.message)
    equal = results_equal(pred.rows, gold.rows, policy.with_order(order_sensitive(gold_sql)))
    return Verdict(index, equal, "rows", "rows")


def compute_ex(
    predictions: list[tuple[str | None, DbRef]],
    golds: list[tuple[str, DbRef]],
    policy: ComparePolicy | None = None,
    timeout_ms: int = DEFAULT_TIMEOUT_MS,
) -> ExResult:
    """EX = 100 * correct / valid cases. Cases with failing gold SQL are excluded."""
    if len(predictions) != len(golds):
        raise ValueError("predictions and golds must be aligned")
    policy = policy or ComparePolicy()
    verdicts = [
        judge_case(pred_sql, gold_sql, gold_db, policy, timeout_ms, index=i, pred_db=pred_db)
        for i, ((pred_sql, pred_db), (gold_sql, gold_db)) in enumerate(zip(predictions, golds))
    ]
    valid = [v for v in verdicts if not v.invalid_gold]
    correct = sum(v.correct for v in valid)
    ex = 100.0 * correct / len(valid) if valid else 0.0
    return ExResult(ex, correct, len(valid), verdicts)
