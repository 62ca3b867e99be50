from __future__ import annotations

from dataclasses import asdict, dataclass, field

from .gateway import STAGES, ModelRole, UsageLedger


@dataclass
class CostLine:
    calls: int = 0
    prompt_tokens: int = 0
    gen_tokens: int = 0
    avg_calls: float = 0.0
    avg_prompt_tokens: float = 0.0
    avg_gen_tokens: float = 0.0


@dataclass
class CostReport:
    question_count: int
    by_stage: dict[str, CostLine] = field(default_factory=dict)
    by_role: dict[str, CostLine] = field(default_factory=dict)
    total: CostLine = field(default_factory=CostLine)

    def to_dict(self) -> dict:
        return asdict(self)


def _line(calls: int, prompt: int, gen: int, n: int) -> CostLine:
    return CostLine(calls, prompt, gen, calls / n, prompt / n, gen / n)


def report_costs(ledger: UsageLedger, question_count: int) -> CostReport:
    """Totals and per-question averages by stage and by role."""
    if question_count <= 0:
        raise ValueError("question_count must be positive")
    report = CostReport(question_count)
    for stage in STAGES:
        c = ledger.by_stage.get(stage)
        report.by_stage[stage] = _line(c.calls, c.prompt_tokens, c.gen_tokens, question_count) if c else CostLine()
    for role in ModelRole:
        c = ledger.by_role.get(role.value)
        report.by_role[role.value] = _line(c.calls, c.prompt_tokens, c.gen_tokens, question_count) if c else CostLine()
    t = ledger.total()
    report.total = _line(t.calls, t.prompt_tokens, t.gen_tokens, question_count)
    return report
