from .compare import order_sensitive, results_equal
from .ex import ExResult, Verdict, compute_ex, judge_case
from .execute import DEFAULT_TIMEOUT_MS, ExecOutcome, ResultTable, SqlRunner, execute

__all__ = [
    "DEFAULT_TIMEOUT_MS",
    "ExResult",
    "ExecOutcome",
    "ResultTable",
    "SqlRunner",
    "Verdict",
    "compute_ex",
    "execute",
    "judge_case",
    "order_sensitive",
    "results_equal",
]
