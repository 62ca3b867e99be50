"""Read-only, time-limited SQL execution."""

from __future__ import annotations

import sqlite3
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Any

from ..core.dataset import DbHandle, connect_readonly
from ..core.normalize import ComparePolicy, NormalizedValue, normalize_cell

DEFAULT_TIMEOUT_MS = 30_000

_READ_ACTIONS = {
    sqlite3.SQLITE_SELECT,
    sqlite3.SQLITE_READ,
    sqlite3.SQLITE_FUNCTION,
    sqlite3.SQLITE_RECURSIVE,
}
_SYNTAX_MARKERS = ("syntax error", "incomplete input", "unrecognized token")


@dataclass(frozen=True)
class ResultTable:
    rows: tuple[tuple[NormalizedValue, ...], ...]
    n_cols: int

    def __post_init__(self) -> None:
        for row in self.rows:
            if len(row) != self.n_cols:
                raise ValueError("result table is not rectangular")

    @classmethod
    def from_raw(cls, rows: list[tuple[Any, ...]], n_cols: int, policy: ComparePolicy) -> ResultTable:
        return cls(tuple(tuple(normalize_cell(v, policy) for v in row) for row in rows), n_cols)

    def __len__(self) -> int:
        return len(self.rows)


@dataclass(frozen=True)
class ExecOutcome:
    """Either ``rows`` (kind == "rows") or an error kind with a message."""

    kind: str
    rows: ResultTable | None = None
    message: str = ""
    elapsed_ms: float = 0.0
    timeout_ms: int | None = None

    @property
    def ok(self) -> bool:
        return self.kind == "rows"


def _authorizer(action: int, *_args: Any) -> int:
    return sqlite3.SQLITE_OK if action in _READ_ACTIONS else sqlite3.SQLITE_DENY


def _classify(exc: sqlite3.Error) -> str:
    msg = str(exc).lower()
    if any(m in msg for m in _SYNTAX_MARKERS):
        return "syntax"
    return "runtime"


def execute(
    sql: str,
    db: DbHandle | Path | str,
    timeout_ms: int = DEFAULT_TIMEOUT_MS,
    policy: ComparePolicy | None = None,
) -> ExecOutcome:
    policy = policy or ComparePolicy()
    path = db.path if isinstance(db, DbHandle) else Path(db)
    if not path.is_file():
        raise FileNotFoundError(f"database not available: {path}")
    if not sql or not sql.strip():
        return ExecOutcome("runtime", message="empty SQL")

    start = time.perf_counter()
    deadline = start + timeout_ms / 1000.0
    timed_out = False

    def progress() -> int:
        nonlocal timed_out
        if time.perf_counter() > deadline:
            timed_out = True
            return 1
        return 0

    conn = connect_readonly(path)
    try:
        conn.set_authorizer(_authorizer)
        conn.set_progress_handler(progress, 1000)
        try:
            cur = conn.execute(sql)
            raw = cur.fetchall()
            n_cols = len(cur.description) if cur.description else 0
        except sqlite3.Error as exc:
            elapsed = (time.perf_counter() - start) * 1000
            if timed_out:
                return ExecOutcome("timeout", message=f"exceeded {timeout_ms} ms", elapsed_ms=elapsed, timeout_ms=timeout_ms)
            return ExecOutcome(_classify(exc), message=str(exc), elapsed_ms=elapsed)
        except (sqlite3.Warning, ValueError) as exc:
            # e.g. multiple statements in one string
            return ExecOutcome("runtime", message=str(exc), elapsed_ms=(time.perf_counter() - start) * 1000)
    finally:
        conn.close()
    elapsed = (time.perf_counter() - start) * 1000
    return ExecOutcome("rows", ResultTable.from_raw(raw, n_cols, policy), elapsed_ms=elapsed)


class SqlRunner:
    """Per-worker executor that memoizes outcomes by SQL text.

    Safe because databases are opened read-only.
    """

    def __init__(self, db: DbHandle | Path | str, timeout_ms: int = DEFAULT_TIMEOUT_MS, policy: ComparePolicy | None = None):
        self.db = db
        self.timeout_ms = timeout_ms
        self.policy = policy or ComparePolicy()
        self._memo: dict[str, ExecOutcome] = {}
        self.executions = 0

    def __call__(self, sql: str) -> ExecOutcome:
        key = sql.strip()
        outcome = self._memo.get(key)
        if outcome is None:
            outcome = execute(key, self.db, self.timeout_ms, self.policy)
            self._memo[key] = outcome
            self.executions += 1
        return outcome
