"""Dataset loading and database registry."""

from __future__ import annotations

import json
import logging
import sqlite3
import threading
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Iterator

from .types import ColumnDef, DatabaseSchema, EvalCase, ForeignKey, Question, TableDef

log = logging.getLogger(__name__)

# BIRD difficulty labels mapped onto ours.
_DIFFICULTY_ALIASES = {
    "simple": "easy",
    "easy": "easy",
    "moderate": "medium",
    "medium": "medium",
    "challenging": "hard",
    "hard": "hard",
    "extra": "hard",
}


class DatasetError(Exception):
    pass


def sqlite_value_type(declared: str) -> str:
    decl = (declared or "").upper()
    if "BOOL" in decl:
        return "boolean"
    if "INT" in decl:
        return "integer"
    if any(k in decl for k in ("REAL", "FLOA", "DOUB", "NUMERIC", "DECIMAL")):
        return "real"
    if "DATE" in decl or "TIME" in decl:
        return "datetime"
    return "text"


def _conforms(value: Any, value_type: str) -> bool:
    if value_type == "integer":
        return isinstance(value, int) and not isinstance(value, bool)
    if value_type == "real":
        return isinstance(value, (int, float)) and not isinstance(value, bool)
    if value_type == "boolean":
        return value in (0, 1, True, False)
    return isinstance(value, str)


def meta_path(db_path: Path) -> Path:
    return db_path.with_suffix(".meta.json")


def connect_readonly(db_path: Path, timeout: float = 5.0) -> sqlite3.Connection:
    uri = f"file:{Path(db_path).resolve().as_posix()}?mode=ro"
    return sqlite3.connect(uri, uri=True, timeout=timeout, check_same_thread=False)


def introspect_schema(db_path: Path, db_id: str | None = None) -> DatabaseSchema:
    """Read tables, columns, keys and example values from a database file.

    Column descriptions and units come from the optional
    ``<db_id>.meta.json`` sidecar next to the database file.
    """
    db_path = Path(db_path)
    db_id = db_id or db_path.stem
    meta: dict[str, Any] = {}
    if meta_path(db_path).exists():
        meta = json.loads(meta_path(db_path).read_text(encoding="utf-8"))
    table_meta = meta.get("tables", {})

    conn = connect_readonly(db_path)
    try:
        names = [
            r[0]
            for r in conn.execute(
                "SELECT name FROM sqlite_master WHERE type='table' "
                "AND name NOT LIKE 'sqlite_%' ORDER BY rowid"
            )
        ]
        tables: list[TableDef] = []
        fks: list[ForeignKey] = []
        for tname in names:
            tmeta = table_meta.get(tname, {})
            cmeta = tmeta.get("columns", {})
            cols = []
            for _, cname, ctype, _, _, pk in conn.execute(f'PRAGMA table_info("{tname}")'):
                vtype = sqlite_value_type(ctype)
                examples = []
                for (v,) in conn.execute(
                    f'SELECT DISTINCT "{cname}" FROM "{tname}" WHERE "{cname}" IS NOT NULL LIMIT 3'
                ):
                    if _conforms(v, vtype):
                        examples.append(v)
                info = cmeta.get(cname, {})
                cols.append(
                    ColumnDef(
                        name=cname,
                        value_type=info.get("type", vtype),
                        description=info.get("description", ""),
                        examples=tuple(examples),
                        primary_key=bool(pk),
                        unit=info.get("unit"),
                    )
                )
            tables.append(TableDef(tname, tuple(cols), tmeta.get("description", "")))
            for row in conn.execute(f'PRAGMA foreign_key_list("{tname}")'):
                ref_table, from_col, to_col = row[2], row[3], row[4]
                if to_col is None:
                    to_col = _single_pk(conn, ref_table)
                fks.append(ForeignKey(tname, from_col, ref_table, to_col))
    finally:
        conn.close()
    return DatabaseSchema(db_id, tuple(tables), tuple(fks))


def _single_pk(conn: sqlite3.Connection, table: str) -> str:
    pks = [r[1] for r in conn.execute(f'PRAGMA table_info("{table}")') if r[5]]
    if len(pks) != 1:
        raise DatasetError(f"cannot resolve implicit FK target on {table}")
    return pks[0]


@dataclass
class DbHandle:
    db_id: str
    path: Path
    schema: DatabaseSchema


class DatabaseRegistry:
    """Opens each database at most once per ``db_root``."""

    def __init__(self, db_root: Path):
        self.db_root = Path(db_root)
        self._handles: dict[str, DbHandle] = {}
        self._lock = threading.Lock()
        self.open_count = 0

    def path_for(self, db_id: str) -> Path:
        return self.db_root / db_id / f"{db_id}.sqlite"

    def exists(self, db_id: str) -> bool:
        return self.path_for(db_id).is_file()

    def get(self, db_id: str) -> DbHandle:
        with self._lock:
            handle = self._handles.get(db_id)
            if handle is None:
                path = self.path_for(db_id)
                if not path.is_file():
                    raise DatasetError(f"database {db_id!r} not found at {path}")
                handle = DbHandle(db_id, path, introspect_schema(path, db_id))
                self._handles[db_id] = handle
                self.open_count += 1
            return handle

    def __len__(self) -> int:
        return len(self._handles)


@dataclass
class LoadError:
    index: int
    message: str


@dataclass
class LoadedDataset:
    cases: list[EvalCase]
    errors: list[LoadError] = field(default_factory=list)
    registry: DatabaseRegistry | None = None

    def __iter__(self) -> Iterator[EvalCase]:
        return iter(self.cases)

    def __len__(self) -> int:
        return len(self.cases)

    def __getitem__(self, i: int) -> EvalCase:
        return self.cases[i]

    @property
    def invalid_gold(self) -> list[EvalCase]:
        return [c for c in self.cases if not c.gold_valid]


def _record_to_case(rec: dict[str, Any], index: int) -> EvalCase:
    if not isinstance(rec, dict):
        raise DatasetError("record is not an object")
    text = rec.get("question")
    db_id = rec.get("db_id")
    gold = rec.get("query", rec.get("SQL", rec.get("sql")))
    if not isinstance(text, str) or not text.strip():
        raise DatasetError("missing or empty 'question'")
    if not isinstance(db_id, str) or not db_id:
        raise DatasetError("missing 'db_id'")
    if not isinstance(gold, str) or not gold.strip():
        raise DatasetError("missing gold SQL ('query' or 'SQL')")
    difficulty = _DIFFICULTY_ALIASES.get(str(rec.get("difficulty", "unknown")).lower(), "unknown")
    qid = rec.get("id", rec.get("question_id", index))
    known = {"id", "question_id", "question", "db_id", "query", "SQL", "sql", "difficulty", "reasoning_type"}
    tags = dict(rec.get("tags", {})) if isinstance(rec.get("tags"), dict) else {}
    for k, v in rec.items():
        if k not in known and k != "tags":
            tags[k] = v
    question = Question(
        id=str(qid),
        text=text,
        db_id=db_id,
        difficulty=difficulty,
        reasoning_type=str(rec.get("reasoning_type", "")),
    )
    return EvalCase(question=question, gold_sql=gold, tags=tags)


def _validate_gold(case: EvalCase, handle: DbHandle) -> EvalCase:
    from ..sqlexec.execute import execute

    outcome = execute(case.gold_sql, handle)
    if outcome.ok:
        return case
    return EvalCase(case.question, case.gold_sql, case.tags, gold_valid=False, gold_error=outcome.message)


def load_dataset(path: Path | str, db_root: Path | str, registry: DatabaseRegistry | None = None) -> LoadedDataset:
    path = Path(path)
    if not path.is_file():
        raise DatasetError(f"dataset file not found: {path}")
    try:
        records = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise DatasetError(f"dataset is not valid JSON: {exc}") from exc
    if not isinstance(records, list):
        raise DatasetError("dataset must be a JSON array")

    registry = registry or DatabaseRegistry(Path(db_root))
    cases: list[EvalCase] = []
    errors: list[LoadError] = []
    for i, rec in enumerate(records):
        try:
            case = _record_to_case(rec, i)
        except (DatasetError, ValueError) as exc:
            errors.append(LoadError(i, str(exc)))
            continue
        if not registry.exists(case.question.db_id):
            errors.append(LoadError(i, f"unknown db_id {case.question.db_id!r}"))
            continue
        case = _validate_gold(case, registry.get(case.question.db_id))
        if not case.gold_valid:
            log.warning("case %s: gold SQL fails: %s", case.question.id, case.gold_error)
        cases.append(case)
    return LoadedDataset(cases, errors, registry)


def case_to_record(case: EvalCase) -> dict[str, Any]:
    rec: dict[str, Any] = {
        "id": case.question.id,
        "question": case.question.text,
        "db_id": case.question.db_id,
        "query": case.gold_sql,
        "difficulty": case.question.difficulty,
        "reasoning_type": case.question.reasoning_type,
    }
    if case.tags:
        rec["tags"] = case.tags
    return rec


def dump_dataset(cases: list[EvalCase] | LoadedDataset, path: Path | str) -> None:
    records = [case_to_record(c) for c in cases]
    Path(path).write_text(json.dumps(records, indent=2, ensure_ascii=False) + "\n", encoding="utf-8")
