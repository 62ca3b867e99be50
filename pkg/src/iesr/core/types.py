from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any

DIFFICULTIES = ("easy", "medium", "hard", "unknown")
VALUE_TYPES = ("integer", "real", "text", "boolean", "datetime")


@dataclass(frozen=True)
class Question:
    id: str
    text: str
    db_id: str
    difficulty: str = "unknown"
    reasoning_type: str = ""

    def __post_init__(self) -> None:
        if not self.text.strip():
            raise ValueError(f"question {self.id!r} has empty text")
        if self.difficulty not in DIFFICULTIES:
            raise ValueError(f"unknown difficulty {self.difficulty!r}")


@dataclass(frozen=True)
class ColumnDef:
    name: str
    value_type: str
    description: str = ""
    examples: tuple[Any, ...] = ()
    primary_key: bool = False
    unit: str | None = None

    def __post_init__(self) -> None:
        if self.value_type not in VALUE_TYPES:
            raise ValueError(f"column {self.name!r}: unknown value type {self.value_type!r}")
        if len(self.examples) > 3:
            raise ValueError(f"column {self.name!r}: at most 3 example values")


@dataclass(frozen=True)
class TableDef:
    name: str
    columns: tuple[ColumnDef, ...]
    description: str = ""

    def __post_init__(self) -> None:
        names = [c.name.lower() for c in self.columns]
        if len(set(names)) != len(names):
            raise ValueError(f"table {self.name!r}: duplicate column names")

    def column(self, name: str) -> ColumnDef:
        for col in self.columns:
            if col.name.lower() == name.lower():
                return col
        raise KeyError(f"{self.name}.{name}")

    @property
    def primary_keys(self) -> tuple[str, ...]:
        return tuple(c.name for c in self.columns if c.primary_key)


@dataclass(frozen=True)
class ForeignKey:
    table: str
    column: str
    ref_table: str
    ref_column: str

    def __str__(self) -> str:
        return f"{self.table}.{self.column}={self.ref_table}.{self.ref_column}"


@dataclass(frozen=True)
class DatabaseSchema:
    db_id: str
    tables: tuple[TableDef, ...]
    foreign_keys: tuple[ForeignKey, ...] = ()

    def __post_init__(self) -> None:
        names = [t.name.lower() for t in self.tables]
        if len(set(names)) != len(names):
            raise ValueError(f"schema {self.db_id!r}: duplicate table names")
        for fk in self.foreign_keys:
            self.table(fk.table).column(fk.column)
            self.table(fk.ref_table).column(fk.ref_column)

    def table(self, name: str) -> TableDef:
        for t in self.tables:
            if t.name.lower() == name.lower():
                return t
        raise KeyError(name)

    def has_table(self, name: str) -> bool:
        return any(t.name.lower() == name.lower() for t in self.tables)

    def elements(self) -> list[str]:
        """Element keys in schema order: ``table`` then its ``table.column`` entries."""
        out: list[str] = []
        for t in self.tables:
            out.append(t.name)
            out.extend(f"{t.name}.{c.name}" for c in t.columns)
        return out


@dataclass(frozen=True)
class EvalCase:
    question: Question
    gold_sql: str
    tags: dict[str, Any] = field(default_factory=dict)
    gold_valid: bool = True
    gold_error: str | None = None
