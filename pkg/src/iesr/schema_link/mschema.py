"""Annotated, semi-structured schema rendering.

Grammar (one block per kept table, schema order)::

    DB_ID: <db_id>
    # Table: <name>
    -- <table description>
    (<column>:<TYPE>[, Primary Key][, <description>][, Unit: <unit>][, Examples: [v1, v2]])
    ...
    Foreign keys:
    <table>.<column>=<ref_table>.<ref_column>
"""

from __future__ import annotations

from typing import TYPE_CHECKING

from ..core.types import ColumnDef, DatabaseSchema

if TYPE_CHECKING:
    from .compress import CompressionResult


class SelectionError(KeyError):
    pass


def _example(value: object) -> str:
    if isinstance(value, str):
        text = value if len(value) <= 40 else value[:37] + "..."
        return repr(text)
    return repr(value)


def _column_line(col: ColumnDef) -> str:
    parts = [f"{col.name}:{col.value_type}"]
    if col.primary_key:
        parts.append("Primary Key")
    if col.description:
        parts.append(col.description)
    if col.unit:
        parts.append(f"Unit: {col.unit}")
    if col.examples:
        parts.append("Examples: [" + ", ".join(_example(v) for v in col.examples) + "]")
    return "(" + ", ".join(parts) + ")"


def _resolve(schema: DatabaseSchema, selection: CompressionResult | None) -> dict[str, set[str]]:
    if selection is None:
        return {t.name: {c.name for c in t.columns} for t in schema.tables}
    kept: dict[str, set[str]] = {}
    for table in selection.kept_tables:
        if not schema.has_table(table):
            raise SelectionError(f"selection references unknown table {table!r}")
        tdef = schema.table(table)
        cols = set()
        for name in selection.kept_columns.get(table, ()):
            try:
                cols.add(tdef.column(name).name)
            except KeyError:
                raise SelectionError(f"selection references unknown column {table}.{name}") from None
        kept[tdef.name] = cols
    for table in selection.kept_columns:
        if table not in selection.kept_tables:
            raise SelectionError(f"columns kept for table {table!r} that is not kept")
    return kept


def render_m_schema(schema: DatabaseSchema, selection: CompressionResult | None = None) -> str:
    kept = _resolve(schema, selection)
    lines = [f"DB_ID: {schema.db_id}"]
    for t in schema.tables:
        if t.name not in kept:
            continue
        lines.append(f"# Table: {t.name}")
        if t.description:
            lines.append(f"-- {t.description}")
        lines.append("[")
        lines.extend(_column_line(c) + "," for c in t.columns if c.name in kept[t.name])
        lines.append("]")
    low = {t.lower(): {c.lower() for c in cols} for t, cols in kept.items()}
    fks = [
        str(fk)
        for fk in schema.foreign_keys
        if fk.column.lower() in low.get(fk.table.lower(), ())
        and fk.ref_column.lower() in low.get(fk.ref_table.lower(), ())
    ]
    if fks:
        lines.append("Foreign keys:")
        lines.extend(fks)
    return "\n".join(lines) + "\n"
