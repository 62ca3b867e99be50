"""Additive database decays for robustness runs.

L1 adds distractor tables whose columns are synonyms of real ones; L2 adds
near-duplicate table names with irrelevant columns and a redundant join path;
L3 adds plausible tables whose values contradict their declared unit. Existing
tables and rows are never modified.
"""

from __future__ import annotations

import enum
import json
import random
import shutil
import sqlite3
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

from ..core.dataset import introspect_schema, meta_path
from ..core.normalize import ComparePolicy
from ..core.types import DatabaseSchema, TableDef
from ..sqlexec.compare import order_sensitive, results_equal
from ..sqlexec.execute import execute

MAX_NAME_ATTEMPTS = 100

SYNONYMS: dict[str, tuple[str, ...]] = {
    "name": ("title", "label"),
    "id": ("key", "code"),
    "distance": ("length", "span"),
    "km": ("kms", "kilometres"),
    "time": ("duration", "period"),
    "hours": ("hrs", "duration"),
    "h": ("hrs", "hours"),
    "speed": ("velocity", "pace"),
    "price": ("cost", "rate"),
    "cost": ("price", "charge"),
    "amount": ("quantity", "sum"),
    "date": ("day", "timestamp"),
    "city": ("town", "location"),
    "age": ("years", "seniority"),
    "energy": ("consumption", "power"),
    "kwh": ("kilowatt_hours", "units"),
    "power": ("wattage", "load"),
    "watts": ("wattage", "power"),
    "count": ("number", "tally"),
    "total": ("sum", "overall"),
    "type": ("kind", "category"),
    "capacity": ("size", "volume"),
    "rating": ("score", "grade"),
    "driver": ("operator", "pilot"),
    "vehicle": ("car", "unit"),
    "trip": ("journey", "ride"),
    "usage": ("use", "draw"),
    "tariff": ("plan", "pricing"),
}
L1_SUFFIXES = ("records", "info", "details", "archive", "history", "summary")
L3_SUFFIXES = ("metrics", "normalized", "stats", "measurements", "readings")
L2_IRRELEVANT = (("notes", "TEXT"), ("flag", "INTEGER"), ("legacy_code", "TEXT"), ("batch", "INTEGER"))
_LETTERS = "abcdefghijklmnopqrstuvwxyz"


class DecayLevel(str, enum.Enum):
    L1_SEMANTIC = "l1"
    L2_STRUCTURAL = "l2"
    L3_HYBRID = "l3"


class PerturbError(RuntimeError):
    pass


@dataclass
class PerturbResult:
    path: Path
    level: DecayLevel
    seed: int
    injections: list[dict[str, Any]] = field(default_factory=list)
    gold_checks: list[dict[str, Any]] = field(default_factory=list)

    @property
    def gold_unchanged(self) -> bool:
        return all(c["unchanged"] for c in self.gold_checks)

    def to_dict(self) -> dict[str, Any]:
        return {
            "path": str(self.path),
            "level": self.level.value,
            "seed": self.seed,
            "injections": self.injections,
            "gold_checks": self.gold_checks,
        }


def _q(name: str) -> str:
    return '"' + name.replace('"', '""') + '"'


def _fresh_name(make, taken: set[str], rng: random.Random) -> str:
    for _ in range(MAX_NAME_ATTEMPTS):
        name = make(rng)
        if name and name.lower() not in taken:
            taken.add(name.lower())
            return name
    raise PerturbError(f"could not find a free table name after {MAX_NAME_ATTEMPTS} attempts")


def synonym_column(name: str, rng: random.Random) -> str:
    parts = name.lower().split("_")
    swapped = [rng.choice(SYNONYMS[p]) if p in SYNONYMS else p for p in parts]
    if swapped == parts:
        swapped = parts + [rng.choice(("alt", "val", "ref"))]
    return "_".join(swapped)


def edit_distance_one(name: str, rng: random.Random) -> str:
    op = rng.choice(("sub", "ins", "del")) if len(name) > 2 else "ins"
    i = rng.randrange(len(name) + (1 if op == "ins" else 0))
    if op == "ins":
        return name[:i] + rng.choice(_LETTERS) + name[i:]
    if op == "del":
        return name[:i] + name[i + 1 :]
    choices = [c for c in _LETTERS if c != name[i].lower()]
    return name[:i] + rng.choice(choices) + name[i + 1 :]


def _sample_rows(conn: sqlite3.Connection, table: TableDef, limit: int = 20) -> list[tuple]:
    cols = ", ".join(_q(c.name) for c in table.columns)
    return conn.execute(f"SELECT {cols} FROM {_q(table.name)} ORDER BY rowid LIMIT {limit}").fetchall()


def _create(conn: sqlite3.Connection, name: str, columns: list[tuple[str, str]], fks: list[tuple[str, str, str]]):
    defs = [f"{_q(c)} {t}" for c, t in columns]
    defs += [f"FOREIGN KEY ({_q(c)}) REFERENCES {_q(rt)}({_q(rc)})" for c, rt, rc in fks]
    conn.execute(f"CREATE TABLE {_q(name)} ({', '.join(defs)})")


def _insert(conn: sqlite3.Connection, name: str, n_cols: int, rows: list[tuple]) -> None:
    if rows:
        marks = ", ".join("?" * n_cols)
        conn.executemany(f"INSERT INTO {_q(name)} VALUES ({marks})", rows)


def _decl(value_type: str) -> str:
    return {"integer": "INTEGER", "real": "REAL", "text": "TEXT", "blob": "BLOB"}.get(value_type, "TEXT")


def _l1(conn, schema, table, rng, taken, meta) -> dict[str, Any]:
    name = _fresh_name(lambda r: f"{table.name}_{r.choice(L1_SUFFIXES)}", taken, rng)
    used: set[str] = set()
    columns = []
    for c in table.columns:
        new = synonym_column(c.name, rng)
        while new in used:
            new += "_x"
        used.add(new)
        columns.append((new, _decl(c.value_type)))
    rows = _sample_rows(conn, table)
    shuffled = [list(col) for col in zip(*rows)] if rows else []
    for col in shuffled:
        rng.shuffle(col)
    rows = list(zip(*shuffled)) if shuffled else []
    _create(conn, name, columns, [])
    _insert(conn, name, len(columns), rows)
    meta.setdefault("tables", {})[name] = {"description": f"{table.name} {name.rsplit('_', 1)[-1]}"}
    return {"table": name, "source": table.name, "columns": [c for c, _ in columns], "rows": len(rows)}


def _l2(conn, schema: DatabaseSchema, table, rng, taken, meta) -> dict[str, Any]:
    name = _fresh_name(lambda r: edit_distance_one(table.name, r), taken, rng)
    pk = table.primary_keys[0] if table.primary_keys else table.columns[0].name
    pk_col = table.column(pk)
    columns = [(pk, _decl(pk_col.value_type))]
    fks = [(pk, table.name, pk)]
    for fk in schema.foreign_keys:
        if fk.table.lower() == table.name.lower() and fk.column != pk:
            col = table.column(fk.column)
            columns.append((col.name, _decl(col.value_type)))
            fks.append((col.name, fk.ref_table, fk.ref_column))
            break
    columns += list(rng.sample(L2_IRRELEVANT, 2))
    src_cols = [c for c, _ in columns[: len(fks)]]
    base = conn.execute(
        f"SELECT {', '.join(_q(c) for c in src_cols)} FROM {_q(table.name)} ORDER BY rowid LIMIT 20"
    ).fetchall()
    extra = columns[len(fks) :]
    rows = [
        tuple(r) + tuple(f"n{rng.randrange(1000)}" if t == "TEXT" else rng.randrange(100) for _, t in extra)
        for r in base
    ]
    _create(conn, name, columns, fks)
    _insert(conn, name, len(columns), rows)
    return {
        "table": name,
        "source": table.name,
        "columns": [c for c, _ in columns],
        "foreign_keys": [f"{name}.{c}={rt}.{rc}" for c, rt, rc in fks],
        "rows": len(rows),
    }


def _l3(conn, schema, table, rng, taken, meta) -> dict[str, Any] | None:
    numeric = [
        c for c in table.columns
        if c.value_type in ("real", "integer") and not c.primary_key and not c.name.lower().endswith("id")
    ]
    if not numeric:
        return None
    target = rng.choice(numeric)
    name = _fresh_name(lambda r: f"{table.name}_{r.choice(L3_SUFFIXES)}", taken, rng)
    columns = [(c.name, "REAL" if c is target else _decl(c.value_type)) for c in table.columns]
    idx = table.columns.index(target)
    rows = [
        tuple(v * 1000 if j == idx and isinstance(v, (int, float)) else v for j, v in enumerate(r))
        for r in _sample_rows(conn, table)
    ]
    _create(conn, name, columns, [])
    _insert(conn, name, len(columns), rows)
    unit = target.unit or "base unit"
    meta.setdefault("tables", {})[name] = {
        "description": f"{table.name} measurements",
        "columns": {target.name: {"description": f"{target.name} in {unit}", "unit": target.unit or ""}},
    }
    return {
        "table": name,
        "source": table.name,
        "columns": [c for c, _ in columns],
        "violated": f"{target.name} declared in {unit} but stored x1000",
        "rows": len(rows),
    }


_BUILDERS = {DecayLevel.L1_SEMANTIC: _l1, DecayLevel.L2_STRUCTURAL: _l2, DecayLevel.L3_HYBRID: _l3}


def check_gold(
    golds: list[str], original: Path, perturbed: Path, policy: ComparePolicy | None = None
) -> list[dict[str, Any]]:
    policy = policy or ComparePolicy()
    out = []
    for sql in golds:
        a, b = execute(sql, original, policy=policy), execute(sql, perturbed, policy=policy)
        same = a.kind == b.kind and (
            not a.ok or results_equal(a.rows, b.rows, policy.with_order(order_sensitive(sql)))
        )
        out.append({"sql": sql, "unchanged": same, "original": a.kind, "perturbed": b.kind})
    return out


def perturb_database(
    src: Path | str,
    out: Path | str,
    level: DecayLevel | str,
    seed: int = 0,
    *,
    k: int = 2,
    gold_sqls: list[str] | None = None,
) -> PerturbResult:
    """Copy ``src`` to ``out`` and add ``k`` decay tables; verify gold SQL results are unchanged."""
    src, out = Path(src), Path(out)
    level = DecayLevel(level)
    if k < 1:
        raise ValueError("k must be at least 1")
    if src.resolve() == out.resolve():
        raise PerturbError("output must differ from the source database")
    schema = introspect_schema(src)
    out.parent.mkdir(parents=True, exist_ok=True)
    shutil.copyfile(src, out)
    meta: dict[str, Any] = {}
    if meta_path(src).exists():
        meta = json.loads(meta_path(src).read_text(encoding="utf-8"))
    rng = random.Random(f"{level.value}|{seed}")
    taken = {t.name.lower() for t in schema.tables}
    result = PerturbResult(out, level, seed)
    conn = sqlite3.connect(out)
    try:
        pool = list(schema.tables)
        rng.shuffle(pool)
        for table in pool:
            if len(result.injections) >= k:
                break
            entry = _BUILDERS[level](conn, schema, table, rng, taken, meta)
            if entry is not None:
                entry["level"] = level.value
                result.injections.append(entry)
        conn.commit()
    finally:
        conn.close()
    if meta:
        meta_path(out).write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    if gold_sqls:
        result.gold_checks = check_gold(gold_sqls, src, out)
        if not result.gold_unchanged:
            bad = [c["sql"] for c in result.gold_checks if not c["unchanged"]]
            raise PerturbError(f"decay changed gold results for: {bad}")
    return result
