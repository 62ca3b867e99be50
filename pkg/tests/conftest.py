from __future__ import annotations

import json
import sqlite3
from pathlib import Path

import pytest

from iesr.harness.toy import build_toy_suite
from iesr.llm.gateway import Gateway
from iesr.llm.mock import ScriptedBackend


def make_db(path: Path, ddl: list[str], rows: dict[str, list[tuple]], meta: dict | None = None) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    conn = sqlite3.connect(path)
    for stmt in ddl:
        conn.execute(stmt)
    for table, data in rows.items():
        if data:
            conn.executemany(f"INSERT INTO {table} VALUES ({', '.join('?' * len(data[0]))})", data)
    conn.commit()
    conn.close()
    if meta is not None:
        path.with_suffix(".meta.json").write_text(json.dumps(meta), encoding="utf-8")
    return path


@pytest.fixture
def shop_db(tmp_path: Path) -> Path:
    """Small two-table database used across stage tests."""
    return make_db(
        tmp_path / "shop" / "shop.sqlite",
        [
            "CREATE TABLE items (item_id INTEGER PRIMARY KEY, name TEXT, price REAL, weight_kg REAL)",
            "CREATE TABLE orders (order_id INTEGER PRIMARY KEY, item_id INTEGER, qty INTEGER, "
            "FOREIGN KEY (item_id) REFERENCES items(item_id))",
        ],
        {
            "items": [(1, "apple", 0.5, 0.2), (2, "melon", 3.0, 1.5), (3, "pear", 0.75, 0.25)],
            "orders": [(1, 1, 4), (2, 2, 1), (3, 1, 2), (4, 3, 10)],
        },
        {"tables": {"items": {"description": "catalogue", "columns": {"weight_kg": {"unit": "kg"}}}}},
    )


@pytest.fixture(scope="session")
def toy(tmp_path_factory) -> dict[str, Path]:
    return build_toy_suite(tmp_path_factory.mktemp("toy"))


def scripted(entries: list[dict], **kwargs) -> Gateway:
    return Gateway(ScriptedBackend.from_dict({"entries": entries}), **kwargs)


def fence(sql: str) -> str:
    return f"```sql\n{sql}\n```"
