"""Bundled offline benchmark: two small databases, ten questions and scripted model sessions.

``build_toy_suite(out)`` writes::

    out/dbs/<db_id>/<db_id>.sqlite (+ .meta.json)
    out/dataset.json
    out/gold_extraction.json
    out/scripts/all_correct.json   every question answered correctly
    out/scripts/four_wrong.json    four questions answered with a wrong query
    out/scripts/mixed.json         each SQL-producing call 60% correct, 40% wrong
    out/config.json
"""

from __future__ import annotations

import json
import sqlite3
from dataclasses import dataclass
from pathlib import Path
from typing import Any

from ..understanding.state import Entity, NumericExpr, RelationHypothesis, SemanticState, UnitMention, render_state_block

FOUR_WRONG = ("t2", "t4", "e1", "e4")
MIXED_WEIGHTS = (0.6, 0.4)

TRANSPORT_DDL = [
    """CREATE TABLE drivers (driver_id INTEGER PRIMARY KEY, name TEXT, city TEXT, age INTEGER)""",
    """CREATE TABLE vehicles (vehicle_id INTEGER PRIMARY KEY, model TEXT, capacity INTEGER, fuel_type TEXT)""",
    """CREATE TABLE trips (trip_id INTEGER PRIMARY KEY, driver_id INTEGER, vehicle_id INTEGER,
        distance_km REAL, duration_h REAL, fare REAL, trip_date TEXT,
        FOREIGN KEY (driver_id) REFERENCES drivers(driver_id),
        FOREIGN KEY (vehicle_id) REFERENCES vehicles(vehicle_id))""",
]
TRANSPORT_ROWS = {
    "drivers": [
        (1, "Alice", "Berlin", 34), (2, "Bob", "Munich", 45), (3, "Chen", "Berlin", 28), (4, "Dana", "Hamburg", 39),
        (5, "Emil", "Berlin", 52),
    ],
    "vehicles": [(1, "Volt", 4, "electric"), (2, "Hauler", 2, "diesel"), (3, "Zip", 4, "electric"), (4, "Bus", 30, "diesel")],
    "trips": [
        (1, 1, 1, 12.5, 0.25, 18.0, "2024-03-01"),
        (2, 1, 3, 30.0, 0.5, 41.5, "2024-03-02"),
        (3, 2, 2, 80.0, 1.25, 95.0, "2024-03-02"),
        (4, 3, 1, 8.0, 0.2, 11.0, "2024-03-03"),
        (5, 3, 4, 22.0, 0.5, 15.0, "2024-03-04"),
        (6, 4, 2, 45.0, 0.75, 60.0, "2024-03-04"),
        (7, 5, 3, 5.0, 0.125, 9.0, "2024-03-05"),
        (8, 3, 1, 15.0, 0.3, 20.0, "2024-03-06"),
        (9, 3, 3, 9.0, 0.2, 12.5, "2024-03-06"),
        (10, 1, 1, 25.0, 0.4, 33.0, "2024-03-07"),
    ],
}
TRANSPORT_META = {
    "tables": {
        "drivers": {"description": "registered drivers", "columns": {
            "name": {"description": "driver first name"}, "city": {"description": "home city"},
            "age": {"description": "driver age", "unit": "year"}}},
        "vehicles": {"description": "fleet vehicles", "columns": {
            "capacity": {"description": "passenger seats"}, "fuel_type": {"description": "electric or diesel"}}},
        "trips": {"description": "completed trips", "columns": {
            "distance_km": {"description": "trip distance", "unit": "km"},
            "duration_h": {"description": "trip duration", "unit": "h"},
            "fare": {"description": "fare paid", "unit": "EUR"},
            "trip_date": {"description": "date of the trip"}}},
    }
}

ENERGY_DDL = [
    """CREATE TABLE appliances (appliance_id INTEGER PRIMARY KEY, name TEXT, power_w REAL, category TEXT)""",
    """CREATE TABLE tariffs (tariff_id INTEGER PRIMARY KEY, name TEXT, price_per_kwh REAL)""",
    """CREATE TABLE usage (usage_id INTEGER PRIMARY KEY, appliance_id INTEGER, tariff_id INTEGER,
        hours REAL, usage_date TEXT,
        FOREIGN KEY (appliance_id) REFERENCES appliances(appliance_id),
        FOREIGN KEY (tariff_id) REFERENCES tariffs(tariff_id))""",
]
ENERGY_ROWS = {
    "appliances": [
        (1, "heater", 2000.0, "heating"), (2, "fridge", 150.0, "kitchen"), (3, "oven", 2400.0, "kitchen"),
        (4, "lamp", 60.0, "lighting"), (5, "boiler", 1500.0, "heating"),
    ],
    "tariffs": [(1, "standard", 0.30), (2, "night", 0.18)],
    "usage": [
        (1, 1, 1, 3.0, "2024-01-10"), (2, 1, 2, 5.0, "2024-01-10"), (3, 2, 1, 24.0, "2024-01-10"),
        (4, 2, 2, 12.0, "2024-01-11"), (5, 3, 1, 1.5, "2024-01-11"), (6, 4, 1, 6.0, "2024-01-11"),
        (7, 4, 2, 2.0, "2024-01-12"), (8, 5, 2, 4.0, "2024-01-12"), (9, 1, 1, 2.0, "2024-01-12"),
    ],
}
ENERGY_META = {
    "tables": {
        "appliances": {"description": "household appliances", "columns": {
            "power_w": {"description": "rated power", "unit": "W"}, "category": {"description": "appliance category"}}},
        "tariffs": {"description": "electricity tariffs", "columns": {
            "price_per_kwh": {"description": "price per kilowatt hour", "unit": "EUR/kWh"}}},
        "usage": {"description": "appliance usage sessions", "columns": {
            "hours": {"description": "hours switched on", "unit": "h"}}},
    }
}


@dataclass(frozen=True)
class ToyQuestion:
    qid: str
    db_id: str
    text: str
    gold: str
    wrong: str
    difficulty: str
    reasoning_type: str
    state: SemanticState
    tables: tuple[str, ...]
    columns: tuple[str, ...]
    extraction_gold: dict[str, list[Any]]


def _state(intent, entities, relations=(), numbers=(), units=(), patterns=()) -> SemanticState:
    return SemanticState(
        intent=intent,
        rationale="scripted",
        entities=[Entity(s, m) for s, m in entities],
        relations=[RelationHypothesis(*r) for r in relations],
        numerics=[NumericExpr(v, s) for v, s in numbers],
        units=[UnitMention(u, d) for u, d in units],
        patterns=list(patterns),
    )


QUESTIONS: tuple[ToyQuestion, ...] = (
    ToyQuestion(
        "t1", "transport", "How many trips were longer than 20 km?",
        "SELECT COUNT(*) FROM trips WHERE distance_km > 20",
        "SELECT COUNT(*) FROM trips",
        "easy", "aggregation",
        _state("count trips with distance over 20 km", [("trips", "trips"), ("distance", "trips.distance_km")],
               [("trip", "has distance", "20 km", "km")], [(20, "20 km")], [("km", "length")], ["trips.distance_km"]),
        ("trips",), ("trips.distance_km",),
        {"table": ["trips"], "column": ["trips.distance_km"], "unit_num": ["20", "km"], "operator": ["count"]},
    ),
    ToyQuestion(
        "t2", "transport", "What is the average speed in km/h of trips driven by Alice?",
        "SELECT AVG(t.distance_km / t.duration_h) FROM trips t JOIN drivers d ON t.driver_id = d.driver_id "
        "WHERE d.name = 'Alice'",
        "SELECT AVG(t.distance_km) FROM trips t JOIN drivers d ON t.driver_id = d.driver_id WHERE d.name = 'Alice'",
        "medium", "unit",
        _state("average speed of Alice's trips", [("Alice", "drivers.name"), ("speed", None)],
               [("trip", "speed", "distance over time", "km/h", "speed = distance / time")], (),
               [("km/h", "speed")], ["trips.distance_km", "trips.duration_h", "drivers.name"]),
        ("trips", "drivers"), ("trips.distance_km", "trips.duration_h", "drivers.name"),
        {"table": ["trips", "drivers"], "column": ["trips.distance_km", "trips.duration_h", "drivers.name"],
         "unit_num": ["km/h"], "operator": ["avg", "divide"]},
    ),
    ToyQuestion(
        "t3", "transport", "Which driver covered the largest total distance?",
        "SELECT d.name FROM drivers d JOIN trips t ON t.driver_id = d.driver_id GROUP BY d.driver_id "
        "ORDER BY SUM(t.distance_km) DESC LIMIT 1",
        "SELECT d.name FROM drivers d JOIN trips t ON t.driver_id = d.driver_id GROUP BY d.driver_id "
        "ORDER BY COUNT(*) DESC LIMIT 1",
        "medium", "aggregation",
        _state("driver with maximum total distance", [("driver", "drivers.name"), ("distance", "trips.distance_km")],
               [("driver", "covers", "total distance", "km")], (), [("km", "length")], ["trips.distance_km"]),
        ("drivers", "trips"), ("drivers.name", "trips.distance_km"),
        {"table": ["drivers", "trips"], "column": ["drivers.name", "trips.distance_km"], "unit_num": ["km"],
         "operator": ["sum", "max"]},
    ),
    ToyQuestion(
        "t4", "transport", "What is the total fare of trips made with electric vehicles?",
        "SELECT SUM(t.fare) FROM trips t JOIN vehicles v ON t.vehicle_id = v.vehicle_id WHERE v.fuel_type = 'electric'",
        "SELECT SUM(t.fare) FROM trips t",
        "easy", "aggregation",
        _state("total fare for electric vehicles", [("fare", "trips.fare"), ("electric", "vehicles.fuel_type")],
               [("trip", "paid", "fare", "EUR")], (), [("EUR", "currency")], ["trips.fare", "vehicles.fuel_type"]),
        ("trips", "vehicles"), ("trips.fare", "vehicles.fuel_type"),
        {"table": ["trips", "vehicles"], "column": ["trips.fare", "vehicles.fuel_type"], "unit_num": ["eur"],
         "operator": ["sum"]},
    ),
    ToyQuestion(
        "t5", "transport", "List the names of drivers from Berlin older than 30.",
        "SELECT name FROM drivers WHERE city = 'Berlin' AND age > 30",
        "SELECT name FROM drivers WHERE city = 'Berlin'",
        "easy", "commonsense",
        _state("drivers in Berlin above age 30", [("Berlin", "drivers.city"), ("older", "drivers.age")],
               [("driver", "lives in", "Berlin")], [(30, "older than 30")], (), ["drivers.city", "drivers.age"]),
        ("drivers",), ("drivers.name", "drivers.city", "drivers.age"),
        {"table": ["drivers"], "column": ["drivers.city", "drivers.age", "drivers.name"], "unit_num": ["30"],
         "operator": []},
    ),
    ToyQuestion(
        "e1", "energy", "How much energy in kWh did the heater use?",
        "SELECT SUM(a.power_w * u.hours) / 1000.0 FROM usage u JOIN appliances a ON u.appliance_id = a.appliance_id "
        "WHERE a.name = 'heater'",
        "SELECT SUM(a.power_w * u.hours) FROM usage u JOIN appliances a ON u.appliance_id = a.appliance_id "
        "WHERE a.name = 'heater'",
        "hard", "unit",
        _state("energy of heater in kWh", [("heater", "appliances.name")],
               [("heater", "uses energy", "power times time", "kWh", "energy = power * time")], (),
               [("kWh", "energy"), ("W", "power")], ["appliances.power_w", "usage.hours"]),
        ("appliances", "usage"), ("appliances.power_w", "usage.hours", "appliances.name"),
        {"table": ["appliances", "usage"], "column": ["appliances.power_w", "usage.hours", "appliances.name"],
         "unit_num": ["kwh", "w"], "operator": ["multiply", "sum"]},
    ),
    ToyQuestion(
        "e2", "energy", "What did the fridge cost to run under the standard tariff?",
        "SELECT SUM(a.power_w * u.hours / 1000.0 * t.price_per_kwh) FROM usage u "
        "JOIN appliances a ON u.appliance_id = a.appliance_id JOIN tariffs t ON u.tariff_id = t.tariff_id "
        "WHERE a.name = 'fridge' AND t.name = 'standard'",
        "SELECT SUM(a.power_w * u.hours / 1000.0 * t.price_per_kwh) FROM usage u "
        "JOIN appliances a ON u.appliance_id = a.appliance_id JOIN tariffs t ON u.tariff_id = t.tariff_id "
        "WHERE a.name = 'fridge'",
        "hard", "arithmetic",
        _state("fridge running cost, standard tariff", [("fridge", "appliances.name"), ("standard", "tariffs.name")],
               [("fridge", "costs", "energy times price", "EUR", "cost = energy * price")], (),
               [("EUR", "currency"), ("kWh", "energy")], ["tariffs.price_per_kwh", "usage.hours"]),
        ("usage", "appliances", "tariffs"), ("appliances.power_w", "usage.hours", "tariffs.price_per_kwh"),
        {"table": ["usage", "appliances", "tariffs"],
         "column": ["appliances.name", "tariffs.name", "tariffs.price_per_kwh", "usage.hours"],
         "unit_num": ["eur", "kwh"], "operator": ["multiply", "sum"]},
    ),
    ToyQuestion(
        "e3", "energy", "How many appliances draw more than 1000 W?",
        "SELECT COUNT(*) FROM appliances WHERE power_w > 1000",
        "SELECT COUNT(*) FROM appliances WHERE power_w < 1000",
        "easy", "unit",
        _state("count appliances above 1000 W", [("appliances", "appliances")],
               [("appliance", "power rating", "1000 W", "W")], [(1000, "1000 W")], [("W", "power")],
               ["appliances.power_w"]),
        ("appliances",), ("appliances.power_w",),
        {"table": ["appliances"], "column": ["appliances.power_w"], "unit_num": ["1000", "w"], "operator": ["count"]},
    ),
    ToyQuestion(
        "e4", "energy", "Which appliance category was used for the most hours in total?",
        "SELECT a.category FROM usage u JOIN appliances a ON u.appliance_id = a.appliance_id GROUP BY a.category "
        "ORDER BY SUM(u.hours) DESC LIMIT 1",
        "SELECT a.category FROM usage u JOIN appliances a ON u.appliance_id = a.appliance_id GROUP BY a.category "
        "ORDER BY SUM(u.hours) ASC LIMIT 1",
        "medium", "aggregation",
        _state("category with maximum usage hours", [("category", "appliances.category"), ("hours", "usage.hours")],
               [("category", "used for", "hours", "h")], (), [("h", "time")], ["appliances.category", "usage.hours"]),
        ("usage", "appliances"), ("appliances.category", "usage.hours"),
        {"table": ["usage", "appliances"], "column": ["appliances.category", "usage.hours"], "unit_num": ["h"],
         "operator": ["sum", "max"]},
    ),
    ToyQuestion(
        "e5", "energy", "What percentage of usage hours fell under the night tariff?",
        "SELECT 100.0 * SUM(CASE WHEN t.name = 'night' THEN u.hours ELSE 0 END) / SUM(u.hours) FROM usage u "
        "JOIN tariffs t ON u.tariff_id = t.tariff_id",
        "SELECT SUM(u.hours) FROM usage u JOIN tariffs t ON u.tariff_id = t.tariff_id WHERE t.name = 'night'",
        "hard", "arithmetic",
        _state("share of hours on night tariff", [("night", "tariffs.name"), ("hours", "usage.hours")],
               [("usage", "share of", "hours", "%", "percentage = part / whole * 100")], (), [("%", "ratio")],
               ["usage.hours", "tariffs.name"]),
        ("usage", "tariffs"), ("usage.hours", "tariffs.name"),
        {"table": ["usage", "tariffs"], "column": ["usage.hours", "tariffs.name"], "unit_num": ["%"],
         "operator": ["divide", "multiply", "sum"]},
    ),
)


def fence(sql: str) -> str:
    return f"```sql\n{sql}\n```"


def _build_db(path: Path, ddl: list[str], rows: dict[str, list[tuple]], meta: dict[str, Any]) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    if path.exists():
        path.unlink()
    conn = sqlite3.connect(path)
    try:
        for stmt in ddl:
            conn.execute(stmt)
        for table, data in rows.items():
            marks = ", ".join("?" * len(data[0]))
            conn.executemany(f"INSERT INTO {table} VALUES ({marks})", data)
        conn.commit()
    finally:
        conn.close()
    path.with_suffix(".meta.json").write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def _sql_entry(template: str, q: ToyQuestion, mode: str) -> dict[str, Any]:
    match = {"question": q.text}
    if mode == "mixed":
        return {
            "template": template,
            "match": match,
            "choices": [{"text": fence(q.gold), "weight": MIXED_WEIGHTS[0]}, {"text": fence(q.wrong), "weight": MIXED_WEIGHTS[1]}],
        }
    sql = q.wrong if mode == "four_wrong" and q.qid in FOUR_WRONG else q.gold
    return {"template": template, "match": match, "responses": [fence(sql)], "cycle": True}


def script_for(mode: str) -> dict[str, Any]:
    if mode not in ("all_correct", "four_wrong", "mixed"):
        raise ValueError(f"unknown script mode {mode!r}")
    entries: list[dict[str, Any]] = []
    for q in QUESTIONS:
        m = {"question": q.text}
        entries.append({"template": "information-understanding", "match": m,
                        "responses": [render_state_block(q.state)], "cycle": True})
        entries.append({"template": "equation-explain", "match": m,
                        "responses": [f"Known quantities: {q.state.intent}."], "cycle": True})
        entries.append({"template": "schema-selection", "match": m,
                        "responses": [f"TABLES: {', '.join(q.tables)}\nCOLUMNS: {', '.join(q.columns)}"], "cycle": True})
        entries.append({"template": "identify-column", "match": m,
                        "responses": ["\n".join(f"COLUMN: {c} | needed" for c in q.columns)], "cycle": True})
        ents = [e for e in q.state.entities if e.mention]
        entries.append({"template": "entity-extraction", "match": m,
                        "responses": ["\n".join(f"ENTITY: {e.surface} | {e.mention} | {e.surface}" for e in ents)
                                      or "ENTITY: none"], "cycle": True})
        for template in ("sql-generation", "sql-revision", "discriminator-completion"):
            entries.append(_sql_entry(template, q, mode))
    return {"entries": entries}


def dataset_records() -> list[dict[str, Any]]:
    return [
        {"question_id": q.qid, "question": q.text, "db_id": q.db_id, "query": q.gold,
         "difficulty": q.difficulty, "reasoning_type": q.reasoning_type}
        for q in QUESTIONS
    ]


def toy_config(n_rollout: int = 8, seed: int = 0) -> dict[str, Any]:
    return {
        "search": {"n_rollout": n_rollout, "seed": seed},
        "selection": {"probe_seed": seed},
        "harness": {"workers": 1},
    }


def build_toy_suite(out: Path | str) -> dict[str, Path]:
    out = Path(out)
    _build_db(out / "dbs" / "transport" / "transport.sqlite", TRANSPORT_DDL, TRANSPORT_ROWS, TRANSPORT_META)
    _build_db(out / "dbs" / "energy" / "energy.sqlite", ENERGY_DDL, ENERGY_ROWS, ENERGY_META)
    paths = {
        "db_root": out / "dbs",
        "dataset": out / "dataset.json",
        "gold_extraction": out / "gold_extraction.json",
        "config": out / "config.json",
    }
    paths["dataset"].write_text(json.dumps(dataset_records(), indent=2) + "\n", encoding="utf-8")
    paths["gold_extraction"].write_text(
        json.dumps({q.qid: q.extraction_gold for q in QUESTIONS}, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )
    paths["config"].write_text(json.dumps(toy_config(), indent=2, sort_keys=True) + "\n", encoding="utf-8")
    (out / "scripts").mkdir(parents=True, exist_ok=True)
    for mode in ("all_correct", "four_wrong", "mixed"):
        p = out / "scripts" / f"{mode}.json"
        p.write_text(json.dumps(script_for(mode), indent=2) + "\n", encoding="utf-8")
        paths[mode] = p
    return paths
