"""Synthetic wide schemas with planted gold elements, for compression recall checks."""

from __future__ import annotations

import random
from dataclasses import dataclass

from ..core.types import ColumnDef, DatabaseSchema, ForeignKey, Question, TableDef
from ..understanding.pipeline import ValidatedState
from ..understanding.state import Entity, SemanticState

ENTITY_NOUNS = (
    "reactor", "turbine", "pipeline", "vessel", "satellite", "orbit", "glacier", "aquifer", "volcano",
    "substation", "transformer", "battery", "charger", "depot", "warehouse", "shipment", "pallet", "freighter",
    "runway", "hangar", "aircraft", "engine", "propeller", "harbor", "lighthouse", "dam", "reservoir", "canal",
    "mine", "drill", "furnace", "kiln", "smelter", "foundry", "crane", "boiler", "chimney", "greenhouse",
    "orchard", "vineyard", "silo", "tractor", "harvester", "bakery", "brewery", "distillery", "laboratory",
    "telescope", "observatory", "probe", "rover", "capsule", "station", "tunnel", "bridge", "viaduct",
    "locomotive", "carriage", "tram", "ferry", "yacht", "kayak", "glider", "balloon", "compressor", "valve",
    "pump", "sensor", "meter", "gauge", "antenna", "router", "server", "cluster", "archive", "library",
)
ATTRIBUTE_NOUNS = (
    "coolant_temp", "blade_pitch", "flow_rate", "hull_depth", "apogee_km", "ice_thickness", "recharge_volume",
    "magma_pressure", "load_factor", "winding_loss", "charge_cycles", "plug_voltage", "floor_area", "gross_weight",
    "stack_height", "cargo_tonnage", "surface_grip", "door_clearance", "fuel_burn", "thrust_output",
    "rotor_diameter", "tide_level", "beam_range", "spill_capacity", "water_level", "lock_count", "ore_grade",
    "bit_wear", "melt_point", "firing_hours", "slag_ratio", "pour_speed", "boom_reach", "steam_output",
    "flue_draft", "humidity_index", "yield_per_tree", "grape_sugar", "grain_moisture", "plough_width",
    "crop_loss", "oven_count", "hop_bitterness", "proof_strength", "assay_count", "mirror_aperture",
    "seeing_index", "signal_delay", "wheel_slip", "heat_shield", "dock_ports", "bore_length", "span_length",
)
GENERIC_COLUMNS = (
    ("name", "text", "display name"),
    ("status", "text", "lifecycle status"),
    ("created_at", "text", "record creation time"),
    ("notes", "text", "free text"),
    ("region", "text", "operating region"),
)


@dataclass(frozen=True)
class PlantedSchema:
    schema: DatabaseSchema
    validated: ValidatedState
    gold: frozenset[str]

    @property
    def gold_tables(self) -> frozenset[str]:
        return frozenset(e for e in self.gold if "." not in e)


def _table(name: str, attrs: list[str], generic: list[tuple[str, str, str]], extra: list[ColumnDef]) -> TableDef:
    cols = [ColumnDef("id", "integer", primary_key=True)]
    cols += [ColumnDef(n, t, d) for n, t, d in generic]
    cols += extra
    cols += [ColumnDef(a, "real", a.replace("_", " ")) for a in attrs]
    return TableDef(name, tuple(cols), f"{name[:-1]} records")


def planted_schema(n_tables: int, seed: int, n_gold: int = 3) -> PlantedSchema:
    """A schema of ``n_tables`` tables, ``n_gold`` of which a question needs.

    The gold tables form a foreign-key chain; each contributes one attribute
    that only it carries. Every table also has shared generic columns, and
    distractor tables carry their own attributes, some of which share a word
    with a gold attribute.
    """
    if not n_gold <= n_tables <= len(ENTITY_NOUNS):
        raise ValueError(f"n_tables must lie in [{n_gold}, {len(ENTITY_NOUNS)}]")
    rng = random.Random(seed)
    nouns = rng.sample(ENTITY_NOUNS, n_tables)
    gold_nouns = nouns[:n_gold]
    attrs = list(ATTRIBUTE_NOUNS)
    rng.shuffle(attrs)
    gold_attrs = attrs[:n_gold]
    pool = attrs[n_gold:]
    # distractors may reuse one word of a gold attribute, e.g. flow_rate -> flow_index
    near = [f"{g.split('_')[0]}_index" for g in gold_attrs]

    tables: list[TableDef] = []
    fks: list[ForeignKey] = []
    for i, noun in enumerate(nouns):
        name = noun + "s"
        generic = rng.sample(GENERIC_COLUMNS, rng.randint(2, 4))
        extra: list[ColumnDef] = []
        if i < n_gold:
            own = [gold_attrs[i]]
            if i > 0:
                parent = gold_nouns[i - 1]
                extra.append(ColumnDef(f"{parent}_id", "integer", f"owning {parent}"))
                fks.append(ForeignKey(name, f"{parent}_id", gold_nouns[i - 1] + "s", "id"))
        else:
            own = rng.sample(pool, rng.randint(2, 4))
            if rng.random() < 0.3:
                own.append(rng.choice(near))
            if rng.random() < 0.3:
                parent = rng.choice(nouns[:i])
                extra.append(ColumnDef(f"{parent}_id", "integer", f"owning {parent}"))
                fks.append(ForeignKey(name, f"{parent}_id", parent + "s", "id"))
        tables.append(_table(name, sorted(set(own)), generic, extra))

    order = list(range(n_tables))
    rng.shuffle(order)
    schema = DatabaseSchema(f"synthetic_{n_tables}_{seed}", tuple(tables[i] for i in order), tuple(fks))

    g = [a.replace("_", " ") for a in gold_attrs]
    text = (
        f"What is the average {g[0]} of each {gold_nouns[0]} whose {gold_nouns[1]} has {g[1]} above 5"
        + (f" and whose {gold_nouns[2]} {g[2]} is the highest?" if n_gold > 2 else "?")
    )
    question = Question(f"syn-{n_tables}-{seed}", text, schema.db_id)
    state = SemanticState(
        intent="aggregate over joined entities",
        entities=[Entity(n) for n in gold_nouns],
        patterns=[f"{n}s.{a}" for n, a in zip(gold_nouns, gold_attrs)],
    )
    gold = {n + "s" for n in gold_nouns}
    gold |= {f"{n}s.{a}" for n, a in zip(gold_nouns, gold_attrs)}
    for fk in fks:
        if fk.table in gold and fk.ref_table in gold:
            gold |= {f"{fk.table}.{fk.column}", f"{fk.ref_table}.{fk.ref_column}"}
    return PlantedSchema(schema, ValidatedState(question, state), frozenset(gold))


def planted_suite(n_schemas: int = 10, lo: int = 20, hi: int = 60, seed: int = 0) -> list[PlantedSchema]:
    """Schemas with table counts spread evenly over [lo, hi]."""
    sizes = [round(lo + (hi - lo) * i / max(1, n_schemas - 1)) for i in range(n_schemas)]
    return [planted_schema(n, seed + i) for i, n in enumerate(sizes)]
