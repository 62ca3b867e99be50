"""Rule base: consistency constraints, unit conversions and a formula library.

Rules file schema (JSON)::

    {
      "units": {"km": "length", ...},
      "conversions": [{"from": "km", "to": "m", "factor": 1000}, ...],
      "formulas": [{"name": "speed", "expression": "speed = distance / time",
                    "variables": {"speed": "speed", "distance": "length", "time": "time"}}],
      "constraints": [{"entity_classes": ["trip"], "unit": {"dimension": "speed",
                       "units": ["km/h", "m/s"]}, "equation": "speed = distance / time"}]
    }

A conversion ``{"from": a, "to": b, "factor": f}`` means ``1 a = f b``; the
inverse direction is derived. If both directions are listed they must agree.
"""

from __future__ import annotations

import functools
import json
from collections import deque
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Any

from .dimensions import DimensionError, check_equation, equation_variables, known_dimensions


class RuleBaseError(ValueError):
    pass


@dataclass(frozen=True)
class UnitSpec:
    dimension: str
    units: tuple[str, ...] = ()


@dataclass(frozen=True)
class Constraint:
    entity_classes: frozenset[str] = frozenset()
    unit: UnitSpec | None = None
    equation: str = ""

    def __post_init__(self) -> None:
        if not self.entity_classes and self.unit is None and not self.equation.strip():
            raise RuleBaseError("constraint needs at least one non-empty facet")

    @classmethod
    def from_dict(cls, raw: dict[str, Any]) -> Constraint:
        unit = raw.get("unit")
        return cls(
            entity_classes=frozenset(str(t).lower() for t in raw.get("entity_classes", [])),
            unit=UnitSpec(unit["dimension"], tuple(unit.get("units", []))) if unit else None,
            equation=raw.get("equation", ""),
        )

    def to_dict(self) -> dict[str, Any]:
        out: dict[str, Any] = {}
        if self.entity_classes:
            out["entity_classes"] = sorted(self.entity_classes)
        if self.unit:
            out["unit"] = {"dimension": self.unit.dimension, "units": list(self.unit.units)}
        if self.equation:
            out["equation"] = self.equation
        return out


@dataclass(frozen=True)
class Formula:
    name: str
    expression: str
    variables: dict[str, str]

    @property
    def variable_names(self) -> frozenset[str]:
        return frozenset(equation_variables(self.expression))


def _canon_expr(text: str) -> str:
    return "".join(text.lower().replace("**", "^").split())


@dataclass
class RuleBase:
    constraints: list[Constraint] = field(default_factory=list)
    units: dict[str, str] = field(default_factory=dict)
    conversions: dict[tuple[str, str], float] = field(default_factory=dict)
    formulas: dict[str, Formula] = field(default_factory=dict)

    def __post_init__(self) -> None:
        dims = known_dimensions()
        for unit, dim in self.units.items():
            if dim not in dims:
                raise RuleBaseError(f"unit {unit!r} has unknown dimension {dim!r}")
        full: dict[tuple[str, str], float] = {}
        for (a, b), f in self.conversions.items():
            if f <= 0:
                raise RuleBaseError(f"conversion {a}->{b} must have a positive factor")
            if self.units.get(a) != self.units.get(b):
                raise RuleBaseError(f"conversion {a}->{b} crosses dimensions")
            for key, val in (((a, b), f), ((b, a), 1.0 / f)):
                if key in full and abs(full[key] - val) > 1e-12 * max(1.0, abs(val)):
                    raise RuleBaseError(f"inconsistent conversion factors for {key[0]}->{key[1]}")
                full[key] = val
        self.conversions = full
        for formula in self.formulas.values():
            try:
                check_equation(formula.expression, formula.variables)
            except (DimensionError, SyntaxError) as exc:
                raise RuleBaseError(f"formula {formula.name!r}: {exc}") from exc
        self._by_expr = {_canon_expr(f.expression): f for f in self.formulas.values()}

    @classmethod
    def from_dict(cls, raw: dict[str, Any]) -> RuleBase:
        conversions = {(c["from"], c["to"]): float(c["factor"]) for c in raw.get("conversions", [])}
        formulas = {
            f["name"]: Formula(f["name"], f["expression"], dict(f["variables"])) for f in raw.get("formulas", [])
        }
        return cls(
            constraints=[Constraint.from_dict(c) for c in raw.get("constraints", [])],
            units=dict(raw.get("units", {})),
            conversions=conversions,
            formulas=formulas,
        )

    @classmethod
    def from_file(cls, path: Path | str) -> RuleBase:
        return cls.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))

    @classmethod
    def default(cls) -> RuleBase:
        text = resources.files("iesr.understanding").joinpath("data/rules.json").read_text(encoding="utf-8")
        return cls.from_dict(json.loads(text))

    @classmethod
    def empty(cls) -> RuleBase:
        return cls()

    def with_constraints(self, constraints: list[Constraint]) -> RuleBase:
        return RuleBase(
            list(constraints),
            dict(self.units),
            {k: v for k, v in self.conversions.items()},
            dict(self.formulas),
        )

    def dimension_of(self, unit: str | None) -> str | None:
        if not unit:
            return None
        return self.units.get(unit) or self.units.get(unit.lower())

    def conversion_factor(self, a: str, b: str) -> float | None:
        """Factor f with 1 a = f b, found by breadth-first search; None if no path."""
        if a == b:
            return 1.0
        seen = {a}
        queue = deque([(a, 1.0)])
        while queue:
            unit, acc = queue.popleft()
            for (x, y), f in self.conversions.items():
                if x == unit and y not in seen:
                    if y == b:
                        return acc * f
                    seen.add(y)
                    queue.append((y, acc * f))
        return None

    def convertible(self, a: str, b: str) -> bool:
        return self.conversion_factor(a, b) is not None

    def formula_for(self, equation: str) -> Formula | None:
        if equation in self.formulas:
            return self.formulas[equation]
        return self._by_expr.get(_canon_expr(equation))


@functools.lru_cache(maxsize=1)
def default_rulebase() -> RuleBase:
    """Shared starter rule base; treat as read-only."""
    return RuleBase.default()
