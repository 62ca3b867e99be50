"""Cell normalization for execution-result comparison.

Floats are snapped to a grid of width ``float_tol`` so that equality of
normalized values is a true equivalence relation (pairwise tolerance
comparison is not transitive).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Any


@dataclass(frozen=True)
class ComparePolicy:
    float_tol: float = 1e-6
    case_insensitive: bool = True
    order_sensitive: bool = False
    cross_type_numeric: bool = True
    column_order_insensitive: bool = False

    def __post_init__(self) -> None:
        if self.float_tol < 0:
            raise ValueError("float_tol must be non-negative")

    def with_order(self, order_sensitive: bool) -> ComparePolicy:
        return ComparePolicy(
            float_tol=self.float_tol,
            case_insensitive=self.case_insensitive,
            order_sensitive=order_sensitive,
            cross_type_numeric=self.cross_type_numeric,
            column_order_insensitive=self.column_order_insensitive,
        )


@dataclass(frozen=True)
class NormalizedValue:
    """One normalized cell.

    ``kind`` is one of ``null``, ``int``, ``float``, ``str``, ``bytes``.
    For ``float`` the payload is the integer grid index round(x / tol) and
    ``tol`` is the grid width (0 means the exact float is kept). NaN and
    infinities are stored as the strings ``"nan"``, ``"inf"``, ``"-inf"`` so
    that equality stays reflexive.
    """

    kind: str
    value: Any = None
    tol: float = 0.0

    def sort_key(self) -> tuple:
        rank = {"null": 0, "int": 1, "float": 1, "str": 2, "bytes": 3}[self.kind]
        if self.kind == "int":
            return (rank, float(self.value), 0)
        if self.kind == "float":
            return (rank, self._as_float(), 1)
        if self.kind == "null":
            return (rank, 0, 0)
        return (rank, self.value, 0)

    def _as_float(self) -> float:
        if isinstance(self.value, str):
            return float(self.value)
        return self.value * self.tol if self.tol else self.value

    def to_python(self) -> Any:
        if self.kind == "float":
            return self._as_float()
        return self.value

    def __repr__(self) -> str:
        return f"<{self.kind}:{self.to_python()!r}>"


NULL = NormalizedValue("null")


def _normalize_float(x: float, policy: ComparePolicy) -> NormalizedValue:
    if math.isnan(x):
        return NormalizedValue("float", "nan", 0.0)
    if math.isinf(x):
        return NormalizedValue("float", "inf" if x > 0 else "-inf", 0.0)
    tol = policy.float_tol
    if policy.cross_type_numeric:
        nearest = round(x)
        if abs(x - nearest) <= tol:
            return NormalizedValue("int", int(nearest))
    if tol == 0:
        return NormalizedValue("float", x, 0.0)
    return NormalizedValue("float", int(round(x / tol)), tol)


def normalize_cell(raw: Any, policy: ComparePolicy) -> NormalizedValue:
    if isinstance(raw, NormalizedValue):
        return raw
    if raw is None:
        return NULL
    if isinstance(raw, bool):
        return NormalizedValue("int", int(raw))
    if isinstance(raw, int):
        return NormalizedValue("int", raw)
    if isinstance(raw, float):
        return _normalize_float(raw, policy)
    if isinstance(raw, (bytes, bytearray, memoryview)):
        return NormalizedValue("bytes", bytes(raw).hex())
    text = str(raw).strip()
    if policy.case_insensitive:
        text = text.casefold()
    return NormalizedValue("str", text)
