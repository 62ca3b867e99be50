"""Dimensional analysis for rule-base formulas."""

from __future__ import annotations

import ast
from collections.abc import Mapping

Dim = tuple[tuple[str, int], ...]

# Base symbols: L length, T time, M mass, C currency, K temperature.
_BASE: dict[str, dict[str, int]] = {
    "dimensionless": {},
    "ratio": {},
    "count": {},
    "length": {"L": 1},
    "time": {"T": 1},
    "mass": {"M": 1},
    "currency": {"C": 1},
    "temperature": {"K": 1},
    "area": {"L": 2},
    "volume": {"L": 3},
    "speed": {"L": 1, "T": -1},
    "acceleration": {"L": 1, "T": -2},
    "frequency": {"T": -1},
    "force": {"M": 1, "L": 1, "T": -2},
    "momentum": {"M": 1, "L": 1, "T": -1},
    "energy": {"M": 1, "L": 2, "T": -2},
    "power": {"M": 1, "L": 2, "T": -3},
    "pressure": {"M": 1, "L": -1, "T": -2},
    "density": {"M": 1, "L": -3},
    "energy_price": {"C": 1, "M": -1, "L": -2, "T": 2},
}


class DimensionError(ValueError):
    pass


def _freeze(d: Mapping[str, int]) -> Dim:
    return tuple(sorted((k, v) for k, v in d.items() if v))


def dimension(tag: str) -> Dim:
    try:
        return _freeze(_BASE[tag])
    except KeyError:
        raise DimensionError(f"unknown dimension {tag!r}") from None


def known_dimensions() -> set[str]:
    return set(_BASE)


def _combine(a: Dim, b: Dim, sign: int) -> Dim:
    out = dict(a)
    for k, v in b:
        out[k] = out.get(k, 0) + sign * v
    return _freeze(out)


def _scale(a: Dim, factor: float) -> Dim:
    scaled = {}
    for k, v in a:
        p = v * factor
        if p != int(p):
            raise DimensionError("fractional dimension exponent")
        scaled[k] = int(p)
    return _freeze(scaled)


def _const(node: ast.AST) -> float | None:
    if isinstance(node, ast.Constant) and isinstance(node.value, (int, float)):
        return float(node.value)
    if isinstance(node, ast.UnaryOp) and isinstance(node.op, (ast.USub, ast.UAdd)):
        inner = _const(node.operand)
        if inner is not None:
            return -inner if isinstance(node.op, ast.USub) else inner
    return None


def expression_dimension(expr: str | ast.AST, variables: Mapping[str, str]) -> Dim:
    node = ast.parse(expr.replace("^", "**"), mode="eval").body if isinstance(expr, str) else expr

    def walk(n: ast.AST) -> Dim:
        if isinstance(n, ast.Name):
            if n.id not in variables:
                raise DimensionError(f"variable {n.id!r} has no declared dimension")
            return dimension(variables[n.id])
        if isinstance(n, ast.Constant) and isinstance(n.value, (int, float)):
            return ()
        if isinstance(n, ast.UnaryOp):
            return walk(n.operand)
        if isinstance(n, ast.BinOp):
            left = walk(n.left)
            if isinstance(n.op, ast.Pow):
                exponent = _const(n.right)
                if exponent is not None:
                    return _scale(left, exponent)
                if left or walk(n.right):
                    raise DimensionError("non-constant exponent needs dimensionless operands")
                return ()
            right = walk(n.right)
            if isinstance(n.op, (ast.Add, ast.Sub)):
                if left != right:
                    raise DimensionError("adding quantities of different dimension")
                return left
            if isinstance(n.op, ast.Mult):
                return _combine(left, right, 1)
            if isinstance(n.op, ast.Div):
                return _combine(left, right, -1)
        raise DimensionError(f"unsupported expression node {type(n).__name__}")

    return walk(node)


def split_equation(equation: str) -> tuple[str, str]:
    if equation.count("=") != 1:
        raise DimensionError(f"formula must have exactly one '=': {equation!r}")
    lhs, rhs = (s.strip() for s in equation.split("="))
    return lhs, rhs


def equation_variables(equation: str) -> set[str]:
    """Identifier names appearing on either side of ``lhs = rhs`` (or a bare expression)."""
    parts = split_equation(equation) if "=" in equation else (equation,)
    names: set[str] = set()
    for part in parts:
        try:
            tree = ast.parse(part.replace("^", "**"), mode="eval")
        except SyntaxError:
            continue
        names.update(n.id for n in ast.walk(tree) if isinstance(n, ast.Name))
    return names


def check_equation(equation: str, variables: Mapping[str, str]) -> None:
    lhs, rhs = split_equation(equation)
    if expression_dimension(lhs, variables) != expression_dimension(rhs, variables):
        raise DimensionError(f"dimensionally inconsistent formula: {equation!r}")
