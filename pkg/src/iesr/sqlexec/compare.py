"""Result-table equality and ORDER BY detection."""

from __future__ import annotations

import logging
import re
from collections import Counter

from ..core.normalize import ComparePolicy, NormalizedValue
from .execute import ResultTable

log = logging.getLogger(__name__)

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<line_comment>--[^\n]*)
  | (?P<block_comment>/\*.*?\*/)
  | (?P<string>'(?:[^']|'')*')
  | (?P<quoted>"(?:[^"]|"")*"|`[^`]*`|\[[^\]]*\])
  | (?P<lparen>\()
  | (?P<rparen>\))
  | (?P<word>[A-Za-z_][A-Za-z0-9_$]*)
  | (?P<other>.)
    """,
    re.VERBOSE | re.DOTALL,
)


def _depth_words(sql: str) -> list[tuple[int, str]] | None:
    """Upper-cased keywords/identifiers with their parenthesis depth; None if unbalanced."""
    words: list[tuple[int, str]] = []
    depth = 0
    for m in _TOKEN_RE.finditer(sql):
        kind = m.lastgroup
        if kind == "lparen":
            depth += 1
        elif kind == "rparen":
            depth -= 1
            if depth < 0:
                return None
        elif kind == "word":
            words.append((depth, m.group().upper()))
    if depth != 0:
        return None
    return words


def order_sensitive(sql: str) -> bool:
    """True iff the outermost query has an ORDER BY clause."""
    words = _depth_words(sql or "")
    if words is None:
        log.warning("order_sensitive: unbalanced SQL, treating as unordered: %.80s", sql)
        return False
    top = [w for d, w in words if d == 0]
    return any(a == "ORDER" and b == "BY" for a, b in zip(top, top[1:]))


def _columns(table: ResultTable) -> list[tuple[NormalizedValue, ...]]:
    return [tuple(row[j] for row in table.rows) for j in range(table.n_cols)]


def _permute(table: ResultTable, perm: tuple[int, ...]) -> ResultTable:
    return ResultTable(tuple(tuple(row[j] for j in perm) for row in table.rows), table.n_cols)


def _column_permutations(a: ResultTable, b: ResultTable, ordered: bool):
    """Yield permutations of b's columns whose per-column contents match a's."""
    a_cols, b_cols = _columns(a), _columns(b)
    sig = (lambda col: col) if ordered else (lambda col: Counter(col))
    a_sig = [sig(c) for c in a_cols]
    b_sig = [sig(c) for c in b_cols]
    n = a.n_cols

    def extend(prefix: list[int], used: set[int]):
        if len(prefix) == n:
            yield tuple(prefix)
            return
        j = len(prefix)
        for k in range(n):
            if k not in used and b_sig[k] == a_sig[j]:
                prefix.append(k)
                used.add(k)
                yield from extend(prefix, used)
                used.discard(k)
                prefix.pop()

    yield from extend([], set())


def _rows_equal(a: ResultTable, b: ResultTable, ordered: bool) -> bool:
    if ordered:
        return a.rows == b.rows
    return Counter(a.rows) == Counter(b.rows)


def results_equal(a: ResultTable, b: ResultTable, policy: ComparePolicy | None = None) -> bool:
    policy = policy or ComparePolicy()
    if a.n_cols != b.n_cols or len(a.rows) != len(b.rows):
        return False
    ordered = policy.order_sensitive
    if not policy.column_order_insensitive:
        return _rows_equal(a, b, ordered)
    return any(_rows_equal(a, _permute(b, perm), ordered) for perm in _column_permutations(a, b, ordered))
