"""Schema compression: lexical LSH filtering plus semantic ranking, closed under keys."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Any

from ..core.types import DatabaseSchema
from .lsh import LshIndex, build_lsh_index, lsh_candidates, probe_terms
from .rank import SimilarityProvider, semantic_rank

if TYPE_CHECKING:
    from ..understanding.pipeline import ValidatedState


@dataclass(frozen=True)
class CompressionConfig:
    top_k_tables: int = 6
    top_k_columns_per_table: int = 8
    ngram: int = 3
    bands: int = 24
    rows: int = 3
    seed: int = 0

    def __post_init__(self) -> None:
        if self.top_k_tables < 1 or self.top_k_columns_per_table < 1:
            raise ValueError("top_k budgets must be at least 1")


@dataclass
class CompressionResult:
    kept_tables: tuple[str, ...]
    kept_columns: dict[str, tuple[str, ...]]
    ratio: float
    scores: dict[str, float] = field(default_factory=dict)
    lsh_hits: tuple[str, ...] = ()
    forced: tuple[str, ...] = ()
    diagnostics: list[str] = field(default_factory=list)

    def __post_init__(self) -> None:
        if not 0.0 < self.ratio <= 1.0:
            raise ValueError(f"reduction ratio {self.ratio} outside (0, 1]")

    def keeps(self, element: str) -> bool:
        table, _, column = element.partition(".")
        if table not in self.kept_tables:
            return False
        return not column or column in self.kept_columns.get(table, ())

    def to_dict(self) -> dict[str, Any]:
        return {
            "kept_tables": list(self.kept_tables),
            "kept_columns": {t: list(c) for t, c in self.kept_columns.items()},
            "ratio": self.ratio,
            "scores": self.scores,
            "lsh_hits": list(self.lsh_hits),
            "forced": list(self.forced),
            "diagnostics": list(self.diagnostics),
        }


def full_selection(schema: DatabaseSchema) -> CompressionResult:
    return CompressionResult(
        tuple(t.name for t in schema.tables),
        {t.name: tuple(c.name for c in t.columns) for t in schema.tables},
        1.0,
    )


def exact_matches(schema: DatabaseSchema, patterns: list[str]) -> set[str]:
    """Elements whose key or bare name equals a pattern (case-insensitive)."""
    wanted = {p.strip().lower() for p in patterns if p.strip()}
    out: set[str] = set()
    for t in schema.tables:
        if t.name.lower() in wanted:
            out.add(t.name)
        for c in t.columns:
            key = f"{t.name}.{c.name}"
            if key.lower() in wanted:
                out.add(key)
    return out


def compress_schema(
    schema: DatabaseSchema,
    validated: ValidatedState,
    config: CompressionConfig | None = None,
    *,
    index: LshIndex | None = None,
    provider: SimilarityProvider | None = None,
) -> CompressionResult:
    """Keep high-salience tables and columns.

    Tables kept: top-k by semantic score (a table scores the max of itself and
    its columns), tables hit directly by LSH, and tables of exact pattern
    matches. Columns kept per kept table: LSH hits, top-k by score, primary
    keys, foreign-key endpoints to other kept tables, and exact matches.
    """
    config = config or CompressionConfig()
    if index is None:
        index = build_lsh_index(schema, config.ngram, config.bands, config.rows, config.seed)
    state = validated.state
    hits = lsh_candidates(index, probe_terms(validated.question.text, state))
    forced = exact_matches(schema, list(state.patterns) + [e.mention for e in state.entities if e.mention])
    diagnostics: list[str] = []
    ranked = semantic_rank(schema, schema.elements(), validated, provider, diagnostics)
    scores = dict(ranked)

    def table_score(t) -> float:
        return max([scores[t.name]] + [scores[f"{t.name}.{c.name}"] for c in t.columns])

    order = {t.name: i for i, t in enumerate(schema.tables)}
    by_score = sorted(schema.tables, key=lambda t: (-table_score(t), order[t.name]))
    kept = {t.name for t in by_score[: config.top_k_tables]}
    kept |= {t.name for t in schema.tables if t.name in hits}
    kept |= {e.partition(".")[0] for e in forced}

    low_kept = {k.lower() for k in kept}
    columns: dict[str, set[str]] = {t: set() for t in kept}
    for t in schema.tables:
        if t.name not in kept:
            continue
        cols = columns[t.name]
        col_keys = [f"{t.name}.{c.name}" for c in t.columns]
        cols.update(k.partition(".")[2] for k in col_keys if k in hits or k in forced)
        top = sorted(t.columns, key=lambda c: (-scores[f"{t.name}.{c.name}"], t.columns.index(c)))
        cols.update(c.name for c in top[: config.top_k_columns_per_table])
        cols.update(t.primary_keys)
    for fk in schema.foreign_keys:
        if fk.table.lower() in low_kept and fk.ref_table.lower() in low_kept:
            src, dst = schema.table(fk.table), schema.table(fk.ref_table)
            columns[src.name].add(src.column(fk.column).name)
            columns[dst.name].add(dst.column(fk.ref_column).name)

    kept_tables = tuple(t.name for t in schema.tables if t.name in kept)
    kept_columns = {
        t.name: tuple(c.name for c in t.columns if c.name in columns[t.name]) for t in schema.tables if t.name in kept
    }
    total = len(schema.elements())
    n_kept = len(kept_tables) + sum(len(c) for c in kept_columns.values())
    return CompressionResult(
        kept_tables,
        kept_columns,
        n_kept / total,
        scores,
        tuple(e for e in schema.elements() if e in hits),
        tuple(e for e in schema.elements() if e in forced),
        diagnostics,
    )

