"""Semantic relevance of schema elements to a validated question state."""

from __future__ import annotations

import logging
import math
from collections import Counter
from collections.abc import Callable, Sequence
from typing import TYPE_CHECKING, Protocol

from ..core.types import DatabaseSchema
from .lsh import normalize_text

if TYPE_CHECKING:
    from ..understanding.pipeline import ValidatedState

log = logging.getLogger(__name__)


def stem(word: str) -> str:
    if len(word) > 3 and word.endswith("ies"):
        return word[:-3] + "y"
    if len(word) > 3 and word.endswith("s") and not word.endswith("ss"):
        return word[:-1]
    return word


def term_counts(text: str) -> Counter[str]:
    return Counter(stem(w) for w in normalize_text(text).split())


def tf_cosine(a: Counter[str], b: Counter[str]) -> float:
    dot = sum(v * b[k] for k, v in a.items() if k in b)
    if not dot:
        return 0.0
    na = math.sqrt(sum(v * v for v in a.values()))
    nb = math.sqrt(sum(v * v for v in b.values()))
    return min(1.0, dot / (na * nb))


class SimilarityProvider(Protocol):
    def score(self, query: str, documents: Sequence[str]) -> list[float]: ...


class LexicalProvider:
    """Cosine over term-frequency vectors; the offline default."""

    name = "tf-cosine"

    def score(self, query: str, documents: Sequence[str]) -> list[float]:
        q = term_counts(query)
        return [tf_cosine(q, term_counts(d)) for d in documents]


class EmbeddingProvider:
    """Cosine over embedding vectors, clipped to [0, 1].

    ``embed`` maps a list of texts to a list of equal-length vectors.
    """

    name = "embedding"

    def __init__(self, embed: Callable[[list[str]], list[list[float]]]):
        self.embed = embed

    def score(self, query: str, documents: Sequence[str]) -> list[float]:
        vecs = self.embed([query, *documents])
        if len(vecs) != len(documents) + 1:
            raise ValueError("embedding provider returned the wrong number of vectors")
        q = vecs[0]
        qn = math.sqrt(sum(x * x for x in q)) or 1.0
        out = []
        for v in vecs[1:]:
            vn = math.sqrt(sum(x * x for x in v)) or 1.0
            out.append(max(0.0, min(1.0, sum(x * y for x, y in zip(q, v)) / (qn * vn))))
        return out


def element_documents(schema: DatabaseSchema) -> dict[str, str]:
    docs: dict[str, str] = {}
    for t in schema.tables:
        docs[t.name] = f"{t.name} {t.description}"
        for c in t.columns:
            docs[f"{t.name}.{c.name}"] = f"{c.name} {c.description} {c.unit or ''}"
    return docs


def query_text(validated: ValidatedState) -> str:
    state = validated.state
    parts = [validated.question.text]
    parts += [e.surface for e in state.entities]
    parts += [e.mention for e in state.entities if e.mention]
    parts += [r.text for r in validated.r_high]
    parts += list(state.patterns)
    return " ".join(parts)


def semantic_rank(
    schema: DatabaseSchema,
    candidates: Sequence[str],
    validated: ValidatedState,
    provider: SimilarityProvider | None = None,
    diagnostics: list[str] | None = None,
) -> list[tuple[str, float]]:
    """Candidates by descending score, ties in schema order."""
    if not candidates:
        return []
    docs = element_documents(schema)
    order = {k: i for i, k in enumerate(schema.elements())}
    texts = [docs[c] for c in candidates]
    query = query_text(validated)
    provider = provider or LexicalProvider()
    try:
        scores = provider.score(query, texts)
        if len(scores) != len(texts):
            raise ValueError("provider returned the wrong number of scores")
    except Exception as exc:  # noqa: BLE001 - any provider failure falls back
        msg = f"similarity provider failed ({exc}); using lexical fallback"
        log.warning(msg)
        if diagnostics is not None:
            diagnostics.append(msg)
        scores = LexicalProvider().score(query, texts)
    ranked = sorted(zip(candidates, scores), key=lambda kv: (-kv[1], order[kv[0]]))
    return [(k, float(s)) for k, s in ranked]
