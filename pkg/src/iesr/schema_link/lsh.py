"""MinHash LSH over character n-grams of schema element names and descriptions."""

from __future__ import annotations

import json
import re
from collections import defaultdict
from dataclasses import dataclass, field
from pathlib import Path
from typing import TYPE_CHECKING

import numpy as np

from ..core.types import DatabaseSchema
from .kernels import hash_family, minhash_signatures

if TYPE_CHECKING:
    from ..understanding.state import SemanticState

INDEX_VERSION = 1

_NON_ALNUM = re.compile(r"[^a-z0-9]+")
STOPWORDS = frozenset(
    """a an and are as at be by did do does each every for from had has have how in is it its
    list many much of on or per show than that the their them there these this those to total
    was were what when where which who whom whose with give find number all any between more
    most least over under after before into out than then also same other each""".split()
)


def normalize_text(text: str) -> str:
    return _NON_ALNUM.sub(" ", text.lower()).strip()


def ngrams(text: str, n: int) -> frozenset[str]:
    if len(text) < n:
        return frozenset({text})
    return frozenset(text[i : i + n] for i in range(len(text) - n + 1))


def ngram_jaccard(a: str, b: str, n: int = 3) -> float:
    ga, gb = ngrams(normalize_text(a), n), ngrams(normalize_text(b), n)
    return len(ga & gb) / len(ga | gb)


def element_texts(schema: DatabaseSchema) -> list[tuple[str, str]]:
    """(element key, normalized text) pairs to index.

    Each element contributes its full name, each name token of 3+ characters,
    and name plus description, so an exact name probe always collides.
    """
    out: list[tuple[str, str]] = []

    def add(key: str, name: str, description: str) -> None:
        base = normalize_text(name)
        texts = [base] + [t for t in base.split() if len(t) >= 3]
        if description:
            texts.append(normalize_text(f"{name} {description}"))
        seen: set[str] = set()
        for text in texts:
            if text and text not in seen:
                seen.add(text)
                out.append((key, text))

    for t in schema.tables:
        add(t.name, t.name, t.description)
        for c in t.columns:
            add(f"{t.name}.{c.name}", c.name, c.description)
    return out


@dataclass
class LshIndex:
    db_id: str
    ngram: int
    bands: int
    rows: int
    seed: int
    entries: list[tuple[str, str]]
    signatures: np.ndarray
    buckets: list[dict[bytes, set[str]]] = field(default_factory=list, repr=False)

    def __post_init__(self) -> None:
        self._a, self._b = hash_family(self.bands * self.rows, self.seed)
        if not self.buckets:
            self.buckets = [defaultdict(set) for _ in range(self.bands)]
            for (key, _), sig in zip(self.entries, self.signatures):
                for band, bkey in enumerate(self._band_keys(sig)):
                    self.buckets[band][bkey].add(key)

    @property
    def elements(self) -> list[str]:
        return list(dict.fromkeys(k for k, _ in self.entries))

    def _band_keys(self, sig: np.ndarray) -> list[bytes]:
        # raw bytes of each band slice: equal bands give equal keys
        return [row.tobytes() for row in np.ascontiguousarray(sig, dtype=np.uint64).reshape(self.bands, self.rows)]

    def signature(self, text: str) -> np.ndarray:
        return minhash_signatures([normalize_text(text)], self.ngram, self._a, self._b)[0]

    def query(self, text: str) -> set[str]:
        norm = normalize_text(text)
        if not norm:
            return set()
        sig = minhash_signatures([norm], self.ngram, self._a, self._b)[0]
        hits: set[str] = set()
        for band, bkey in enumerate(self._band_keys(sig)):
            hits |= self.buckets[band].get(bkey, set())
        return hits

    def to_dict(self) -> dict:
        return {
            "version": INDEX_VERSION,
            "db_id": self.db_id,
            "ngram": self.ngram,
            "bands": self.bands,
            "rows": self.rows,
            "seed": self.seed,
            "entries": [list(e) for e in self.entries],
            "signatures": self.signatures.tolist(),
        }

    def save(self, path: Path | str) -> None:
        Path(path).write_text(json.dumps(self.to_dict()), encoding="utf-8")

    @classmethod
    def load(cls, path: Path | str) -> LshIndex:
        raw = json.loads(Path(path).read_text(encoding="utf-8"))
        if raw.get("version") != INDEX_VERSION:
            raise ValueError(f"unsupported index version {raw.get('version')!r}")
        k = raw["bands"] * raw["rows"]
        sig = np.asarray(raw["signatures"], dtype=np.uint64).reshape(-1, k)
        return cls(
            raw["db_id"], raw["ngram"], raw["bands"], raw["rows"], raw["seed"],
            [tuple(e) for e in raw["entries"]], sig,
        )


def build_lsh_index(
    schema: DatabaseSchema, ngram: int = 3, bands: int = 24, rows: int = 3, seed: int = 0
) -> LshIndex:
    if ngram < 1 or bands < 1 or rows < 1:
        raise ValueError("ngram, bands and rows must be positive")
    entries = element_texts(schema)
    a, b = hash_family(bands * rows, seed)
    sig = minhash_signatures([t for _, t in entries], ngram, a, b)
    return LshIndex(schema.db_id, ngram, bands, rows, seed, entries, sig)


def lsh_candidates(index: LshIndex, probe_terms: list[str]) -> set[str]:
    found: set[str] = set()
    for term in probe_terms:
        found |= index.query(term)
    return found


def probe_terms(question_text: str, state: SemanticState | None = None) -> list[str]:
    """Question content words and word bigrams, plus state entities and patterns."""
    words = [w for w in normalize_text(question_text).split() if w not in STOPWORDS and not w.isdigit()]
    terms = [w for w in words if len(w) >= 3]
    terms += [f"{a} {b}" for a, b in zip(words, words[1:])]
    if state is not None:
        for ent in state.entities:
            terms.append(ent.surface)
            if ent.mention:
                terms.append(ent.mention)
                terms.append(ent.mention.rsplit(".", 1)[-1])
        for pat in state.patterns:
            terms.append(pat)
            terms.append(pat.rsplit(".", 1)[-1])
    return list(dict.fromkeys(t for t in (normalize_text(x) for x in terms) if t))
