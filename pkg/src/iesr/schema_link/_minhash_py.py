"""Pure-Python/numpy MinHash kernel (fallback for the compiled extension)."""

from __future__ import annotations

from collections.abc import Sequence

import numpy as np

MERSENNE = (1 << 31) - 1
_FNV_OFFSET = 2166136261
_FNV_PRIME = 16777619


def gram_hash(gram: str) -> int:
    """32-bit FNV-1a over code points, reduced modulo 2**31 - 1."""
    h = _FNV_OFFSET
    for ch in gram:
        h ^= ord(ch)
        h = (h * _FNV_PRIME) & 0xFFFFFFFF
    return h % MERSENNE


def gram_hashes(text: str, ngram: int) -> list[int]:
    if len(text) < ngram:
        return [gram_hash(text)]
    return [gram_hash(text[i : i + ngram]) for i in range(len(text) - ngram + 1)]


def signature(text: str, ngram: int, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    x = np.asarray(gram_hashes(text, ngram), dtype=np.uint64)
    vals = (a[:, None] * x[None, :] + b[:, None]) % np.uint64(MERSENNE)
    return vals.min(axis=1)


def signatures(texts: Sequence[str], ngram: int, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    a = np.asarray(a, dtype=np.uint64)
    b = np.asarray(b, dtype=np.uint64)
    out = np.empty((len(texts), len(a)), dtype=np.uint64)
    for i, text in enumerate(texts):
        out[i] = signature(text, ngram, a, b)
    return out
