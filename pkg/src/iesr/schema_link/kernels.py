"""MinHash backend selection: compiled extension when importable, numpy otherwise.

Set ``IESR_PURE_PYTHON=1`` to force the fallback.
"""

from __future__ import annotations

import os

import numpy as np

from . import _minhash_py
from ._minhash_py import MERSENNE

BACKEND = "python"
_signatures = _minhash_py.signatures

if os.environ.get("IESR_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from . import _minhash_cy  # type: ignore[attr-defined]
    except ImportError:
        pass
    else:
        BACKEND = "cython"
        _signatures = _minhash_cy.signatures


def hash_family(k: int, seed: int) -> tuple[np.ndarray, np.ndarray]:
    """Coefficients (a, b) of k universal hashes (a*x + b) mod (2**31 - 1)."""
    rng = np.random.default_rng(seed)
    a = rng.integers(1, MERSENNE, size=k, dtype=np.uint64)
    b = rng.integers(0, MERSENNE, size=k, dtype=np.uint64)
    return a, b


def minhash_signatures(texts: list[str], ngram: int, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    if ngram < 1:
        raise ValueError("ngram must be positive")
    return _signatures(list(texts), ngram, a, b)


def python_signatures(texts: list[str], ngram: int, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return _minhash_py.signatures(list(texts), ngram, a, b)
