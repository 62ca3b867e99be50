"""Stable per-call seed derivation."""

from __future__ import annotations

import hashlib


def derive_seed(*parts: object) -> int:
    """31-bit seed from SHA-256 over the joined parts."""
    material = "|".join(str(p) for p in parts).encode("utf-8")
    return int.from_bytes(hashlib.sha256(material).digest()[:4], "big") & 0x7FFFFFFF
