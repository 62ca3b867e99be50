"""Deterministic scripted backend for tests and offline runs.

A script is a JSON document::

    {"entries": [
        {"template": "sql-generation",
         "match": {"question": "How many trips?"},
         "responses": ["```sql\\nSELECT COUNT(*) FROM trips\\n```"],
         "cycle": true},
        {"template": "sql-revision", "match": {"question": "..."},
         "choices": [{"text": "...", "weight": 0.6}, {"text": "...", "weight": 0.4}]}
    ]}

Lookup order for a request: entries keyed by the digest of *all* slots
(``"slots_digest"``), then entries whose ``match`` slots all equal the
request's (more match keys first, then file order), then template-wide
entries without ``match``. ``responses`` is an ordered queue; it raises
:class:`ScriptExhausted` when empty unless ``cycle`` is set. ``choices`` are
drawn with an RNG seeded from the request key and sampling seed, so draws do
not depend on call order.
"""

from __future__ import annotations

import hashlib
import json
import random
import threading
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

from .gateway import Completion, CompletionRequest, GatewayError, RoleConfig, count_tokens


class ScriptError(GatewayError):
    pass


class ScriptExhausted(ScriptError):
    pass


def slots_digest(slots: dict[str, str]) -> str:
    payload = json.dumps({k: str(v) for k, v in slots.items()}, sort_keys=True, ensure_ascii=False)
    return hashlib.sha256(payload.encode("utf-8")).hexdigest()


@dataclass
class ScriptEntry:
    template: str
    match: dict[str, str] = field(default_factory=dict)
    slots_digest: str | None = None
    role: str | None = None
    responses: list[str] = field(default_factory=list)
    choices: list[tuple[str, float]] = field(default_factory=list)
    cycle: bool = False
    position: int = 0

    def __post_init__(self) -> None:
        if bool(self.responses) == bool(self.choices):
            raise ScriptError(f"entry for {self.template!r} needs exactly one of responses/choices")
        if self.choices and any(w < 0 for _, w in self.choices):
            raise ScriptError("choice weights must be non-negative")

    @classmethod
    def from_dict(cls, raw: dict[str, Any]) -> ScriptEntry:
        choices = [(c["text"], float(c.get("weight", 1.0))) for c in raw.get("choices", [])]
        return cls(
            template=raw["template"],
            match={k: str(v) for k, v in raw.get("match", {}).items()},
            slots_digest=raw.get("slots_digest"),
            role=raw.get("role"),
            responses=list(raw.get("responses", [])),
            choices=choices,
            cycle=bool(raw.get("cycle", False)),
        )

    def to_dict(self) -> dict[str, Any]:
        out: dict[str, Any] = {"template": self.template}
        if self.role:
            out["role"] = self.role
        if self.match:
            out["match"] = self.match
        if self.slots_digest:
            out["slots_digest"] = self.slots_digest
        if self.responses:
            out["responses"] = self.responses
            if self.cycle:
                out["cycle"] = True
        else:
            out["choices"] = [{"text": t, "weight": w} for t, w in self.choices]
        return out

    def applies(self, request: CompletionRequest) -> bool:
        if self.template != request.template_id:
            return False
        if self.role and self.role != request.role.value:
            return False
        if self.slots_digest:
            return self.slots_digest == slots_digest(request.slots)
        return all(str(request.slots.get(k)) == v for k, v in self.match.items())

    def specificity(self) -> int:
        if self.slots_digest:
            return 1_000_000
        return len(self.match)


class ScriptedBackend:
    def __init__(self, entries: list[ScriptEntry]):
        self.entries = entries
        self._lock = threading.Lock()
        self.requests: list[CompletionRequest] = []

    @classmethod
    def from_file(cls, path: Path | str) -> ScriptedBackend:
        return cls.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> ScriptedBackend:
        return cls([ScriptEntry.from_dict(e) for e in data.get("entries", [])])

    def to_dict(self) -> dict[str, Any]:
        return {"entries": [e.to_dict() for e in self.entries]}

    def _find(self, request: CompletionRequest) -> ScriptEntry:
        candidates = [(i, e) for i, e in enumerate(self.entries) if e.applies(request)]
        if not candidates:
            raise ScriptError(
                f"no scripted response for template {request.template_id!r} "
                f"(slots digest {slots_digest(request.slots)[:12]})"
            )
        candidates.sort(key=lambda ie: (-ie[1].specificity(), ie[0]))
        return candidates[0][1]

    def _draw(self, entry: ScriptEntry, request: CompletionRequest, k: int) -> list[str]:
        seed_material = f"{slots_digest(request.slots)}|{request.template_id}|{request.params.seed}"
        rng = random.Random(int.from_bytes(hashlib.sha256(seed_material.encode()).digest()[:8], "big"))
        texts = [t for t, _ in entry.choices]
        weights = [w for _, w in entry.choices]
        return rng.choices(texts, weights=weights, k=k)

    def generate(self, request: CompletionRequest, config: RoleConfig) -> Completion:
        n = request.params.n_samples
        with self._lock:
            self.requests.append(request)
            entry = self._find(request)
            if entry.choices:
                texts = self._draw(entry, request, n)
            else:
                texts = []
                for _ in range(n):
                    if entry.position >= len(entry.responses):
                        if not entry.cycle:
                            raise ScriptExhausted(f"script exhausted for template {request.template_id!r}")
                        entry.position = 0
                    texts.append(entry.responses[entry.position])
                    entry.position += 1
        prompt_tokens = count_tokens(request.system) + count_tokens(request.prompt)
        return Completion(texts, prompt_tokens, sum(count_tokens(t) for t in texts))
