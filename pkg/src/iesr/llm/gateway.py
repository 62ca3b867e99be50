"""Uniform access to the extractor, reasoner and discriminator models."""

from __future__ import annotations

import enum
import hashlib
import json
import logging
import os
import tempfile
import threading
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Protocol

from .templates import TemplateRegistry

log = logging.getLogger(__name__)


class ModelRole(str, enum.Enum):
    EXTRACTOR = "extractor"
    REASONER = "reasoner"
    DISCRIMINATOR = "discriminator"


ROLE_STAGE = {
    ModelRole.EXTRACTOR: "understanding",
    ModelRole.REASONER: "search",
    ModelRole.DISCRIMINATOR: "selection",
}
STAGES = ("understanding", "search", "selection")

# Unvalidated defaults; override per role in config.
DEFAULT_TEMPERATURE = {
    ModelRole.EXTRACTOR: 0.2,
    ModelRole.REASONER: 0.8,
    ModelRole.DISCRIMINATOR: 0.2,
}


class GatewayError(RuntimeError):
    pass


class TransportError(GatewayError):
    pass


@dataclass(frozen=True)
class SamplingParams:
    temperature: float = 0.0
    seed: int = 0
    max_tokens: int = 1024
    n_samples: int = 1

    def __post_init__(self) -> None:
        if self.temperature < 0:
            raise ValueError("temperature must be non-negative")
        if self.max_tokens < 1 or self.n_samples < 1:
            raise ValueError("max_tokens and n_samples must be positive")


@dataclass
class RoleConfig:
    endpoint: str | None = None
    model: str = "scripted"
    api_key_env: str | None = None
    timeout_ms: int = 60_000
    max_retries: int = 3
    temperature: float | None = None
    max_tokens: int = 1024


@dataclass(frozen=True)
class CompletionRequest:
    role: ModelRole
    model: str
    template_id: str
    slots: dict[str, str]
    system: str
    prompt: str
    params: SamplingParams


@dataclass(frozen=True)
class Completion:
    texts: list[str]
    prompt_tokens: int
    gen_tokens: int
    cached: bool = False


class Backend(Protocol):
    def generate(self, request: CompletionRequest, config: RoleConfig) -> Completion: ...


def count_tokens(text: str) -> int:
    return len(text.split())


def cache_key(role: ModelRole, model: str, prompt: str, params: SamplingParams) -> str:
    payload = json.dumps(
        {"role": role.value, "model": model, "prompt": prompt, "params": asdict(params)},
        sort_keys=True,
        ensure_ascii=False,
    )
    return hashlib.sha256(payload.encode("utf-8")).hexdigest()


class MemoryCache:
    def __init__(self) -> None:
        self._data: dict[str, Completion] = {}
        self._lock = threading.Lock()

    def get(self, key: str) -> Completion | None:
        with self._lock:
            return self._data.get(key)

    def put(self, key: str, value: Completion) -> None:
        with self._lock:
            self._data.setdefault(key, value)


class DiskCache:
    """Content-addressed JSON files: ``<cache_dir>/<key[:2]>/<key>.json``."""

    def __init__(self, cache_dir: Path | str):
        self.cache_dir = Path(cache_dir)
        self.cache_dir.mkdir(parents=True, exist_ok=True)
        self._lock = threading.Lock()

    def _path(self, key: str) -> Path:
        return self.cache_dir / key[:2] / f"{key}.json"

    def get(self, key: str) -> Completion | None:
        path = self._path(key)
        if not path.exists():
            return None
        data = json.loads(path.read_text(encoding="utf-8"))
        return Completion(data["responses"], data["prompt_tokens"], data["gen_tokens"])

    def put(self, key: str, value: Completion) -> None:
        path = self._path(key)
        with self._lock:
            if path.exists():
                return
            path.parent.mkdir(parents=True, exist_ok=True)
            payload = {"responses": value.texts, "prompt_tokens": value.prompt_tokens, "gen_tokens": value.gen_tokens}
            fd, tmp = tempfile.mkstemp(dir=path.parent, suffix=".tmp")
            with os.fdopen(fd, "w", encoding="utf-8") as fh:
                json.dump(payload, fh, ensure_ascii=False)
            os.replace(tmp, path)


@dataclass(frozen=True)
class CallRecord:
    seq: int
    role: str
    stage: str
    template_id: str
    question_id: str | None
    n_samples: int
    cached: bool
    calls: int
    prompt_tokens: int
    gen_tokens: int


@dataclass
class Counter3:
    calls: int = 0
    prompt_tokens: int = 0
    gen_tokens: int = 0

    def add(self, rec: CallRecord) -> None:
        self.calls += rec.calls
        self.prompt_tokens += rec.prompt_tokens
        self.gen_tokens += rec.gen_tokens


@dataclass
class UsageLedger:
    """Per-role, per-stage and per-question usage counters plus the raw call log."""

    by_role: dict[str, Counter3] = field(default_factory=dict)
    by_stage: dict[str, Counter3] = field(default_factory=dict)
    by_question: dict[str, Counter3] = field(default_factory=dict)
    log: list[CallRecord] = field(default_factory=list)

    def __post_init__(self) -> None:
        self._lock = threading.Lock()

    def record(self, **fields) -> CallRecord:
        with self._lock:
            rec = CallRecord(seq=len(self.log), **fields)
            self.log.append(rec)
            self.by_role.setdefault(rec.role, Counter3()).add(rec)
            self.by_stage.setdefault(rec.stage, Counter3()).add(rec)
            if rec.question_id is not None:
                self.by_question.setdefault(rec.question_id, Counter3()).add(rec)
        return rec

    def total(self) -> Counter3:
        out = Counter3()
        for c in self.by_role.values():
            out.calls += c.calls
            out.prompt_tokens += c.prompt_tokens
            out.gen_tokens += c.gen_tokens
        return out


class Gateway:
    def __init__(
        self,
        backends: dict[ModelRole, Backend] | Backend,
        roles: dict[ModelRole, RoleConfig] | None = None,
        templates: TemplateRegistry | None = None,
        cache: MemoryCache | DiskCache | None = None,
        count_cached: bool = False,
    ):
        if not isinstance(backends, dict):
            backends = {role: backends for role in ModelRole}
        self.backends = backends
        self.roles = {role: (roles or {}).get(role, RoleConfig()) for role in ModelRole}
        self.templates = templates or TemplateRegistry()
        self.cache = cache
        self.count_cached = count_cached
        self.ledger = UsageLedger()

    def default_params(self, role: ModelRole, **overrides) -> SamplingParams:
        cfg = self.roles[role]
        temperature = cfg.temperature if cfg.temperature is not None else DEFAULT_TEMPERATURE[role]
        base = {"temperature": temperature, "max_tokens": cfg.max_tokens}
        base.update(overrides)
        return SamplingParams(**base)

    def complete(
        self,
        role: ModelRole,
        template_id: str,
        slots: dict[str, str],
        params: SamplingParams | None = None,
        *,
        question_id: str | None = None,
        stage: str | None = None,
    ) -> Completion:
        role = ModelRole(role)
        if role not in self.backends:
            raise GatewayError(f"role {role.value!r} is not configured")
        template = self.templates.get(template_id)
        prompt = template.render(slots)
        params = params or self.default_params(role)
        cfg = self.roles[role]
        key = cache_key(role, cfg.model, prompt, params)

        completion = self.cache.get(key) if self.cache is not None else None
        cached = completion is not None
        if completion is None:
            request = CompletionRequest(role, cfg.model, template_id, dict(slots), template.system, prompt, params)
            completion = self.backends[role].generate(request, cfg)
            if len(completion.texts) != params.n_samples:
                raise GatewayError(f"backend returned {len(completion.texts)} samples, expected {params.n_samples}")
            if self.cache is not None:
                self.cache.put(key, completion)
        counted = not cached or self.count_cached
        self.ledger.record(
            role=role.value,
            stage=stage or ROLE_STAGE[role],
            template_id=template_id,
            question_id=question_id,
            n_samples=params.n_samples,
            cached=cached,
            calls=1 if counted else 0,
            prompt_tokens=completion.prompt_tokens if counted else 0,
            gen_tokens=completion.gen_tokens if counted else 0,
        )
        return Completion(list(completion.texts), completion.prompt_tokens, completion.gen_tokens, cached)
