"""Declarative run configuration (one JSON document with one section per stage)."""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

from ..core.normalize import ComparePolicy
from ..llm.gateway import DiskCache, Gateway, MemoryCache, ModelRole, RoleConfig
from ..schema_link.compress import CompressionConfig
from ..search.mcts import SearchConfig
from ..selection.verify import SelectionConfig
from ..understanding.pipeline import UnderstandingConfig

SECTIONS = ("gateway", "understanding", "schema_link", "search", "selection", "exec", "harness")


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class GatewayConfig:
    roles: dict[str, RoleConfig] = field(default_factory=dict)
    mock_script: str | None = None
    cache: str = "none"  # none | memory | disk
    cache_dir: str | None = None
    count_cached: bool = False

    def __post_init__(self) -> None:
        if self.cache not in ("none", "memory", "disk"):
            raise ConfigError("gateway.cache must be none, memory or disk")
        if self.cache == "disk" and not self.cache_dir:
            raise ConfigError("gateway.cache_dir is required for the disk cache")
        unknown = set(self.roles) - {r.value for r in ModelRole}
        if unknown:
            raise ConfigError(f"unknown gateway roles: {sorted(unknown)}")


@dataclass(frozen=True)
class UnderstandingSection:
    delta_match: float = 0.3
    tau: float = 0.5
    max_extraction_rounds: int = 2
    llm_soft_check: bool = False
    rules_file: str | None = None

    def stage_config(self) -> UnderstandingConfig:
        return UnderstandingConfig(self.delta_match, self.tau, self.max_extraction_rounds, self.llm_soft_check)


@dataclass(frozen=True)
class ExecConfig:
    timeout_ms: int = 30_000
    float_tol: float = 1e-6
    case_insensitive: bool = True
    cross_type_numeric: bool = True
    column_order_insensitive: bool = False

    def policy(self) -> ComparePolicy:
        return ComparePolicy(
            float_tol=self.float_tol,
            case_insensitive=self.case_insensitive,
            cross_type_numeric=self.cross_type_numeric,
            column_order_insensitive=self.column_order_insensitive,
        )


@dataclass(frozen=True)
class HarnessConfig:
    workers: int = 1
    understanding: bool = True
    compression: bool = True
    selection: bool = True

    def __post_init__(self) -> None:
        if self.workers < 1:
            raise ConfigError("harness.workers must be at least 1")


@dataclass(frozen=True)
class PipelineConfig:
    gateway: GatewayConfig = field(default_factory=GatewayConfig)
    understanding: UnderstandingSection = field(default_factory=UnderstandingSection)
    schema_link: CompressionConfig = field(default_factory=CompressionConfig)
    search: SearchConfig = field(default_factory=SearchConfig)
    selection: SelectionConfig = field(default_factory=SelectionConfig)
    exec: ExecConfig = field(default_factory=ExecConfig)
    harness: HarnessConfig = field(default_factory=HarnessConfig)

    def __post_init__(self) -> None:
        self.understanding.stage_config()

    @classmethod
    def from_dict(cls, raw: dict[str, Any]) -> PipelineConfig:
        unknown = set(raw) - set(SECTIONS)
        if unknown:
            raise ConfigError(f"unknown config sections: {sorted(unknown)}")
        kwargs: dict[str, Any] = {}
        for f in dataclasses.fields(cls):
            section = dict(raw.get(f.name, {}))
            if f.name == "gateway":
                roles = {k: _build(RoleConfig, v, f"gateway.roles.{k}") for k, v in section.pop("roles", {}).items()}
                kwargs[f.name] = _build(GatewayConfig, {**section, "roles": roles}, "gateway")
            else:
                target = f.default_factory  # type: ignore[misc]
                if "enabled_actions" in section:
                    section["enabled_actions"] = tuple(section["enabled_actions"])
                kwargs[f.name] = _build(target, section, f.name)
        return cls(**kwargs)

    @classmethod
    def from_file(cls, path: Path | str) -> PipelineConfig:
        try:
            raw = json.loads(Path(path).read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: invalid JSON ({exc})") from exc
        return cls.from_dict(raw)

    def to_dict(self) -> dict[str, Any]:
        return json.loads(json.dumps(dataclasses.asdict(self)))

    def replace(self, section: str, **changes: Any) -> PipelineConfig:
        return dataclasses.replace(self, **{section: dataclasses.replace(getattr(self, section), **changes)})


def _build(cls, values: dict[str, Any], where: str):
    names = {f.name for f in dataclasses.fields(cls)}
    unknown = set(values) - names
    if unknown:
        raise ConfigError(f"{where}: unknown keys {sorted(unknown)}")
    try:
        return cls(**values)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{where}: {exc}") from exc


def build_gateway(config: GatewayConfig, mock_script: Path | str | None = None) -> Gateway:
    """Scripted backend when a script is given (argument or config), HTTP otherwise."""
    roles = {ModelRole(k): v for k, v in config.roles.items()}
    script = mock_script or config.mock_script
    if script:
        from ..llm.mock import ScriptedBackend

        backend = ScriptedBackend.from_file(script)
    else:
        from ..llm.http import HttpBackend

        missing = [r.value for r in ModelRole if not (roles.get(r) and roles[r].endpoint)]
        if missing:
            raise ConfigError(f"no endpoint configured for roles {missing} and no mock script given")
        backend = HttpBackend()
    cache = None
    if config.cache == "memory":
        cache = MemoryCache()
    elif config.cache == "disk":
        cache = DiskCache(config.cache_dir)
    return Gateway(backend, roles, cache=cache, count_cached=config.count_cached)
