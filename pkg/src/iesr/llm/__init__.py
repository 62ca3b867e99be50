from .costs import CostLine, CostReport, report_costs
from .gateway import (
    ROLE_STAGE,
    STAGES,
    CallRecord,
    Completion,
    CompletionRequest,
    DiskCache,
    Gateway,
    GatewayError,
    MemoryCache,
    ModelRole,
    RoleConfig,
    SamplingParams,
    TransportError,
    UsageLedger,
    cache_key,
)
from .http import HttpBackend
from .mock import ScriptedBackend, ScriptEntry, ScriptError, ScriptExhausted, slots_digest
from .templates import DEFAULT_TEMPLATES, PromptTemplate, TemplateError, TemplateRegistry, render_template

__all__ = [
    "DEFAULT_TEMPLATES",
    "ROLE_STAGE",
    "STAGES",
    "CallRecord",
    "Completion",
    "CompletionRequest",
    "CostLine",
    "CostReport",
    "DiskCache",
    "Gateway",
    "GatewayError",
    "HttpBackend",
    "MemoryCache",
    "ModelRole",
    "PromptTemplate",
    "RoleConfig",
    "SamplingParams",
    "ScriptEntry",
    "ScriptError",
    "ScriptExhausted",
    "ScriptedBackend",
    "TemplateError",
    "TemplateRegistry",
    "TransportError",
    "UsageLedger",
    "cache_key",
    "render_template",
    "report_costs",
    "slots_digest",
]
