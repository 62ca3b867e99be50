"""End-to-end orchestration, evaluation, perturbation, reporting and extraction scoring."""

from .config import ConfigError, ExecConfig, GatewayConfig, HarnessConfig, PipelineConfig, UnderstandingSection, build_gateway
from .evaluate import Report, build_manifest, dataset_hash, evaluate, write_run_dir
from .extraction import FieldPR, dataset_pr, extraction_pr, load_states, predicted_items
from .perturb import DecayLevel, PerturbError, PerturbResult, perturb_database
from .pipeline import CaseResult, run_pipeline
from .report import RenderedBreakdown, breakdown_report, cost_table, read_breakdown_csv
from .toy import build_toy_suite

__all__ = [
    "CaseResult",
    "ConfigError",
    "DecayLevel",
    "ExecConfig",
    "FieldPR",
    "GatewayConfig",
    "HarnessConfig",
    "PerturbError",
    "PerturbResult",
    "PipelineConfig",
    "RenderedBreakdown",
    "Report",
    "UnderstandingSection",
    "breakdown_report",
    "build_gateway",
    "build_manifest",
    "build_toy_suite",
    "cost_table",
    "dataset_hash",
    "dataset_pr",
    "evaluate",
    "extraction_pr",
    "load_states",
    "perturb_database",
    "predicted_items",
    "read_breakdown_csv",
    "run_pipeline",
    "write_run_dir",
]
