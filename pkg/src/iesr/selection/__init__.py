from .verify import (
    MaskProbe,
    SelectionConfig,
    SelectionResult,
    TrajectoryScore,
    cluster_by_result,
    cons_vote,
    disc_conf,
    exec_signal,
    judge_consistency,
    mask_and_complete,
    probe_indices,
    run_selection,
    select_best,
)

__all__ = [
    "MaskProbe",
    "SelectionConfig",
    "SelectionResult",
    "TrajectoryScore",
    "cluster_by_result",
    "cons_vote",
    "disc_conf",
    "exec_signal",
    "judge_consistency",
    "mask_and_complete",
    "probe_indices",
    "run_selection",
    "select_best",
]
