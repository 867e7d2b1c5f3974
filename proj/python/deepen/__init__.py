"""Training engine for small dense networks that can insert a hidden layer
mid-training, placed by a gradient-sensitivity merit indicator."""

from ._deepen import (
    CandidatePosition,
    Dataset,
    ExtendedNetwork,
    GradientSet,
    MeritCandidate,
    MeritReport,
    NetworkSpec,
    ParamSet,
    TrainConfig,
    TrainingHistory,
    backprop,
    build_fully_extended,
    candidate_positions,
    classify,
    compute_merits,
    finite_diff_gradient,
    forward,
    gd_step,
    generate_spirals,
    init_params,
    objective,
    param_count,
    params_from_json,
    run_experiment_file,
    select_and_insert,
    split_train_test,
    test_error,
    train,
)

__all__ = [
    "CandidatePosition",
    "Dataset",
    "ExtendedNetwork",
    "GradientSet",
    "MeritCandidate",
    "MeritReport",
    "NetworkSpec",
    "ParamSet",
    "TrainConfig",
    "TrainingHistory",
    "backprop",
    "build_fully_extended",
    "candidate_positions",
    "classify",
    "compute_merits",
    "finite_diff_gradient",
    "forward",
    "gd_step",
    "generate_spirals",
    "init_params",
    "objective",
    "param_count",
    "params_from_json",
    "run_experiment_file",
    "select_and_insert",
    "split_train_test",
    "test_error",
    "train",
]
