"""AE-SAD autoencoders for semi-supervised anomaly detection."""

from ._aesad import (
    ConfigError,
    Network,
    alpha_grid,
    apply_f,
    auc,
    auc_bruteforce,
    lambda_schedule,
    per_class_auc,
    run_compare,
    run_evaluate,
    run_grid,
    run_train,
    train,
)

__all__ = [
    "ConfigError",
    "Network",
    "alpha_grid",
    "apply_f",
    "auc",
    "auc_bruteforce",
    "lambda_schedule",
    "per_class_auc",
    "run_compare",
    "run_evaluate",
    "run_grid",
    "run_train",
    "train",
]
