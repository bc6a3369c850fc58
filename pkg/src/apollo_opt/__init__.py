"""Diagonal quasi-Newton optimization with rectified preconditioning,
reference baselines, benchmark objectives, and a small experiment
harness with independent verification oracles.
"""

from .apollo import (
    Apollo,
    ApolloConfig,
    ApolloState,
    apollo_step,
    apply_per_group,
    clip_by_global_norm,
    compute_alpha,
    ema_update,
    rectify,
    update_diagonal,
)
from .baselines import (
    AdamConfig,
    AdamState,
    AdamW,
    SgdConfig,
    SgdMomentum,
    SgdState,
    adamw_step,
    sgd_step,
    weight_decay_adjust,
)
from .config import ExperimentConfig, load_config
from .errors import (
    ApolloOptError,
    CheckpointError,
    ConfigError,
    DivergenceError,
    DivisionByZeroError,
    InfeasibleSecantError,
    NonFiniteEvalError,
    NonFiniteGradientError,
    ShapeMismatchError,
)
from .objectives import (
    Objective,
    make_dataset,
    make_objective,
    mlp_forward_backward,
    quadratic_bowl,
    rosenbrock,
    saddle_objective,
)
from .runner import run_experiment, run_single, run_sweep
from .schedule import LrSchedule, lr_at

__version__ = "0.1.0"

__all__ = [
    "Apollo",
    "ApolloConfig",
    "ApolloState",
    "apollo_step",
    "apply_per_group",
    "clip_by_global_norm",
    "compute_alpha",
    "ema_update",
    "rectify",
    "update_diagonal",
    "AdamConfig",
    "AdamState",
    "AdamW",
    "SgdConfig",
    "SgdMomentum",
    "SgdState",
    "adamw_step",
    "sgd_step",
    "weight_decay_adjust",
    "ExperimentConfig",
    "load_config",
    "ApolloOptError",
    "CheckpointError",
    "ConfigError",
    "DivergenceError",
    "DivisionByZeroError",
    "InfeasibleSecantError",
    "NonFiniteEvalError",
    "NonFiniteGradientError",
    "ShapeMismatchError",
    "Objective",
    "make_dataset",
    "make_objective",
    "mlp_forward_backward",
    "quadratic_bowl",
    "rosenbrock",
    "saddle_objective",
    "run_experiment",
    "run_single",
    "run_sweep",
    "LrSchedule",
    "lr_at",
    "__version__",
]
