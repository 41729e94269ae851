"""Conditional inference for batched adaptive experiments."""

from .model import (
    BatchRecord,
    ModelParams,
    SuffStats,
    Trajectory,
    batch_variance,
    complete_basis,
    cumulative_stats,
    efficiency_gain,
    leftover_stats,
    sufficient_stat,
)
from .policies import PolicySpec, Polyhedron, StoppingSpec, TargetSpec
from .simulator import OutcomeLaw, run_experiment_finite, run_experiment_gaussian
from .stochastics import ConstrainedGaussianProblem, GibbsConfig, seeded_stream

__version__ = "0.1.0"
