"""Subtractive random forests: simulation, exact series, verification."""

from .dist import DistributionSpecError, StepDistribution, make_dist
from .exact import (
    ExactSeries,
    TruncationError,
    compute_series,
    expected_leaves,
    expected_size_rooted,
    expected_size_series,
    expected_trees,
    renewal_sequence,
    survival_probability,
)
from .forest import Forest, build, from_steps, load_trace, save_trace, stats
from .harness import (
    DEFAULT_SEED,
    ExperimentConfig,
    run_experiment,
    verify_suite,
)
from .oracle import EnumerationBudgetError, enumerate_exact
from .rng import RandomStream, derive_seed

__version__ = "0.1.0"

__all__ = [
    "DistributionSpecError",
    "StepDistribution",
    "make_dist",
    "ExactSeries",
    "TruncationError",
    "compute_series",
    "expected_leaves",
    "expected_size_rooted",
    "expected_size_series",
    "expected_trees",
    "renewal_sequence",
    "survival_probability",
    "Forest",
    "build",
    "from_steps",
    "load_trace",
    "save_trace",
    "stats",
    "DEFAULT_SEED",
    "ExperimentConfig",
    "run_experiment",
    "verify_suite",
    "EnumerationBudgetError",
    "enumerate_exact",
    "RandomStream",
    "derive_seed",
    "__version__",
]
