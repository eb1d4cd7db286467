"""Randomized block coordinate descent under block Holder smoothness,
with exact-expectation oracles for checking its convergence bounds."""

from .blocks import BlockPartition
from .norms import (
    WeightedNormSpec,
    dual_exponent,
    dual_norm_oracle,
    equivalence_constants,
    extremal_direction,
    weighted_norm,
)
from .objectives import (
    ConvexityClass,
    HolderProfile,
    ObjectiveModel,
    build_objective,
    make_nonconvex_objective,
    make_power_objective,
    make_quadratic_objective,
    make_regularized_power_objective,
)
from .rbcd import NumericalError, RunTrace, SolverConfig, rbcd_step, run, run_many, sampling_distribution
from .analysis import (
    BoundSpec,
    ExponentConvention,
    Theorem,
    certify_run,
    expectation_tree,
    exact_conditional_decrease,
    level_set_radius,
    make_bound_spec,
)

__version__ = "0.1.0"
