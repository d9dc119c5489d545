"""Cost-based re-ordering of precedence-constrained data-flow tasks.

The cost of a plan is the sum over tasks of (tuples reaching the task
per source tuple) x (cost per tuple), so pushing selective tasks early
and keeping expansive ones late or side by side is what optimization
means here. Exact algorithms live in flowopt.exact, approximations in
flowopt.heuristics and flowopt.rankorder, DAG-shaped plans in
flowopt.parallel and flowopt.mimo, synthetic inputs in
flowopt.generator, and the CLI plus file formats in flowopt.workbench.
"""

from .core import (
    ClusterTooLargeError,
    ConfigError,
    CostModel,
    CycleError,
    FlowError,
    FlowSpec,
    InvalidPlanError,
    LinearPlan,
    NotATreeError,
    OptimizerTimeout,
    PlanDag,
    PrecedenceGraph,
    SizeLimitExceeded,
    Task,
    UnknownTaskError,
    Violation,
    input_cardinality,
    random_valid_plan,
    restrict,
    scm,
    transitive_closure,
    validate,
)

__all__ = [
    "ClusterTooLargeError",
    "ConfigError",
    "CostModel",
    "CycleError",
    "FlowError",
    "FlowSpec",
    "InvalidPlanError",
    "LinearPlan",
    "NotATreeError",
    "OptimizerTimeout",
    "PlanDag",
    "PrecedenceGraph",
    "SizeLimitExceeded",
    "Task",
    "UnknownTaskError",
    "Violation",
    "input_cardinality",
    "random_valid_plan",
    "restrict",
    "scm",
    "transitive_closure",
    "validate",
]

__version__ = "0.1.0"
