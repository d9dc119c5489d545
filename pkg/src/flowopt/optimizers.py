"""Name registry for the chain-plan optimizers.

Every entry takes (flow, initial=None) and returns a chain plan; entries
that do not use a starting plan ignore the argument. Names match the
command-line vocabulary, with underscore aliases for the library-style
spellings.
"""

from __future__ import annotations

from typing import Callable

from .core import FlowSpec, LinearPlan
from . import exact, heuristics, rankorder

LinearOptimizer = Callable[..., LinearPlan]


def _kbz_from_reduction(flow: FlowSpec, initial: LinearPlan | None = None) -> LinearPlan:
    tree = rankorder.ConstraintTree.from_reduction(flow)
    return rankorder.kbz(flow, tree)


def _registry(force: bool, timeout_s: float | None) -> dict[str, LinearOptimizer]:
    return {
        "backtracking": lambda flow, initial=None: exact.backtracking(
            flow, force=force, timeout_s=timeout_s
        ),
        "dp": lambda flow, initial=None: exact.dynamic_programming(
            flow, force=force, timeout_s=timeout_s
        ),
        "topsort": lambda flow, initial=None: exact.topsort_enumerate(
            flow, timeout_s=timeout_s
        ),
        "swap": lambda flow, initial=None: heuristics.swap_opt(flow, initial),
        "greedy1": lambda flow, initial=None: heuristics.greedy_i(flow),
        "greedy2": lambda flow, initial=None: heuristics.greedy_ii(flow),
        "partition": lambda flow, initial=None: heuristics.partition(
            flow, force=force
        ),
        "kbz": _kbz_from_reduction,
        "ro1": lambda flow, initial=None: rankorder.ro_i(flow),
        "ro2": lambda flow, initial=None: rankorder.ro_ii(flow),
        "ro3": lambda flow, initial=None: rankorder.ro_iii(flow),
    }


ALIASES = {
    "greedy_i": "greedy1",
    "greedy_ii": "greedy2",
    "ro_i": "ro1",
    "ro_ii": "ro2",
    "ro_iii": "ro3",
    "exact": "dp",
}

LINEAR_OPTIMIZER_NAMES = tuple(_registry(False, None).keys())


def linear_optimizer(
    name: str, *, force: bool = False, timeout_s: float | None = None
) -> LinearOptimizer:
    """Resolve an optimizer name to a (flow, initial=None) callable."""
    canonical = ALIASES.get(name, name)
    registry = _registry(force, timeout_s)
    try:
        return registry[canonical]
    except KeyError:
        known = ", ".join(sorted(list(registry) + list(ALIASES)))
        raise ValueError(f"unknown optimizer {name!r}; known: {known}") from None
