"""Synthetic flow generation for benchmarks.

Task costs are drawn from [1, 100] and selectivities from (0, 2], either
uniformly or from a scaled beta distribution. Constraints are produced by
fixing a hidden random total order and adding random forward pairs,
re-closing transitively, until the closure first reaches the requested
fraction of the n(n-1)/2 possible pairs. The fraction therefore counts
closure edges: a fully constrained flow has all n(n-1)/2 of them and a
single admissible ordering.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass, replace

from .core import ConfigError, FlowSpec, PrecedenceGraph, Task

_SEL_EPS = 1e-9

DISTRIBUTIONS = ("uniform", "beta")


@dataclass(frozen=True)
class GenConfig:
    """Parameters for one synthetic flow."""

    n: int
    pc_fraction: float
    cost_dist: str = "uniform"
    sel_dist: str = "uniform"
    beta_a: float = 0.5
    beta_b: float = 0.5
    seed: int = 0

    def __post_init__(self) -> None:
        if self.n < 1:
            raise ConfigError(f"n must be >= 1, got {self.n}")
        if not (0.0 <= self.pc_fraction <= 0.98):
            raise ConfigError(
                f"pc_fraction must lie in [0, 0.98], got {self.pc_fraction}"
            )
        for name, dist in (("cost_dist", self.cost_dist), ("sel_dist", self.sel_dist)):
            if dist not in DISTRIBUTIONS:
                raise ConfigError(f"{name} must be one of {DISTRIBUTIONS}, got {dist!r}")
        if self.beta_a <= 0 or self.beta_b <= 0:
            raise ConfigError("beta parameters must be positive")

    def with_seed(self, seed: int) -> "GenConfig":
        return replace(self, seed=seed)


def _draw_cost(rng: random.Random, config: GenConfig) -> float:
    if config.cost_dist == "uniform":
        return rng.uniform(1.0, 100.0)
    x = rng.betavariate(config.beta_a, config.beta_b)
    return 1.0 + 99.0 * x


def _draw_sel(rng: random.Random, config: GenConfig) -> float:
    if config.sel_dist == "uniform":
        # 2 - U[0, 2) lands in (0, 2]; the epsilon guard is belt and braces.
        return max(2.0 - rng.uniform(0.0, 2.0), _SEL_EPS)
    x = rng.betavariate(config.beta_a, config.beta_b)
    return _SEL_EPS + (2.0 - _SEL_EPS) * x


def draw_tasks(rng: random.Random, ids: list[int], config: GenConfig) -> list[Task]:
    """Draw cost/selectivity pairs for the given ids, in id order."""
    return [
        Task(id=tid, cost=_draw_cost(rng, config), selectivity=_draw_sel(rng, config))
        for tid in ids
    ]


def random_closed_constraints(
    rng: random.Random, ids: list[int], pc_fraction: float
) -> set[tuple[int, int]]:
    """Random transitively closed constraint set over the given ids.

    Adds forward pairs (relative to a hidden random total order) one at a
    time, tracking the closure, until the closure size first reaches
    ceil(pc_fraction * n(n-1)/2). Each accepted pair is required to keep
    the overshoot within n extra edges, which is always satisfiable.
    """
    n = len(ids)
    total_pairs = n * (n - 1) // 2
    # Guard against float fuzz such as 0.4 * 190 = 76.0000...04.
    target = math.ceil(pc_fraction * total_pairs - 1e-9)
    if n < 2 or target == 0:
        return set()

    hidden = list(ids)
    rng.shuffle(hidden)
    pos = {tid: k for k, tid in enumerate(hidden)}

    # Bitmasks over hidden positions.
    desc = [0] * n
    anc = [0] * n
    count = 0

    def delta_of(i: int, j: int) -> int:
        """Closure edges a new i -> j pair would add."""
        new_desc = (desc[j] | 1 << j) & ~desc[i]
        gained = 0
        src = anc[i] | 1 << i
        while src:
            low = src & -src
            k = low.bit_length() - 1
            gained += bin(new_desc & ~desc[k]).count("1")
            src ^= low
        return gained

    def apply(i: int, j: int) -> int:
        gained = 0
        add = desc[j] | 1 << j
        src = anc[i] | 1 << i
        targets = [k for k in range(n) if add >> k & 1]
        while src:
            low = src & -src
            k = low.bit_length() - 1
            new_bits = add & ~desc[k]
            gained += bin(new_bits).count("1")
            desc[k] |= new_bits
            src ^= low
        for k in targets:
            anc[k] |= anc[i] | 1 << i
        return gained

    while count < target:
        budget = target + n - count
        placed = False
        for _ in range(64):
            i = rng.randrange(n - 1)
            j = rng.randrange(i + 1, n)
            if desc[i] >> j & 1:
                continue
            if delta_of(i, j) <= budget:
                count += apply(i, j)
                placed = True
                break
        if not placed:
            # Deterministic fallback: the highest missing pair adds at most
            # n closure edges, so it always fits the budget.
            done = False
            for j in range(n - 1, 0, -1):
                for i in range(j - 1, -1, -1):
                    if not desc[i] >> j & 1:
                        count += apply(i, j)
                        done = True
                        break
                if done:
                    break
            if not done:
                break  # order already fully constrained

    edges = set()
    for i in range(n):
        m = desc[i]
        while m:
            low = m & -m
            j = low.bit_length() - 1
            edges.add((hidden[i], hidden[j]))
            m ^= low
    return edges


def generate(config: GenConfig) -> FlowSpec:
    """One synthetic flow, deterministic for a fixed config (seed included)."""
    rng = random.Random(config.seed)
    ids = list(range(1, config.n + 1))
    tasks = draw_tasks(rng, ids, config)
    edges = random_closed_constraints(rng, ids, config.pc_fraction)
    pc = PrecedenceGraph.close(edges, ids)
    return FlowSpec(tasks=tuple(tasks), pc=pc)
