"""Approximate chain-plan optimizers.

swap_opt is local search over adjacent transpositions; greedy_i and
greedy_ii build a plan by rank, front-to-back and back-to-front; and
partition orders eligibility layers exhaustively, one cluster at a time.
All run in polynomial time (partition excepted when a cluster is large)
and none is guaranteed optimal.
"""

from __future__ import annotations

import itertools
import math

from .core import (
    ClusterTooLargeError,
    CycleError,
    FlowSpec,
    IMPROVE_EPS,
    InvalidPlanError,
    LinearPlan,
    random_valid_plan,
    scm_close,
    validate,
)


def swap_opt(
    flow: FlowSpec, initial: LinearPlan | None = None, seed: int = 0
) -> LinearPlan:
    """Repeated left-to-right passes over adjacent pairs, swapping a pair
    whenever the constraints allow it and the swap strictly lowers the
    plan cost; stops when a whole pass changes nothing.

    Starts from the given plan, or from a seeded random valid plan. Each
    accepted swap lowers the cost by more than an absolute epsilon, which
    is what guarantees termination.
    """
    if initial is None:
        initial = random_valid_plan(flow, seed)
    else:
        violations = validate(initial, flow)
        if violations:
            raise InvalidPlanError(violations)
    idx = flow.index
    n = idx.n
    if n < 2:
        return initial
    sel = idx.sel
    cost = idx.cost
    order = [idx.pos[t] for t in initial.order]

    pref = [1.0] * (n + 1)
    for k in range(n):
        pref[k + 1] = pref[k] * sel[order[k]]

    swapping = True
    while swapping:
        swapping = False
        for k in range(n - 1):
            a, b = order[k], order[k + 1]
            if idx.requires(a, b):
                continue
            p = pref[k]
            current = p * (cost[a] + sel[a] * cost[b])
            swapped = p * (cost[b] + sel[b] * cost[a])
            if swapped < current - IMPROVE_EPS:
                order[k], order[k + 1] = b, a
                for q in range(k, n):
                    pref[q + 1] = pref[q] * sel[order[q]]
                swapping = True
    return LinearPlan(tuple(idx.ids[i] for i in order))


def greedy_i(flow: FlowSpec) -> LinearPlan:
    """Build front-to-back, always appending the eligible task with the
    highest rank (1 - selectivity) / cost; ties go to the smaller id.
    A designated source is forced first by its constraints."""
    idx = flow.index
    n = idx.n
    pred = idx.pred_mask
    order: list[int] = []
    placed = 0
    for _ in range(n):
        best_i = -1
        best_key: tuple[float, int] | None = None
        for i in range(n):
            if placed >> i & 1 or pred[i] & ~placed:
                continue
            key = (-idx.rank(i), idx.ids[i])
            if best_key is None or key < best_key:
                best_key = key
                best_i = i
        if best_i < 0:
            raise CycleError("constraints admit no complete ordering")
        order.append(best_i)
        placed |= 1 << best_i
    return LinearPlan(tuple(idx.ids[i] for i in order))


def greedy_ii(flow: FlowSpec) -> LinearPlan:
    """Mirror of greedy_i built back-to-front: repeatedly prepend, among
    tasks whose successors are all placed, the one with the lowest rank
    (a high-rank task should end up early, so it is prepended last)."""
    idx = flow.index
    n = idx.n
    succ = idx.succ_mask
    order: list[int] = []
    placed = 0
    for _ in range(n):
        best_i = -1
        best_key: tuple[float, int] | None = None
        for i in range(n):
            if placed >> i & 1 or succ[i] & ~placed:
                continue
            key = (idx.rank(i), idx.ids[i])
            if best_key is None or key < best_key:
                best_key = key
                best_i = i
        if best_i < 0:
            raise CycleError("constraints admit no complete ordering")
        order.append(best_i)
        placed |= 1 << best_i
    order.reverse()
    return LinearPlan(tuple(idx.ids[i] for i in order))


def partition(
    flow: FlowSpec, *, max_cluster: int = 10, force: bool = False
) -> LinearPlan:
    """Group tasks into eligibility layers (every prerequisite sits in an
    earlier layer), order each layer by exhaustive search, and concatenate.

    Tasks in one layer are mutually unconstrained by construction. The
    selectivity product flowing in from earlier layers scales all of a
    layer's candidate costs uniformly, so it cannot change the argmin and
    is omitted. Exhaustive layer ordering is O(k!) in the layer size k,
    hence the guard.
    """
    idx = flow.index
    n = idx.n
    pred = idx.pred_mask
    sel = idx.sel
    cost = idx.cost
    considered = 0
    out: list[int] = []
    while considered != (1 << n) - 1:
        cluster = [
            i
            for i in range(n)
            if not considered >> i & 1 and not pred[i] & ~considered
        ]
        if not cluster:
            raise CycleError("constraints admit no complete ordering")
        if len(cluster) > max_cluster and not force:
            raise ClusterTooLargeError(
                f"cluster of {len(cluster)} tasks exceeds the guard of "
                f"{max_cluster}; pass force=True"
            )
        cluster.sort(key=lambda i: idx.ids[i])
        if len(cluster) == 1:
            best_perm = tuple(cluster)
        else:
            best_cost = math.inf
            best_perm = tuple(cluster)
            for perm in itertools.permutations(cluster):
                acc = 0.0
                p = 1.0
                for i in perm:
                    acc += p * cost[i]
                    p *= sel[i]
                # permutations arrive in lexicographic order, so keeping
                # the first strict improvement also settles ties
                if acc < best_cost and not scm_close(acc, best_cost):
                    best_cost = acc
                    best_perm = perm
        out.extend(best_perm)
        for i in cluster:
            considered |= 1 << i
    return LinearPlan(tuple(idx.ids[i] for i in out))
