"""Optimal chain-plan algorithms.

Three routes to the global minimum-cost ordering: exhaustive placement
search with constraint backtracking, dynamic programming over task
subsets, and enumeration of every admissible order via adjacent swaps
and cyclic rotations. All three are exponential in the worst case; the
enumeration route degrades gracefully as constraints get denser because
it only ever visits valid orders.

Ties between equal-cost optima resolve to the order that is
lexicographically smallest by task id.
"""

from __future__ import annotations

import heapq
import math
import time
from dataclasses import dataclass

from .core import (
    CycleError,
    FlowIndex,
    FlowSpec,
    LinearPlan,
    OptimizerTimeout,
    SizeLimitExceeded,
    scm_close,
)

_TIMEOUT_STRIDE = 8192


def _deadline(timeout_s: float | None) -> float | None:
    return None if timeout_s is None else time.perf_counter() + timeout_s


def _check_deadline(deadline: float | None, what: str) -> None:
    if deadline is not None and time.perf_counter() > deadline:
        raise OptimizerTimeout(f"{what} exceeded its time budget")


def _lex_topological(idx: FlowIndex) -> list[int]:
    """Lexicographically smallest (by id) topological order, as indices."""
    n = idx.n
    indeg = [bin(idx.pred_mask[i]).count("1") for i in range(n)]
    heap = [(idx.ids[i], i) for i in range(n) if indeg[i] == 0]
    heapq.heapify(heap)
    order: list[int] = []
    while heap:
        _, i = heapq.heappop(heap)
        order.append(i)
        succ = idx.succ_mask[i]
        while succ:
            low = succ & -succ
            j = low.bit_length() - 1
            succ ^= low
            indeg[j] -= 1
            if indeg[j] == 0:
                heapq.heappush(heap, (idx.ids[j], j))
    if len(order) != n:
        raise CycleError("constraints contain a cycle")
    return order


def backtracking(
    flow: FlowSpec,
    *,
    max_tasks: int = 12,
    force: bool = False,
    timeout_s: float | None = None,
) -> LinearPlan:
    """Optimal order by depth-first placement, abandoning any prefix that
    violates a constraint. Worst case n! complete plans, so a size guard
    applies unless force is set."""
    idx = flow.index
    n = idx.n
    if n == 0:
        return LinearPlan(())
    if not force and n > max_tasks:
        raise SizeLimitExceeded(
            f"{n} tasks exceeds the backtracking guard of {max_tasks}; pass force=True"
        )
    deadline = _deadline(timeout_s)
    by_id = sorted(range(n), key=lambda i: idx.ids[i])
    pred = idx.pred_mask
    sel = idx.sel
    cost = idx.cost
    full = (1 << n) - 1

    best_cost = math.inf
    best_order: tuple[int, ...] = ()
    slot = [0] * n
    ticks = 0

    def place(depth: int, placed: int, selprod: float, acc: float) -> None:
        nonlocal best_cost, best_order, ticks
        ticks += 1
        if ticks % _TIMEOUT_STRIDE == 0:
            _check_deadline(deadline, "backtracking")
        if placed == full:
            # Candidates are tried in ascending id, so plans arrive in
            # lexicographic order and the first optimum seen wins ties.
            if not best_order or (acc < best_cost and not scm_close(acc, best_cost)):
                best_cost = acc
                best_order = tuple(slot)
            return
        for i in by_id:
            bit = 1 << i
            if placed & bit or pred[i] & ~placed:
                continue
            slot[depth] = idx.ids[i]
            place(depth + 1, placed | bit, selprod * sel[i], acc + selprod * cost[i])

    place(0, 0, 1.0, 0.0)
    return LinearPlan(best_order)


@dataclass
class DpTables:
    """Subset tables for the dynamic program.

    Cell m describes the task subset whose members have bit 1 in m (bit i
    is the i-th task of the flow's task list). costs[m] is the minimal
    cost over admissible orderings of that subset, +inf when the subset
    cannot form a plan prefix; sels[m] is the order-independent product
    of its selectivities; last[m] records the chosen final task index for
    plan reconstruction. Cell 0 is the empty prefix.
    """

    ids: tuple[int, ...]
    costs: list[float]
    sels: list[float]
    last: list[int]

    def ordering(self, mask: int) -> tuple[int, ...]:
        """Reconstruct the stored optimal ordering of a subset."""
        out: list[int] = []
        m = mask
        while m:
            i = self.last[m]
            if i < 0:
                raise ValueError(f"subset {mask:#x} has no admissible ordering")
            out.append(self.ids[i])
            m ^= 1 << i
        out.reverse()
        return tuple(out)


def dp_tables(flow: FlowSpec, *, timeout_s: float | None = None) -> DpTables:
    """Fill the subset tables bottom-up.

    A subset gets a finite cost only if it is closed under predecessors,
    i.e. it can actually be the prefix of some admissible plan; the
    recurrence extends a prefix by one final task whose prerequisites all
    sit inside it.
    """
    idx = flow.index
    n = idx.n
    size = 1 << n
    deadline = _deadline(timeout_s)
    sel = idx.sel
    cost = idx.cost
    pred = idx.pred_mask
    ids = idx.ids

    sels = [1.0] * size
    costs = [math.inf] * size
    costs[0] = 0.0
    last = [-1] * size

    for m in range(1, size):
        low = m & -m
        sels[m] = sels[m ^ low] * sel[low.bit_length() - 1]

    def order_of(mask: int) -> tuple[int, ...]:
        out: list[int] = []
        mm = mask
        while mm:
            i = last[mm]
            out.append(ids[i])
            mm ^= 1 << i
        out.reverse()
        return tuple(out)

    for m in range(1, size):
        if deadline is not None and m % _TIMEOUT_STRIDE == 0:
            _check_deadline(deadline, "dynamic programming")
        best = math.inf
        best_i = -1
        mm = m
        while mm:
            low = mm & -mm
            mm ^= low
            i = low.bit_length() - 1
            rest = m ^ low
            if pred[i] & ~rest:
                continue
            base = costs[rest]
            if base == math.inf:
                continue
            cand = base + sels[rest] * cost[i]
            if best_i < 0 or (cand < best and not scm_close(cand, best)):
                best = cand
                best_i = i
            elif scm_close(cand, best):
                if order_of(rest) + (ids[i],) < order_of(m ^ (1 << best_i)) + (
                    ids[best_i],
                ):
                    best = cand
                    best_i = i
        costs[m] = best
        last[m] = best_i

    return DpTables(ids=ids, costs=costs, sels=sels, last=last)


def dynamic_programming(
    flow: FlowSpec,
    *,
    max_tasks: int = 20,
    force: bool = False,
    timeout_s: float | None = None,
) -> LinearPlan:
    """Optimal order via the subset dynamic program (O(n^2 2^n) time,
    O(n 2^n) space), guarded by a task-count limit unless force is set."""
    n = flow.n
    if n == 0:
        return LinearPlan(())
    if not force and n > max_tasks:
        raise SizeLimitExceeded(
            f"{n} tasks exceeds the dynamic-programming guard of {max_tasks}; "
            "pass force=True"
        )
    tables = dp_tables(flow, timeout_s=timeout_s)
    full = (1 << n) - 1
    if tables.last[full] < 0:
        raise CycleError("constraints admit no complete ordering")
    return LinearPlan(tables.ordering(full))


def _enumerate_orders(
    flow: FlowSpec, *, track_cost: bool, timeout_s: float | None
) -> tuple[tuple[int, ...], float, int]:
    """Visit every admissible order exactly once; return the best order,
    its cost, and the visit count.

    Starts from the lexicographic topological order and generates each
    successive order by one adjacent swap; a cyclic rotation puts a
    blocked element back to its home position and never produces a new
    order. Costs are maintained incrementally: a swap touches only the
    two affected cost terms and one running selectivity prefix.
    """
    idx = flow.index
    n = idx.n
    if n == 0:
        return (), 0.0, 1
    deadline = _deadline(timeout_s)

    init = _lex_topological(idx)
    task_of = init  # label -> task index; labels are initial positions
    sel = [idx.sel[t] for t in task_of]
    cost = [idx.cost[t] for t in task_of]
    label_ids = [idx.ids[t] for t in task_of]
    prec = [0] * n  # prec[a] bit b set when label a must precede label b
    for a in range(n):
        mask = idx.succ_mask[task_of[a]]
        bits = 0
        for b in range(n):
            if mask >> task_of[b] & 1:
                bits |= 1 << b
        prec[a] = bits

    at = list(range(n))
    loc = list(range(n))
    pref = [1.0] * (n + 1)
    term = [0.0] * n

    def recompute(lo: int, hi: int) -> None:
        p = pref[lo]
        for k in range(lo, hi + 1):
            lab = at[k]
            term[k] = p * cost[lab]
            p *= sel[lab]
            pref[k + 1] = p

    if track_cost:
        recompute(0, n - 1)
        best_cost = sum(term)
        best_order = tuple(label_ids[lab] for lab in at)
    else:
        best_cost = 0.0
        best_order = ()
    count = 1

    i = 0
    while i < n - 1:
        k = loc[i]
        k1 = k + 1
        if k1 < n and not prec[i] >> at[k1] & 1:
            la, lb = at[k], at[k1]
            at[k], at[k1] = lb, la
            loc[la], loc[lb] = k1, k
            count += 1
            if count % _TIMEOUT_STRIDE == 0:
                _check_deadline(deadline, "order enumeration")
            if track_cost:
                p = pref[k]
                term[k] = p * cost[lb]
                pref[k1] = p * sel[lb]
                term[k1] = pref[k1] * cost[la]
                total = sum(term)
                if total < best_cost and not scm_close(total, best_cost):
                    best_cost = total
                    best_order = tuple(label_ids[lab] for lab in at)
                elif scm_close(total, best_cost):
                    cand = tuple(label_ids[lab] for lab in at)
                    if cand < best_order:
                        best_cost = total
                        best_order = cand
            i = 0
        else:
            if k > i:
                at[i + 1 : k + 1] = at[i:k]
                at[i] = i
                for p_ in range(i, k + 1):
                    loc[at[p_]] = p_
                if track_cost:
                    recompute(i, k)
            i += 1

    return best_order, best_cost, count


def topsort_enumerate(
    flow: FlowSpec, *, timeout_s: float | None = None
) -> LinearPlan:
    """Optimal order by enumerating all admissible orders. No size guard:
    under dense constraints the number of orders stays small regardless
    of n, which is exactly where the other exact routes give out."""
    order, _, _ = _enumerate_orders(flow, track_cost=True, timeout_s=timeout_s)
    return LinearPlan(order)


def count_linear_extensions(flow: FlowSpec, *, timeout_s: float | None = None) -> int:
    """Number of admissible total orders of the flow."""
    _, _, count = _enumerate_orders(flow, track_cost=False, timeout_s=timeout_s)
    return count
