"""Parallel-plan construction.

parallelize is a post-pass over any chain plan: consecutive runs of
stream-expanding tasks (selectivity above 1) are restructured to hang
side by side off the task before the run, so none of them feeds its
expanded output into another. pgreedy_i/pgreedy_ii grow an execution
DAG task by task, wiring each new task behind the filters placed so far.

Whether bypassing helps for a given adjacent pair depends only on which
of the two expands; classify_adjacent_pair names the four combinations.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

from .core import (
    CostModel,
    CycleError,
    FlowSpec,
    InvalidPlanError,
    LinearPlan,
    PlanDag,
    Task,
    validate,
)


def parallelize(
    plan: LinearPlan, flow: FlowSpec, model: CostModel | None = None
) -> PlanDag:
    """Restructure a chain plan so each maximal run of consecutive
    selectivity>1 tasks executes side by side.

    Run members hang directly off the last task before the run unless a
    constraint ties them to an earlier run member, in which case they
    attach behind those members instead. The first task after the run
    joins every run member that is left dangling. Tasks with selectivity
    at or below 1 keep their chain position.
    """
    violations = validate(plan, flow)
    if violations:
        raise InvalidPlanError(violations)
    order = plan.order
    n = len(order)
    nodes = frozenset(order)
    if n <= 1:
        return PlanDag(nodes=nodes, edges=frozenset())
    edges: set[tuple[int, int]] = set(zip(order, order[1:]))
    out_adj: dict[int, set[int]] = {t: set() for t in order}
    for a, b in edges:
        out_adj[a].add(b)

    def reaches(u: int, v: int) -> bool:
        stack = [u]
        seen = {u}
        while stack:
            x = stack.pop()
            if x == v:
                return True
            for y in out_adj[x]:
                if y not in seen:
                    seen.add(y)
                    stack.append(y)
        return False

    def add(a: int, b: int) -> None:
        edges.add((a, b))
        out_adj[a].add(b)

    def drop(a: int, b: int) -> None:
        edges.discard((a, b))
        out_adj[a].discard(b)

    sel_of = {t.id: t.selectivity for t in flow.tasks}
    requires = flow.pc.requires
    i = 0
    while i < n - 1:
        j = i + 1
        while j < n and sel_of[order[j]] > 1.0:
            tid = order[j]
            drop(order[j - 1], tid)
            members = order[i + 1 : j]
            anchors = [m for m in members if requires(m, tid)]
            if not anchors:
                add(order[i], tid)
            else:
                # Skip anchors that already reach another anchor; the path
                # through it will cover the constraint.
                for m in anchors:
                    if not any(reaches(m, q) for q in anchors if q != m):
                        add(m, tid)
            j += 1
        if i + 1 < j < n:
            for m in order[i + 1 : j]:
                if not out_adj[m]:
                    add(m, order[j])
        i = j
    return PlanDag(nodes=nodes, edges=frozenset(edges))


@dataclass(frozen=True)
class PlacementStep:
    """One greedy placement: the task chosen, the conceptual cut it was
    gated behind, the members actually wired (the cut's frontier), and
    the resulting input cardinality."""

    task_id: int
    cut: tuple[int, ...]
    attached: tuple[int, ...]
    input_cardinality: float


def _pgreedy(
    flow: FlowSpec, ranked: bool
) -> tuple[PlanDag, list[PlacementStep]]:
    idx = flow.index
    n = idx.n
    pred = idx.pred_mask
    sel = idx.sel
    cost = idx.cost
    full = (1 << n) - 1

    anc_mask = [0] * n  # DAG ancestors of each placed task, as index bits
    placed = 0
    filters = 0  # placed tasks with selectivity < 1
    edges: set[tuple[int, int]] = set()
    steps: list[PlacementStep] = []

    def closure_of(cut: int) -> int:
        clo = cut
        mm = cut
        while mm:
            low = mm & -mm
            mm ^= low
            clo |= anc_mask[low.bit_length() - 1]
        return clo

    def product_over(mask: int) -> float:
        p = 1.0
        mm = mask
        while mm:
            low = mm & -mm
            mm ^= low
            p *= sel[low.bit_length() - 1]
        return p

    while placed != full:
        best_i = -1
        best_key: tuple[float, int] | None = None
        best_cut = 0
        best_clo = 0
        best_inp = 1.0
        for i in range(n):
            if placed >> i & 1 or pred[i] & ~placed:
                continue
            cut = pred[i] | filters
            clo = closure_of(cut)
            inp = product_over(clo)
            if ranked:
                score = -(1.0 - sel[i]) / (inp * cost[i])
            else:
                score = inp * cost[i]
            key = (score, idx.ids[i])
            if best_key is None or key < best_key:
                best_key = key
                best_i = i
                best_cut = cut
                best_clo = clo
                best_inp = inp
        if best_i < 0:
            raise CycleError("constraints admit no complete ordering")
        covered = 0
        mm = best_cut
        while mm:
            low = mm & -mm
            mm ^= low
            covered |= anc_mask[low.bit_length() - 1]
        attach = best_cut & ~covered
        mm = attach
        while mm:
            low = mm & -mm
            mm ^= low
            edges.add((idx.ids[low.bit_length() - 1], idx.ids[best_i]))
        anc_mask[best_i] = best_clo
        placed |= 1 << best_i
        if sel[best_i] < 1.0:
            filters |= 1 << best_i
        steps.append(
            PlacementStep(
                task_id=idx.ids[best_i],
                cut=tuple(
                    idx.ids[b] for b in range(n) if best_cut >> b & 1
                ),
                attached=tuple(
                    idx.ids[b] for b in range(n) if attach >> b & 1
                ),
                input_cardinality=best_inp,
            )
        )
    return PlanDag(nodes=frozenset(idx.ids), edges=frozenset(edges)), steps


def pgreedy_i(flow: FlowSpec, model: CostModel | None = None) -> PlanDag:
    """Greedy DAG builder: place the eligible task with the cheapest next
    step, input cardinality times cost, gating it behind its
    prerequisites plus every filter placed so far. The model argument is
    accepted for interface symmetry; the construction itself does not
    consult it."""
    dag, _ = _pgreedy(flow, ranked=False)
    return dag


def pgreedy_ii(flow: FlowSpec, model: CostModel | None = None) -> PlanDag:
    """Like pgreedy_i but picks the eligible task with the highest rank
    per unit of input work, (1 - selectivity) / (input cardinality x
    cost), penalizing cheap tasks that expand the stream."""
    dag, _ = _pgreedy(flow, ranked=True)
    return dag


def pgreedy_trace(
    flow: FlowSpec, model: CostModel | None = None, *, ranked: bool = False
) -> list[PlacementStep]:
    """Placement-by-placement record of a pgreedy run; the cut of every
    step is its prerequisites plus the filters placed before it."""
    _, steps = _pgreedy(flow, ranked=ranked)
    return steps


class StreamPairCase(enum.Enum):
    """How two adjacent unconstrained tasks relate for bypassing purposes."""

    NEITHER_EXPANDS = "neither-expands"
    SECOND_EXPANDS = "second-expands"
    BOTH_EXPAND = "both-expand"
    FIRST_EXPANDS = "first-expands"

    @property
    def parallel_preferred(self) -> bool | None:
        """True when bypassing wins at zero merge cost, False when the
        chain wins outright, None when it depends on the numbers."""
        if self is StreamPairCase.BOTH_EXPAND:
            return True
        if self is StreamPairCase.FIRST_EXPANDS:
            return None
        return False


def classify_adjacent_pair(
    first: Task, second: Task, model: CostModel | None = None
) -> StreamPairCase:
    """Advisory classification of an adjacent pair by who expands the
    stream. When neither does (or only the later one), keeping the chain
    is never worse; when both do, bypassing wins at zero merge cost; when
    only the first does, an optimized chain would swap them anyway."""
    first_expands = first.selectivity > 1.0
    second_expands = second.selectivity > 1.0
    if not first_expands and not second_expands:
        return StreamPairCase.NEITHER_EXPANDS
    if not first_expands:
        return StreamPairCase.SECOND_EXPANDS
    if second_expands:
        return StreamPairCase.BOTH_EXPAND
    return StreamPairCase.FIRST_EXPANDS
