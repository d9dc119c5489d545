"""Domain types, precedence-constraint machinery, and plan cost evaluation.

Flows are sets of tasks with a per-input-tuple cost and a selectivity.
A precedence-constraint graph (a DAG, stored transitively closed) limits
the admissible execution orders. Plans are either a total order over the
tasks (chain execution) or a general execution DAG in which a task may
feed several downstream tasks.

All types are immutable after construction and every operation here is a
pure function, so plans can be evaluated concurrently without locking.
"""

from __future__ import annotations

import heapq
import math
import random
from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, Sequence

SCM_REL_TOL = 1e-9
IMPROVE_EPS = 1e-12


class FlowError(Exception):
    """Base class for flow-optimization errors."""


class CycleError(FlowError, ValueError):
    """Raised when constraint or plan edges contain a directed cycle."""


class UnknownTaskError(FlowError, KeyError):
    """Raised when a task id is not part of the flow or plan."""


class InvalidPlanError(FlowError, ValueError):
    """Raised when a plan violates its flow's constraints or task set."""

    def __init__(self, violations: Sequence["Violation"]):
        self.violations = tuple(violations)
        super().__init__("; ".join(str(v) for v in self.violations) or "invalid plan")


class SizeLimitExceeded(FlowError):
    """Raised when an exhaustive algorithm is asked to exceed its size guard."""


class ClusterTooLargeError(FlowError):
    """Raised when a partition cluster exceeds the exhaustive-ordering guard."""


class NotATreeError(FlowError, ValueError):
    """Raised when constraint edges do not form a rooted forest."""


class ConfigError(FlowError, ValueError):
    """Raised for out-of-range generator or benchmark parameters."""


class OptimizerTimeout(FlowError):
    """Raised when an optimizer exceeds its wall-clock budget."""


def scm_close(a: float, b: float, rel: float = SCM_REL_TOL) -> bool:
    """True when two cost values are equal within relative tolerance."""
    if math.isinf(a) or math.isinf(b):
        return a == b
    return abs(a - b) <= rel * max(abs(a), abs(b), 1.0)


@dataclass(frozen=True)
class Task:
    """One data-flow task: an id, a cost per input tuple, and a selectivity.

    Selectivity is the average number of output tuples per input tuple:
    below 1 the task filters, above 1 it expands the stream.
    """

    id: int
    cost: float
    selectivity: float
    label: str | None = None

    def __post_init__(self) -> None:
        if self.cost <= 0:
            raise ValueError(f"task {self.id}: cost must be positive, got {self.cost}")
        if self.selectivity <= 0:
            raise ValueError(
                f"task {self.id}: selectivity must be positive, got {self.selectivity}"
            )


@dataclass(frozen=True)
class CostModel:
    """Execution-cost knobs. merge_cost is the per-tuple surcharge paid by
    a DAG node that joins two or more incoming streams."""

    merge_cost: float = 0.0

    def __post_init__(self) -> None:
        if self.merge_cost < 0:
            raise ValueError(f"merge_cost must be >= 0, got {self.merge_cost}")


def _toposort(nodes: Sequence[int], children: dict[int, set[int]]) -> list[int]:
    """Deterministic (ascending-id) topological order; raises CycleError."""
    indeg = {v: 0 for v in nodes}
    for u in nodes:
        for v in children[u]:
            indeg[v] += 1
    ready = sorted(v for v in nodes if indeg[v] == 0)
    order: list[int] = []
    heapq.heapify(ready)
    while ready:
        u = heapq.heappop(ready)
        order.append(u)
        for v in sorted(children[u]):
            indeg[v] -= 1
            if indeg[v] == 0:
                heapq.heappush(ready, v)
    if len(order) != len(nodes):
        raise CycleError("constraint edges contain a cycle")
    return order


def _descendant_sets(
    nodes: Sequence[int], edges: Iterable[tuple[int, int]]
) -> dict[int, set[int]]:
    children: dict[int, set[int]] = {v: set() for v in nodes}
    for a, b in edges:
        children[a].add(b)
    order = _toposort(list(nodes), children)
    desc: dict[int, set[int]] = {v: set() for v in nodes}
    for u in reversed(order):
        for c in children[u]:
            desc[u].add(c)
            desc[u] |= desc[c]
    return desc


@dataclass(frozen=True)
class PrecedenceGraph:
    """Transitively closed, acyclic set of must-precede constraints.

    Closure is part of the type invariant: whenever (a, b) and (b, c) are
    present, (a, c) is present too. Build instances through close() so the
    closure of arbitrary user edges is computed for you.
    """

    nodes: frozenset[int]
    edges: frozenset[tuple[int, int]]

    def __post_init__(self) -> None:
        for a, b in self.edges:
            if a == b:
                raise CycleError(f"self-loop on task {a}")
            if a not in self.nodes or b not in self.nodes:
                raise ValueError(f"edge ({a}, {b}) references unknown task")
        desc = _descendant_sets(sorted(self.nodes), self.edges)
        closed = frozenset((a, b) for a in desc for b in desc[a])
        if closed != self.edges:
            raise ValueError("edge set is not transitively closed; use close()")

    @classmethod
    def close(
        cls, edges: Iterable[tuple[int, int]], nodes: Iterable[int]
    ) -> "PrecedenceGraph":
        """Build the minimal transitively closed supergraph of the input."""
        node_set = frozenset(nodes)
        for a, b in edges:
            if a == b:
                raise CycleError(f"self-loop on task {a}")
            if a not in node_set or b not in node_set:
                raise ValueError(f"edge ({a}, {b}) references unknown task")
        desc = _descendant_sets(sorted(node_set), edges)
        closed = frozenset((a, b) for a in desc for b in desc[a])
        return cls(nodes=node_set, edges=closed)

    @property
    def n(self) -> int:
        return len(self.nodes)

    @cached_property
    def predecessors(self) -> dict[int, frozenset[int]]:
        preds: dict[int, set[int]] = {v: set() for v in self.nodes}
        for a, b in self.edges:
            preds[b].add(a)
        return {v: frozenset(s) for v, s in preds.items()}

    @cached_property
    def successors(self) -> dict[int, frozenset[int]]:
        succs: dict[int, set[int]] = {v: set() for v in self.nodes}
        for a, b in self.edges:
            succs[a].add(b)
        return {v: frozenset(s) for v, s in succs.items()}

    def requires(self, a: int, b: int) -> bool:
        """True when a must run before b."""
        return (a, b) in self.edges

    def reduction(self) -> frozenset[tuple[int, int]]:
        """Transitive reduction: the unique minimal edge set with the same
        reachability (unique because the graph is acyclic)."""
        succs = self.successors
        preds = self.predecessors
        return frozenset(
            (a, b) for a, b in self.edges if not (succs[a] & preds[b])
        )


def transitive_closure(edges: Iterable[tuple[int, int]], n: int) -> PrecedenceGraph:
    """Close a user edge set over tasks numbered 1..n."""
    if n <= 0:
        raise ValueError(f"task count must be positive, got {n}")
    nodes = range(1, n + 1)
    node_set = set(nodes)
    for a, b in edges:
        if a not in node_set or b not in node_set:
            raise ValueError(f"edge ({a}, {b}) out of range 1..{n}")
    return PrecedenceGraph.close(edges, nodes)


@dataclass(frozen=True)
class FlowSpec:
    """A task set plus its precedence constraints.

    source_id / sink_id are optional. When a source is designated it must
    constrain every other non-sink task (and symmetrically for the sink),
    which is what makes the flow logically linear; build() adds those
    edges for you.
    """

    tasks: tuple[Task, ...]
    pc: PrecedenceGraph
    source_id: int | None = None
    sink_id: int | None = None

    def __post_init__(self) -> None:
        ids = [t.id for t in self.tasks]
        if len(set(ids)) != len(ids):
            raise ValueError("duplicate task ids")
        if self.pc.nodes != frozenset(ids):
            raise ValueError("constraint graph does not cover exactly the task set")
        for role, anchor in (("source", self.source_id), ("sink", self.sink_id)):
            if anchor is not None and anchor not in self.pc.nodes:
                raise UnknownTaskError(f"{role} task {anchor} not in flow")
        if self.source_id is not None:
            for t in self.tasks:
                if t.id in (self.source_id, self.sink_id):
                    continue
                if not self.pc.requires(self.source_id, t.id):
                    raise ValueError(
                        f"designated source {self.source_id} does not precede task {t.id}"
                    )
        if self.sink_id is not None:
            for t in self.tasks:
                if t.id in (self.source_id, self.sink_id):
                    continue
                if not self.pc.requires(t.id, self.sink_id):
                    raise ValueError(
                        f"designated sink {self.sink_id} does not follow task {t.id}"
                    )

    @classmethod
    def build(
        cls,
        tasks: Iterable[Task],
        constraints: Iterable[tuple[int, int]] = (),
        source_id: int | None = None,
        sink_id: int | None = None,
    ) -> "FlowSpec":
        """Assemble a flow, closing the constraints and adding the implied
        source/sink edges when those roles are designated."""
        task_tuple = tuple(tasks)
        ids = [t.id for t in task_tuple]
        edge_set = set(constraints)
        if source_id is not None:
            edge_set |= {
                (source_id, t) for t in ids if t not in (source_id, sink_id)
            }
        if sink_id is not None:
            edge_set |= {(t, sink_id) for t in ids if t not in (source_id, sink_id)}
        pc = PrecedenceGraph.close(edge_set, ids)
        return cls(tasks=task_tuple, pc=pc, source_id=source_id, sink_id=sink_id)

    @property
    def n(self) -> int:
        return len(self.tasks)

    @cached_property
    def by_id(self) -> dict[int, Task]:
        return {t.id: t for t in self.tasks}

    @cached_property
    def ids(self) -> tuple[int, ...]:
        return tuple(t.id for t in self.tasks)

    def task(self, task_id: int) -> Task:
        try:
            return self.by_id[task_id]
        except KeyError:
            raise UnknownTaskError(f"unknown task {task_id}") from None

    @cached_property
    def index(self) -> "FlowIndex":
        return FlowIndex.build(self)


@dataclass(frozen=True)
class FlowIndex:
    """Bitmask view of a flow for the optimizers.

    Task i (list position) maps to bit i. pred_mask[i] / succ_mask[i] hold
    the closure predecessors and successors, so eligibility and blocking
    checks are single mask operations.
    """

    ids: tuple[int, ...]
    pos: dict[int, int]
    cost: tuple[float, ...]
    sel: tuple[float, ...]
    pred_mask: tuple[int, ...]
    succ_mask: tuple[int, ...]

    @classmethod
    def build(cls, flow: FlowSpec) -> "FlowIndex":
        ids = flow.ids
        pos = {tid: i for i, tid in enumerate(ids)}
        preds = flow.pc.predecessors
        succs = flow.pc.successors
        pred_mask = []
        succ_mask = []
        for tid in ids:
            pm = 0
            for p in preds[tid]:
                pm |= 1 << pos[p]
            sm = 0
            for s in succs[tid]:
                sm |= 1 << pos[s]
            pred_mask.append(pm)
            succ_mask.append(sm)
        return cls(
            ids=ids,
            pos=pos,
            cost=tuple(t.cost for t in flow.tasks),
            sel=tuple(t.selectivity for t in flow.tasks),
            pred_mask=tuple(pred_mask),
            succ_mask=tuple(succ_mask),
        )

    @property
    def n(self) -> int:
        return len(self.ids)

    def requires(self, a_idx: int, b_idx: int) -> bool:
        """True when task at index a must precede task at index b."""
        return bool(self.succ_mask[a_idx] >> b_idx & 1)

    def rank(self, idx: int) -> float:
        return (1.0 - self.sel[idx]) / self.cost[idx]


@dataclass(frozen=True)
class LinearPlan:
    """A total execution order over task ids (chain-shaped plan)."""

    order: tuple[int, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "order", tuple(self.order))

    @property
    def n(self) -> int:
        return len(self.order)


@dataclass(frozen=True)
class PlanDag:
    """A general execution DAG. Multiple roots are meaningful only for
    flows without a designated source (multi-input flows)."""

    nodes: frozenset[int]
    edges: frozenset[tuple[int, int]]

    def __post_init__(self) -> None:
        object.__setattr__(self, "nodes", frozenset(self.nodes))
        object.__setattr__(self, "edges", frozenset(self.edges))
        for a, b in self.edges:
            if a == b:
                raise CycleError(f"self-loop on task {a}")
            if a not in self.nodes or b not in self.nodes:
                raise ValueError(f"edge ({a}, {b}) references unknown task")
        children: dict[int, set[int]] = {v: set() for v in self.nodes}
        for a, b in self.edges:
            children[a].add(b)
        _toposort(sorted(self.nodes), children)  # raises CycleError on cycles

    @classmethod
    def from_linear(cls, plan: LinearPlan) -> "PlanDag":
        order = plan.order
        return cls(
            nodes=frozenset(order),
            edges=frozenset(zip(order, order[1:])),
        )

    @cached_property
    def ancestors(self) -> dict[int, frozenset[int]]:
        parents: dict[int, set[int]] = {v: set() for v in self.nodes}
        children: dict[int, set[int]] = {v: set() for v in self.nodes}
        for a, b in self.edges:
            parents[b].add(a)
            children[a].add(b)
        order = _toposort(sorted(self.nodes), children)
        anc: dict[int, frozenset[int]] = {}
        for v in order:
            acc: set[int] = set()
            for p in parents[v]:
                acc.add(p)
                acc |= anc[p]
            anc[v] = frozenset(acc)
        return anc

    @cached_property
    def in_degree(self) -> dict[int, int]:
        deg = {v: 0 for v in self.nodes}
        for _, b in self.edges:
            deg[b] += 1
        return deg

    def roots(self) -> tuple[int, ...]:
        return tuple(sorted(v for v, d in self.in_degree.items() if d == 0))


Plan = LinearPlan | PlanDag


@dataclass(frozen=True)
class Violation:
    """One reason a plan is invalid for its flow."""

    kind: str  # "missing-task" | "unknown-task" | "duplicate-task" | "precedence"
    subject: tuple[int, ...]

    def __str__(self) -> str:
        return f"{self.kind}{self.subject}"


def validate(plan: Plan, flow: FlowSpec) -> list[Violation]:
    """Check a plan against its flow. Returns [] when the plan covers the
    task set exactly and honors every precedence edge (order for chains,
    path existence for DAGs)."""
    violations: list[Violation] = []
    flow_ids = set(flow.ids)
    if isinstance(plan, LinearPlan):
        seen: set[int] = set()
        for tid in plan.order:
            if tid not in flow_ids:
                violations.append(Violation("unknown-task", (tid,)))
            elif tid in seen:
                violations.append(Violation("duplicate-task", (tid,)))
            seen.add(tid)
        for tid in sorted(flow_ids - seen):
            violations.append(Violation("missing-task", (tid,)))
        if violations:
            return violations
        pos = {tid: i for i, tid in enumerate(plan.order)}
        for a, b in sorted(flow.pc.edges):
            if pos[a] > pos[b]:
                violations.append(Violation("precedence", (a, b)))
        return violations

    for tid in sorted(plan.nodes - flow_ids):
        violations.append(Violation("unknown-task", (tid,)))
    for tid in sorted(flow_ids - plan.nodes):
        violations.append(Violation("missing-task", (tid,)))
    if violations:
        return violations
    anc = plan.ancestors
    for a, b in sorted(flow.pc.edges):
        if a not in anc[b]:
            violations.append(Violation("precedence", (a, b)))
    return violations


def input_cardinality(plan: Plan, task_id: int, flow: FlowSpec) -> float:
    """Tuples reaching a task per source tuple: the product of the
    selectivities of every task that precedes it in the plan (all DAG
    ancestors for parallel plans). 1.0 for a task with no predecessors."""
    flow.task(task_id)
    if isinstance(plan, LinearPlan):
        if task_id not in plan.order:
            raise UnknownTaskError(f"task {task_id} not in plan")
        inp = 1.0
        for tid in plan.order:
            if tid == task_id:
                return inp
            inp *= flow.task(tid).selectivity
        raise AssertionError("unreachable")
    if task_id not in plan.nodes:
        raise UnknownTaskError(f"task {task_id} not in plan")
    inp = 1.0
    for tid in plan.ancestors[task_id]:
        inp *= flow.task(tid).selectivity
    return inp


def scm(plan: Plan, flow: FlowSpec, model: CostModel | None = None) -> float:
    """Sum cost metric: total per-source-tuple work of a plan.

    Each task contributes (tuples in) x (cost per tuple). DAG nodes that
    join two or more input streams additionally pay the model's merge
    cost per input tuple; a chain plan never pays it.
    """
    model = model or CostModel()
    violations = validate(plan, flow)
    if violations:
        raise InvalidPlanError(violations)
    if isinstance(plan, LinearPlan):
        total = 0.0
        inp = 1.0
        for tid in plan.order:
            t = flow.task(tid)
            total += inp * t.cost
            inp *= t.selectivity
        return total
    anc = plan.ancestors
    indeg = plan.in_degree
    total = 0.0
    for tid in sorted(plan.nodes):
        t = flow.task(tid)
        inp = 1.0
        for a in anc[tid]:
            inp *= flow.task(a).selectivity
        cost = t.cost + (model.merge_cost if indeg[tid] >= 2 else 0.0)
        total += inp * cost
    return total


def random_valid_plan(flow: FlowSpec, seed: int) -> LinearPlan:
    """A seeded random topological order of the flow's tasks.

    Deterministic for a fixed seed; not uniform over linear extensions.
    """
    rng = random.Random(seed)
    preds = flow.pc.predecessors
    placed: set[int] = set()
    pending = set(flow.ids)
    eligible = sorted(t for t in pending if not preds[t])
    in_eligible = set(eligible)
    order: list[int] = []
    while eligible:
        pick = eligible.pop(rng.randrange(len(eligible)))
        in_eligible.discard(pick)
        order.append(pick)
        placed.add(pick)
        pending.discard(pick)
        for t in sorted(pending):
            if t not in in_eligible and preds[t] <= placed:
                eligible.append(t)
                in_eligible.add(t)
        eligible.sort()
    if pending:
        raise CycleError("constraints admit no complete ordering")
    return LinearPlan(tuple(order))


def restrict(flow: FlowSpec, keep: Iterable[int]) -> FlowSpec:
    """Sub-flow over a subset of tasks, constraints restricted to the
    subset. Restriction of a closed edge set stays closed."""
    keep_set = set(keep)
    unknown = keep_set - set(flow.ids)
    if unknown:
        raise UnknownTaskError(f"unknown tasks {sorted(unknown)}")
    tasks = tuple(t for t in flow.tasks if t.id in keep_set)
    edges = frozenset(
        (a, b) for a, b in flow.pc.edges if a in keep_set and b in keep_set
    )
    pc = PrecedenceGraph(nodes=frozenset(keep_set), edges=edges)
    return FlowSpec(tasks=tasks, pc=pc, source_id=None, sink_id=None)
