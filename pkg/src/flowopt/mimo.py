"""Multi-input multi-output flows.

A MIMO execution DAG decomposes into linear segments between its
boundary nodes (branches, merges, sources, sinks). Optimization here is
re-ordering only: each segment is re-ordered in isolation by any chain
optimizer while the boundary skeleton stays fixed. Cross-segment
rewrites that move work through branch or merge points are a designed
extension point, currently a no-op.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from typing import Callable

from .core import (
    CostModel,
    FlowSpec,
    InvalidPlanError,
    LinearPlan,
    PlanDag,
    PrecedenceGraph,
    Task,
    Violation,
    random_valid_plan,
    restrict,
)
from .generator import GenConfig, draw_tasks, random_closed_constraints
from .parallel import parallelize

InnerOptimizer = Callable[..., LinearPlan]


@dataclass(frozen=True)
class Segment:
    """A maximal chain of interior tasks between two boundary nodes."""

    members: tuple[int, ...]
    boundary_in: int
    boundary_out: int


def extract_segments(flow_dag: PlanDag, flow: FlowSpec) -> list[Segment]:
    """Split the DAG into its linear segments.

    Boundary nodes are those with in-degree != 1 or out-degree != 1
    (branches, merges, sources, sinks); every other node lies on exactly
    one segment. Segments are returned in ascending order of their first
    member."""
    if flow_dag.nodes != frozenset(flow.ids):
        missing = sorted(frozenset(flow.ids) - flow_dag.nodes)
        unknown = sorted(flow_dag.nodes - frozenset(flow.ids))
        raise InvalidPlanError(
            [Violation("missing-task", (t,)) for t in missing]
            + [Violation("unknown-task", (t,)) for t in unknown]
        )
    children: dict[int, list[int]] = {v: [] for v in flow_dag.nodes}
    indeg = {v: 0 for v in flow_dag.nodes}
    for a, b in flow_dag.edges:
        children[a].append(b)
        indeg[b] += 1

    def is_boundary(v: int) -> bool:
        return indeg[v] != 1 or len(children[v]) != 1

    segments: list[Segment] = []
    for b in sorted(flow_dag.nodes):
        if not is_boundary(b):
            continue
        for c in sorted(children[b]):
            if is_boundary(c):
                continue
            members = []
            x = c
            while not is_boundary(x):
                members.append(x)
                (x,) = children[x]
            segments.append(Segment(tuple(members), boundary_in=b, boundary_out=x))
    segments.sort(key=lambda s: s.members[0])
    return segments


def _rewrite_segments(flow_dag: PlanDag, flow: FlowSpec) -> bool:
    """Extension point for cross-segment rewrites (pushing shared work
    through branch and merge points). Re-ordering only for now, so the
    surrounding loop converges after a single pass."""
    return False


def optimize_mimo(
    flow_dag: PlanDag,
    flow: FlowSpec,
    inner: str | InnerOptimizer,
    model: CostModel | None = None,
    *,
    parallelize_segments: bool = False,
) -> PlanDag:
    """Re-order every linear segment of the DAG with a chain optimizer.

    inner is an optimizer name from the registry or a callable taking
    (sub_flow, initial=current_order). Each segment is optimized against
    the constraints restricted to its members; the selectivity product
    flowing in from upstream scales all its candidate costs uniformly, so
    it cannot change the chosen order and is not passed down. With
    parallelize_segments the optimized segments additionally get the
    expansion-run bypass treatment.
    """
    if isinstance(inner, str):
        from .optimizers import linear_optimizer

        inner_fn: InnerOptimizer = linear_optimizer(inner)
    else:
        inner_fn = inner

    dag = flow_dag
    while True:
        dag = _reorder_segments_once(
            dag, flow, inner_fn, model, parallelize_segments
        )
        if not _rewrite_segments(dag, flow):
            break
    return dag


def _reorder_segments_once(
    flow_dag: PlanDag,
    flow: FlowSpec,
    inner_fn: InnerOptimizer,
    model: CostModel | None,
    parallelize_segments: bool,
) -> PlanDag:
    segments = extract_segments(flow_dag, flow)
    member_ids = {m for seg in segments for m in seg.members}
    edges: set[tuple[int, int]] = {
        (a, b)
        for a, b in flow_dag.edges
        if a not in member_ids and b not in member_ids
    }
    for seg in segments:
        sub = restrict(flow, seg.members)
        plan = inner_fn(sub, initial=LinearPlan(seg.members))
        if parallelize_segments:
            seg_dag = parallelize(plan, sub, model)
            edges |= seg_dag.edges
            out_deg = {v: 0 for v in seg_dag.nodes}
            for a, _ in seg_dag.edges:
                out_deg[a] += 1
            for r in seg_dag.roots():
                edges.add((seg.boundary_in, r))
            for v in sorted(seg_dag.nodes):
                if out_deg[v] == 0:
                    edges.add((v, seg.boundary_out))
        else:
            chain = (seg.boundary_in,) + plan.order + (seg.boundary_out,)
            edges |= set(zip(chain, chain[1:]))
    return PlanDag(nodes=flow_dag.nodes, edges=frozenset(edges))


def butterfly_flow(
    segments: int = 10,
    segment_length: int = 10,
    pc_fraction: float = 0.4,
    seed: int = 0,
    cost_dist: str = "uniform",
    sel_dist: str = "uniform",
) -> tuple[FlowSpec, PlanDag]:
    """Synthetic butterfly: half the segments run from their own source
    into a shared hub task, the other half fan out from the hub to their
    own sinks. Constraints are drawn per segment at the given density;
    boundary nodes are neutral glue (cost 1, selectivity 1)."""
    if segments < 2:
        raise ValueError("butterfly needs at least one in- and one out-segment")
    rng = random.Random(seed)
    cfg = GenConfig(
        n=1, pc_fraction=0.0, cost_dist=cost_dist, sel_dist=sel_dist, seed=seed
    )
    in_segments = segments // 2
    out_segments = segments - in_segments

    next_id = 1
    tasks: list[Task] = []
    edges: set[tuple[int, int]] = set()
    constraints: set[tuple[int, int]] = set()

    def take_ids(k: int) -> list[int]:
        nonlocal next_id
        ids = list(range(next_id, next_id + k))
        next_id += k
        return ids

    def glue_task(tid: int) -> Task:
        return Task(id=tid, cost=1.0, selectivity=1.0)

    def add_segment(members: list[int]) -> list[int]:
        """Draw the segment's tasks and constraints; chain the members in
        a seeded random valid order so the initial plan is admissible."""
        seg_tasks = draw_tasks(rng, members, cfg)
        tasks.extend(seg_tasks)
        seg_constraints = random_closed_constraints(rng, members, pc_fraction)
        constraints.update(seg_constraints)
        sub = FlowSpec(
            tasks=tuple(seg_tasks),
            pc=PrecedenceGraph(frozenset(members), frozenset(seg_constraints)),
        )
        chain = list(random_valid_plan(sub, rng.randrange(2**32)).order)
        edges.update(zip(chain, chain[1:]))
        return chain

    in_chains: list[list[int]] = []
    for _ in range(in_segments):
        source = take_ids(1)[0]
        tasks.append(glue_task(source))
        chain = add_segment(take_ids(segment_length))
        edges.add((source, chain[0]))
        in_chains.append(chain)
    hub = take_ids(1)[0]
    tasks.append(glue_task(hub))
    for chain in in_chains:
        edges.add((chain[-1], hub))
    for _ in range(out_segments):
        chain = add_segment(take_ids(segment_length))
        sink = take_ids(1)[0]
        tasks.append(glue_task(sink))
        edges.add((hub, chain[0]))
        edges.add((chain[-1], sink))

    flow = FlowSpec(
        tasks=tuple(sorted(tasks, key=lambda t: t.id)),
        pc=PrecedenceGraph.close(constraints, [t.id for t in tasks]),
    )
    dag = PlanDag(nodes=frozenset(flow.ids), edges=frozenset(edges))
    return flow, dag


def fork_flow(
    branches: int = 3,
    segment_length: int = 10,
    pc_fraction: float = 0.4,
    seed: int = 0,
    cost_dist: str = "uniform",
    sel_dist: str = "uniform",
) -> tuple[FlowSpec, PlanDag]:
    """Synthetic fork: one source branching into independent segments,
    each ending in its own sink."""
    if branches < 2:
        raise ValueError("a fork needs at least two branches")
    rng = random.Random(seed)
    cfg = GenConfig(
        n=1, pc_fraction=0.0, cost_dist=cost_dist, sel_dist=sel_dist, seed=seed
    )
    tasks: list[Task] = [Task(id=1, cost=1.0, selectivity=1.0)]
    edges: set[tuple[int, int]] = set()
    constraints: set[tuple[int, int]] = set()
    next_id = 2
    for _ in range(branches):
        members = list(range(next_id, next_id + segment_length))
        next_id += segment_length
        sink = next_id
        next_id += 1
        seg_tasks = draw_tasks(rng, members, cfg)
        tasks.extend(seg_tasks)
        tasks.append(Task(id=sink, cost=1.0, selectivity=1.0))
        seg_constraints = random_closed_constraints(rng, members, pc_fraction)
        constraints.update(seg_constraints)
        sub = FlowSpec(
            tasks=tuple(seg_tasks),
            pc=PrecedenceGraph(frozenset(members), frozenset(seg_constraints)),
        )
        chain = list(random_valid_plan(sub, rng.randrange(2**32)).order)
        edges.add((1, chain[0]))
        edges.update(zip(chain, chain[1:]))
        edges.add((chain[-1], sink))
    flow = FlowSpec(
        tasks=tuple(sorted(tasks, key=lambda t: t.id)),
        pc=PrecedenceGraph.close(constraints, [t.id for t in tasks]),
    )
    dag = PlanDag(nodes=frozenset(flow.ids), edges=frozenset(edges))
    return flow, dag
