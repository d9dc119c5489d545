"""Rank-driven chain-plan optimizers.

The core orders tasks by rank, defined as (1 - selectivity) / cost: a
higher rank means more filtering per unit of work, which should happen
earlier. When a constraint forces a low-rank task ahead of a high-rank
one, the two are merged into a single unit with aggregated cost and
selectivity and the merged rank is used from then on. That core is exact
for tree-shaped constraints but undefined beyond them, so three wrappers
make it applicable to arbitrary constraint DAGs:

- ro_i prunes multi-parent tasks down to their best-ranked parent, runs
  the core, then repairs any violated constraints afterwards;
- ro_ii merges parallel constraint paths that share a fork and a join
  into one rank-ordered path, which restricts the valid orders but never
  permits an invalid one, so no repair is needed;
- ro_iii takes ro_ii's plan and keeps moving small contiguous subplans
  to later positions while that strictly lowers the cost.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property
from itertools import combinations

from .core import (
    CycleError,
    FlowSpec,
    IMPROVE_EPS,
    InvalidPlanError,
    LinearPlan,
    NotATreeError,
    Task,
    validate,
)


@dataclass(frozen=True)
class RankedNode:
    """A single task or a constraint-merged chain of tasks, with the
    aggregate cost, selectivity, and rank of running it as one unit."""

    members: tuple[int, ...]
    agg_cost: float
    agg_sel: float
    rank: float

    @classmethod
    def single(cls, task: Task) -> "RankedNode":
        return cls(
            members=(task.id,),
            agg_cost=task.cost,
            agg_sel=task.selectivity,
            rank=(1.0 - task.selectivity) / task.cost,
        )

    def merge(self, other: "RankedNode") -> "RankedNode":
        """Unit that runs self first, then other."""
        cost = self.agg_cost + self.agg_sel * other.agg_cost
        sel = self.agg_sel * other.agg_sel
        return RankedNode(
            members=self.members + other.members,
            agg_cost=cost,
            agg_sel=sel,
            rank=(1.0 - sel) / cost,
        )


@dataclass(frozen=True)
class ConstraintTree:
    """A rooted forest of must-precede edges (every task has at most one
    parent). This is the only constraint shape the rank-merge core
    accepts directly."""

    nodes: frozenset[int]
    edges: frozenset[tuple[int, int]]

    def __post_init__(self) -> None:
        seen_parent: dict[int, int] = {}
        for a, b in self.edges:
            if a not in self.nodes or b not in self.nodes:
                raise ValueError(f"edge ({a}, {b}) references unknown task")
            if b in seen_parent:
                raise NotATreeError(
                    f"task {b} has two parents ({seen_parent[b]} and {a})"
                )
            seen_parent[b] = a
        # acyclicity: walking parents must terminate at a root
        for start in self.nodes:
            hops = 0
            v = start
            while v in seen_parent:
                v = seen_parent[v]
                hops += 1
                if hops > len(self.nodes):
                    raise CycleError("tree edges contain a cycle")

    @classmethod
    def from_reduction(cls, flow: FlowSpec) -> "ConstraintTree":
        """Tree view of a flow whose reduced constraint graph already is a
        forest; raises NotATreeError otherwise."""
        return cls(nodes=frozenset(flow.ids), edges=flow.pc.reduction())

    @cached_property
    def parent(self) -> dict[int, int | None]:
        par: dict[int, int | None] = {v: None for v in self.nodes}
        for a, b in self.edges:
            par[b] = a
        return par


def _normalize_chain(groups: list[RankedNode]) -> list[RankedNode]:
    """Merge adjacent groups of a constrained chain until ranks are
    non-increasing front to back (a later group outranking its
    predecessor cannot be hoisted past it, so the two fuse)."""
    out: list[RankedNode] = []
    for g in groups:
        out.append(g)
        while len(out) >= 2 and out[-2].rank < out[-1].rank:
            last = out.pop()
            out[-1] = out[-1].merge(last)
    return out


def _merge_chains(chains: list[list[RankedNode]]) -> list[RankedNode]:
    """Interleave rank-sorted chains into one, highest rank first, keeping
    each chain's internal order; ties prefer the smaller leading task id."""
    heads = [0] * len(chains)
    out: list[RankedNode] = []
    while True:
        best_ci = -1
        best_key: tuple[float, int] | None = None
        for ci, chain in enumerate(chains):
            if heads[ci] >= len(chain):
                continue
            g = chain[heads[ci]]
            key = (-g.rank, g.members[0])
            if best_key is None or key < best_key:
                best_key = key
                best_ci = ci
        if best_ci < 0:
            return out
        out.append(chains[best_ci][heads[best_ci]])
        heads[best_ci] += 1


def _forest_rank_order(flow: FlowSpec, parent: dict[int, int | None]) -> list[int]:
    """Rank-merge a forest of constraints into a task ordering."""
    by_id = flow.by_id
    children: dict[int, list[int]] = {v: [] for v in flow.ids}
    roots: list[int] = []
    for v in sorted(flow.ids):
        p = parent.get(v)
        if p is None:
            roots.append(v)
        else:
            children[p].append(v)

    def chain_for(node: int) -> list[RankedNode]:
        merged = _merge_chains([chain_for(c) for c in children[node]])
        chain = [RankedNode.single(by_id[node])] + merged
        return _normalize_chain(chain)

    final = _merge_chains([chain_for(r) for r in roots])
    order: list[int] = []
    for group in final:
        order.extend(group.members)
    return order


def kbz(flow: FlowSpec, tree: ConstraintTree) -> LinearPlan:
    """Rank-merge ordering for a flow whose constraints form the given
    rooted forest. Exact for such constraint shapes."""
    if tree.nodes != frozenset(flow.ids):
        raise ValueError("tree does not span exactly the flow's tasks")
    for edge in tree.edges:
        if edge not in flow.pc.edges:
            raise ValueError(f"tree edge {edge} is not a flow constraint")
    return LinearPlan(tuple(_forest_rank_order(flow, tree.parent)))


def ro_i(flow: FlowSpec) -> LinearPlan:
    """Prune-then-repair wrapper.

    Every task with several parents in the reduced constraint graph keeps
    only the edge from its highest-ranked parent (smaller id on ties),
    which yields a forest the rank-merge core accepts. Dropped edges can
    make the core's output invalid, so a final pass hoists each task's
    unsatisfied prerequisites directly in front of it.
    """
    by_id = flow.by_id
    parents: dict[int, list[int]] = {v: [] for v in flow.ids}
    for a, b in flow.pc.reduction():
        parents[b].append(a)

    def rank_of(tid: int) -> float:
        t = by_id[tid]
        return (1.0 - t.selectivity) / t.cost

    parent: dict[int, int | None] = {}
    for v in flow.ids:
        ps = parents[v]
        if not ps:
            parent[v] = None
        else:
            parent[v] = max(sorted(ps), key=rank_of)
    order = _forest_rank_order(flow, parent)

    preds = flow.pc.predecessors
    pos = {tid: k for k, tid in enumerate(order)}
    placed: set[int] = set()
    repaired: list[int] = []

    def place(tid: int) -> None:
        if tid in placed:
            return
        for p in sorted(preds[tid], key=pos.__getitem__):
            place(p)
        if tid not in placed:
            placed.add(tid)
            repaired.append(tid)

    for tid in order:
        place(tid)
    return LinearPlan(tuple(repaired))


def _depths(
    nodes: list[int], parents: dict[int, set[int | None]]
) -> dict[int | None, int]:
    """Longest-path depth from the virtual root (None) in the working
    constraint graph."""
    children: dict[int | None, set[int]] = {None: set()}
    remaining: dict[int, int] = {}
    for v in nodes:
        children.setdefault(v, set())
        remaining[v] = len(parents[v])
        for p in parents[v]:
            children.setdefault(p, set()).add(v)
    depth: dict[int | None, int] = {None: 0}
    ready: list[int | None] = [None]
    order: list[int] = []
    while ready:
        u = ready.pop()
        for c in children[u]:
            remaining[c] -= 1
            if remaining[c] == 0:
                ready.append(c)
                order.append(c)
    for v in order:
        depth[v] = 1 + max(depth[p] for p in parents[v])
    return depth


def _merged_parent_map(flow: FlowSpec) -> dict[int, int | None]:
    """Fold parallel constraint paths into single rank-ordered paths until
    every task has at most one parent.

    Works on the reduced constraint graph plus a virtual root above the
    parentless tasks. Joins are processed most-upstream first, so the
    region above the join under repair is always a tree; within a join,
    the two parents with the deepest common fork merge first (innermost
    first). Branch contents are interleaved by rank without reordering
    either branch, so every original constraint survives the fold.
    """
    by_id = flow.by_id
    ids = sorted(flow.ids)
    parents: dict[int, set[int | None]] = {v: set() for v in ids}
    for a, b in flow.pc.reduction():
        parents[b].add(a)
    for v in ids:
        if not parents[v]:
            parents[v].add(None)

    def root_path(v: int | None) -> list[int | None]:
        path: list[int | None] = []
        cur = v
        while cur is not None:
            path.append(cur)
            (cur,) = parents[cur]  # ancestors of the join are single-parented
        path.append(None)
        return path

    while True:
        joins = [v for v in ids if len(parents[v]) >= 2]
        if not joins:
            break
        depth = _depths(ids, parents)
        j = min(joins, key=lambda v: (depth[v], v))

        paths = {p: root_path(p) for p in sorted(parents[j], key=_sort_key)}
        best_pair: tuple[int | None, int | None] | None = None
        best_fork: int | None = None
        best_depth = -1
        for a, b in combinations(sorted(parents[j], key=_sort_key), 2):
            in_b = set(paths[b])
            fork = next(x for x in paths[a] if x in in_b)
            fork_depth = depth[fork] if fork is not None else 0
            if fork_depth > best_depth:
                best_depth = fork_depth
                best_pair = (a, b)
                best_fork = fork
        assert best_pair is not None
        a, b = best_pair
        fork = best_fork

        if fork == a or fork == b:
            # One parent is an ancestor of the other; its edge to the join
            # is implied by the longer path and can simply go.
            redundant = fork
            parents[j].discard(redundant)
            continue

        def branch_of(p: int | None) -> list[int]:
            path = paths[p]
            cut = path.index(fork)
            branch = [x for x in path[:cut]]
            branch.reverse()
            return branch  # fork's child first, ends at the join's parent

        branch_a = branch_of(a)
        branch_b = branch_of(b)
        chains = [
            _normalize_chain([RankedNode.single(by_id[x]) for x in branch])
            for branch in (branch_a, branch_b)
        ]
        merged = _merge_chains(chains)
        flat: list[int] = []
        for g in merged:
            flat.extend(g.members)

        parents[j].discard(a)
        parents[j].discard(b)
        for x in branch_a + branch_b:
            parents[x].clear()
        prev: int | None = fork
        for x in flat:
            parents[x].add(prev)
            prev = x
        parents[j].add(prev)

    result: dict[int, int | None] = {}
    for v in ids:
        (p,) = parents[v]
        result[v] = p
    return result


def _sort_key(v: int | None) -> tuple[int, int]:
    return (0, v) if v is not None else (1, 0)


def ro_ii(flow: FlowSpec) -> LinearPlan:
    """Fold-then-rank wrapper: merge parallel constraint paths into single
    paths, then run the rank-merge core on the resulting forest. The fold
    only ever adds constraints, so the output is always valid and no
    repair pass is needed."""
    parent = _merged_parent_map(flow)
    return LinearPlan(tuple(_forest_rank_order(flow, parent)))


def ro_iii(
    flow: FlowSpec, k: int = 5, *, initial: LinearPlan | None = None
) -> LinearPlan:
    """ro_ii plus a move phase: sweep subplans of size 1..k left to right,
    relocating a subplan after a later task whenever the constraints allow
    it and the cost strictly drops; repeat until a sweep changes nothing.

    The fold phase of ro_ii can leave a task stranded on the wrong side
    of cheap work because of the constraints it invents; moving whole
    subplans is what gets it unstuck. Sweeps are capped at the task count
    (convergence is observed after ~3).
    """
    if k < 1:
        raise ValueError(f"subplan window must be >= 1, got {k}")
    if initial is None:
        initial = ro_ii(flow)
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
    term = [0.0] * n

    def rebuild() -> None:
        p = 1.0
        for q in range(n):
            i = order[q]
            pref[q] = p
            term[q] = p * cost[i]
            p *= sel[i]
        pref[n] = p

    rebuild()
    sweeps = 0
    changed = True
    while changed and sweeps < n:
        changed = False
        sweeps += 1
        for size in range(1, k + 1):
            for s in range(0, n - size):
                block = order[s : s + size]
                sel_block = 1.0
                for i in block:
                    sel_block *= sel[i]
                sum_block = math.fsum(term[s : s + size])
                cur_block = sum_block
                acc = 0.0
                for t in range(s + size, n):
                    x = order[t]
                    if any(idx.requires(m, x) for m in block):
                        break
                    tx = term[t]
                    acc += tx / sel_block - tx
                    cur_block *= sel[x]
                    if acc + cur_block - sum_block < -IMPROVE_EPS:
                        order[s : t + 1] = (
                            order[s + size : t + 1] + block
                        )
                        rebuild()
                        changed = True
                        break
    return LinearPlan(tuple(idx.ids[i] for i in order))
