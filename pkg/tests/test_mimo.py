from __future__ import annotations

import pytest

from conftest import make_flow
from flowopt.core import (
    CostModel,
    LinearPlan,
    PlanDag,
    restrict,
    scm,
    validate,
)
from flowopt.mimo import (
    Segment,
    butterfly_flow,
    extract_segments,
    fork_flow,
    optimize_mimo,
)
from flowopt.rankorder import ro_iii
from oracles import brute_force_linear


def _chain_dag(order):
    return PlanDag(nodes=frozenset(order), edges=frozenset(zip(order, order[1:])))


class TestExtractSegments:
    def test_pure_chain_is_one_segment(self):
        flow = make_flow([(i, 1.0, 1.0) for i in range(1, 7)])
        dag = _chain_dag((1, 2, 3, 4, 5, 6))
        segments = extract_segments(dag, flow)
        assert segments == [
            Segment(members=(2, 3, 4, 5), boundary_in=1, boundary_out=6)
        ]

    def test_butterfly_has_requested_segments(self):
        flow, dag = butterfly_flow(segments=10, segment_length=10, seed=2)
        segments = extract_segments(dag, flow)
        assert len(segments) == 10
        assert all(len(s.members) == 10 for s in segments)

    def test_fork_has_one_segment_per_branch(self):
        flow, dag = fork_flow(branches=4, segment_length=6, seed=3)
        segments = extract_segments(dag, flow)
        assert len(segments) == 4
        assert all(s.boundary_in == 1 for s in segments)

    def test_segments_partition_the_interior(self):
        flow, dag = butterfly_flow(segments=6, segment_length=7, seed=4)
        segments = extract_segments(dag, flow)
        seen: set[int] = set()
        for s in segments:
            assert seen.isdisjoint(s.members)
            seen.update(s.members)
        indeg = {v: 0 for v in dag.nodes}
        outdeg = {v: 0 for v in dag.nodes}
        for a, b in dag.edges:
            outdeg[a] += 1
            indeg[b] += 1
        interior = {v for v in dag.nodes if indeg[v] == 1 and outdeg[v] == 1}
        assert seen == interior


class TestOptimizeMimo:
    def test_singleton_segments_leave_the_dag_alone(self):
        flow = make_flow([(1, 1, 1.0), (2, 1, 0.5), (3, 1, 1.0)])
        dag = _chain_dag((1, 2, 3))
        out = optimize_mimo(dag, flow, "swap")
        assert out.edges == dag.edges

    def test_structure_is_preserved(self):
        flow, dag = butterfly_flow(segments=6, segment_length=8, seed=5)
        out = optimize_mimo(dag, flow, "ro3")
        assert validate(out, flow) == []
        before = extract_segments(dag, flow)
        after = extract_segments(out, flow)
        assert sorted((s.boundary_in, s.boundary_out) for s in before) == sorted(
            (s.boundary_in, s.boundary_out) for s in after
        )
        assert sorted(tuple(sorted(s.members)) for s in before) == sorted(
            tuple(sorted(s.members)) for s in after
        )

    def test_exact_inner_solves_each_segment(self):
        flow, dag = butterfly_flow(segments=4, segment_length=6, seed=6)
        out = optimize_mimo(dag, flow, "dp")
        chains = {
            frozenset(s.members): s.members for s in extract_segments(out, flow)
        }
        for seg in extract_segments(dag, flow):
            sub = restrict(flow, seg.members)
            best, _ = brute_force_linear(sub)
            optimized = chains[frozenset(seg.members)]
            assert scm(LinearPlan(optimized), sub) == pytest.approx(best, rel=1e-9)

    def test_monotone_inner_never_degrades(self):
        for seed in range(10):
            flow, dag = butterfly_flow(segments=4, segment_length=8, seed=30 + seed)
            base = scm(dag, flow)
            swapped = optimize_mimo(dag, flow, "swap")
            assert scm(swapped, flow) <= base + 1e-9 * base
            seeded_ro3 = optimize_mimo(
                dag, flow, lambda sub, initial=None: ro_iii(sub, initial=initial)
            )
            assert scm(seeded_ro3, flow) <= base + 1e-9 * base

    def test_inner_names_resolve(self):
        flow, dag = butterfly_flow(segments=4, segment_length=5, seed=7)
        for inner in ("swap", "greedy1", "ro3"):
            out = optimize_mimo(dag, flow, inner)
            assert validate(out, flow) == []

    def test_parallelized_segments_stay_valid_and_help_without_merge_cost(self):
        for seed in range(10):
            flow, dag = butterfly_flow(segments=4, segment_length=8, seed=60 + seed)
            plain = optimize_mimo(dag, flow, "ro3")
            bypassed = optimize_mimo(dag, flow, "ro3", parallelize_segments=True)
            assert validate(bypassed, flow) == []
            assert scm(bypassed, flow) <= scm(plain, flow) + 1e-9 * scm(plain, flow)

    def test_cross_segment_constraints_survive(self):
        # constraint from an upstream segment's member to a downstream
        # segment's member: boundaries stay fixed, so it always holds
        flow = make_flow(
            [
                (1, 1.0, 1.0),
                (2, 2.0, 0.5),
                (3, 1.0, 0.8),
                (4, 3.0, 1.0),  # branch point
                (5, 1.0, 0.4),
                (6, 2.0, 1.0),
                (7, 1.0, 1.0),
            ],
            [(2, 5)],
        )
        dag = PlanDag(
            nodes=frozenset(range(1, 8)),
            edges=frozenset(
                {(1, 2), (2, 3), (3, 4), (4, 5), (5, 6), (4, 7), (6, 7)}
            ),
        )
        assert validate(dag, flow) == []
        for inner in ("swap", "dp"):
            out = optimize_mimo(dag, flow, inner)
            assert validate(out, flow) == []

    def test_merge_cost_flows_through(self):
        flow, dag = butterfly_flow(segments=4, segment_length=6, seed=8)
        out = optimize_mimo(
            dag, flow, "ro3", CostModel(10.0), parallelize_segments=True
        )
        assert validate(out, flow) == []
        assert scm(out, flow, CostModel(10.0)) >= scm(out, flow)


def test_fixture_dags_are_valid_and_deterministic():
    a_flow, a_dag = butterfly_flow(segments=6, segment_length=5, seed=11)
    b_flow, b_dag = butterfly_flow(segments=6, segment_length=5, seed=11)
    assert a_flow == b_flow and a_dag == b_dag
    assert validate(a_dag, a_flow) == []
    f_flow, f_dag = fork_flow(branches=3, segment_length=5, seed=12)
    assert validate(f_dag, f_flow) == []
    assert len(f_dag.roots()) == 1
    assert len(a_dag.roots()) == 3  # one per in-segment
