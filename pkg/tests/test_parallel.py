from __future__ import annotations

import statistics

import pytest

from conftest import make_flow
from flowopt.core import (
    CostModel,
    InvalidPlanError,
    LinearPlan,
    Task,
    input_cardinality,
    random_valid_plan,
    scm,
    validate,
)
from flowopt.generator import GenConfig, generate
from flowopt.parallel import (
    StreamPairCase,
    classify_adjacent_pair,
    parallelize,
    pgreedy_i,
    pgreedy_ii,
    pgreedy_trace,
)
from oracles import dag_scm, min_cut_member_product


class TestParallelize:
    def test_unconstrained_run_fans_out(self):
        # a run of three expanders hangs off the head task and rejoins at
        # the first non-expanding task
        flow = make_flow(
            [(1, 1, 1.0), (2, 1, 2.0), (3, 1, 1.5), (4, 1, 1.2), (5, 1, 0.5)]
        )
        dag = parallelize(LinearPlan((1, 2, 3, 4, 5)), flow)
        assert dag.edges == frozenset(
            {(1, 2), (1, 3), (1, 4), (2, 5), (3, 5), (4, 5)}
        )

    def test_constrained_run_member_chains_behind_its_prerequisite(self):
        # expander 5 requires expander 2, so it attaches behind 2 and runs
        # beside 4; the filter 6 stays sequential and joins the leaves
        flow = make_flow(
            [
                (1, 1, 1.0),
                (2, 1, 2.0),
                (3, 1, 1.5),
                (4, 1, 1.2),
                (5, 1, 1.1),
                (6, 1, 0.5),
            ],
            [(2, 5)],
        )
        dag = parallelize(LinearPlan((1, 2, 3, 4, 5, 6)), flow)
        assert dag.edges == frozenset(
            {(1, 2), (1, 3), (1, 4), (2, 5), (3, 6), (4, 6), (5, 6)}
        )

    def test_no_expanders_means_no_restructuring(self):
        flow = make_flow([(i, 1.0, 0.9) for i in range(1, 5)])
        dag = parallelize(LinearPlan((1, 2, 3, 4)), flow)
        assert dag.edges == frozenset({(1, 2), (2, 3), (3, 4)})
        assert scm(dag, flow) == pytest.approx(
            scm(LinearPlan((1, 2, 3, 4)), flow), rel=1e-12
        )

    def test_trailing_run_keeps_leaves_open(self):
        flow = make_flow([(1, 1, 0.5), (2, 1, 2.0), (3, 1, 2.0)])
        dag = parallelize(LinearPlan((1, 2, 3)), flow)
        assert dag.edges == frozenset({(1, 2), (1, 3)})

    def test_outputs_validate_and_never_cost_more(self):
        for seed in range(100):
            flow = generate(GenConfig(n=14, pc_fraction=0.35, seed=3000 + seed))
            plan = random_valid_plan(flow, seed)
            dag = parallelize(plan, flow)
            assert validate(dag, flow) == []
            linear_cost = scm(plan, flow)
            assert scm(dag, flow) <= linear_cost + 1e-9 * linear_cost
            # agreement with the from-scratch DAG evaluator
            assert scm(dag, flow, CostModel(10.0)) == pytest.approx(
                dag_scm(dag.nodes, dag.edges, flow, mc=10.0), rel=1e-9
            )

    def test_rejects_invalid_plan(self, three_task_flow):
        with pytest.raises(InvalidPlanError):
            parallelize(LinearPlan((3, 2, 1)), three_task_flow)


class TestPGreedy:
    def test_star_under_a_neutral_source(self):
        # all selectivities at or above 1 and a designated source: every
        # task hangs straight off the source with unit input
        flow = make_flow(
            [(1, 1.0, 1.0)] + [(i, float(i), 1.0 + 0.1 * i) for i in range(2, 6)],
            source=1,
        )
        dag = pgreedy_i(flow)
        assert dag.edges == frozenset({(1, i) for i in range(2, 6)})
        for tid in range(2, 6):
            assert input_cardinality(dag, tid, flow) == pytest.approx(1.0)

    def test_rank_variant_prefers_stronger_filter(self):
        flow = make_flow([(1, 1.0, 0.2), (2, 1.0, 0.9)])
        steps = pgreedy_trace(flow, ranked=True)
        assert steps[0].task_id == 1

    def test_single_task(self):
        flow = make_flow([(1, 3.0, 0.5)])
        for dag in (pgreedy_i(flow), pgreedy_ii(flow)):
            assert dag.nodes == frozenset({1})
            assert dag.edges == frozenset()

    def test_outputs_validate(self):
        for seed in range(60):
            flow = generate(GenConfig(n=10, pc_fraction=0.4, seed=4000 + seed))
            for dag in (pgreedy_i(flow), pgreedy_ii(flow)):
                assert validate(dag, flow) == []

    def test_rank_variant_wins_on_average(self):
        a_costs, b_costs = [], []
        for seed in range(100):
            flow = generate(GenConfig(n=12, pc_fraction=0.3, seed=5000 + seed))
            a_costs.append(scm(pgreedy_i(flow), flow))
            b_costs.append(scm(pgreedy_ii(flow), flow))
        assert statistics.fmean(b_costs) <= statistics.fmean(a_costs)

    def test_hand_derived_trace(self):
        # worked fixture: neutral task 1, filter 2, expander 3, and task 4
        # requiring 2. Cheapest-next-step order is 1, 2, 4, 3; once the
        # filter is placed everything else gates behind it at input 0.5.
        flow = make_flow(
            [(1, 1.0, 1.0), (2, 2.0, 0.5), (3, 4.0, 2.0), (4, 1.0, 1.5)],
            [(2, 4)],
        )
        steps = pgreedy_trace(flow, ranked=False)
        assert [s.task_id for s in steps] == [1, 2, 4, 3]
        assert [s.cut for s in steps] == [(), (), (2,), (2,)]
        assert [s.input_cardinality for s in steps] == pytest.approx(
            [1.0, 1.0, 0.5, 0.5]
        )
        dag = pgreedy_i(flow)
        assert dag.edges == frozenset({(2, 4), (2, 3)})

    def test_cut_is_prerequisites_plus_filters_and_member_minimal(self):
        for seed in range(25):
            flow = generate(GenConfig(n=6, pc_fraction=0.3, seed=6000 + seed))
            preds = flow.pc.predecessors
            sel = {t.id: t.selectivity for t in flow.tasks}
            for ranked in (False, True):
                placed: list[int] = []
                for step in pgreedy_trace(flow, ranked=ranked):
                    expected = set(preds[step.task_id]) | {
                        t for t in placed if sel[t] < 1.0
                    }
                    assert set(step.cut) == expected
                    mine = 1.0
                    for t in step.cut:
                        mine *= sel[t]
                    best = min_cut_member_product(
                        flow, placed, preds[step.task_id]
                    )
                    assert mine == pytest.approx(best, rel=1e-9)
                    placed.append(step.task_id)


class TestClassifier:
    def test_four_quadrants(self):
        cases = {
            (0.5, 0.5): StreamPairCase.NEITHER_EXPANDS,
            (0.5, 2.0): StreamPairCase.SECOND_EXPANDS,
            (2.0, 2.0): StreamPairCase.BOTH_EXPAND,
            (2.0, 0.5): StreamPairCase.FIRST_EXPANDS,
        }
        for (sa, sb), expected in cases.items():
            got = classify_adjacent_pair(Task(1, 1.0, sa), Task(2, 1.0, sb))
            assert got is expected

    def test_boundary_selectivity_counts_as_non_expanding(self):
        got = classify_adjacent_pair(Task(1, 1.0, 1.0), Task(2, 1.0, 1.0))
        assert got is StreamPairCase.NEITHER_EXPANDS

    def test_advice(self):
        assert StreamPairCase.BOTH_EXPAND.parallel_preferred is True
        assert StreamPairCase.NEITHER_EXPANDS.parallel_preferred is False
        assert StreamPairCase.SECOND_EXPANDS.parallel_preferred is False
        assert StreamPairCase.FIRST_EXPANDS.parallel_preferred is None
