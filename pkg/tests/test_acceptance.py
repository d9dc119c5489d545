"""Acceptance suite.

One test per acceptance criterion, each printing a PASS line when its
assertions hold (run with -v -s to see them). Tolerances are fixed here,
not tuned at runtime.
"""

from __future__ import annotations

import statistics
import time

import pytest

from flowopt.core import (
    CostModel,
    LinearPlan,
    random_valid_plan,
    scm,
    validate,
)
from flowopt.exact import (
    backtracking,
    count_linear_extensions,
    dynamic_programming,
    topsort_enumerate,
)
from flowopt.generator import GenConfig, generate
from flowopt.heuristics import greedy_i, greedy_ii, partition, swap_opt
from flowopt.parallel import parallelize, pgreedy_trace
from flowopt.rankorder import RankedNode, kbz, ro_i, ro_ii, ro_iii, ConstraintTree
from flowopt.workbench.bench import run_bench, run_mimo_bench
from oracles import brute_force_linear, min_cut_member_product


def _ok(number: int, name: str) -> None:
    print(f"ACCEPTANCE {number:02d} ({name}): PASS")


def test_criterion_01_worked_example_exactness(three_task_flow):
    flow = three_task_flow
    assert scm(LinearPlan((1, 2, 3)), flow) == pytest.approx(3.1, abs=1e-12)
    assert scm(LinearPlan((2, 3, 1)), flow) == pytest.approx(2.65, abs=1e-12)

    # the three suboptimality witnesses stall at 3.1
    for stuck in (
        swap_opt(flow, LinearPlan((1, 2, 3))),
        greedy_i(flow),
        partition(flow),
    ):
        assert scm(stuck, flow) == pytest.approx(3.1, abs=1e-12)

    tree = ConstraintTree(frozenset({1, 2, 3}), frozenset({(2, 3)}))
    for optimal in (
        backtracking(flow),
        dynamic_programming(flow),
        topsort_enumerate(flow),
        kbz(flow, tree),
        ro_i(flow),
    ):
        assert scm(optimal, flow) == pytest.approx(2.65, abs=1e-12)
    _ok(1, "worked-example exactness")


def test_criterion_02_exact_oracle_agreement():
    densities = (0.2, 0.4, 0.6, 0.8)
    for case in range(200):
        n = 4 + case % 6
        flow = generate(
            GenConfig(n=n, pc_fraction=densities[case % 4], seed=100_000 + case)
        )
        best, count = brute_force_linear(flow)
        for algorithm in (backtracking, dynamic_programming, topsort_enumerate):
            value = scm(algorithm(flow), flow)
            assert abs(value - best) <= 1e-9 * max(abs(best), 1.0), (
                algorithm.__name__,
                case,
            )
        assert count_linear_extensions(flow) == count, case
    _ok(2, "exact-oracle agreement, 200 flows")


def test_criterion_03_pdi_case_study_structure(pdi_flow):
    optimum = dynamic_programming(pdi_flow)
    assert validate(optimum, pdi_flow) == []
    pos = {t: i for i, t in enumerate(optimum.order)}
    assert pos[12] < pos[11]  # the region filter runs before the campaign lookup
    assert pos[6] < pos[8] and pos[7] < pos[8]  # date extraction pair before sort

    designed = LinearPlan(tuple(range(1, 14)))
    stuck = swap_opt(pdi_flow, designed)
    gap = scm(stuck, pdi_flow) - scm(optimum, pdi_flow)
    assert gap > 1e-9 * scm(optimum, pdi_flow)
    _ok(3, "real-tool case-study structure")


def test_criterion_04_uniform_benchmark_reproduction():
    report = run_bench(
        GenConfig(n=20, pc_fraction=0.4, seed=0),
        ["swap", "ro1", "ro2", "ro3"],
        runs=100,
    )
    means = report.mean_normalized
    assert means["ro3"] < means["swap"]
    assert means["ro3"] < min(means["ro1"], means["ro2"])
    assert abs(means["ro3"] - 0.2841) <= 0.10
    assert abs(means["swap"] - 0.4101) <= 0.10
    _ok(4, f"uniform benchmark (ro3 {means['ro3']:.4f}, swap {means['swap']:.4f})")


def test_criterion_05_beta_benchmark_reproduction():
    report = run_bench(
        GenConfig(
            n=20, pc_fraction=0.4, cost_dist="beta", sel_dist="beta", seed=0
        ),
        ["swap", "ro3"],
        runs=100,
    )
    means = report.mean_normalized
    assert means["ro3"] < means["swap"]
    _ok(5, f"beta benchmark (ro3 {means['ro3']:.4f} < swap {means['swap']:.4f})")


def test_criterion_06_parallel_monotonicity():
    violations = 0
    relative_changes = []
    for seed in range(500):
        flow = generate(GenConfig(n=20, pc_fraction=0.4, seed=200_000 + seed))
        plan = random_valid_plan(flow, seed)
        dag = parallelize(plan, flow)
        base = scm(plan, flow)
        free = scm(dag, flow)
        if free > base + 1e-9 * base:
            violations += 1
        priced = scm(dag, flow, CostModel(10.0))
        relative_changes.append((priced - free) / free)
    assert violations == 0
    mean_change = statistics.fmean(relative_changes)
    assert mean_change < 0.05
    _ok(6, f"parallel monotonicity (merge-cost impact {mean_change:.3%})")


def test_criterion_07_cut_optimality():
    checked = 0
    for case in range(100):
        n = 4 + case % 4
        flow = generate(GenConfig(n=n, pc_fraction=0.3, seed=300_000 + case))
        preds = flow.pc.predecessors
        sel = {t.id: t.selectivity for t in flow.tasks}
        for ranked in (False, True):
            placed: list[int] = []
            for step in pgreedy_trace(flow, ranked=ranked):
                mine = 1.0
                for t in step.cut:
                    mine *= sel[t]
                best = min_cut_member_product(flow, placed, preds[step.task_id])
                assert abs(mine - best) <= 1e-12 * max(best, 1.0), (case, step)
                placed.append(step.task_id)
                checked += 1
    assert checked >= 800
    _ok(7, f"cut optimality ({checked} placement steps)")


def test_criterion_08_mimo_improvement():
    report = run_mimo_bench(
        segments=10,
        segment_length=20,
        pc_fraction=0.4,
        inners=["swap", "ro3"],
        runs=30,
    )
    means = report.mean_normalized
    assert means["mimo:ro3"] < means["mimo:swap"]
    assert means["mimo:ro3"] <= 0.40
    _ok(8, f"mimo improvement (ro3 {means['mimo:ro3']:.4f}, swap {means['mimo:swap']:.4f})")


def test_criterion_09_overhead_shape():
    times = []
    for n in (15, 16, 17, 18):
        flow = generate(GenConfig(n=n, pc_fraction=0.5, seed=42))
        start = time.perf_counter()
        dynamic_programming(flow)
        times.append(time.perf_counter() - start)
    assert times == sorted(times) and len(set(times)) == 4

    dense = generate(GenConfig(n=30, pc_fraction=0.98, seed=7))
    start = time.perf_counter()
    plan = topsort_enumerate(dense, timeout_s=60.0)
    elapsed = time.perf_counter() - start
    assert elapsed < 60.0
    assert validate(plan, dense) == []
    _ok(
        9,
        "overhead shape (dp "
        + ", ".join(f"{t:.2f}s" for t in times)
        + f"; dense enumeration {elapsed:.3f}s)",
    )


def test_criterion_10_property_suite():
    cases = 0

    # every optimizer's output validates (320 cases)
    optimizers = [
        lambda f, s: backtracking(f, force=True),
        lambda f, s: dynamic_programming(f),
        lambda f, s: topsort_enumerate(f),
        lambda f, s: swap_opt(f, seed=s),
        lambda f, s: greedy_i(f),
        lambda f, s: greedy_ii(f),
        lambda f, s: ro_i(f),
        lambda f, s: ro_iii(f),
    ]
    for seed in range(40):
        flow = generate(
            GenConfig(n=6 + seed % 4, pc_fraction=0.35, seed=400_000 + seed)
        )
        for optimizer in optimizers:
            assert validate(optimizer(flow, seed), flow) == []
            cases += 1

    # swap terminates and is idempotent in value (40 cases)
    for seed in range(40):
        flow = generate(GenConfig(n=12, pc_fraction=0.4, seed=410_000 + seed))
        once = swap_opt(flow, seed=seed)
        twice = swap_opt(flow, once)
        a, b = scm(once, flow), scm(twice, flow)
        assert abs(a - b) <= 1e-9 * max(a, 1.0)
        cases += 1

    # the move phase never loses to the fold phase (40 cases)
    for seed in range(40):
        flow = generate(GenConfig(n=10, pc_fraction=0.4, seed=420_000 + seed))
        assert scm(ro_iii(flow), flow) <= scm(ro_ii(flow), flow) + 1e-9
        cases += 1

    # rank identity: rank x cost + selectivity = 1 (200 cases)
    for seed in range(20):
        flow = generate(GenConfig(n=10, pc_fraction=0.2, seed=430_000 + seed))
        for task in flow.tasks:
            node = RankedNode.single(task)
            assert node.rank * node.agg_cost + node.agg_sel == pytest.approx(
                1.0, rel=1e-9
            )
            cases += 1

    # closure idempotence (100 cases)
    from flowopt.core import PrecedenceGraph

    for seed in range(100):
        pc = generate(
            GenConfig(n=9, pc_fraction=0.1 + 0.8 * (seed % 10) / 9, seed=440_000 + seed)
        ).pc
        assert PrecedenceGraph.close(pc.edges, pc.nodes).edges == pc.edges
        cases += 1

    # generator envelope: value ranges and closure-count bounds (300 cases)
    import math

    for seed in range(300):
        n = 8 + seed % 10
        alpha = (0.1, 0.3, 0.5, 0.7, 0.9)[seed % 5]
        flow = generate(GenConfig(n=n, pc_fraction=alpha, seed=450_000 + seed))
        target = math.ceil(alpha * n * (n - 1) / 2 - 1e-9)
        assert target <= len(flow.pc.edges) <= target + n
        assert all(1.0 <= t.cost <= 100.0 for t in flow.tasks)
        assert all(0.0 < t.selectivity <= 2.0 for t in flow.tasks)
        cases += 1

    assert cases >= 1000
    _ok(10, f"property suite ({cases} randomized cases)")
