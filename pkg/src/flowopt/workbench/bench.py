"""Benchmark runner and CSV reporting.

Each run generates one synthetic flow (base seed plus run index), takes
a seeded random valid plan as the normalization baseline, and reports
every requested algorithm's cost normalized by that baseline. The CSV is
byte-deterministic for a fixed base seed except for the wall-time
column, which can be excluded when hashing.
"""

from __future__ import annotations

import io
import statistics
import time
from dataclasses import dataclass, field
from typing import Callable, Sequence

from ..core import CostModel, FlowSpec, Plan, random_valid_plan, scm
from ..generator import GenConfig, generate
from ..mimo import butterfly_flow, optimize_mimo
from ..optimizers import linear_optimizer
from ..parallel import parallelize, pgreedy_i, pgreedy_ii

DIFF_BASELINE = "swap"
DIFF_TARGET = "ro3"

CSV_HEADER = ("seed", "n", "pc_pct", "algorithm", "scm", "normalized_scm", "wall_time_ms")


@dataclass(frozen=True)
class BenchRow:
    seed: int
    n: int
    pc_pct: int
    algorithm: str
    scm: float
    normalized_scm: float
    wall_time_ms: float
    plan: Plan | None = field(default=None, compare=False)


@dataclass
class BenchReport:
    rows: tuple[BenchRow, ...]
    mean_normalized: dict[str, float]
    avg_diff: float | None
    max_diff: float | None

    def to_csv(self, include_wall_time: bool = True) -> str:
        out = io.StringIO()
        header = CSV_HEADER if include_wall_time else CSV_HEADER[:-1]
        out.write(",".join(header) + "\n")
        for r in self.rows:
            cells = [
                str(r.seed),
                str(r.n),
                str(r.pc_pct),
                r.algorithm,
                f"{r.scm:.6g}",
                f"{r.normalized_scm:.6g}",
            ]
            if include_wall_time:
                cells.append(f"{r.wall_time_ms:.3f}")
            out.write(",".join(cells) + "\n")
        for alg, mean in self.mean_normalized.items():
            out.write(f"#aggregate algorithm={alg} mean_normalized_scm={mean:.4f}\n")
        if self.avg_diff is not None and self.max_diff is not None:
            out.write(
                f"#aggregate avg_diff={self.avg_diff:.4f} max_diff={self.max_diff:.4f}\n"
            )
        return out.getvalue()


def _bench_algorithm(
    name: str, mc: float, force: bool, timeout_s: float | None
) -> Callable[[FlowSpec, Plan], Plan]:
    """Resolve a benchmark algorithm name to (flow, initial_plan) -> plan.
    Besides the chain optimizers this accepts pgreedy1/pgreedy2 and
    p:<name> for a chain optimizer followed by the run-bypass post-pass."""
    model = CostModel(merge_cost=mc)
    if name == "pgreedy1":
        return lambda flow, initial: pgreedy_i(flow, model)
    if name == "pgreedy2":
        return lambda flow, initial: pgreedy_ii(flow, model)
    if name.startswith("p:"):
        inner = linear_optimizer(name[2:], force=force, timeout_s=timeout_s)
        return lambda flow, initial: parallelize(
            inner(flow, initial=initial), flow, model
        )
    fn = linear_optimizer(name, force=force, timeout_s=timeout_s)
    return lambda flow, initial: fn(flow, initial=initial)


def _aggregate(
    rows: list[BenchRow], per_run: list[dict[str, float]], algorithms: Sequence[str]
) -> BenchReport:
    means: dict[str, float] = {}
    order: list[str] = []
    for r in rows:
        if r.algorithm not in order:
            order.append(r.algorithm)
    for alg in order:
        means[alg] = statistics.fmean(
            r.normalized_scm for r in rows if r.algorithm == alg
        )
    avg_diff = max_diff = None
    names = list(algorithms)
    if names:
        baseline = DIFF_BASELINE if DIFF_BASELINE in names else names[0]
        target = DIFF_TARGET if DIFF_TARGET in names else names[-1]
        diffs = [
            (run[baseline] - run[target]) / run[baseline]
            for run in per_run
            if baseline in run and target in run and run[baseline] > 0
        ]
        if diffs:
            avg_diff = statistics.fmean(diffs)
            max_diff = max(diffs)
    return BenchReport(
        rows=tuple(rows), mean_normalized=means, avg_diff=avg_diff, max_diff=max_diff
    )


def run_bench(
    config: GenConfig,
    algorithms: Sequence[str],
    runs: int,
    mc: float = 0.0,
    force: bool = False,
    timeout_s: float | None = None,
    keep_plans: bool = False,
) -> BenchReport:
    """Benchmark chain (and parallel) optimizers over generated flows."""
    model = CostModel(merge_cost=mc)
    resolved = [
        (name, _bench_algorithm(name, mc, force, timeout_s)) for name in algorithms
    ]
    pc_pct = round(config.pc_fraction * 100)
    rows: list[BenchRow] = []
    per_run: list[dict[str, float]] = []
    for r in range(runs):
        cfg = config.with_seed(config.seed + r)
        flow = generate(cfg)
        initial = random_valid_plan(flow, cfg.seed)
        base = scm(initial, flow)
        rows.append(
            BenchRow(
                seed=cfg.seed,
                n=cfg.n,
                pc_pct=pc_pct,
                algorithm="initial",
                scm=base,
                normalized_scm=1.0,
                wall_time_ms=0.0,
                plan=initial if keep_plans else None,
            )
        )
        this_run: dict[str, float] = {}
        for name, fn in resolved:
            t0 = time.perf_counter()
            plan = fn(flow, initial)
            elapsed_ms = (time.perf_counter() - t0) * 1000.0
            value = scm(plan, flow, model)
            this_run[name] = value
            rows.append(
                BenchRow(
                    seed=cfg.seed,
                    n=cfg.n,
                    pc_pct=pc_pct,
                    algorithm=name,
                    scm=value,
                    normalized_scm=value / base,
                    wall_time_ms=elapsed_ms,
                    plan=plan if keep_plans else None,
                )
            )
        per_run.append(this_run)
    return _aggregate(rows, per_run, list(algorithms))


def run_mimo_bench(
    segments: int,
    segment_length: int,
    pc_fraction: float,
    inners: Sequence[str],
    runs: int,
    base_seed: int = 0,
    mc: float = 0.0,
    cost_dist: str = "uniform",
    sel_dist: str = "uniform",
    parallelize_segments: bool = False,
    keep_plans: bool = False,
) -> BenchReport:
    """Benchmark segment re-ordering on butterfly flows; the baseline is
    the unoptimized initial DAG."""
    model = CostModel(merge_cost=mc)
    pc_pct = round(pc_fraction * 100)
    rows: list[BenchRow] = []
    per_run: list[dict[str, float]] = []
    names = [f"mimo:{inner}" for inner in inners]
    for r in range(runs):
        seed = base_seed + r
        flow, dag = butterfly_flow(
            segments=segments,
            segment_length=segment_length,
            pc_fraction=pc_fraction,
            seed=seed,
            cost_dist=cost_dist,
            sel_dist=sel_dist,
        )
        base = scm(dag, flow, model)
        rows.append(
            BenchRow(
                seed=seed,
                n=flow.n,
                pc_pct=pc_pct,
                algorithm="initial",
                scm=base,
                normalized_scm=1.0,
                wall_time_ms=0.0,
                plan=dag if keep_plans else None,
            )
        )
        this_run: dict[str, float] = {}
        for inner, name in zip(inners, names):
            t0 = time.perf_counter()
            plan = optimize_mimo(
                dag, flow, inner, model, parallelize_segments=parallelize_segments
            )
            elapsed_ms = (time.perf_counter() - t0) * 1000.0
            value = scm(plan, flow, model)
            this_run[name] = value
            rows.append(
                BenchRow(
                    seed=seed,
                    n=flow.n,
                    pc_pct=pc_pct,
                    algorithm=name,
                    scm=value,
                    normalized_scm=value / base,
                    wall_time_ms=elapsed_ms,
                    plan=plan if keep_plans else None,
                )
            )
        per_run.append(this_run)
    return _aggregate(rows, per_run, names)


@dataclass(frozen=True)
class OverheadRow:
    n: int
    pc_pct: int
    algorithm: str
    seed: int
    wall_time_ms: float


def run_overhead(
    algorithm: str,
    n_values: Sequence[int],
    pc_fraction: float,
    runs: int = 1,
    base_seed: int = 0,
    cost_dist: str = "uniform",
    sel_dist: str = "uniform",
    force: bool = True,
    timeout_s: float | None = None,
) -> list[OverheadRow]:
    """Wall-time measurements of one optimizer across flow sizes."""
    fn = _bench_algorithm(algorithm, mc=0.0, force=force, timeout_s=timeout_s)
    rows: list[OverheadRow] = []
    pc_pct = round(pc_fraction * 100)
    for n in n_values:
        for r in range(runs):
            seed = base_seed + r
            cfg = GenConfig(
                n=n,
                pc_fraction=pc_fraction,
                cost_dist=cost_dist,
                sel_dist=sel_dist,
                seed=seed,
            )
            flow = generate(cfg)
            initial = random_valid_plan(flow, seed)
            t0 = time.perf_counter()
            fn(flow, initial)
            elapsed_ms = (time.perf_counter() - t0) * 1000.0
            rows.append(
                OverheadRow(
                    n=n,
                    pc_pct=pc_pct,
                    algorithm=algorithm,
                    seed=seed,
                    wall_time_ms=elapsed_ms,
                )
            )
    return rows


def overhead_csv(rows: Sequence[OverheadRow]) -> str:
    out = io.StringIO()
    out.write("n,pc_pct,algorithm,seed,wall_time_ms\n")
    for r in rows:
        out.write(
            f"{r.n},{r.pc_pct},{r.algorithm},{r.seed},{r.wall_time_ms:.3f}\n"
        )
    return out.getvalue()
