"""Command-line surface.

Subcommands: optimize, bench, overhead, generate, export-dot, validate.
Exit codes: 0 success, 2 unreadable input, 3 infeasible constraints,
4 size guard or time budget exceeded (pass --force to lift guards).
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from ..core import (
    ClusterTooLargeError,
    ConfigError,
    CostModel,
    CycleError,
    FlowSpec,
    LinearPlan,
    NotATreeError,
    OptimizerTimeout,
    Plan,
    SizeLimitExceeded,
    random_valid_plan,
    scm,
    validate,
)
from ..generator import GenConfig, generate
from ..mimo import butterfly_flow, fork_flow, optimize_mimo
from ..optimizers import linear_optimizer
from ..parallel import parallelize, pgreedy_i, pgreedy_ii
from . import io as wio
from .bench import overhead_csv, run_bench, run_mimo_bench, run_overhead

EXIT_OK = 0
EXIT_PARSE = 2
EXIT_INFEASIBLE = 3
EXIT_GUARD = 4

OPTIMIZE_ALGORITHMS = (
    "backtracking, dp, topsort, swap, greedy1, greedy2, partition, kbz, "
    "ro1, ro2, ro3, pgreedy1, pgreedy2, parallelize-post, mimo:<inner>"
)


def _common_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--seed", type=int, default=0, help="base random seed")
    parser.add_argument(
        "--mc", type=float, default=0.0, help="merge cost per input tuple"
    )
    parser.add_argument(
        "--force", action="store_true", help="lift exhaustive-algorithm size guards"
    )
    parser.add_argument(
        "--timeout-ms", type=float, default=None, help="optimizer time budget"
    )
    parser.add_argument("--out", type=Path, default=None, help="output file")


def _emit(text: str, out: Path | None) -> None:
    if out is None:
        sys.stdout.write(text)
    else:
        out.write_text(text, encoding="utf-8")


def _timeout_s(args: argparse.Namespace) -> float | None:
    return None if args.timeout_ms is None else args.timeout_ms / 1000.0


def _initial_plan(flow: FlowSpec, seed: int) -> LinearPlan:
    """The flow's listed order when valid (the as-designed plan),
    otherwise a seeded random valid plan."""
    listed = LinearPlan(flow.ids)
    if not validate(listed, flow):
        return listed
    return random_valid_plan(flow, seed)


def _cmd_optimize(args: argparse.Namespace) -> int:
    loaded = wio.load_flow(args.flow)
    flow = loaded.flow
    model = CostModel(merge_cost=args.mc)
    timeout_s = _timeout_s(args)
    name = args.algorithm

    result: Plan
    if name.startswith("mimo:"):
        if loaded.dag is None:
            raise wio.FormatError("mimo optimization needs a flow file with edges")
        before_plan: Plan = loaded.dag
        result = optimize_mimo(loaded.dag, flow, name.split(":", 1)[1], model)
    elif name == "parallelize-post":
        if args.plan is None:
            raise wio.FormatError("parallelize-post needs --plan with a linear plan")
        plan = wio.load_plan(args.plan)
        if not isinstance(plan, LinearPlan):
            raise wio.FormatError("parallelize-post expects a linear plan file")
        before_plan = plan
        result = parallelize(plan, flow, model)
    elif name == "pgreedy1":
        before_plan = _initial_plan(flow, args.seed)
        result = pgreedy_i(flow, model)
    elif name == "pgreedy2":
        before_plan = _initial_plan(flow, args.seed)
        result = pgreedy_ii(flow, model)
    else:
        fn = linear_optimizer(name, force=args.force, timeout_s=timeout_s)
        before_plan = _initial_plan(flow, args.seed)
        result = fn(flow, initial=before_plan)

    before = scm(before_plan, flow, model)
    after = scm(result, flow, model)
    out = args.out or Path(args.flow).with_suffix(".plan.json")
    wio.dump_plan(result, out, scm_value=after)
    print(f"SCM before: {before:.6g}")
    print(f"SCM after:  {after:.6g}")
    print(f"plan written to {out}")
    return EXIT_OK


def _gen_config(args: argparse.Namespace) -> GenConfig:
    if getattr(args, "config", None):
        import json

        obj = json.loads(Path(args.config).read_text(encoding="utf-8"))
        return GenConfig(**obj)
    return GenConfig(
        n=args.n,
        pc_fraction=args.pc_pct / 100.0,
        cost_dist=args.cost_dist,
        sel_dist=args.sel_dist,
        beta_a=args.beta_a,
        beta_b=args.beta_b,
        seed=args.seed,
    )


def _distribution_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--n", type=int, default=20, help="task count")
    parser.add_argument(
        "--pc-pct", type=float, default=40.0, help="constraint density in percent"
    )
    parser.add_argument(
        "--cost-dist", choices=("uniform", "beta"), default="uniform"
    )
    parser.add_argument("--sel-dist", choices=("uniform", "beta"), default="uniform")
    parser.add_argument("--beta-a", type=float, default=0.5)
    parser.add_argument("--beta-b", type=float, default=0.5)


def _cmd_bench(args: argparse.Namespace) -> int:
    algorithms = [a for a in args.algorithms.split(",") if a]
    if args.shape == "butterfly":
        report = run_mimo_bench(
            segments=args.segments,
            segment_length=args.segment_length,
            pc_fraction=args.pc_pct / 100.0,
            inners=algorithms,
            runs=args.runs,
            base_seed=args.seed,
            mc=args.mc,
            cost_dist=args.cost_dist,
            sel_dist=args.sel_dist,
        )
    else:
        report = run_bench(
            _gen_config(args),
            algorithms,
            runs=args.runs,
            mc=args.mc,
            force=args.force,
            timeout_s=_timeout_s(args),
        )
    _emit(report.to_csv(), args.out)
    return EXIT_OK


def _cmd_overhead(args: argparse.Namespace) -> int:
    n_values = [int(x) for x in args.n_list.split(",") if x]
    rows = run_overhead(
        algorithm=args.algorithm,
        n_values=n_values,
        pc_fraction=args.pc_pct / 100.0,
        runs=args.runs,
        base_seed=args.seed,
        cost_dist=args.cost_dist,
        sel_dist=args.sel_dist,
        force=True,
        timeout_s=_timeout_s(args),
    )
    _emit(overhead_csv(rows), args.out)
    return EXIT_OK


def _cmd_generate(args: argparse.Namespace) -> int:
    if args.shape == "linear":
        flow = generate(_gen_config(args))
        dag = None
    elif args.shape == "butterfly":
        flow, dag = butterfly_flow(
            segments=args.segments,
            segment_length=args.segment_length,
            pc_fraction=args.pc_pct / 100.0,
            seed=args.seed,
            cost_dist=args.cost_dist,
            sel_dist=args.sel_dist,
        )
    else:
        flow, dag = fork_flow(
            branches=args.segments,
            segment_length=args.segment_length,
            pc_fraction=args.pc_pct / 100.0,
            seed=args.seed,
            cost_dist=args.cost_dist,
            sel_dist=args.sel_dist,
        )
    import json

    _emit(json.dumps(wio.flow_to_obj(flow, dag), indent=2) + "\n", args.out)
    return EXIT_OK


def _cmd_export_dot(args: argparse.Namespace) -> int:
    loaded = wio.load_flow(args.flow)
    plan = wio.load_plan(args.plan) if args.plan else None
    _emit(wio.to_dot(loaded.flow, plan=plan, dag=loaded.dag), args.out)
    return EXIT_OK


def _cmd_validate(args: argparse.Namespace) -> int:
    loaded = wio.load_flow(args.flow)
    target: Plan | None = wio.load_plan(args.plan) if args.plan else loaded.dag
    if target is None:
        print(f"flow ok: {loaded.flow.n} tasks, {len(loaded.flow.pc.edges)} closure edges")
        return EXIT_OK
    violations = validate(target, loaded.flow)
    if not violations:
        print("plan ok")
        return EXIT_OK
    for v in violations:
        print(f"violation: {v}")
    return 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="flowopt",
        description="Re-order precedence-constrained data-flow tasks to minimize "
        "the sum cost metric.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_opt = sub.add_parser("optimize", help="optimize one flow file")
    p_opt.add_argument("flow", type=Path, help="flow JSON file")
    p_opt.add_argument("algorithm", help=f"one of: {OPTIMIZE_ALGORITHMS}")
    p_opt.add_argument(
        "--plan", type=Path, default=None, help="input plan (parallelize-post)"
    )
    _common_flags(p_opt)
    p_opt.set_defaults(func=_cmd_optimize)

    p_bench = sub.add_parser("bench", help="benchmark algorithms on synthetic flows")
    _distribution_flags(p_bench)
    p_bench.add_argument("--runs", type=int, default=100)
    p_bench.add_argument(
        "--algorithms",
        default="swap,ro1,ro2,ro3",
        help="comma list; p:<name> adds the run-bypass post-pass",
    )
    p_bench.add_argument("--config", type=Path, default=None, help="GenConfig JSON")
    p_bench.add_argument("--shape", choices=("linear", "butterfly"), default="linear")
    p_bench.add_argument("--segments", type=int, default=10)
    p_bench.add_argument("--segment-length", type=int, default=10)
    _common_flags(p_bench)
    p_bench.set_defaults(func=_cmd_bench)

    p_over = sub.add_parser("overhead", help="optimizer wall-time across sizes")
    p_over.add_argument("--algorithm", default="dp")
    p_over.add_argument("--n-list", default="15,16,17,18")
    p_over.add_argument("--pc-pct", type=float, default=50.0)
    p_over.add_argument("--runs", type=int, default=1)
    p_over.add_argument(
        "--cost-dist", choices=("uniform", "beta"), default="uniform"
    )
    p_over.add_argument("--sel-dist", choices=("uniform", "beta"), default="uniform")
    _common_flags(p_over)
    p_over.set_defaults(func=_cmd_overhead)

    p_gen = sub.add_parser("generate", help="emit a synthetic flow file")
    _distribution_flags(p_gen)
    p_gen.add_argument(
        "--shape", choices=("linear", "butterfly", "fork"), default="linear"
    )
    p_gen.add_argument("--segments", type=int, default=10)
    p_gen.add_argument("--segment-length", type=int, default=10)
    p_gen.add_argument("--config", type=Path, default=None, help="GenConfig JSON")
    _common_flags(p_gen)
    p_gen.set_defaults(func=_cmd_generate)

    p_dot = sub.add_parser("export-dot", help="Graphviz export")
    p_dot.add_argument("flow", type=Path)
    p_dot.add_argument("--plan", type=Path, default=None)
    _common_flags(p_dot)
    p_dot.set_defaults(func=_cmd_export_dot)

    p_val = sub.add_parser("validate", help="check a flow file or plan")
    p_val.add_argument("flow", type=Path)
    p_val.add_argument("--plan", type=Path, default=None)
    _common_flags(p_val)
    p_val.set_defaults(func=_cmd_validate)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (wio.FormatError, FileNotFoundError, ConfigError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except (CycleError, NotATreeError) as exc:
        print(f"infeasible: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except (SizeLimitExceeded, ClusterTooLargeError, OptimizerTimeout) as exc:
        print(f"guard: {exc}", file=sys.stderr)
        return EXIT_GUARD


if __name__ == "__main__":
    sys.exit(main())
