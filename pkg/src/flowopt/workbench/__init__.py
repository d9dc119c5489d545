"""Operational surface: file formats, benchmark runner, CLI, datasets."""

from .bench import BenchReport, BenchRow, run_bench, run_mimo_bench, run_overhead
from .io import (
    FormatError,
    LoadedFlow,
    dump_flow,
    dump_plan,
    load_flow,
    load_plan,
    pdi_case_study,
    to_dot,
)

__all__ = [
    "BenchReport",
    "BenchRow",
    "FormatError",
    "LoadedFlow",
    "dump_flow",
    "dump_plan",
    "load_flow",
    "load_plan",
    "pdi_case_study",
    "run_bench",
    "run_mimo_bench",
    "run_overhead",
    "to_dot",
]
