from __future__ import annotations

import pytest

from flowopt.core import FlowSpec, Task


def make_flow(specs, constraints=(), source=None, sink=None) -> FlowSpec:
    """specs: iterable of (id, cost, selectivity) triples."""
    tasks = [Task(id=i, cost=c, selectivity=s) for i, c, s in specs]
    return FlowSpec.build(tasks, constraints, source_id=source, sink_id=sink)


@pytest.fixture
def three_task_flow() -> FlowSpec:
    # Three unit-cost tasks with selectivities 1, 1.1, 0.5 and the single
    # constraint that task 2 runs before task 3. Best order is (2, 3, 1)
    # at cost 2.65; the greedy and local-search heuristics stall at 3.1.
    return make_flow([(1, 1.0, 1.0), (2, 1.0, 1.1), (3, 1.0, 0.5)], [(2, 3)])


@pytest.fixture(scope="session")
def pdi_flow() -> FlowSpec:
    from flowopt.workbench import pdi_case_study

    return pdi_case_study()
