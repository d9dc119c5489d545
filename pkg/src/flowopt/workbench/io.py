"""Flow and plan file formats, plus Graphviz export.

A flow file is JSON:

    {"tasks": [{"id": 1, "label": "Tweets", "cost": 1.7, "selectivity": 1.0}, ...],
     "constraints": [[2, 9], [3, 4], ...],
     "source": 1, "sink": 13}

label, source, and sink are optional. Constraint pairs are user edges;
the transitive closure is computed on load. Multi-input flows add an
"edges" list that defines the initial execution DAG. Plan files carry
either {"type": "linear", "order": [...]} or
{"type": "dag", "nodes": [...], "edges": [[a, b], ...]}.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

from ..core import FlowSpec, LinearPlan, Plan, PlanDag, Task


class FormatError(ValueError):
    """Raised when a flow or plan file does not match the expected schema."""


@dataclass(frozen=True)
class LoadedFlow:
    flow: FlowSpec
    dag: PlanDag | None  # initial execution DAG of a multi-input flow


def flow_to_obj(flow: FlowSpec, dag: PlanDag | None = None) -> dict:
    obj: dict = {
        "tasks": [
            {
                "id": t.id,
                **({"label": t.label} if t.label is not None else {}),
                "cost": t.cost,
                "selectivity": t.selectivity,
            }
            for t in flow.tasks
        ],
        "constraints": [list(e) for e in sorted(flow.pc.edges)],
    }
    if flow.source_id is not None:
        obj["source"] = flow.source_id
    if flow.sink_id is not None:
        obj["sink"] = flow.sink_id
    if dag is not None:
        obj["edges"] = [list(e) for e in sorted(dag.edges)]
    return obj


def obj_to_flow(obj: dict) -> LoadedFlow:
    try:
        tasks = [
            Task(
                id=int(t["id"]),
                cost=float(t["cost"]),
                selectivity=float(t["selectivity"]),
                label=t.get("label"),
            )
            for t in obj["tasks"]
        ]
        constraints = [(int(a), int(b)) for a, b in obj.get("constraints", [])]
        source = obj.get("source")
        sink = obj.get("sink")
        flow = FlowSpec.build(
            tasks,
            constraints,
            source_id=int(source) if source is not None else None,
            sink_id=int(sink) if sink is not None else None,
        )
        dag = None
        if "edges" in obj:
            dag = PlanDag(
                nodes=frozenset(t.id for t in tasks),
                edges=frozenset((int(a), int(b)) for a, b in obj["edges"]),
            )
        return LoadedFlow(flow=flow, dag=dag)
    except (KeyError, TypeError) as exc:
        raise FormatError(f"malformed flow object: {exc}") from exc


def load_flow(path: str | Path) -> LoadedFlow:
    text = Path(path).read_text(encoding="utf-8")
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise FormatError(f"{path}: {exc}") from exc
    if not isinstance(obj, dict):
        raise FormatError(f"{path}: expected a JSON object")
    return obj_to_flow(obj)


def dump_flow(flow: FlowSpec, path: str | Path, dag: PlanDag | None = None) -> None:
    Path(path).write_text(
        json.dumps(flow_to_obj(flow, dag), indent=2) + "\n", encoding="utf-8"
    )


def plan_to_obj(plan: Plan, scm_value: float | None = None) -> dict:
    if isinstance(plan, LinearPlan):
        obj: dict = {"type": "linear", "order": list(plan.order)}
    else:
        obj = {
            "type": "dag",
            "nodes": sorted(plan.nodes),
            "edges": [list(e) for e in sorted(plan.edges)],
        }
    if scm_value is not None:
        obj["scm"] = scm_value
    return obj


def obj_to_plan(obj: dict) -> Plan:
    try:
        kind = obj["type"]
        if kind == "linear":
            return LinearPlan(tuple(int(t) for t in obj["order"]))
        if kind == "dag":
            return PlanDag(
                nodes=frozenset(int(t) for t in obj["nodes"]),
                edges=frozenset((int(a), int(b)) for a, b in obj["edges"]),
            )
    except (KeyError, TypeError) as exc:
        raise FormatError(f"malformed plan object: {exc}") from exc
    raise FormatError(f"unknown plan type {obj.get('type')!r}")


def load_plan(path: str | Path) -> Plan:
    text = Path(path).read_text(encoding="utf-8")
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise FormatError(f"{path}: {exc}") from exc
    if not isinstance(obj, dict):
        raise FormatError(f"{path}: expected a JSON object")
    return obj_to_plan(obj)


def dump_plan(plan: Plan, path: str | Path, scm_value: float | None = None) -> None:
    Path(path).write_text(
        json.dumps(plan_to_obj(plan, scm_value), indent=2) + "\n", encoding="utf-8"
    )


def _dot_escape(text: str) -> str:
    return text.replace("\\", "\\\\").replace('"', '\\"')


def to_dot(flow: FlowSpec, plan: Plan | None = None, dag: PlanDag | None = None) -> str:
    """Graphviz digraph of a plan, an initial DAG, or (fallback) the
    reduced constraint graph. Nodes are emitted in ascending id order."""
    if plan is not None and isinstance(plan, LinearPlan):
        edge_list = sorted(zip(plan.order, plan.order[1:]))
    elif plan is not None:
        edge_list = sorted(plan.edges)
    elif dag is not None:
        edge_list = sorted(dag.edges)
    else:
        edge_list = sorted(flow.pc.reduction())
    lines = ["digraph flow {", "  rankdir=LR;"]
    for t in sorted(flow.tasks, key=lambda t: t.id):
        label = t.label if t.label is not None else f"t{t.id}"
        text = _dot_escape(f"{t.id}:{label}")
        lines.append(
            f'  n{t.id} [label="{text}\\nc={t.cost:g},sel={t.selectivity:g}"];'
        )
    for a, b in edge_list:
        lines.append(f"  n{a} -> n{b};")
    lines.append("}")
    return "\n".join(lines) + "\n"


def pdi_case_study() -> FlowSpec:
    """The bundled 13-task social-media reporting flow used as the
    real-tool regression fixture."""
    text = (
        resources.files("flowopt.workbench").joinpath("data/pdi_case_study.json")
    ).read_text(encoding="utf-8")
    return obj_to_flow(json.loads(text)).flow
