"""End-to-end analysis: load a model, extract TFGs, propagate, check constraints.

The produced :class:`AnalysisReport` serializes to canonical JSON so that
repeated runs (and the CLI and HTTP service) emit byte-identical reports.
Stage timings are collected but excluded from the JSON by default, since
they are the only non-deterministic part of a report.
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass, field
from pathlib import Path

from . import adl as adl_mod
from . import model_io
from .constraints import Constraint, Violation, execute
from .core import DataDictionary, DataFlowDiagram, ModelError
from .flowgraph import FlowGraphCollection, extract_tfgs
from .propagation import PropagatedFlowGraph, propagate_all


class UnsupportedFormatError(ModelError):
    pass


@dataclass(frozen=True)
class LoadedModel:
    dictionary: DataDictionary
    diagram: DataFlowDiagram
    traces: dict[str, str] = field(default_factory=dict)
    warnings: tuple[str, ...] = ()
    load_ms: float = 0.0


def load_model_data(data: bytes | str, fmt: str) -> LoadedModel:
    """Load model text in one of the supported formats.

    ``fmt`` is one of ``dfd-json`` (canonical schema), ``flat-json``
    (documented flat dialect), ``adl`` or ``plantuml``.
    """
    started = time.perf_counter()
    if fmt == "dfd-json":
        doc = model_io.load_document(data)
        loaded = LoadedModel(doc.dictionary, doc.diagram, dict(doc.traces))
    elif fmt == "flat-json":
        result = model_io.load_flat_json(data)
        loaded = LoadedModel(result.dictionary, result.diagram,
                             warnings=result.warnings)
    elif fmt == "adl":
        if isinstance(data, bytes):
            data = data.decode("utf-8")
        model = adl_mod.parse_adl(data)
        dictionary, diagram, traces = adl_mod.transform_to_dfd(model)
        loaded = LoadedModel(dictionary, diagram, dict(traces.nodes))
    elif fmt == "plantuml":
        if isinstance(data, bytes):
            data = data.decode("utf-8")
        result = model_io.import_plantuml(data)
        loaded = LoadedModel(result.dictionary, result.diagram,
                             warnings=result.warnings)
    else:
        raise UnsupportedFormatError(f"unsupported model format '{fmt}'")
    elapsed = (time.perf_counter() - started) * 1000.0
    return LoadedModel(loaded.dictionary, loaded.diagram, loaded.traces,
                       loaded.warnings, load_ms=elapsed)


def detect_format(path: str | Path, data: bytes | None = None) -> str:
    """Guess the model format from the file extension (and JSON contents)."""
    suffix = Path(path).suffix.lower()
    if suffix == ".adl":
        return "adl"
    if suffix in (".puml", ".plantuml", ".uml"):
        return "plantuml"
    if suffix == ".json":
        if data is not None:
            try:
                raw = json.loads(data.decode("utf-8") if isinstance(data, bytes) else data)
            except json.JSONDecodeError:
                return "dfd-json"  # let the loader report the syntax error
            if isinstance(raw, dict) and raw.get("version") == model_io.FORMAT_VERSION:
                return "dfd-json"
            return "flat-json"
        return "dfd-json"
    raise UnsupportedFormatError(f"cannot infer model format of '{path}'")


def load_model_file(path: str | Path) -> LoadedModel:
    data = Path(path).read_bytes()
    return load_model_data(data, detect_format(path, data))


@dataclass(frozen=True)
class AnalysisReport:
    node_count: int
    flow_count: int
    tfg_count: int
    results: tuple[tuple[str, tuple[Violation, ...]], ...]
    node_flags: dict[str, bool]
    timings_ms: dict[str, float]

    @property
    def violation_total(self) -> int:
        return sum(len(v) for _name, v in self.results)

    def to_json_dict(self, include_timings: bool = False) -> dict:
        doc: dict = {
            "version": "report/1",
            "model": {
                "nodes": self.node_count,
                "flows": self.flow_count,
                "tfgs": self.tfg_count,
            },
            "constraints": [
                {
                    "name": name,
                    "count": len(violations),
                    "violations": [_violation_to_json(v) for v in violations],
                }
                for name, violations in self.results
            ],
            "nodeViolations": {k: self.node_flags[k] for k in sorted(self.node_flags)},
        }
        if include_timings:
            doc["timingsMs"] = {k: round(v, 3) for k, v in sorted(self.timings_ms.items())}
        return doc

    def render_json(self, include_timings: bool = False) -> str:
        return json.dumps(self.to_json_dict(include_timings), indent=2) + "\n"

    def render_text(self) -> str:
        lines = [
            f"model: {self.node_count} nodes, {self.flow_count} flows, "
            f"{self.tfg_count} TFGs",
        ]
        for name, violations in self.results:
            lines.append(f"constraint {name}: {len(violations)} violation(s)")
            for v in violations:
                labels = ", ".join(sorted(str(lab) for lab in v.labels)) or "-"
                lines.append(
                    f"  tfg {v.tfg_index} vertex {v.vertex_id}: "
                    f"data '{v.variable}' [{labels}]")
        lines.append("timings: " + ", ".join(
            f"{k}={v:.1f}ms" for k, v in sorted(self.timings_ms.items())))
        return "\n".join(lines) + "\n"


def _violation_to_json(v: Violation) -> dict:
    return {
        "constraint": v.constraint,
        "tfg": v.tfg_index,
        "vertex": v.vertex_id,
        "variable": v.variable,
        "labels": sorted(str(lab) for lab in v.labels),
        "nodeLabels": sorted(str(lab) for lab in v.node_labels),
        "trace": {k: v.trace[k] for k in sorted(v.trace)},
    }


def analyze_model(loaded: LoadedModel, constraints: list[Constraint]) -> AnalysisReport:
    """Run the full pipeline over a loaded model.

    Violations are grouped per constraint in input order; ``node_flags``
    marks every diagram node that appears in at least one violation, which
    is what the editor uses for highlighting.
    """
    timings: dict[str, float] = {"load": loaded.load_ms}

    started = time.perf_counter()
    collection: FlowGraphCollection = extract_tfgs(loaded.diagram)
    timings["extract"] = (time.perf_counter() - started) * 1000.0

    started = time.perf_counter()
    propagated: list[PropagatedFlowGraph] = propagate_all(collection)
    timings["propagate"] = (time.perf_counter() - started) * 1000.0

    started = time.perf_counter()
    results = []
    flagged: set[str] = set()
    for constraint in constraints:
        violations = tuple(execute(constraint, propagated, loaded.diagram,
                                   loaded.traces or None))
        results.append((constraint.name, violations))
        for violation in violations:
            flagged.add(violation.trace["node"])
    timings["constraints"] = (time.perf_counter() - started) * 1000.0

    node_flags = {node.id: node.id in flagged for node in loaded.diagram.nodes}
    return AnalysisReport(
        node_count=len(loaded.diagram.nodes),
        flow_count=len(loaded.diagram.flows),
        tfg_count=len(collection.tfgs),
        results=tuple(results),
        node_flags=node_flags,
        timings_ms=timings,
    )
