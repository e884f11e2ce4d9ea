"""Synthetic model generators and a timing harness for scalability runs.

Each benchmark dimension scales exactly one model feature: the count of
node characteristic labels on a sink, the length of a forwarding chain
(label propagations), the number of set-variable actions in a behavior, or
the number of operation parameters.  The first two are plain DFDs; the
latter two stress the architecture-language layer and are generated as ADL
text.  Every generated model is paired with a worst-case constraint that
flags every vertex, and the analytically known violation count is checked
on every run.

Timed work per repetition is the full pipeline: model loading, TFG
extraction, label propagation and constraint execution.  Generation and
CSV writing are not timed.  Cells run sequentially; a failing cell is
recorded as ``nan`` and the run continues.
"""

from __future__ import annotations

import logging
import math
import os
import statistics
import tempfile
import time
from dataclasses import dataclass
from pathlib import Path

from .constraints import parse_constraint
from .core import (
    Behavior,
    DataDictionary,
    DataFlowDiagram,
    Direction,
    Flow,
    ForwardingAssignment,
    Label,
    LabelType,
    ModelError,
    Node,
    NodeKind,
    Pin,
    SetAssignment,
    TRUE,
)
from .model_io import save_model
from .pipeline import analyze_model, load_model_data

log = logging.getLogger(__name__)

DIMENSIONS = ("nodeLabels", "labelPropagations", "variableActions", "parameters")

# Matches every vertex: the data side inspects both incoming and outgoing
# data for the marker label, the vertex side always matches via a variable.
WORST_CASE_CONSTRAINT = "constraint worst_case: data any Probe.Tainted never flows vertex Probe.$v"


@dataclass(frozen=True)
class GeneratedCase:
    dimension: str
    size: int
    text: str
    format: str  # "dfd-json" | "adl"
    constraint: str
    expected_violations: int


@dataclass(frozen=True)
class BenchConfig:
    dimension: str
    sizes: tuple[int, ...]
    repetitions: int = 10
    output: Path | None = None
    raw_output: bool = False


@dataclass(frozen=True)
class BenchRow:
    dimension: str
    size: int
    median_ms: float
    min_ms: float
    max_ms: float
    error: str | None = None

    @property
    def ok(self) -> bool:
        return self.error is None


def _probe_dictionary(extra_types: tuple[LabelType, ...] = ()) -> tuple[DataDictionary, Label]:
    tainted = Label(id="Probe.Tainted", name="Tainted", type_name="Probe")
    probe = LabelType(id="Probe", name="Probe", labels=(tainted,))
    return DataDictionary(label_types=(probe,) + extra_types), tainted


def _chain_dfd(length: int) -> str:
    """Forwarding chain with ``length`` label propagations (``length + 1`` nodes)."""
    dictionary, tainted = _probe_dictionary()
    width = max(4, len(str(length)))

    def nid(i: int) -> str:
        return f"v{str(i).zfill(width)}"

    behaviors = []
    nodes = []
    flows = []
    for i in range(length + 1):
        node_id = nid(i)
        in_pins = ()
        out_pins = ()
        assignments: tuple = ()
        if i > 0:
            in_pins = (Pin(f"{node_id}.in", "item", Direction.INPUT),)
        if i < length:
            out_pins = (Pin(f"{node_id}.out", "item", Direction.OUTPUT),)
        if i == 0 and out_pins:
            assignments = (SetAssignment(out_pin=out_pins[0].id, labels=(tainted,),
                                         term=TRUE),)
        elif in_pins and out_pins:
            assignments = (ForwardingAssignment(in_pins=(in_pins[0].id,),
                                                out_pin=out_pins[0].id),)
        behaviors.append(Behavior(id=f"b.{node_id}", name=f"step {i}",
                                  in_pins=in_pins, out_pins=out_pins,
                                  assignments=assignments))
        nodes.append(Node(id=node_id, name=f"step {i}", kind=NodeKind.PROCESS,
                          behavior=f"b.{node_id}"))
        if i < length:
            flows.append(Flow(id=f"f{str(i).zfill(width)}", name="item",
                              source=node_id, source_pin=f"{node_id}.out",
                              target=nid(i + 1), target_pin=f"{nid(i + 1)}.in"))

    dictionary = DataDictionary(label_types=dictionary.label_types,
                                behaviors=tuple(behaviors))
    diagram = DataFlowDiagram(dictionary=dictionary, nodes=tuple(nodes),
                              flows=tuple(flows))
    return save_model(dictionary, diagram)


def _node_labels_dfd(count: int) -> str:
    """Single flow into a sink that carries ``count`` node labels."""
    width = max(4, len(str(count)))
    marker_labels = tuple(
        Label(id=f"Marker.m{str(i).zfill(width)}", name=f"m{str(i).zfill(width)}",
              type_name="Marker")
        for i in range(count))
    marker = LabelType(id="Marker", name="Marker", labels=marker_labels)
    dictionary, tainted = _probe_dictionary((marker,))

    source_out = Pin("source.out", "item", Direction.OUTPUT)
    sink_in = Pin("sink.in", "item", Direction.INPUT)
    behaviors = (
        Behavior(id="b.source", name="source", in_pins=(), out_pins=(source_out,),
                 assignments=(SetAssignment(out_pin=source_out.id, labels=(tainted,),
                                            term=TRUE),)),
        Behavior(id="b.sink", name="sink", in_pins=(sink_in,), out_pins=(),
                 assignments=()),
    )
    nodes = (
        Node(id="source", name="source", kind=NodeKind.PROCESS, behavior="b.source"),
        Node(id="sink", name="sink", kind=NodeKind.PROCESS, behavior="b.sink",
             labels=marker_labels),
    )
    flows = (Flow(id="f0", name="item", source="source", source_pin=source_out.id,
                  target="sink", target_pin=sink_in.id),)
    dictionary = DataDictionary(label_types=dictionary.label_types, behaviors=behaviors)
    diagram = DataFlowDiagram(dictionary=dictionary, nodes=nodes, flows=flows)
    return save_model(dictionary, diagram)


def _variable_actions_adl(count: int) -> str:
    sets = "\n".join("    set item Touch.Done if TRUE" for _ in range(count))
    return f"""labeltype Probe {{ Tainted }}
labeltype Touch {{ Done }}
container Box
component Worker provides run(item)
deploy Worker on Box
behavior Worker.run {{
{sets}
    return item
}}
usage Main {{
    data item Probe.Tainted
    call Worker.run(item)
}}
"""


def _parameters_adl(count: int) -> str:
    params = ", ".join(f"p{i}" for i in range(count))
    data = "\n".join(f"    data p{i} Probe.Tainted" for i in range(count))
    return f"""labeltype Probe {{ Tainted }}
container Box
component Worker provides run({params})
deploy Worker on Box
behavior Worker.run {{
    return {params}
}}
usage Main {{
{data}
    call Worker.run({params})
}}
"""


def generate_model(dimension: str, n: int) -> GeneratedCase:
    """Generate the minimal model for one benchmark cell plus its constraint.

    Expected violation counts (one per matching vertex and data variable):
    ``labelPropagations`` yields ``n + 1`` (every vertex of the chain),
    ``nodeLabels`` yields 2, ``variableActions`` yields ``n + 5`` (start,
    calling, n set nodes, return, returning, end; the start node's variable
    is counted on its outgoing side), and ``parameters`` yields ``5 * n``
    (five nodes, each traversed by all n variables).
    """
    if n < 1:
        raise ModelError("benchmark size must be >= 1")
    if dimension == "labelPropagations":
        return GeneratedCase(dimension, n, _chain_dfd(n), "dfd-json",
                             WORST_CASE_CONSTRAINT, n + 1)
    if dimension == "nodeLabels":
        return GeneratedCase(dimension, n, _node_labels_dfd(n), "dfd-json",
                             WORST_CASE_CONSTRAINT, 2)
    if dimension == "variableActions":
        return GeneratedCase(dimension, n, _variable_actions_adl(n), "adl",
                             WORST_CASE_CONSTRAINT, n + 5)
    if dimension == "parameters":
        return GeneratedCase(dimension, n, _parameters_adl(n), "adl",
                             WORST_CASE_CONSTRAINT, 5 * n)
    raise ModelError(f"unknown benchmark dimension '{dimension}' "
                     f"(expected one of {', '.join(DIMENSIONS)})")


def run_case_once(case: GeneratedCase) -> tuple[float, int]:
    """One timed pipeline run; returns (wall ms, violation count)."""
    constraint = parse_constraint(case.constraint)
    started = time.perf_counter()
    loaded = load_model_data(case.text, case.format)
    report = analyze_model(loaded, [constraint])
    elapsed = (time.perf_counter() - started) * 1000.0
    return elapsed, report.violation_total


def run_bench(config: BenchConfig) -> list[BenchRow]:
    """Run every cell of one dimension and optionally write the CSV."""
    if list(config.sizes) != sorted(config.sizes):
        raise ModelError("benchmark sizes must be ascending")
    if config.repetitions < 1:
        raise ModelError("repetitions must be >= 1")

    rows: list[BenchRow] = []
    raw: list[tuple[str, int, int, float]] = []
    for size in config.sizes:
        try:
            case = generate_model(config.dimension, size)
            times = []
            for rep in range(config.repetitions):
                elapsed, violations = run_case_once(case)
                if violations != case.expected_violations:
                    raise ModelError(
                        f"expected {case.expected_violations} violations, "
                        f"analysis found {violations}")
                times.append(elapsed)
                raw.append((config.dimension, size, rep, elapsed))
            rows.append(BenchRow(config.dimension, size,
                                 median_ms=statistics.median(times),
                                 min_ms=min(times), max_ms=max(times)))
        except (ModelError, MemoryError) as exc:
            log.warning("bench cell (%s, %d) failed: %s", config.dimension, size, exc)
            rows.append(BenchRow(config.dimension, size, math.nan, math.nan,
                                 math.nan, error=str(exc)))
    if config.output is not None:
        write_csv(rows, config.output)
        if config.raw_output:
            _write_raw_csv(raw, config.output.with_suffix(".raw.csv"))
    return rows


def _atomic_write(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp_name = tempfile.mkstemp(dir=path.parent, suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as handle:
            handle.write(text)
        os.replace(tmp_name, path)
    except BaseException:
        if os.path.exists(tmp_name):
            os.unlink(tmp_name)
        raise


def write_csv(rows: list[BenchRow], path: Path) -> None:
    lines = ["dimension,size,median_ms,min_ms,max_ms"]
    for row in rows:
        lines.append(f"{row.dimension},{row.size},{row.median_ms:.3f},"
                     f"{row.min_ms:.3f},{row.max_ms:.3f}")
    _atomic_write(path, "\n".join(lines) + "\n")


def _write_raw_csv(raw: list[tuple[str, int, int, float]], path: Path) -> None:
    lines = ["dimension,size,rep,ms"]
    for dimension, size, rep, ms in raw:
        lines.append(f"{dimension},{size},{rep},{ms:.3f}")
    _atomic_write(path, "\n".join(lines) + "\n")
