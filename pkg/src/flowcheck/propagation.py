"""Label propagation over transpose flow graphs.

Every TFG is propagated independently: first the node characteristic labels
are looked up per vertex, then data characteristic labels are pushed from
the sources toward the sink.  Because TFGs are DAGs a single pass suffices;
each vertex's behavior is evaluated exactly once per TFG, with results
shared between vertices that have common predecessors.
"""

from __future__ import annotations

from dataclasses import dataclass

from .core import DataFlowDiagram, Label, ModelError, evaluate_behavior
from .flowgraph import FlowGraphCollection, TransposeFlowGraph, Vertex


class TraceError(ModelError):
    """A vertex's origin reference does not resolve to a model element."""


class PropagationError(ModelError):
    """Behavior evaluation failed while propagating a TFG."""

    def __init__(self, message: str, vertex_id: str | None = None,
                 tfg_index: int | None = None):
        super().__init__(message)
        self.vertex_id = vertex_id
        self.tfg_index = tfg_index


# pin id -> data variable name -> labels
PinData = dict[str, dict[str, frozenset[Label]]]


@dataclass(frozen=True, eq=False)
class PropagatedVertex:
    """Computed label state of one vertex within one TFG."""

    vertex: Vertex
    node_labels: frozenset[Label]
    incoming: PinData
    outgoing: PinData

    def incoming_variables(self) -> dict[str, frozenset[Label]]:
        """Incoming data keyed by variable name, merged across input pins."""
        return _merge_variables(self.incoming)

    def outgoing_variables(self) -> dict[str, frozenset[Label]]:
        """Outgoing data keyed by variable name, merged across output pins."""
        return _merge_variables(self.outgoing)


def _merge_variables(pin_data: PinData) -> dict[str, frozenset[Label]]:
    merged: dict[str, frozenset[Label]] = {}
    for per_flow in pin_data.values():
        for name, labels in per_flow.items():
            merged[name] = merged.get(name, frozenset()) | labels
    return merged


@dataclass(frozen=True, eq=False)
class PropagatedFlowGraph:
    tfg: TransposeFlowGraph
    states: dict[str, PropagatedVertex]

    def state(self, vertex_id: str) -> PropagatedVertex:
        return self.states[vertex_id]


def compute_node_labels(tfg: TransposeFlowGraph,
                        diagram: DataFlowDiagram) -> dict[str, frozenset[Label]]:
    """Node characteristic labels per vertex id.

    DFD vertices carry their node's own labels.  Diagrams derived from
    architecture models have the deployment/usage label lookup baked into
    the node annotations by the transformation, so the same rule applies.
    """
    labels: dict[str, frozenset[Label]] = {}
    known = {n.id for n in diagram.nodes}
    for vertex in tfg.vertices:
        if vertex.origin not in known:
            raise TraceError(
                f"vertex '{vertex.id}' traces to unknown model element '{vertex.origin}'")
        labels[vertex.id] = frozenset(diagram.node(vertex.origin).labels)
    return labels


def propagate(tfg: TransposeFlowGraph, diagram: DataFlowDiagram) -> PropagatedFlowGraph:
    """Propagate data characteristic labels through one TFG.

    Vertices are processed in topological order, so by the time a vertex is
    evaluated all of its predecessors already carry their outgoing data.
    The result is deterministic and independent of traversal tie-breaking.
    """
    node_labels = compute_node_labels(tfg, diagram)

    outgoing_flows: dict[tuple[str, str], list] = {}
    for flow in diagram.flows:
        outgoing_flows.setdefault((flow.source, flow.source_pin), []).append(flow)

    states: dict[str, PropagatedVertex] = {}
    for vertex in tfg.vertices:
        node = diagram.node(vertex.origin)
        behavior = diagram.behavior_of(node)

        incoming: PinData = {}
        flat: dict[tuple[str, str], frozenset[Label]] = {}
        for edge in vertex.predecessors:
            pred = states[edge.vertex.id]
            labels = pred.outgoing.get(edge.flow.source_pin, {}).get(
                edge.flow.name, frozenset())
            incoming.setdefault(edge.pin_id, {})[edge.flow.name] = labels
            flat[(edge.pin_id, edge.flow.name)] = labels

        try:
            outputs = evaluate_behavior(behavior, flat)
        except ModelError as exc:
            raise PropagationError(
                f"behavior evaluation failed at vertex '{vertex.id}' "
                f"(node '{node.name}'): {exc}", vertex_id=vertex.id) from exc

        outgoing: PinData = {}
        for pin_id, labels in outputs.items():
            per_flow = {
                flow.name: labels
                for flow in sorted(outgoing_flows.get((node.id, pin_id), []),
                                   key=lambda f: f.id)
            }
            outgoing[pin_id] = per_flow

        states[vertex.id] = PropagatedVertex(
            vertex=vertex,
            node_labels=node_labels[vertex.id],
            incoming=incoming,
            outgoing=outgoing,
        )
    return PropagatedFlowGraph(tfg=tfg, states=states)


def propagate_all(collection: FlowGraphCollection) -> list[PropagatedFlowGraph]:
    """Propagate every TFG of a collection, preserving collection order.

    Failures are aggregated: the raised error names every TFG index that
    could not be propagated.
    """
    results: list[PropagatedFlowGraph] = []
    failures: list[tuple[int, PropagationError]] = []
    for index, tfg in enumerate(collection.tfgs):
        try:
            results.append(propagate(tfg, collection.source))
        except PropagationError as exc:
            exc.tfg_index = index
            failures.append((index, exc))
    if failures:
        detail = "; ".join(f"tfg {i}: {e}" for i, e in failures)
        raise PropagationError(f"propagation failed for {len(failures)} TFG(s): {detail}",
                               tfg_index=failures[0][0])
    return results
