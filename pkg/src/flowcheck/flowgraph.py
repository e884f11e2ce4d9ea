"""Transpose flow graph (TFG) extraction.

A TFG is a rooted DAG whose root is a single data sink; every vertex is one
data-processing step.  Extraction walks the diagram's flows backwards from
each sink.  When two or more flows feed the same input pin the data flow is
ambiguous, so the partial graph is copied once per alternative; a diagram
with k independent same-pin merges therefore yields 2^k TFGs per affected
sink.  Fan-in on distinct pins is a joint input and does not fork.
"""

from __future__ import annotations

import heapq
import itertools
from collections.abc import Iterable
from dataclasses import dataclass, field

from .core import DataFlowDiagram, Flow, ModelError, Node


class CycleError(ModelError):
    """The flows reachable backwards from a sink contain a cycle."""

    def __init__(self, node_ids: list[str]):
        super().__init__("cyclic data flow through nodes: " + " -> ".join(node_ids))
        self.node_ids = node_ids


@dataclass(frozen=True, eq=False)
class PredecessorEdge:
    """One incoming TFG edge: data arrives from ``vertex`` via ``flow`` at ``pin_id``."""

    vertex: "Vertex"
    flow: Flow
    pin_id: str


@dataclass(frozen=True, eq=False)
class Vertex:
    """One data-processing step; ``origin`` is the id of the model element it represents."""

    id: str
    origin: str
    predecessors: tuple[PredecessorEdge, ...]


@dataclass(frozen=True, eq=False)
class TransposeFlowGraph:
    """Rooted DAG in data-flow direction; ``vertices`` are topologically ordered, sources first."""

    sink: Vertex
    vertices: tuple[Vertex, ...]

    def vertex(self, vertex_id: str) -> Vertex:
        for v in self.vertices:
            if v.id == vertex_id:
                return v
        raise ModelError(f"no vertex '{vertex_id}' in this flow graph")


@dataclass(frozen=True, eq=False)
class FlowGraphCollection:
    tfgs: tuple[TransposeFlowGraph, ...]
    source: DataFlowDiagram


def transpose(edges: Iterable[tuple[str, str]]) -> frozenset[tuple[str, str]]:
    """Reverse every edge of a digraph given as (from, to) pairs.

    The vertex set is untouched and the operation is an involution:
    transposing twice restores the original edge set.
    """
    return frozenset((v, u) for (u, v) in edges)


def identify_sinks(diagram: DataFlowDiagram) -> list[Node]:
    """Return the data sinks of a diagram, ordered by node id.

    A node is a sink if it has no outgoing flows, or if it has incoming
    flows but every assignment of its behavior is independent of all input
    pins (such a node terminates the data flowing into it, even though it
    may emit fresh data of its own).
    """
    has_outgoing = {f.source for f in diagram.flows}
    has_incoming = {f.target for f in diagram.flows}
    sinks = []
    for node in diagram.nodes:
        if node.id not in has_outgoing:
            sinks.append(node)
            continue
        if node.id in has_incoming:
            behavior = diagram.behavior_of(node)
            if all(not a.in_pins for a in behavior.assignments):
                sinks.append(node)
    return sorted(sinks, key=lambda n: n.id)


@dataclass
class _PartialWalk:
    # Backward traversal state for one (eventual) TFG.
    pending: list[str]
    processed: set[str]
    choices: dict[tuple[str, str], Flow] = field(default_factory=dict)

    def fork(self) -> "_PartialWalk":
        return _PartialWalk(list(self.pending), set(self.processed), dict(self.choices))


def _check_acyclic(diagram: DataFlowDiagram, sink_id: str,
                   backward: dict[str, list[Flow]]) -> None:
    # Iterative three-color DFS over the backward-reachable subgraph.
    WHITE, GREY, BLACK = 0, 1, 2
    color: dict[str, int] = {}
    parent: dict[str, str] = {}
    stack: list[tuple[str, int]] = [(sink_id, 0)]
    color[sink_id] = GREY
    while stack:
        node_id, idx = stack[-1]
        flows = backward.get(node_id, [])
        if idx < len(flows):
            stack[-1] = (node_id, idx + 1)
            nxt = flows[idx].source
            state = color.get(nxt, WHITE)
            if state == GREY:
                cycle = [nxt]
                cur = node_id
                while cur != nxt:
                    cycle.append(cur)
                    cur = parent[cur]
                cycle.append(nxt)
                cycle.reverse()
                raise CycleError(cycle)
            if state == WHITE:
                color[nxt] = GREY
                parent[nxt] = node_id
                stack.append((nxt, 0))
        else:
            color[node_id] = BLACK
            stack.pop()


def _enumerate_walks(diagram: DataFlowDiagram, sink: Node,
                     incoming_by_pin: dict[str, list[tuple[str, list[Flow]]]]) -> list[_PartialWalk]:
    complete: list[_PartialWalk] = []
    stack = [_PartialWalk(pending=[sink.id], processed=set())]
    while stack:
        walk = stack.pop()
        forked = False
        while walk.pending:
            node_id = walk.pending.pop()
            if node_id in walk.processed:
                continue
            walk.processed.add(node_id)
            pin_flows = incoming_by_pin.get(node_id, [])
            combos = list(itertools.product(*(flows for (_pin, flows) in pin_flows)))
            if len(combos) == 1:
                _apply_combo(walk, node_id, pin_flows, combos[0])
            else:
                # Push in reverse so the lexicographically first combination
                # (flows sorted by id, pins in declared order) is explored first.
                for combo in reversed(combos):
                    child = walk.fork()
                    _apply_combo(child, node_id, pin_flows, combo)
                    stack.append(child)
                forked = True
                break
        if not forked:
            complete.append(walk)
    return complete


def _apply_combo(walk: _PartialWalk, node_id: str,
                 pin_flows: list[tuple[str, list[Flow]]],
                 combo: tuple[Flow, ...]) -> None:
    for (pin_id, _flows), flow in zip(pin_flows, combo):
        walk.choices[(node_id, pin_id)] = flow
        if flow.source not in walk.processed:
            walk.pending.append(flow.source)


def _build_tfg(diagram: DataFlowDiagram, sink: Node, walk: _PartialWalk) -> TransposeFlowGraph:
    # The traversal recorded backward edges (consumer -> producer); transpose
    # them into data-flow direction, then materialize vertices bottom-up.
    backward_edges = {(node_id, flow.source) for (node_id, _pin), flow in walk.choices.items()}
    forward_edges = transpose(backward_edges)

    succ: dict[str, list[str]] = {n: [] for n in walk.processed}
    indeg: dict[str, int] = {n: 0 for n in walk.processed}
    for (u, v) in forward_edges:
        succ[u].append(v)
        indeg[v] += 1

    ready = [n for n, d in indeg.items() if d == 0]
    heapq.heapify(ready)
    order: list[str] = []
    while ready:
        n = heapq.heappop(ready)
        order.append(n)
        for m in succ[n]:
            indeg[m] -= 1
            if indeg[m] == 0:
                heapq.heappush(ready, m)
    if len(order) != len(walk.processed):
        raise CycleError(sorted(set(walk.processed) - set(order)))

    by_pin: dict[str, list[tuple[str, Flow]]] = {}
    for (node_id, pin_id), flow in walk.choices.items():
        by_pin.setdefault(node_id, []).append((pin_id, flow))

    vertices: dict[str, Vertex] = {}
    ordered: list[Vertex] = []
    for node_id in order:
        node = diagram.node(node_id)
        behavior = diagram.behavior_of(node)
        pin_rank = {p.id: i for i, p in enumerate(behavior.in_pins)}
        preds = tuple(
            PredecessorEdge(vertices[flow.source], flow, pin_id)
            for pin_id, flow in sorted(by_pin.get(node_id, []),
                                       key=lambda pf: pin_rank.get(pf[0], len(pin_rank)))
        )
        vertex = Vertex(id=node_id, origin=node_id, predecessors=preds)
        vertices[node_id] = vertex
        ordered.append(vertex)
    return TransposeFlowGraph(sink=vertices[sink.id], vertices=tuple(ordered))


def extract_tfgs(diagram: DataFlowDiagram) -> FlowGraphCollection:
    """Extract one TFG per unambiguous flow of data into each sink.

    TFGs are ordered by sink node id, then by the lexicographic order of the
    alternative choices taken at same-pin merge points (alternatives sorted
    by flow id).  Extraction is deterministic and raises :class:`CycleError`
    when a cycle is reachable backwards from any sink.
    """
    sinks = identify_sinks(diagram)
    if not sinks:
        raise ModelError("diagram has no data sinks")

    backward: dict[str, list[Flow]] = {}
    for flow in sorted(diagram.flows, key=lambda f: f.id):
        backward.setdefault(flow.target, []).append(flow)

    # Incoming flows grouped per input pin, pins in behavior declaration order.
    incoming_by_pin: dict[str, list[tuple[str, list[Flow]]]] = {}
    for node in diagram.nodes:
        behavior = diagram.behavior_of(node)
        groups: list[tuple[str, list[Flow]]] = []
        flows_here = backward.get(node.id, [])
        for pin in behavior.in_pins:
            at_pin = [f for f in flows_here if f.target_pin == pin.id]
            if at_pin:
                groups.append((pin.id, at_pin))
        if groups:
            incoming_by_pin[node.id] = groups

    tfgs: list[TransposeFlowGraph] = []
    for sink in sinks:
        _check_acyclic(diagram, sink.id, backward)
        for walk in _enumerate_walks(diagram, sink, incoming_by_pin):
            tfgs.append(_build_tfg(diagram, sink, walk))
    return FlowGraphCollection(tfgs=tuple(tfgs), source=diagram)


def tfg_to_dot(tfg: TransposeFlowGraph, diagram: DataFlowDiagram, name: str = "tfg") -> str:
    """Render one TFG as DOT text, edges in data-flow direction."""
    lines = [f"digraph {name} {{", "  rankdir=LR;"]
    for vertex in tfg.vertices:
        node = diagram.node(vertex.origin)
        shape = {"external": "box", "process": "ellipse", "store": "cylinder"}[node.kind.value]
        lines.append(f'  "{vertex.id}" [label="{node.name}" shape={shape}];')
    for vertex in tfg.vertices:
        for edge in vertex.predecessors:
            lines.append(
                f'  "{edge.vertex.id}" -> "{vertex.id}" [label="{edge.flow.name}"];'
            )
    lines.append("}")
    return "\n".join(lines) + "\n"


def diagram_to_dot(diagram: DataFlowDiagram, name: str = "dfd") -> str:
    """Render the whole diagram as DOT text."""
    lines = [f"digraph {name} {{", "  rankdir=LR;"]
    for node in diagram.nodes:
        shape = {"external": "box", "process": "ellipse", "store": "cylinder"}[node.kind.value]
        label = node.name
        if node.labels:
            label += "\\n" + ", ".join(str(lab) for lab in node.labels)
        lines.append(f'  "{node.id}" [label="{label}" shape={shape}];')
    for flow in diagram.flows:
        lines.append(f'  "{flow.source}" -> "{flow.target}" [label="{flow.name}"];')
    lines.append("}")
    return "\n".join(lines) + "\n"
