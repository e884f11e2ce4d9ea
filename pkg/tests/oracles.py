"""Independent reference implementations used as oracles by the test suite.

Everything here recomputes results from first principles: exhaustive
recursion without memoization, global enumeration of merge choices with
deduplication, and plain set logic over (type, label) string pairs instead
of the package's interned Label objects.  These must stay independent of
the code paths they check.
"""

from __future__ import annotations

import itertools

from flowcheck.constraints import (
    Constraint,
    DataMode,
    IsEmpty,
    Intersect,
    KindSelection,
    LabelSelection,
    NameSelection,
    NotCondition,
    SetEquals,
    SetVar,
    Subset,
    Union,
    VariableLabelSelection,
)
from flowcheck.core import (
    And,
    Constant,
    DataFlowDiagram,
    ForwardingAssignment,
    LabelRef,
    Not,
    Or,
    SetAssignment,
)
from flowcheck.flowgraph import TransposeFlowGraph

LabelKey = tuple[str, str]


def term_truth(term, env: dict[str, set[LabelKey]]) -> bool:
    """Plain recursive truth evaluation over label-key sets."""
    if isinstance(term, Constant):
        return term.value
    if isinstance(term, LabelRef):
        key = (term.label_type, term.label)
        if term.flow is not None:
            return key in env[term.flow]
        return any(key in keys for keys in env.values())
    if isinstance(term, Not):
        return not term_truth(term.term, env)
    if isinstance(term, And):
        return term_truth(term.left, env) and term_truth(term.right, env)
    if isinstance(term, Or):
        return term_truth(term.left, env) or term_truth(term.right, env)
    raise AssertionError(f"unexpected term {term!r}")


def behavior_outputs(behavior, incoming: dict[tuple[str, str], set[LabelKey]],
                     ) -> dict[str, set[LabelKey]]:
    """Two-phase assignment semantics, reimplemented over key sets."""
    out: dict[str, set[LabelKey]] = {p.id: set() for p in behavior.out_pins}
    for assignment in behavior.assignments:
        if isinstance(assignment, ForwardingAssignment):
            merged: set[LabelKey] = set()
            for (pin, _flow), keys in incoming.items():
                if pin in assignment.in_pins:
                    merged |= keys
            out[assignment.out_pin] |= merged
    for assignment in behavior.assignments:
        if isinstance(assignment, SetAssignment):
            env: dict[str, set[LabelKey]] = {}
            for (pin, flow), keys in incoming.items():
                if pin in assignment.in_pins:
                    env.setdefault(flow, set()).update(keys)
            target_keys = {(lab.type_name, lab.name) for lab in assignment.labels}
            if term_truth(assignment.term, env):
                out[assignment.out_pin] |= target_keys
            else:
                out[assignment.out_pin] -= target_keys
    return out


def naive_propagate(tfg: TransposeFlowGraph, diagram: DataFlowDiagram):
    """Exhaustive recursion without memoization.

    Returns {vertex id: (incoming {(pin, flow): keys}, outputs {pin: keys})}.
    Deliberately recomputes shared predecessors on every visit.
    """
    by_id = {v.id: v for v in tfg.vertices}

    def outputs_of(vertex_id: str) -> dict[str, set[LabelKey]]:
        vertex = by_id[vertex_id]
        incoming: dict[tuple[str, str], set[LabelKey]] = {}
        for edge in vertex.predecessors:
            pred_out = outputs_of(edge.vertex.id)  # no memo, exponential on purpose
            incoming[(edge.pin_id, edge.flow.name)] = pred_out.get(
                edge.flow.source_pin, set())
        behavior = diagram.behavior_of(diagram.node(vertex.origin))
        return behavior_outputs(behavior, incoming)

    result = {}
    for vertex in tfg.vertices:
        incoming: dict[tuple[str, str], set[LabelKey]] = {}
        for edge in vertex.predecessors:
            pred_out = outputs_of(edge.vertex.id)
            incoming[(edge.pin_id, edge.flow.name)] = pred_out.get(
                edge.flow.source_pin, set())
        result[vertex.id] = (incoming, outputs_of(vertex.id))
    return result


def tfg_edge_sets(diagram: DataFlowDiagram, sink_id: str) -> set[frozenset]:
    """All distinct flow selections reachable backwards from a sink.

    Enumerates the full cartesian product over every multi-flow input pin of
    the diagram, walks backwards under each complete assignment, restricts
    the assignment to the pins actually reached, and deduplicates.  Each
    member is a frozenset of chosen flow ids; the number of members is the
    number of TFGs extraction must produce for this sink.
    """
    incoming: dict[tuple[str, str], list] = {}
    for flow in diagram.flows:
        incoming.setdefault((flow.target, flow.target_pin), []).append(flow)

    choice_points = sorted(incoming)
    alternatives = [sorted(incoming[key], key=lambda f: f.id) for key in choice_points]

    seen: set[frozenset] = set()
    for combo in itertools.product(*alternatives):
        assignment = dict(zip(choice_points, combo))
        reached_flows: set[str] = set()
        stack = [sink_id]
        visited = set()
        while stack:
            node_id = stack.pop()
            if node_id in visited:
                continue
            visited.add(node_id)
            for (target, _pin), flow in assignment.items():
                if target == node_id:
                    reached_flows.add(flow.id)
                    stack.append(flow.source)
        seen.add(frozenset(reached_flows))
    return seen


# ---------------------------------------------------------------------------
# Constraint execution oracle

def _variable_views(diagram, tfg, propagated_oracle):
    """Per vertex: ({incoming var: keys}, {outgoing var: keys})."""
    outgoing_flows: dict[tuple[str, str], list] = {}
    for flow in diagram.flows:
        outgoing_flows.setdefault((flow.source, flow.source_pin), []).append(flow)

    views = {}
    for vertex in tfg.vertices:
        incoming_env, outputs = propagated_oracle[vertex.id]
        in_vars: dict[str, set[LabelKey]] = {}
        for (_pin, flow_name), keys in incoming_env.items():
            in_vars.setdefault(flow_name, set()).update(keys)
        out_vars: dict[str, set[LabelKey]] = {}
        node = diagram.node(vertex.origin)
        for pin_id, keys in outputs.items():
            for flow in outgoing_flows.get((node.id, pin_id), []):
                out_vars.setdefault(flow.name, set()).update(keys)
        views[vertex.id] = (in_vars, out_vars)
    return views


def _selection_match(selections, keys: set[LabelKey], name: str, kind):
    bindings: dict[str, set[LabelKey]] = {}
    for sel in selections:
        if isinstance(sel, LabelSelection):
            present = (sel.label_type, sel.label) in keys
            if present == sel.negated:
                return None
        elif isinstance(sel, NameSelection):
            if (name == sel.name) == sel.negated:
                return None
        elif isinstance(sel, KindSelection):
            if kind is not sel.kind:
                return None
        elif isinstance(sel, VariableLabelSelection):
            bindings[sel.variable] = {k for k in keys if k[0] == sel.label_type}
    return bindings


def _condition_truth(condition, bindings) -> bool:
    def sets(expr):
        if isinstance(expr, SetVar):
            return set(bindings[expr.name])
        if isinstance(expr, Intersect):
            return sets(expr.left) & sets(expr.right)
        if isinstance(expr, Union):
            return sets(expr.left) | sets(expr.right)
        raise AssertionError(expr)

    if isinstance(condition, IsEmpty):
        return len(sets(condition.expr)) == 0
    if isinstance(condition, Subset):
        return sets(condition.left) <= sets(condition.right)
    if isinstance(condition, SetEquals):
        return sets(condition.left) == sets(condition.right)
    if isinstance(condition, NotCondition):
        return not _condition_truth(condition.inner, bindings)
    raise AssertionError(condition)


def brute_force_violations(constraint: Constraint, diagram: DataFlowDiagram,
                           tfgs: list[TransposeFlowGraph]) -> set[tuple[int, str, str]]:
    """Recompute the violation set from scratch; returns (tfg, vertex, variable)."""
    hits: set[tuple[int, str, str]] = set()
    for index, tfg in enumerate(tfgs):
        propagated = naive_propagate(tfg, diagram)
        views = _variable_views(diagram, tfg, propagated)
        for vertex in tfg.vertices:
            node = diagram.node(vertex.origin)
            node_keys = {(lab.type_name, lab.name) for lab in node.labels}
            vertex_bindings = _selection_match(constraint.vertex_selections,
                                               node_keys, node.name, node.kind)
            if vertex_bindings is None:
                continue
            in_vars, out_vars = views[vertex.id]
            candidates: dict[str, list[set[LabelKey]]] = {}
            if constraint.data_mode in (DataMode.INCOMING, DataMode.ANY):
                for var, keys in in_vars.items():
                    candidates.setdefault(var, []).append(keys)
            if constraint.data_mode in (DataMode.OUTGOING, DataMode.ANY):
                for var, keys in out_vars.items():
                    candidates.setdefault(var, []).append(keys)
            for var, key_sets in candidates.items():
                for keys in key_sets:
                    data_bindings = _selection_match(constraint.data_selections,
                                                     keys, var, None)
                    if data_bindings is None:
                        continue
                    bindings = {**data_bindings, **vertex_bindings}
                    if constraint.condition is not None and not _condition_truth(
                            constraint.condition, bindings):
                        continue
                    hits.add((index, vertex.id, var))
                    break
    return hits
