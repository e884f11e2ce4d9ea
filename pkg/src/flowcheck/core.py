"""Core DFD model: label dictionaries, node behaviors, and their evaluation semantics.

A model is a pair of a :class:`DataDictionary` (reusable vocabulary of label
types and behaviors) and a :class:`DataFlowDiagram` (nodes wired by flows).
Behaviors decide which labels leave a node on each output pin, given the
labels arriving on its input pins.  All types are immutable after loading;
the evaluation functions are pure and safe to call concurrently.
"""

from __future__ import annotations

import enum
from collections.abc import Mapping, Set as AbstractSet
from dataclasses import dataclass, field


class ModelError(Exception):
    """Base class for model construction and evaluation errors."""


class TermEvalError(ModelError):
    """A term could not be evaluated against the incoming data."""


class UnknownScopeError(TermEvalError):
    """A scoped label reference names a flow that is not present."""

    def __init__(self, scope: str):
        super().__init__(f"unknown flow-name scope '{scope}' in term")
        self.scope = scope


class UnresolvedInputError(ModelError):
    """An assignment references an input pin that carries no data."""

    def __init__(self, pin_id: str, behavior_id: str):
        super().__init__(
            f"assignment in behavior '{behavior_id}' references input pin "
            f"'{pin_id}' which carries no data"
        )
        self.pin_id = pin_id
        self.behavior_id = behavior_id


class Direction(str, enum.Enum):
    INPUT = "input"
    OUTPUT = "output"


class NodeKind(str, enum.Enum):
    EXTERNAL = "external"
    PROCESS = "process"
    STORE = "store"

    @classmethod
    def parse(cls, text: str) -> "NodeKind":
        try:
            return cls(text.lower())
        except ValueError:
            raise ModelError(f"unknown node kind '{text}'") from None


@dataclass(frozen=True)
class Label:
    """A characteristic, e.g. ``Encryption.Encrypted``.

    Identity for cross-file references is the (type name, label name) pair;
    ids are stable surrogates used by the serialization layer.
    """

    id: str
    name: str
    type_name: str

    @property
    def key(self) -> tuple[str, str]:
        return (self.type_name, self.name)

    def __str__(self) -> str:
        return f"{self.type_name}.{self.name}"


@dataclass(frozen=True)
class LabelType:
    id: str
    name: str
    labels: tuple[Label, ...]


class Term:
    """Base class of the logic terms attached to set-assignments."""

    __slots__ = ()


@dataclass(frozen=True)
class Constant(Term):
    value: bool


TRUE = Constant(True)
FALSE = Constant(False)


@dataclass(frozen=True)
class LabelRef(Term):
    """True iff the referenced label arrives at the assignment's input pins.

    With ``flow`` set, only the data variable of that name is consulted;
    unscoped references match the label anywhere in the incoming data.
    """

    label_type: str
    label: str
    flow: str | None = None


@dataclass(frozen=True)
class Not(Term):
    term: Term


@dataclass(frozen=True)
class And(Term):
    left: Term
    right: Term


@dataclass(frozen=True)
class Or(Term):
    left: Term
    right: Term


@dataclass(frozen=True)
class Pin:
    id: str
    name: str
    direction: Direction


@dataclass(frozen=True)
class ForwardingAssignment:
    """Unions all labels arriving at ``in_pins`` onto ``out_pin``."""

    in_pins: tuple[str, ...]
    out_pin: str


@dataclass(frozen=True)
class SetAssignment:
    """Adds ``labels`` to ``out_pin`` when ``term`` is true, removes them when false."""

    out_pin: str
    labels: tuple[Label, ...]
    term: Term
    in_pins: tuple[str, ...] = ()


Assignment = ForwardingAssignment | SetAssignment


@dataclass(frozen=True)
class Behavior:
    """Per-node rule set; assignment order is significant and preserved."""

    id: str
    name: str
    in_pins: tuple[Pin, ...]
    out_pins: tuple[Pin, ...]
    assignments: tuple[Assignment, ...]

    def pin(self, pin_id: str) -> Pin | None:
        for p in self.in_pins + self.out_pins:
            if p.id == pin_id:
                return p
        return None


@dataclass(frozen=True)
class Node:
    id: str
    name: str
    kind: NodeKind
    behavior: str
    labels: tuple[Label, ...] = ()


@dataclass(frozen=True)
class Flow:
    """A data edge; ``name`` is the data variable name carried on this edge."""

    id: str
    name: str
    source: str
    source_pin: str
    target: str
    target_pin: str


@dataclass(frozen=True)
class DataDictionary:
    label_types: tuple[LabelType, ...] = ()
    behaviors: tuple[Behavior, ...] = ()

    def __post_init__(self):
        # Lookup caches; duplicates keep the last entry, validate_model
        # reports them from the raw tuples.
        object.__setattr__(self, "_behaviors_by_id",
                           {b.id: b for b in self.behaviors})
        object.__setattr__(self, "_types_by_name",
                           {lt.name: lt for lt in self.label_types})
        object.__setattr__(self, "_labels_by_key",
                           {lab.key: lab for lt in self.label_types
                            for lab in lt.labels})
        object.__setattr__(self, "_labels_by_id",
                           {lab.id: lab for lt in self.label_types
                            for lab in lt.labels})

    def behavior(self, behavior_id: str) -> Behavior:
        found = self._behaviors_by_id.get(behavior_id)
        if found is None:
            raise ModelError(f"unknown behavior '{behavior_id}'")
        return found

    def label(self, type_name: str, label_name: str) -> Label | None:
        return self._labels_by_key.get((type_name, label_name))

    def label_type(self, type_name: str) -> LabelType | None:
        return self._types_by_name.get(type_name)

    def label_by_id(self, label_id: str) -> Label | None:
        return self._labels_by_id.get(label_id)


@dataclass(frozen=True)
class DataFlowDiagram:
    dictionary: DataDictionary
    nodes: tuple[Node, ...] = ()
    flows: tuple[Flow, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "_nodes_by_id", {n.id: n for n in self.nodes})

    def node(self, node_id: str) -> Node:
        found = self._nodes_by_id.get(node_id)
        if found is None:
            raise ModelError(f"unknown node '{node_id}'")
        return found

    def behavior_of(self, node: Node) -> Behavior:
        return self.dictionary.behavior(node.behavior)


@dataclass(frozen=True)
class Finding:
    severity: str  # "error" | "warning"
    code: str
    element: str
    message: str


@dataclass
class ValidationReport:
    findings: list[Finding] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not any(f.severity == "error" for f in self.findings)

    def errors(self) -> list[Finding]:
        return [f for f in self.findings if f.severity == "error"]

    def add(self, severity: str, code: str, element: str, message: str) -> None:
        self.findings.append(Finding(severity, code, element, message))


def _term_refs(term: Term) -> list[LabelRef]:
    if isinstance(term, LabelRef):
        return [term]
    if isinstance(term, Not):
        return _term_refs(term.term)
    if isinstance(term, (And, Or)):
        return _term_refs(term.left) + _term_refs(term.right)
    return []


def validate_model(dictionary: DataDictionary, diagram: DataFlowDiagram) -> ValidationReport:
    """Check all well-formedness invariants; findings are data, not failures.

    An empty report means the model satisfies every structural invariant.
    Error findings make the model unsuitable for analysis; warnings flag
    constructs that are legal but likely unintended.
    """
    report = ValidationReport()

    seen_type_names: set[str] = set()
    seen_ids: set[str] = set()
    for lt in dictionary.label_types:
        if not lt.name:
            report.add("error", "empty-name", lt.id, "label type has an empty name")
        if lt.name in seen_type_names:
            report.add("error", "duplicate-label-type", lt.id,
                       f"label type name '{lt.name}' is not unique")
        seen_type_names.add(lt.name)
        if lt.id in seen_ids:
            report.add("error", "duplicate-id", lt.id, "label type id is not unique")
        seen_ids.add(lt.id)
        seen_label_names: set[str] = set()
        for lab in lt.labels:
            if not lab.name:
                report.add("error", "empty-name", lab.id, "label has an empty name")
            if lab.name in seen_label_names:
                report.add("error", "duplicate-label", lab.id,
                           f"label name '{lab.name}' is not unique within '{lt.name}'")
            seen_label_names.add(lab.name)
            if lab.id in seen_ids:
                report.add("error", "duplicate-id", lab.id, "label id is not unique")
            seen_ids.add(lab.id)
            if lab.type_name != lt.name:
                report.add("error", "label-owner-mismatch", lab.id,
                           f"label '{lab.name}' records owner '{lab.type_name}' "
                           f"but is listed under '{lt.name}'")

    def check_label_exists(label: Label, element: str) -> None:
        if dictionary.label(label.type_name, label.name) is None:
            report.add("error", "unknown-label", element,
                       f"label '{label}' is not defined in the dictionary")

    seen_behavior_ids: set[str] = set()
    seen_pin_ids: set[str] = set()
    for beh in dictionary.behaviors:
        if beh.id in seen_behavior_ids:
            report.add("error", "duplicate-id", beh.id, "behavior id is not unique")
        seen_behavior_ids.add(beh.id)
        for pin in beh.in_pins + beh.out_pins:
            if pin.id in seen_pin_ids:
                report.add("error", "duplicate-id", pin.id,
                           f"pin id reused across behaviors (in '{beh.id}')")
            seen_pin_ids.add(pin.id)
        in_ids = {p.id for p in beh.in_pins}
        out_ids = {p.id for p in beh.out_pins}
        for pin in beh.in_pins:
            if pin.direction is not Direction.INPUT:
                report.add("error", "pin-direction-mismatch", pin.id,
                           f"pin '{pin.id}' listed as input of '{beh.id}' "
                           f"but has direction {pin.direction.value}")
        for pin in beh.out_pins:
            if pin.direction is not Direction.OUTPUT:
                report.add("error", "pin-direction-mismatch", pin.id,
                           f"pin '{pin.id}' listed as output of '{beh.id}' "
                           f"but has direction {pin.direction.value}")
        for assignment in beh.assignments:
            for pid in assignment.in_pins:
                if pid not in in_ids:
                    code = "pin-direction-mismatch" if pid in out_ids else "assignment-pin-unknown"
                    report.add("error", code, beh.id,
                               f"assignment input pin '{pid}' is not an input pin of '{beh.id}'")
            if assignment.out_pin not in out_ids:
                code = "pin-direction-mismatch" if assignment.out_pin in in_ids else "assignment-pin-unknown"
                report.add("error", code, beh.id,
                           f"assignment output pin '{assignment.out_pin}' is not an "
                           f"output pin of '{beh.id}'")
            if isinstance(assignment, ForwardingAssignment):
                if not assignment.in_pins:
                    report.add("error", "forwarding-empty-inputs", beh.id,
                               "forwarding assignment has no input pins")
            else:
                if not assignment.labels:
                    report.add("error", "set-empty-labels", beh.id,
                               "set assignment has an empty output label set")
                for lab in assignment.labels:
                    check_label_exists(lab, beh.id)
                for ref in _term_refs(assignment.term):
                    if dictionary.label(ref.label_type, ref.label) is None:
                        report.add("error", "unknown-label", beh.id,
                                   f"term references unknown label "
                                   f"'{ref.label_type}.{ref.label}'")

    seen_node_ids: set[str] = set()
    for node in diagram.nodes:
        if node.id in seen_node_ids:
            report.add("error", "duplicate-node-id", node.id, "node id is not unique")
        seen_node_ids.add(node.id)
        if node.behavior not in seen_behavior_ids:
            report.add("error", "unknown-behavior", node.id,
                       f"node references unknown behavior '{node.behavior}'")
        for lab in node.labels:
            check_label_exists(lab, node.id)

    behaviors_by_id = {b.id: b for b in dictionary.behaviors}
    nodes_by_id = {n.id: n for n in diagram.nodes}
    seen_flow_ids: set[str] = set()
    for flow in diagram.flows:
        if flow.id in seen_flow_ids:
            report.add("error", "duplicate-flow-id", flow.id, "flow id is not unique")
        seen_flow_ids.add(flow.id)
        for endpoint, node_id, pin_id, want in (
            ("source", flow.source, flow.source_pin, Direction.OUTPUT),
            ("target", flow.target, flow.target_pin, Direction.INPUT),
        ):
            node = nodes_by_id.get(node_id)
            if node is None:
                report.add("error", "unknown-node", flow.id,
                           f"flow {endpoint} references unknown node '{node_id}'")
                continue
            beh = behaviors_by_id.get(node.behavior)
            if beh is None:
                continue  # reported above on the node
            pin = beh.pin(pin_id)
            if pin is None:
                report.add("error", "flow-pin-unknown", flow.id,
                           f"flow {endpoint} pin '{pin_id}' is not a pin of "
                           f"behavior '{beh.id}'")
            elif pin.direction is not want:
                report.add("error", "pin-direction-mismatch", flow.id,
                           f"flow {endpoint} pin '{pin_id}' has direction "
                           f"{pin.direction.value}, expected {want.value}")

    # Nodes where only some output pins are independent of the inputs sit in a
    # grey zone of the sink rules; flag them so modelers notice.
    incoming_nodes = {f.target for f in diagram.flows}
    for node in diagram.nodes:
        beh = behaviors_by_id.get(node.behavior)
        if beh is None or node.id not in incoming_nodes or not beh.out_pins:
            continue
        dependence: dict[str, bool] = {p.id: False for p in beh.out_pins}
        for assignment in beh.assignments:
            if assignment.in_pins and assignment.out_pin in dependence:
                dependence[assignment.out_pin] = True
        if any(dependence.values()) and not all(dependence.values()):
            report.add("warning", "mixed-input-independence", node.id,
                       "some output pins depend on inputs and some do not; "
                       "only fully input-independent nodes terminate incoming data")

    return report


def _check_scopes(term: Term, incoming: Mapping[str, AbstractSet[Label]]) -> None:
    for ref in _term_refs(term):
        if ref.flow is not None and ref.flow not in incoming:
            raise UnknownScopeError(ref.flow)


def evaluate_term(term: Term, incoming: Mapping[str, AbstractSet[Label]]) -> bool:
    """Evaluate a logic term against incoming data, keyed by flow name.

    An unscoped label reference is true iff the label appears in any entry;
    a scoped one consults only the named entry.  Every scope referenced
    anywhere in the term must be present, even in branches that boolean
    short-circuiting would skip.
    """
    _check_scopes(term, incoming)
    return _eval_term(term, incoming)


def _eval_term(term: Term, incoming: Mapping[str, AbstractSet[Label]]) -> bool:
    if isinstance(term, Constant):
        return term.value
    if isinstance(term, LabelRef):
        key = (term.label_type, term.label)
        if term.flow is not None:
            return any(lab.key == key for lab in incoming[term.flow])
        return any(lab.key == key for labels in incoming.values() for lab in labels)
    if isinstance(term, Not):
        return not _eval_term(term.term, incoming)
    if isinstance(term, And):
        return _eval_term(term.left, incoming) and _eval_term(term.right, incoming)
    if isinstance(term, Or):
        return _eval_term(term.left, incoming) or _eval_term(term.right, incoming)
    raise TermEvalError(f"unknown term node {term!r}")


def evaluate_behavior(
    behavior: Behavior,
    incoming: Mapping[tuple[str, str], AbstractSet[Label]],
) -> dict[str, frozenset[Label]]:
    """Compute the label set leaving each output pin.

    ``incoming`` maps (input pin id, flow name) to the labels that arrive
    there.  Evaluation is two-phase: forwarding assignments union their
    inputs onto the output pin first, then the remaining assignments run in
    declared order, adding their labels when the term holds and removing
    them when it does not.  Output pins without assignments yield the empty
    set.  An assignment whose input pin carries no data at all is a wiring
    bug and raises :class:`UnresolvedInputError`.
    """
    pins_with_data = {pin_id for (pin_id, _flow) in incoming}

    def gather(in_pins: tuple[str, ...]) -> dict[str, set[Label]]:
        by_flow: dict[str, set[Label]] = {}
        for (pin_id, flow_name), labels in incoming.items():
            if pin_id in in_pins:
                by_flow.setdefault(flow_name, set()).update(labels)
        return by_flow

    result: dict[str, set[Label]] = {p.id: set() for p in behavior.out_pins}

    for assignment in behavior.assignments:
        for pid in assignment.in_pins:
            if pid not in pins_with_data:
                raise UnresolvedInputError(pid, behavior.id)

    for assignment in behavior.assignments:
        if isinstance(assignment, ForwardingAssignment):
            for labels in gather(assignment.in_pins).values():
                result[assignment.out_pin].update(labels)

    for assignment in behavior.assignments:
        if isinstance(assignment, ForwardingAssignment):
            continue
        holds = evaluate_term(assignment.term, gather(assignment.in_pins))
        target = result[assignment.out_pin]
        keys = {lab.key for lab in assignment.labels}
        if holds:
            target.update(assignment.labels)
        else:
            target.difference_update({lab for lab in target if lab.key in keys})

    return {pin_id: frozenset(labels) for pin_id, labels in result.items()}
