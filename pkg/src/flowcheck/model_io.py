"""Model serialization: canonical ``dfd/1`` JSON, a flat JSON dialect, PlantUML import.

The canonical schema is the interchange format shared with the web editor.
Saving is deterministic: stable key order, element arrays sorted by id,
two-space indentation and a trailing newline, so identical models always
produce byte-identical documents.  An optional ``traces`` sidecar carries
per-node origin references for diagrams derived from architecture models;
it is ignored by validation.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field

from .core import (
    And,
    Behavior,
    Constant,
    DataDictionary,
    DataFlowDiagram,
    Direction,
    Finding,
    Flow,
    ForwardingAssignment,
    Label,
    LabelRef,
    LabelType,
    ModelError,
    Node,
    NodeKind,
    Not,
    Or,
    Pin,
    SetAssignment,
    Term,
    validate_model,
)

FORMAT_VERSION = "dfd/1"


class ModelFormatError(ModelError):
    """The document cannot be parsed into a model."""

    def __init__(self, message: str, path: str = "$"):
        super().__init__(f"{path}: {message}")
        self.path = path


class InvalidModelError(ModelError):
    """The document parsed, but the model violates structural invariants."""

    def __init__(self, findings: list[Finding]):
        details = "; ".join(f"{f.code}@{f.element}" for f in findings)
        super().__init__(f"model has {len(findings)} validation error(s): {details}")
        self.findings = findings


@dataclass(frozen=True)
class ModelDocument:
    version: str
    dictionary: DataDictionary
    diagram: DataFlowDiagram
    traces: dict[str, str] = field(default_factory=dict)


@dataclass(frozen=True)
class ImportResult:
    dictionary: DataDictionary
    diagram: DataFlowDiagram
    warnings: tuple[str, ...] = ()


# ---------------------------------------------------------------------------
# Term <-> JSON

def term_to_json(term: Term) -> dict:
    if isinstance(term, Constant):
        return {"op": "true" if term.value else "false"}
    if isinstance(term, LabelRef):
        node = {"op": "ref", "labelType": term.label_type, "label": term.label}
        if term.flow is not None:
            node["flow"] = term.flow
        return node
    if isinstance(term, Not):
        return {"op": "not", "term": term_to_json(term.term)}
    if isinstance(term, And):
        return {"op": "and", "left": term_to_json(term.left), "right": term_to_json(term.right)}
    if isinstance(term, Or):
        return {"op": "or", "left": term_to_json(term.left), "right": term_to_json(term.right)}
    raise ModelError(f"unknown term node {term!r}")


def term_from_json(node: object, path: str) -> Term:
    if not isinstance(node, dict):
        raise ModelFormatError("term node must be an object", path)
    op = node.get("op")
    if op == "true":
        return Constant(True)
    if op == "false":
        return Constant(False)
    if op == "ref":
        label_type = _get_str(node, "labelType", path)
        label = _get_str(node, "label", path)
        flow = node.get("flow")
        if flow is not None and not isinstance(flow, str):
            raise ModelFormatError("'flow' must be a string", path)
        return LabelRef(label_type, label, flow)
    if op == "not":
        return Not(term_from_json(node.get("term"), path + ".term"))
    if op in ("and", "or"):
        left = term_from_json(node.get("left"), path + ".left")
        right = term_from_json(node.get("right"), path + ".right")
        return And(left, right) if op == "and" else Or(left, right)
    raise ModelFormatError(f"unknown term op {op!r}", path)


# ---------------------------------------------------------------------------
# Loading the canonical schema

def _get(obj: dict, key: str, path: str) -> object:
    if key not in obj:
        raise ModelFormatError(f"missing key '{key}'", path)
    return obj[key]

def _get_str(obj: dict, key: str, path: str) -> str:
    value = _get(obj, key, path)
    if not isinstance(value, str):
        raise ModelFormatError(f"'{key}' must be a string", path)
    return value

def _get_list(obj: dict, key: str, path: str) -> list:
    value = _get(obj, key, path)
    if not isinstance(value, list):
        raise ModelFormatError(f"'{key}' must be an array", path)
    return value

def _get_obj(obj: dict, key: str, path: str) -> dict:
    value = _get(obj, key, path)
    if not isinstance(value, dict):
        raise ModelFormatError(f"'{key}' must be an object", path)
    return value


def load_document(data: bytes | str, strict: bool = True) -> ModelDocument:
    """Parse and validate a canonical model document.

    Raises :class:`ModelFormatError` for malformed documents (with the JSON
    path of the offending element) and, when ``strict``, raises
    :class:`InvalidModelError` if the parsed model has validation errors.
    With ``strict=False`` the (possibly invalid) model is returned so that
    callers can inspect the findings themselves.
    """
    if isinstance(data, bytes):
        data = data.decode("utf-8")
    try:
        raw = json.loads(data)
    except json.JSONDecodeError as exc:
        raise ModelFormatError(f"malformed JSON: {exc}") from exc
    if not isinstance(raw, dict):
        raise ModelFormatError("document root must be an object")
    version = _get_str(raw, "version", "$")
    if version != FORMAT_VERSION:
        raise ModelFormatError(f"unknown format version '{version}'", "$.version")

    dd_raw = _get_obj(raw, "dataDictionary", "$")
    label_types: list[LabelType] = []
    labels_by_id: dict[str, Label] = {}
    for i, lt_raw in enumerate(_get_list(dd_raw, "labelTypes", "$.dataDictionary")):
        path = f"$.dataDictionary.labelTypes[{i}]"
        if not isinstance(lt_raw, dict):
            raise ModelFormatError("label type must be an object", path)
        type_name = _get_str(lt_raw, "name", path)
        labels = []
        for j, lab_raw in enumerate(_get_list(lt_raw, "labels", path)):
            lab_path = f"{path}.labels[{j}]"
            if not isinstance(lab_raw, dict):
                raise ModelFormatError("label must be an object", lab_path)
            label = Label(id=_get_str(lab_raw, "id", lab_path),
                          name=_get_str(lab_raw, "name", lab_path),
                          type_name=type_name)
            if label.id in labels_by_id:
                raise ModelFormatError(f"duplicate label id '{label.id}'", lab_path)
            labels_by_id[label.id] = label
            labels.append(label)
        label_types.append(LabelType(id=_get_str(lt_raw, "id", path),
                                     name=type_name, labels=tuple(labels)))

    def resolve_label(label_id: object, path: str) -> Label:
        if not isinstance(label_id, str) or label_id not in labels_by_id:
            raise ModelFormatError(f"unresolved label reference {label_id!r}", path)
        return labels_by_id[label_id]

    behaviors: list[Behavior] = []
    for i, b_raw in enumerate(_get_list(dd_raw, "behaviors", "$.dataDictionary")):
        path = f"$.dataDictionary.behaviors[{i}]"
        if not isinstance(b_raw, dict):
            raise ModelFormatError("behavior must be an object", path)
        in_pins = tuple(
            Pin(id=_get_str(p, "id", f"{path}.inPins[{j}]"),
                name=_get_str(p, "name", f"{path}.inPins[{j}]"),
                direction=Direction.INPUT)
            for j, p in enumerate(_get_list(b_raw, "inPins", path)))
        out_pins = tuple(
            Pin(id=_get_str(p, "id", f"{path}.outPins[{j}]"),
                name=_get_str(p, "name", f"{path}.outPins[{j}]"),
                direction=Direction.OUTPUT)
            for j, p in enumerate(_get_list(b_raw, "outPins", path)))
        assignments: list = []
        for j, a_raw in enumerate(_get_list(b_raw, "assignments", path)):
            a_path = f"{path}.assignments[{j}]"
            if not isinstance(a_raw, dict):
                raise ModelFormatError("assignment must be an object", a_path)
            kind = _get_str(a_raw, "kind", a_path)
            in_pin_ids = tuple(str(x) for x in _get_list(a_raw, "inPins", a_path))
            out_pin = _get_str(a_raw, "outPin", a_path)
            if kind == "forward":
                assignments.append(ForwardingAssignment(in_pins=in_pin_ids, out_pin=out_pin))
            elif kind == "set":
                label_refs = tuple(
                    resolve_label(lab_id, f"{a_path}.labels[{k}]")
                    for k, lab_id in enumerate(_get_list(a_raw, "labels", a_path)))
                term = term_from_json(_get(a_raw, "term", a_path), a_path + ".term")
                assignments.append(SetAssignment(out_pin=out_pin, labels=label_refs,
                                                 term=term, in_pins=in_pin_ids))
            else:
                raise ModelFormatError(f"unknown assignment kind '{kind}'", a_path)
        behaviors.append(Behavior(id=_get_str(b_raw, "id", path),
                                  name=_get_str(b_raw, "name", path),
                                  in_pins=in_pins, out_pins=out_pins,
                                  assignments=tuple(assignments)))

    dictionary = DataDictionary(label_types=tuple(label_types), behaviors=tuple(behaviors))

    dfd_raw = _get_obj(raw, "dfd", "$")
    nodes: list[Node] = []
    for i, n_raw in enumerate(_get_list(dfd_raw, "nodes", "$.dfd")):
        path = f"$.dfd.nodes[{i}]"
        if not isinstance(n_raw, dict):
            raise ModelFormatError("node must be an object", path)
        kind_text = _get_str(n_raw, "kind", path)
        try:
            kind = NodeKind(kind_text)
        except ValueError:
            raise ModelFormatError(f"unknown node kind '{kind_text}'", path) from None
        node_labels = tuple(sorted(
            (resolve_label(lab_id, f"{path}.labels[{k}]")
             for k, lab_id in enumerate(_get_list(n_raw, "labels", path))),
            key=lambda lab: lab.id))
        nodes.append(Node(id=_get_str(n_raw, "id", path),
                          name=_get_str(n_raw, "name", path),
                          kind=kind,
                          behavior=_get_str(n_raw, "behavior", path),
                          labels=node_labels))

    node_ids = {n.id for n in nodes}
    flows: list[Flow] = []
    for i, f_raw in enumerate(_get_list(dfd_raw, "flows", "$.dfd")):
        path = f"$.dfd.flows[{i}]"
        if not isinstance(f_raw, dict):
            raise ModelFormatError("flow must be an object", path)
        flow = Flow(id=_get_str(f_raw, "id", path),
                    name=_get_str(f_raw, "name", path),
                    source=_get_str(f_raw, "source", path),
                    source_pin=_get_str(f_raw, "sourcePin", path),
                    target=_get_str(f_raw, "target", path),
                    target_pin=_get_str(f_raw, "targetPin", path))
        for endpoint, node_id in (("source", flow.source), ("target", flow.target)):
            if node_id not in node_ids:
                raise ModelFormatError(
                    f"flow {endpoint} references missing node '{node_id}'", path)
        flows.append(flow)

    diagram = DataFlowDiagram(dictionary=dictionary, nodes=tuple(nodes), flows=tuple(flows))

    traces: dict[str, str] = {}
    if "traces" in raw:
        traces_raw = _get_obj(raw, "traces", "$")
        nodes_raw = _get_obj(traces_raw, "nodes", "$.traces")
        for node_id, origin in nodes_raw.items():
            if not isinstance(origin, str):
                raise ModelFormatError("trace origins must be strings", "$.traces.nodes")
            traces[node_id] = origin

    if strict:
        errors = validate_model(dictionary, diagram).errors()
        if errors:
            raise InvalidModelError(errors)

    return ModelDocument(version=version, dictionary=dictionary,
                         diagram=diagram, traces=traces)


def load_model(data: bytes | str) -> tuple[DataDictionary, DataFlowDiagram]:
    """Parse a canonical document; convenience wrapper around :func:`load_document`."""
    doc = load_document(data)
    return doc.dictionary, doc.diagram


# ---------------------------------------------------------------------------
# Saving

def save_model(dictionary: DataDictionary, diagram: DataFlowDiagram,
               traces: dict[str, str] | None = None) -> str:
    """Serialize a model to canonical JSON text (ends with a newline)."""
    doc: dict = {"version": FORMAT_VERSION}
    doc["dataDictionary"] = {
        "labelTypes": [
            {
                "id": lt.id,
                "name": lt.name,
                "labels": [{"id": lab.id, "name": lab.name}
                           for lab in sorted(lt.labels, key=lambda l: l.id)],
            }
            for lt in sorted(dictionary.label_types, key=lambda lt: lt.id)
        ],
        "behaviors": [
            {
                "id": beh.id,
                "name": beh.name,
                "inPins": [{"id": p.id, "name": p.name} for p in beh.in_pins],
                "outPins": [{"id": p.id, "name": p.name} for p in beh.out_pins],
                "assignments": [_assignment_to_json(a) for a in beh.assignments],
            }
            for beh in sorted(dictionary.behaviors, key=lambda b: b.id)
        ],
    }
    doc["dfd"] = {
        "nodes": [
            {
                "id": n.id,
                "name": n.name,
                "kind": n.kind.value,
                "behavior": n.behavior,
                "labels": sorted(lab.id for lab in n.labels),
            }
            for n in sorted(diagram.nodes, key=lambda n: n.id)
        ],
        "flows": [
            {
                "id": f.id,
                "name": f.name,
                "source": f.source,
                "sourcePin": f.source_pin,
                "target": f.target,
                "targetPin": f.target_pin,
            }
            for f in sorted(diagram.flows, key=lambda f: f.id)
        ],
    }
    if traces:
        doc["traces"] = {"nodes": {k: traces[k] for k in sorted(traces)}}
    return json.dumps(doc, indent=2) + "\n"


def _assignment_to_json(assignment) -> dict:
    if isinstance(assignment, ForwardingAssignment):
        return {"kind": "forward", "inPins": list(assignment.in_pins),
                "outPin": assignment.out_pin}
    return {
        "kind": "set",
        "outPin": assignment.out_pin,
        "inPins": list(assignment.in_pins),
        "labels": sorted(lab.id for lab in assignment.labels),
        "term": term_to_json(assignment.term),
    }


# ---------------------------------------------------------------------------
# Imported notations: shared graph builder

def _build_imported_model(
    nodes: list[tuple[str, str, NodeKind, list[tuple[str, str]]]],
    edges: list[tuple[str, str, str]],
) -> tuple[DataDictionary, DataFlowDiagram]:
    """Build a forwarding-only model from (id, name, kind, labels) nodes and
    (source id, target id, data name) edges."""
    type_labels: dict[str, dict[str, Label]] = {}

    def intern_label(type_name: str, label_name: str) -> Label:
        per_type = type_labels.setdefault(type_name, {})
        if label_name not in per_type:
            per_type[label_name] = Label(id=f"{type_name}.{label_name}",
                                         name=label_name, type_name=type_name)
        return per_type[label_name]

    incoming: dict[str, list[str]] = {}
    outgoing: dict[str, list[str]] = {}
    for source, target, data in edges:
        outgoing.setdefault(source, [])
        incoming.setdefault(target, [])
        if data not in outgoing[source]:
            outgoing[source].append(data)
        if data not in incoming[target]:
            incoming[target].append(data)

    behaviors = []
    model_nodes = []
    for node_id, name, kind, label_refs in nodes:
        in_pins = tuple(Pin(id=f"{node_id}.in.{d}", name=d, direction=Direction.INPUT)
                        for d in incoming.get(node_id, []))
        out_pins = tuple(Pin(id=f"{node_id}.out.{d}", name=d, direction=Direction.OUTPUT)
                         for d in outgoing.get(node_id, []))
        assignments: tuple = ()
        if in_pins:
            assignments = tuple(
                ForwardingAssignment(in_pins=tuple(p.id for p in in_pins), out_pin=op.id)
                for op in out_pins)
        behavior = Behavior(id=f"b.{node_id}", name=f"behavior of {name}",
                            in_pins=in_pins, out_pins=out_pins, assignments=assignments)
        behaviors.append(behavior)
        labels = tuple(sorted((intern_label(t, l) for (t, l) in label_refs),
                              key=lambda lab: lab.id))
        model_nodes.append(Node(id=node_id, name=name, kind=kind,
                                behavior=behavior.id, labels=labels))

    label_types = tuple(
        LabelType(id=type_name, name=type_name,
                  labels=tuple(sorted(per_type.values(), key=lambda lab: lab.id)))
        for type_name, per_type in sorted(type_labels.items()))
    dictionary = DataDictionary(label_types=label_types, behaviors=tuple(behaviors))

    flows = tuple(
        Flow(id=f"f{i}", name=data,
             source=source, source_pin=f"{source}.out.{data}",
             target=target, target_pin=f"{target}.in.{data}")
        for i, (source, target, data) in enumerate(edges))
    diagram = DataFlowDiagram(dictionary=dictionary,
                              nodes=tuple(model_nodes), flows=flows)
    return dictionary, diagram


# ---------------------------------------------------------------------------
# PlantUML import

class PlantUmlImportError(ModelError):
    def __init__(self, message: str, line: int):
        super().__init__(f"line {line}: {message}")
        self.line = line


_PUML_NODE = re.compile(
    r'^(external|entity|process|store)\s+(?:"(?P<quoted>[^"]+)"|(?P<bare>\w+))'
    r'(?:\s+as\s+(?P<alias>\w+))?'
    r'(?:\s*<<(?P<stereo>[^>]*)>>)?\s*$')
_PUML_EDGE = re.compile(
    r'^(?P<src>\w+)\s*->\s*(?P<dst>\w+)\s*(?::\s*(?P<name>.+?))?\s*$')
_PUML_SKIP = re.compile(r"^(@startuml|@enduml|title\b.*|'.*)?$")

_KIND_BY_WORD = {"external": NodeKind.EXTERNAL, "entity": NodeKind.EXTERNAL,
                 "process": NodeKind.PROCESS, "store": NodeKind.STORE}


def import_plantuml(text: str) -> ImportResult:
    """Import the documented PlantUML DFD subset.

    Declarations (``external|entity|process|store Name``) may carry
    ``<<Type.Label>>`` stereotypes that become node labels; arrows
    (``A -> B : dataName``) become flows.  Generated behaviors forward all
    inputs to every output.  Anything else is rejected with its line number.
    """
    warnings: list[str] = []
    declared: dict[str, tuple[str, str, NodeKind, list[tuple[str, str]]]] = {}
    order: list[str] = []
    edges: list[tuple[str, str, str]] = []

    for line_no, raw_line in enumerate(text.splitlines(), start=1):
        line = raw_line.strip()
        if _PUML_SKIP.match(line):
            continue
        m = _PUML_NODE.match(line)
        if m:
            display = m.group("quoted") or m.group("bare")
            node_id = m.group("alias") or m.group("bare") or re.sub(r"\W+", "_", display)
            if node_id in declared:
                raise PlantUmlImportError(f"duplicate element '{node_id}'", line_no)
            labels: list[tuple[str, str]] = []
            stereo = m.group("stereo")
            if stereo:
                for part in stereo.split(","):
                    part = part.strip()
                    if not part:
                        continue
                    if "." in part:
                        type_name, label_name = part.split(".", 1)
                        labels.append((type_name, label_name))
                    else:
                        labels.append(("Stereotype", part))
            declared[node_id] = (node_id, display, _KIND_BY_WORD[m.group(1)], labels)
            order.append(node_id)
            continue
        m = _PUML_EDGE.match(line)
        if m:
            src, dst = m.group("src"), m.group("dst")
            for end in (src, dst):
                if end not in declared:
                    raise PlantUmlImportError(f"flow references undeclared element '{end}'",
                                              line_no)
            name = (m.group("name") or "").strip() or "data"
            edges.append((src, dst, name))
            continue
        raise PlantUmlImportError(f"unsupported syntax: {line!r}", line_no)

    if not declared:
        warnings.append("no elements")
    dictionary, diagram = _build_imported_model([declared[n] for n in order], edges)
    return ImportResult(dictionary=dictionary, diagram=diagram, warnings=tuple(warnings))


# ---------------------------------------------------------------------------
# Flat JSON dialect

def load_flat_json(data: bytes | str) -> ImportResult:
    """Import the documented flat dialect.

    Top-level arrays ``external_entities``, ``processes``, ``stores`` hold
    ``{"name": ..., "stereotypes": [...]}`` objects; ``flows`` holds
    ``{"sender": ..., "receiver": ..., "data": ...}``.  Stereotypes become
    labels, grouped as ``Type.Label`` when dotted, else under ``Stereotype``.
    """
    if isinstance(data, bytes):
        data = data.decode("utf-8")
    try:
        raw = json.loads(data)
    except json.JSONDecodeError as exc:
        raise ModelFormatError(f"malformed JSON: {exc}") from exc
    if not isinstance(raw, dict):
        raise ModelFormatError("document root must be an object")

    warnings: list[str] = []
    nodes: list[tuple[str, str, NodeKind, list[tuple[str, str]]]] = []
    seen: set[str] = set()
    for key, kind in (("external_entities", NodeKind.EXTERNAL),
                      ("processes", NodeKind.PROCESS),
                      ("stores", NodeKind.STORE)):
        for i, entry in enumerate(raw.get(key, [])):
            path = f"$.{key}[{i}]"
            if not isinstance(entry, dict):
                raise ModelFormatError("element must be an object", path)
            name = _get_str(entry, "name", path)
            node_id = re.sub(r"\W+", "_", name)
            if node_id in seen:
                raise ModelFormatError(f"duplicate element name '{name}'", path)
            seen.add(node_id)
            labels = []
            for stereo in entry.get("stereotypes", []):
                stereo = str(stereo)
                if "." in stereo:
                    type_name, label_name = stereo.split(".", 1)
                    labels.append((type_name, label_name))
                else:
                    labels.append(("Stereotype", stereo))
            nodes.append((node_id, name, kind, labels))

    edges: list[tuple[str, str, str]] = []
    for i, entry in enumerate(raw.get("flows", [])):
        path = f"$.flows[{i}]"
        if not isinstance(entry, dict):
            raise ModelFormatError("flow must be an object", path)
        sender = re.sub(r"\W+", "_", _get_str(entry, "sender", path))
        receiver = re.sub(r"\W+", "_", _get_str(entry, "receiver", path))
        for end in (sender, receiver):
            if end not in seen:
                raise ModelFormatError(f"flow references unknown element '{end}'", path)
        data_name = str(entry.get("data") or "data")
        edges.append((sender, receiver, data_name))

    if not nodes:
        warnings.append("no elements")
    dictionary, diagram = _build_imported_model(nodes, edges)
    return ImportResult(dictionary=dictionary, diagram=diagram, warnings=tuple(warnings))
