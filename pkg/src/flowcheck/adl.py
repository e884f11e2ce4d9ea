"""A small textual architecture description language and its DFD transformation.

The language describes components with provided operations, per-operation
behaviors as ordered action lists (set-variable, call, branch, return),
containers with node labels, deployments, and usage scenarios with initial
data.  See ``docs/adl.md`` for the grammar.

The transformation produces one DFD node per behavioral action: calls
(from users and between components) become calling/returning node pairs
that enclose the callee's inlined action chain, set-variable actions become
label-transforming nodes, and every scenario contributes a start node
(sourcing the initial data) and an end node (the data sink).  Components
and containers produce no DFD elements; their labels are attached to the
action nodes via the deployment lookup.  Branches reconverge at the node
following them, producing same-pin fan-in so that flow graph extraction
forks one TFG per path.  All generated element ids are deterministic and a
trace map links every node back to its originating architecture element.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from .assignments import AssignmentSyntaxError, parse_term_text
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
    Term,
)


class AdlError(ModelError):
    pass


class AdlSyntaxError(AdlError):
    def __init__(self, message: str, line: int):
        super().__init__(f"line {line}: {message}")
        self.line = line


LabelRefPair = tuple[str, str]  # (type name, label name)


@dataclass(frozen=True)
class SetVariableAction:
    variable: str
    labels: tuple[LabelRefPair, ...]
    term: Term
    line: int


@dataclass(frozen=True)
class CallAction:
    component: str
    operation: str
    arguments: tuple[str, ...]
    line: int


@dataclass(frozen=True)
class BranchAction:
    options: tuple[tuple["Action", ...], ...]
    line: int


@dataclass(frozen=True)
class ReturnAction:
    variables: tuple[str, ...]
    line: int


Action = SetVariableAction | CallAction | BranchAction | ReturnAction


@dataclass(frozen=True)
class Operation:
    name: str
    parameters: tuple[str, ...]


@dataclass(frozen=True)
class Component:
    name: str
    provides: tuple[Operation, ...]

    def operation(self, name: str) -> Operation | None:
        for op in self.provides:
            if op.name == name:
                return op
        return None


@dataclass(frozen=True)
class Container:
    name: str
    labels: tuple[LabelRefPair, ...]


@dataclass(frozen=True)
class OperationBehavior:
    component: str
    operation: str
    actions: tuple[Action, ...]


@dataclass(frozen=True)
class UsageScenario:
    name: str
    labels: tuple[LabelRefPair, ...]
    data: tuple[tuple[str, tuple[LabelRefPair, ...]], ...]
    calls: tuple[CallAction, ...]


@dataclass(frozen=True)
class ArchitectureModel:
    label_types: tuple[tuple[str, tuple[str, ...]], ...]
    components: tuple[Component, ...]
    containers: tuple[Container, ...]
    deployments: tuple[tuple[str, str], ...]  # component -> container
    behaviors: tuple[OperationBehavior, ...]
    scenarios: tuple[UsageScenario, ...]

    def component(self, name: str) -> Component | None:
        for c in self.components:
            if c.name == name:
                return c
        return None

    def behavior_for(self, component: str,
                     operation: str) -> OperationBehavior | None:
        for s in self.behaviors:
            if s.component == component and s.operation == operation:
                return s
        return None

    def deployment_of(self, component: str) -> str | None:
        for comp, container in self.deployments:
            if comp == component:
                return container
        return None

    def container(self, name: str) -> Container | None:
        for c in self.containers:
            if c.name == name:
                return c
        return None


@dataclass(frozen=True)
class TraceMap:
    """Total, injective mapping from generated DFD node ids to architecture elements."""

    nodes: dict[str, str]

    def origin_of(self, node_id: str) -> str:
        if node_id not in self.nodes:
            raise AdlError(f"no trace recorded for node '{node_id}'")
        return self.nodes[node_id]


# ---------------------------------------------------------------------------
# Parsing

_RE_LABELTYPE = re.compile(r"^labeltype\s+(\w+)\s*\{([^}]*)\}$")
_RE_CONTAINER = re.compile(r"^container\s+(\w+)(?:\s+labels\s+(.+))?$")
_RE_COMPONENT = re.compile(r"^component\s+(\w+)\s+provides\s+(.+)$")
_RE_OPERATION = re.compile(r"^(\w+)\(([^)]*)\)$")
_RE_DEPLOY = re.compile(r"^deploy\s+(\w+)\s+on\s+(\w+)$")
_RE_BEHAVIOR = re.compile(r"^behavior\s+(\w+)\.(\w+)\s*\{$")
_RE_USAGE = re.compile(r"^usage\s+(\w+)(?:\s+labels\s+(.+?))?\s*\{$")
_RE_SET = re.compile(r"^set\s+(\w+)\s+(.+?)\s+if\s+(.+)$")
_RE_CALL = re.compile(r"^call\s+(\w+)\.(\w+)\(([^)]*)\)$")
_RE_RETURN = re.compile(r"^return(?:\s+(.+))?$")
_RE_DATA = re.compile(r"^data\s+(\w+)(?:\s+(.+))?$")


def _parse_label_refs(text: str, line_no: int) -> tuple[LabelRefPair, ...]:
    refs = []
    for part in text.split(","):
        part = part.strip()
        if not part:
            continue
        if "." not in part:
            raise AdlSyntaxError(f"expected Type.Label, found '{part}'", line_no)
        type_name, label_name = part.split(".", 1)
        if not type_name or not label_name or "." in label_name:
            raise AdlSyntaxError(f"expected Type.Label, found '{part}'", line_no)
        refs.append((type_name.strip(), label_name.strip()))
    return tuple(refs)


def _parse_names(text: str) -> tuple[str, ...]:
    parts = [p.strip() for p in text.split(",")]
    return tuple(p for p in parts if p)


class _AdlParser:
    def __init__(self, text: str):
        self.lines = text.splitlines()
        self.pos = 0

    def next_line(self) -> tuple[int, str] | None:
        while self.pos < len(self.lines):
            line_no = self.pos + 1
            line = self.lines[self.pos].strip()
            self.pos += 1
            if line and not line.startswith("#"):
                return line_no, line
        return None

    def parse(self) -> ArchitectureModel:
        label_types: list[tuple[str, tuple[str, ...]]] = []
        components: list[Component] = []
        containers: list[Container] = []
        deployments: list[tuple[str, str]] = []
        op_behaviors: list[OperationBehavior] = []
        scenarios: list[UsageScenario] = []

        while (entry := self.next_line()) is not None:
            line_no, line = entry
            if m := _RE_LABELTYPE.match(line):
                label_types.append((m.group(1), _parse_names(m.group(2))))
            elif m := _RE_CONTAINER.match(line):
                labels = _parse_label_refs(m.group(2), line_no) if m.group(2) else ()
                containers.append(Container(m.group(1), labels))
            elif m := _RE_COMPONENT.match(line):
                ops = []
                for op_text in re.split(r"\)\s*,", m.group(2)):
                    op_text = op_text.strip()
                    if not op_text.endswith(")"):
                        op_text += ")"
                    op_m = _RE_OPERATION.match(op_text)
                    if not op_m:
                        raise AdlSyntaxError(f"bad operation declaration '{op_text}'", line_no)
                    ops.append(Operation(op_m.group(1), _parse_names(op_m.group(2))))
                components.append(Component(m.group(1), tuple(ops)))
            elif m := _RE_DEPLOY.match(line):
                deployments.append((m.group(1), m.group(2)))
            elif m := _RE_BEHAVIOR.match(line):
                actions = self.parse_actions(line_no, allow_return=True)
                op_behaviors.append(OperationBehavior(m.group(1), m.group(2), actions))
            elif m := _RE_USAGE.match(line):
                labels = _parse_label_refs(m.group(2), line_no) if m.group(2) else ()
                scenarios.append(self.parse_usage(m.group(1), labels, line_no))
            else:
                raise AdlSyntaxError(f"unsupported statement: '{line}'", line_no)

        model = ArchitectureModel(
            label_types=tuple(label_types),
            components=tuple(components),
            containers=tuple(containers),
            deployments=tuple(deployments),
            behaviors=tuple(op_behaviors),
            scenarios=tuple(scenarios),
        )
        _resolve(model)
        return model

    def parse_actions(self, opened_at: int, allow_return: bool) -> tuple[Action, ...]:
        actions: list[Action] = []
        while True:
            entry = self.next_line()
            if entry is None:
                raise AdlSyntaxError("unterminated block", opened_at)
            line_no, line = entry
            if line == "}":
                return tuple(actions)
            if m := _RE_SET.match(line):
                labels = _parse_label_refs(m.group(2), line_no)
                if not labels:
                    raise AdlSyntaxError("set action needs at least one label", line_no)
                try:
                    term = parse_term_text(m.group(3), line_no)
                except AssignmentSyntaxError as exc:
                    raise AdlSyntaxError(f"bad term: {exc}", line_no) from exc
                actions.append(SetVariableAction(m.group(1), labels, term, line_no))
            elif m := _RE_CALL.match(line):
                actions.append(CallAction(m.group(1), m.group(2),
                                          _parse_names(m.group(3)), line_no))
            elif line.startswith("branch"):
                if not re.match(r"^branch\s*\{$", line):
                    raise AdlSyntaxError("expected 'branch {'", line_no)
                actions.append(self.parse_branch(line_no))
            elif m := _RE_RETURN.match(line):
                if not allow_return:
                    raise AdlSyntaxError("'return' is only allowed in behavior blocks", line_no)
                variables = _parse_names(m.group(1)) if m.group(1) else ()
                actions.append(ReturnAction(variables, line_no))
            else:
                raise AdlSyntaxError(f"unsupported action: '{line}'", line_no)

    def parse_branch(self, opened_at: int) -> BranchAction:
        options: list[tuple[Action, ...]] = []
        while True:
            entry = self.next_line()
            if entry is None:
                raise AdlSyntaxError("unterminated branch", opened_at)
            line_no, line = entry
            if line == "}":
                if not options:
                    raise AdlSyntaxError("branch needs at least one option", opened_at)
                return BranchAction(tuple(options), opened_at)
            if re.match(r"^option\s*\{$", line):
                option = self.parse_actions(line_no, allow_return=False)
                if not option:
                    raise AdlSyntaxError("branch option must not be empty", line_no)
                options.append(option)
            else:
                raise AdlSyntaxError("expected 'option {' or '}'", line_no)

    def parse_usage(self, name: str, labels: tuple[LabelRefPair, ...],
                    opened_at: int) -> UsageScenario:
        data: list[tuple[str, tuple[LabelRefPair, ...]]] = []
        calls: list[CallAction] = []
        while True:
            entry = self.next_line()
            if entry is None:
                raise AdlSyntaxError("unterminated usage block", opened_at)
            line_no, line = entry
            if line == "}":
                return UsageScenario(name, labels, tuple(data), tuple(calls))
            if m := _RE_DATA.match(line):
                if calls:
                    raise AdlSyntaxError("data declarations must precede calls", line_no)
                var_labels = _parse_label_refs(m.group(2), line_no) if m.group(2) else ()
                data.append((m.group(1), var_labels))
            elif m := _RE_CALL.match(line):
                calls.append(CallAction(m.group(1), m.group(2),
                                        _parse_names(m.group(3)), line_no))
            else:
                raise AdlSyntaxError(f"unsupported usage statement: '{line}'", line_no)


def _resolve(model: ArchitectureModel) -> None:
    """Name resolution and structural checks after parsing."""
    for kind, names in (
        ("label type", [t for t, _ in model.label_types]),
        ("component", [c.name for c in model.components]),
        ("container", [c.name for c in model.containers]),
        ("usage scenario", [s.name for s in model.scenarios]),
    ):
        seen: set[str] = set()
        for name in names:
            if name in seen:
                raise AdlError(f"duplicate {kind} '{name}'")
            seen.add(name)

    declared_labels = {(t, l) for t, labels in model.label_types for l in labels}
    container_names = {c.name for c in model.containers}

    def check_labels(refs: tuple[LabelRefPair, ...], where: str, line: int | None = None) -> None:
        for ref in refs:
            if ref not in declared_labels:
                loc = f"line {line}: " if line else ""
                raise AdlError(f"{loc}{where} references undeclared label "
                               f"'{ref[0]}.{ref[1]}'")

    for container in model.containers:
        check_labels(container.labels, f"container '{container.name}'")
    for comp, container in model.deployments:
        if model.component(comp) is None:
            raise AdlError(f"deployment references unknown component '{comp}'")
        if container not in container_names:
            raise AdlError(f"deployment references unknown container '{container}'")

    def check_call(call: CallAction) -> None:
        component = model.component(call.component)
        if component is None:
            raise AdlError(f"line {call.line}: call to unknown component '{call.component}'")
        operation = component.operation(call.operation)
        if operation is None:
            raise AdlError(f"line {call.line}: component '{call.component}' does not "
                           f"provide '{call.operation}'")
        if call.arguments != operation.parameters:
            raise AdlError(
                f"line {call.line}: call arguments {list(call.arguments)} do not match "
                f"parameters {list(operation.parameters)} of "
                f"'{call.component}.{call.operation}' (names must match)")
        if model.behavior_for(call.component, call.operation) is None:
            raise AdlError(f"line {call.line}: no behavior defined for "
                           f"'{call.component}.{call.operation}'")
        if model.deployment_of(call.component) is None:
            raise AdlError(f"line {call.line}: component '{call.component}' is called "
                           f"but not deployed")

    def check_actions(actions: tuple[Action, ...], owner: str) -> None:
        for idx, action in enumerate(actions):
            if isinstance(action, ReturnAction) and idx != len(actions) - 1:
                raise AdlError(f"line {action.line}: 'return' must be the last action "
                               f"of {owner}")
            if isinstance(action, CallAction):
                check_call(action)
            elif isinstance(action, SetVariableAction):
                check_labels(action.labels, "set action", action.line)
            elif isinstance(action, BranchAction):
                for option in action.options:
                    check_actions(option, owner)

    seen_behaviors: set[tuple[str, str]] = set()
    for spec in model.behaviors:
        key = (spec.component, spec.operation)
        if key in seen_behaviors:
            raise AdlError(f"duplicate behavior for '{spec.component}.{spec.operation}'")
        seen_behaviors.add(key)
        component = model.component(spec.component)
        if component is None:
            raise AdlError(f"behavior block references unknown component '{spec.component}'")
        if component.operation(spec.operation) is None:
            raise AdlError(f"component '{spec.component}' does not provide "
                           f"'{spec.operation}'")
        if not spec.actions or not isinstance(spec.actions[-1], ReturnAction):
            raise AdlError(f"behavior '{spec.component}.{spec.operation}' must end "
                           f"with a return action")
        check_actions(spec.actions, f"behavior '{spec.component}.{spec.operation}'")

    for scenario in model.scenarios:
        check_labels(scenario.labels, f"usage '{scenario.name}'")
        for var, labels in scenario.data:
            check_labels(labels, f"data '{var}' in usage '{scenario.name}'")
        for call in scenario.calls:
            check_call(call)


def parse_adl(text: str) -> ArchitectureModel:
    """Parse ADL text into an architecture model, resolving all names."""
    return _AdlParser(text).parse()


# ---------------------------------------------------------------------------
# Transformation to DFD

Producers = dict[str, list[tuple[str, str]]]  # variable -> [(node id, out pin id)]


class _DfdBuilder:
    def __init__(self, model: ArchitectureModel):
        self.model = model
        self.nodes: list[Node] = []
        self.behaviors: list[Behavior] = []
        self.flows: list[Flow] = []
        self.traces: dict[str, str] = {}
        self.labels: dict[LabelRefPair, Label] = {}
        for type_name, label_names in model.label_types:
            for label_name in label_names:
                self.labels[(type_name, label_name)] = Label(
                    id=f"{type_name}.{label_name}", name=label_name, type_name=type_name)

    def label_objects(self, refs: tuple[LabelRefPair, ...]) -> tuple[Label, ...]:
        return tuple(sorted((self.labels[ref] for ref in refs), key=lambda lab: lab.id))

    def container_labels(self, component: str) -> tuple[Label, ...]:
        container_name = self.model.deployment_of(component)
        if container_name is None:
            return ()
        container = self.model.container(container_name)
        return self.label_objects(container.labels) if container else ()

    def emit_node(self, node_id: str, name: str, kind: NodeKind, origin: str,
                  labels: tuple[Label, ...], producers: Producers,
                  out_vars: list[str],
                  set_specs: list[tuple[str, tuple[Label, ...], Term]] | None = None,
                  ) -> Producers:
        in_pins = tuple(Pin(id=f"{node_id}.in.{v}", name=v, direction=Direction.INPUT)
                        for v in producers)
        out_pins = tuple(Pin(id=f"{node_id}.out.{v}", name=v, direction=Direction.OUTPUT)
                         for v in out_vars)
        all_in_ids = tuple(p.id for p in in_pins)

        assignments: list = []
        for v in out_vars:
            if v in producers:
                assignments.append(ForwardingAssignment(
                    in_pins=(f"{node_id}.in.{v}",), out_pin=f"{node_id}.out.{v}"))
        for variable, label_objs, term in (set_specs or []):
            if variable not in out_vars:
                raise AdlError(f"set target '{variable}' is not produced by node '{node_id}'")
            assignments.append(SetAssignment(
                out_pin=f"{node_id}.out.{variable}", labels=label_objs,
                term=term, in_pins=all_in_ids))

        behavior = Behavior(id=f"b.{node_id}", name=name, in_pins=in_pins,
                            out_pins=out_pins, assignments=tuple(assignments))
        self.behaviors.append(behavior)
        self.nodes.append(Node(id=node_id, name=name, kind=kind,
                               behavior=behavior.id, labels=labels))
        self.traces[node_id] = origin

        for variable, sources in producers.items():
            for src_node, src_pin in sources:
                self.flows.append(Flow(
                    id=f"{src_node}->{node_id}:{variable}", name=variable,
                    source=src_node, source_pin=src_pin,
                    target=node_id, target_pin=f"{node_id}.in.{variable}"))
        return {v: [(node_id, f"{node_id}.out.{v}")] for v in out_vars}

    def emit_actions(self, actions: tuple[Action, ...], scope: Producers,
                     component: str, prefix: str, origin_prefix: str,
                     call_stack: tuple[tuple[str, str], ...]) -> Producers:
        labels = self.container_labels(component)
        for idx, action in enumerate(actions, start=1):
            if isinstance(action, SetVariableAction):
                if action.variable not in scope:
                    raise AdlError(f"line {action.line}: set targets '{action.variable}' "
                                   f"which is not in scope")
                node_id = f"{prefix}.{idx}.set"
                scope = self.emit_node(
                    node_id, f"set {action.variable}", NodeKind.PROCESS,
                    f"{origin_prefix}:action[{idx}]", labels,
                    scope, list(scope),
                    set_specs=[(action.variable, self.label_objects(action.labels),
                                action.term)])
            elif isinstance(action, CallAction):
                scope = self.emit_call(action, scope, labels, NodeKind.PROCESS,
                                       f"{prefix}.{idx}",
                                       f"{origin_prefix}:action[{idx}]", call_stack)
            elif isinstance(action, BranchAction):
                merged: Producers = {}
                for opt_idx, option in enumerate(action.options, start=1):
                    snapshot = {v: list(sources) for v, sources in scope.items()}
                    end_scope = self.emit_actions(
                        option, snapshot, component,
                        f"{prefix}.{idx}.br{opt_idx}",
                        f"{origin_prefix}:action[{idx}].option[{opt_idx}]",
                        call_stack)
                    for variable, sources in end_scope.items():
                        merged.setdefault(variable, []).extend(sources)
                scope = merged
            elif isinstance(action, ReturnAction):
                for variable in action.variables:
                    if variable not in scope:
                        raise AdlError(f"line {action.line}: return of '{variable}' "
                                       f"which is not in scope")
                node_id = f"{prefix}.{idx}.return"
                scope = self.emit_node(
                    node_id, "return", NodeKind.PROCESS,
                    f"{origin_prefix}:action[{idx}]", labels,
                    scope, list(action.variables))
        return scope

    def emit_call(self, call: CallAction, scope: Producers, labels: tuple[Label, ...],
                  kind: NodeKind, prefix: str, origin: str,
                  call_stack: tuple[tuple[str, str], ...]) -> Producers:
        key = (call.component, call.operation)
        if key in call_stack:
            chain = " -> ".join(f"{c}.{o}" for c, o in call_stack + (key,))
            raise AdlError(f"line {call.line}: recursive call chain {chain}")
        for argument in call.arguments:
            if argument not in scope:
                raise AdlError(f"line {call.line}: argument '{argument}' is not in scope")

        calling_scope = self.emit_node(
            f"{prefix}.calling", f"call {call.component}.{call.operation} (calling)",
            kind, f"{origin}:calling", labels, scope, list(scope))

        callee = self.model.behavior_for(call.component, call.operation)
        callee_scope: Producers = {arg: list(calling_scope[arg]) for arg in call.arguments}
        callee_end = self.emit_actions(
            callee.actions, callee_scope, call.component,
            f"{prefix}.{call.component}.{call.operation}",
            f"behavior:{call.component}.{call.operation}@{prefix}",
            call_stack + (key,))

        returning_producers: Producers = {}
        for variable, sources in calling_scope.items():
            if variable not in callee_end:
                returning_producers[variable] = list(sources)
        for variable, sources in callee_end.items():
            returning_producers[variable] = list(sources)
        return self.emit_node(
            f"{prefix}.returning", f"call {call.component}.{call.operation} (returning)",
            kind, f"{origin}:returning", labels,
            returning_producers, list(returning_producers))

    def emit_scenario(self, scenario: UsageScenario) -> None:
        scenario_labels = self.label_objects(scenario.labels)
        origin = f"usage:{scenario.name}"
        start_specs = [
            (variable, self.label_objects(refs), parse_term_text("TRUE"))
            for variable, refs in scenario.data if refs
        ]
        scope = self.emit_node(
            f"{scenario.name}.start", f"start {scenario.name}", NodeKind.EXTERNAL,
            f"{origin}:start", scenario_labels, {},
            [variable for variable, _refs in scenario.data],
            set_specs=start_specs)
        for idx, call in enumerate(scenario.calls, start=1):
            scope = self.emit_call(call, scope, scenario_labels, NodeKind.EXTERNAL,
                                   f"{scenario.name}.{idx}",
                                   f"{origin}:call[{idx}]", call_stack=())
        self.emit_node(f"{scenario.name}.end", f"end {scenario.name}",
                       NodeKind.EXTERNAL, f"{origin}:end", scenario_labels, scope, [])

    def build(self) -> tuple[DataDictionary, DataFlowDiagram, TraceMap]:
        for scenario in self.model.scenarios:
            self.emit_scenario(scenario)
        label_types = tuple(
            LabelType(id=type_name, name=type_name,
                      labels=tuple(self.labels[(type_name, l)] for l in label_names))
            for type_name, label_names in self.model.label_types)
        dictionary = DataDictionary(label_types=label_types,
                                    behaviors=tuple(self.behaviors))
        diagram = DataFlowDiagram(dictionary=dictionary, nodes=tuple(self.nodes),
                                  flows=tuple(self.flows))
        return dictionary, diagram, TraceMap(nodes=self.traces)


def transform_to_dfd(model: ArchitectureModel) -> tuple[DataDictionary, DataFlowDiagram, TraceMap]:
    """Transform an architecture model into a DFD with trace links.

    Node counting: every set-variable and return action yields one node,
    every call (entry or external) yields two (calling/returning), and each
    scenario adds its start and end nodes.  Branch containers themselves
    yield none; their options' actions are counted per instantiation, as
    behaviors are inlined once per call site.
    """
    return _DfdBuilder(model).build()
