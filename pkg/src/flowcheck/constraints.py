"""The "never flows" constraint DSL: parsing, binding, and execution.

A constraint pairs data selections (what the flowing data looks like) with
vertex selections (where it must not arrive) and an optional set-theoretic
condition over label variables::

    constraint C1:
        data Sensitivity.Personal, !Encryption.Encrypted
        never flows vertex Location.offPremise

    constraint rbac:
        data Roles.$d never flows vertex Roles.$v
        where isEmpty(intersect($d, $v))

Constraint files are UTF-8 text with one or more ``constraint`` blocks and
``#`` line comments.  Data selections test the data arriving at a vertex;
the ``outgoing`` keyword after ``data`` switches to the data leaving it and
``any`` inspects both sides.
"""

from __future__ import annotations

import enum
from collections.abc import Mapping, Set as AbstractSet
from dataclasses import dataclass

from .core import DataDictionary, DataFlowDiagram, Label, ModelError, NodeKind
from .propagation import PropagatedFlowGraph


class ConstraintError(ModelError):
    pass


class ConstraintSyntaxError(ConstraintError):
    def __init__(self, message: str, line: int, column: int):
        super().__init__(f"{line}:{column}: {message}")
        self.line = line
        self.column = column


class ConstraintBindError(ConstraintError):
    """The constraint references labels absent from the dictionary."""


class UnboundVariableError(ConstraintError):
    def __init__(self, variable: str):
        super().__init__(f"condition references unbound variable '${variable}'")
        self.variable = variable


class DataMode(str, enum.Enum):
    INCOMING = "incoming"
    OUTGOING = "outgoing"
    ANY = "any"


@dataclass(frozen=True)
class LabelSelection:
    label_type: str
    label: str
    negated: bool = False


@dataclass(frozen=True)
class NameSelection:
    name: str
    negated: bool = False


@dataclass(frozen=True)
class KindSelection:
    kind: NodeKind


@dataclass(frozen=True)
class VariableLabelSelection:
    """Binds all labels of ``label_type`` present at the match site to a variable."""

    label_type: str
    variable: str


Selection = LabelSelection | NameSelection | KindSelection | VariableLabelSelection


class SetExpr:
    __slots__ = ()


@dataclass(frozen=True)
class SetVar(SetExpr):
    name: str


@dataclass(frozen=True)
class Intersect(SetExpr):
    left: SetExpr
    right: SetExpr


@dataclass(frozen=True)
class Union(SetExpr):
    left: SetExpr
    right: SetExpr


class Condition:
    __slots__ = ()


@dataclass(frozen=True)
class IsEmpty(Condition):
    expr: SetExpr


@dataclass(frozen=True)
class Subset(Condition):
    left: SetExpr
    right: SetExpr


@dataclass(frozen=True)
class SetEquals(Condition):
    left: SetExpr
    right: SetExpr


@dataclass(frozen=True)
class NotCondition(Condition):
    inner: Condition


@dataclass(frozen=True)
class Constraint:
    name: str
    data_selections: tuple[Selection, ...]
    vertex_selections: tuple[Selection, ...]
    condition: Condition | None = None
    data_mode: DataMode = DataMode.INCOMING


@dataclass(frozen=True)
class Violation:
    """One vertex at which matching data arrived in spite of a constraint."""

    constraint: str
    tfg_index: int
    vertex_id: str
    variable: str
    labels: frozenset[Label]
    node_labels: frozenset[Label]
    trace: dict[str, str]


# ---------------------------------------------------------------------------
# Tokenizer / parser

_KEYWORDS = {"constraint", "data", "never", "flows", "vertex", "named", "kind",
             "where", "outgoing", "any"}


@dataclass(frozen=True)
class _Token:
    kind: str  # ident | string | punct | end
    value: str
    line: int
    column: int


def _tokenize(text: str) -> list[_Token]:
    tokens: list[_Token] = []
    line, col = 1, 1
    i = 0
    n = len(text)
    while i < n:
        ch = text[i]
        if ch == "\n":
            line += 1
            col = 1
            i += 1
            continue
        if ch in " \t\r":
            i += 1
            col += 1
            continue
        if ch == "#":
            while i < n and text[i] != "\n":
                i += 1
            continue
        if ch == '"':
            start_col = col
            j = i + 1
            while j < n and text[j] != '"':
                if text[j] == "\n":
                    raise ConstraintSyntaxError("unterminated string", line, start_col)
                j += 1
            if j >= n:
                raise ConstraintSyntaxError("unterminated string", line, start_col)
            value = text[i + 1:j]
            tokens.append(_Token("string", value, line, start_col))
            col += j - i + 1
            i = j + 1
            continue
        if ch.isalpha() or ch == "_":
            start_col = col
            j = i
            while j < n and (text[j].isalnum() or text[j] == "_"):
                j += 1
            tokens.append(_Token("ident", text[i:j], line, start_col))
            col += j - i
            i = j
            continue
        if ch in ":,.!$()":
            tokens.append(_Token("punct", ch, line, col))
            i += 1
            col += 1
            continue
        raise ConstraintSyntaxError(f"unexpected character '{ch}'", line, col)
    tokens.append(_Token("end", "", line, col))
    return tokens


class _Parser:
    def __init__(self, text: str):
        self.tokens = _tokenize(text)
        self.pos = 0

    def peek(self) -> _Token:
        return self.tokens[self.pos]

    def next(self) -> _Token:
        tok = self.tokens[self.pos]
        if tok.kind != "end":
            self.pos += 1
        return tok

    def error(self, message: str, tok: _Token | None = None) -> ConstraintSyntaxError:
        tok = tok or self.peek()
        return ConstraintSyntaxError(message, tok.line, tok.column)

    def expect_ident(self, value: str) -> _Token:
        tok = self.next()
        if tok.kind != "ident" or tok.value != value:
            raise self.error(f"expected '{value}', found '{tok.value or 'end of input'}'", tok)
        return tok

    def expect_punct(self, value: str) -> _Token:
        tok = self.next()
        if tok.kind != "punct" or tok.value != value:
            raise self.error(f"expected '{value}', found '{tok.value or 'end of input'}'", tok)
        return tok

    def take_name(self, what: str) -> str:
        tok = self.next()
        if tok.kind != "ident" or tok.value in _KEYWORDS:
            raise self.error(f"expected {what}, found '{tok.value or 'end of input'}'", tok)
        return tok.value

    # -- grammar ---------------------------------------------------------

    def parse_file(self) -> list[Constraint]:
        constraints = []
        while self.peek().kind != "end":
            constraints.append(self.parse_constraint())
        return constraints

    def parse_constraint(self) -> Constraint:
        self.expect_ident("constraint")
        name = self.take_name("constraint name")
        self.expect_punct(":")
        self.expect_ident("data")

        mode = DataMode.INCOMING
        if self.peek().kind == "ident" and self.peek().value in ("outgoing", "any"):
            mode = DataMode(self.next().value)

        data_selections = self.parse_selections(vertex_side=False)
        self.expect_ident("never")
        self.expect_ident("flows")
        self.expect_ident("vertex")
        vertex_selections = self.parse_selections(vertex_side=True)

        condition = None
        if self.peek().kind == "ident" and self.peek().value == "where":
            self.next()
            condition = self.parse_condition()

        constraint = Constraint(name, tuple(data_selections), tuple(vertex_selections),
                                condition, mode)
        self.check_variables(constraint)
        return constraint

    def parse_selections(self, vertex_side: bool) -> list[Selection]:
        selections = [self.parse_selection(vertex_side)]
        while self.peek().kind == "punct" and self.peek().value == ",":
            self.next()
            selections.append(self.parse_selection(vertex_side))
        return selections

    def parse_selection(self, vertex_side: bool) -> Selection:
        tok = self.peek()
        if tok.kind == "punct" and tok.value == "!":
            self.next()
            type_name = self.take_name("label type")
            self.expect_punct(".")
            label = self.take_name("label name")
            return LabelSelection(type_name, label, negated=True)
        if tok.kind == "ident" and tok.value == "named":
            self.next()
            name_tok = self.next()
            if name_tok.kind != "string":
                raise self.error("expected quoted name after 'named'", name_tok)
            return NameSelection(name_tok.value)
        if tok.kind == "ident" and tok.value == "kind":
            if not vertex_side:
                raise self.error("'kind' selections apply to vertices only", tok)
            self.next()
            kind_tok = self.next()
            if kind_tok.kind != "ident" or kind_tok.value not in ("External", "Process", "Store"):
                raise self.error("expected External, Process or Store", kind_tok)
            return KindSelection(NodeKind(kind_tok.value.lower()))
        type_name = self.take_name("selector")
        self.expect_punct(".")
        if self.peek().kind == "punct" and self.peek().value == "$":
            self.next()
            variable = self.take_name("variable name")
            return VariableLabelSelection(type_name, variable)
        label = self.take_name("label name")
        return LabelSelection(type_name, label)

    def parse_condition(self) -> Condition:
        tok = self.peek()
        if tok.kind == "punct" and tok.value == "!":
            self.next()
            return NotCondition(self.parse_condition())
        if tok.kind != "ident":
            raise self.error("expected condition expression", tok)
        if tok.value == "isEmpty":
            self.next()
            self.expect_punct("(")
            expr = self.parse_set_expr()
            self.expect_punct(")")
            return IsEmpty(expr)
        if tok.value in ("subset", "equals"):
            self.next()
            self.expect_punct("(")
            left = self.parse_set_expr()
            self.expect_punct(",")
            right = self.parse_set_expr()
            self.expect_punct(")")
            return Subset(left, right) if tok.value == "subset" else SetEquals(left, right)
        raise self.error(f"unknown condition function '{tok.value}'", tok)

    def parse_set_expr(self) -> SetExpr:
        tok = self.peek()
        if tok.kind == "punct" and tok.value == "$":
            self.next()
            return SetVar(self.take_name("variable name"))
        if tok.kind == "ident" and tok.value in ("intersect", "union"):
            self.next()
            self.expect_punct("(")
            left = self.parse_set_expr()
            self.expect_punct(",")
            right = self.parse_set_expr()
            self.expect_punct(")")
            return Intersect(left, right) if tok.value == "intersect" else Union(left, right)
        raise self.error("expected $variable, intersect(...) or union(...)", tok)

    def check_variables(self, constraint: Constraint) -> None:
        bound: set[str] = set()
        for sel in constraint.data_selections + constraint.vertex_selections:
            if isinstance(sel, VariableLabelSelection):
                if sel.variable in bound:
                    raise ConstraintError(
                        f"variable '${sel.variable}' is bound more than once "
                        f"in constraint '{constraint.name}'")
                bound.add(sel.variable)
        if constraint.condition is not None:
            for var in _condition_variables(constraint.condition):
                if var not in bound:
                    raise UnboundVariableError(var)


def _set_expr_variables(expr: SetExpr) -> set[str]:
    if isinstance(expr, SetVar):
        return {expr.name}
    if isinstance(expr, (Intersect, Union)):
        return _set_expr_variables(expr.left) | _set_expr_variables(expr.right)
    return set()


def _condition_variables(condition: Condition) -> set[str]:
    if isinstance(condition, IsEmpty):
        return _set_expr_variables(condition.expr)
    if isinstance(condition, (Subset, SetEquals)):
        return _set_expr_variables(condition.left) | _set_expr_variables(condition.right)
    if isinstance(condition, NotCondition):
        return _condition_variables(condition.inner)
    return set()


def parse_constraint(text: str) -> Constraint:
    """Parse exactly one constraint block."""
    parser = _Parser(text)
    constraint = parser.parse_constraint()
    tok = parser.peek()
    if tok.kind != "end":
        raise parser.error("unexpected trailing input", tok)
    return constraint


def parse_constraints(text: str) -> list[Constraint]:
    """Parse a constraint file (zero or more blocks, ``#`` comments)."""
    return _Parser(text).parse_file()


# ---------------------------------------------------------------------------
# Condition evaluation

def _eval_set_expr(expr: SetExpr,
                   bindings: Mapping[str, AbstractSet[Label]]) -> frozenset[Label]:
    if isinstance(expr, SetVar):
        if expr.name not in bindings:
            raise UnboundVariableError(expr.name)
        return frozenset(bindings[expr.name])
    if isinstance(expr, Intersect):
        return _eval_set_expr(expr.left, bindings) & _eval_set_expr(expr.right, bindings)
    if isinstance(expr, Union):
        return _eval_set_expr(expr.left, bindings) | _eval_set_expr(expr.right, bindings)
    raise ConstraintError(f"unknown set expression {expr!r}")


def evaluate_condition(condition: Condition,
                       bindings: Mapping[str, AbstractSet[Label]]) -> bool:
    """Evaluate a condition under variable bindings with plain set semantics."""
    if isinstance(condition, IsEmpty):
        return not _eval_set_expr(condition.expr, bindings)
    if isinstance(condition, Subset):
        return _eval_set_expr(condition.left, bindings) <= _eval_set_expr(condition.right, bindings)
    if isinstance(condition, SetEquals):
        return _eval_set_expr(condition.left, bindings) == _eval_set_expr(condition.right, bindings)
    if isinstance(condition, NotCondition):
        return not evaluate_condition(condition.inner, bindings)
    raise ConstraintError(f"unknown condition {condition!r}")


# ---------------------------------------------------------------------------
# Binding and execution

def bind_constraint(constraint: Constraint, dictionary: DataDictionary) -> None:
    """Check every label reference against the dictionary; raise on unknowns.

    A bind failure is distinct from "no violations": it means the constraint
    cannot apply to this model's vocabulary at all.
    """
    for sel in constraint.data_selections + constraint.vertex_selections:
        if isinstance(sel, LabelSelection):
            if dictionary.label(sel.label_type, sel.label) is None:
                raise ConstraintBindError(
                    f"constraint '{constraint.name}' references unknown label "
                    f"'{sel.label_type}.{sel.label}'")
        elif isinstance(sel, VariableLabelSelection):
            if dictionary.label_type(sel.label_type) is None:
                raise ConstraintBindError(
                    f"constraint '{constraint.name}' references unknown label type "
                    f"'{sel.label_type}'")


def _match_labels(selections: tuple[Selection, ...], labels: AbstractSet[Label],
                  name: str, kind: NodeKind | None) -> dict[str, frozenset[Label]] | None:
    """All selections must hold; returns variable bindings, or None on mismatch."""
    bindings: dict[str, frozenset[Label]] = {}
    for sel in selections:
        if isinstance(sel, LabelSelection):
            present = any(lab.key == (sel.label_type, sel.label) for lab in labels)
            if present == sel.negated:
                return None
        elif isinstance(sel, NameSelection):
            if (name == sel.name) == sel.negated:
                return None
        elif isinstance(sel, KindSelection):
            if kind is not sel.kind:
                return None
        elif isinstance(sel, VariableLabelSelection):
            bindings[sel.variable] = frozenset(
                lab for lab in labels if lab.type_name == sel.label_type)
    return bindings


def execute(constraint: Constraint, propagated: list[PropagatedFlowGraph],
            diagram: DataFlowDiagram,
            traces: Mapping[str, str] | None = None) -> list[Violation]:
    """Run one constraint over fully propagated flow graphs.

    A vertex violates when some data variable at the vertex satisfies every
    data selection, the vertex itself satisfies every vertex selection, and
    the condition (if any) holds under the collected variable bindings.
    One violation is reported per matching (tfg, vertex, variable) triple,
    in that order.
    """
    bind_constraint(constraint, diagram.dictionary)
    violations: list[Violation] = []
    for tfg_index, pfg in enumerate(propagated):
        for vertex in pfg.tfg.vertices:
            state = pfg.states[vertex.id]
            node = diagram.node(vertex.origin)
            vertex_bindings = _match_labels(constraint.vertex_selections,
                                            state.node_labels, node.name, node.kind)
            if vertex_bindings is None:
                continue

            candidates: dict[str, list[frozenset[Label]]] = {}
            if constraint.data_mode in (DataMode.INCOMING, DataMode.ANY):
                for name, labels in state.incoming_variables().items():
                    candidates.setdefault(name, []).append(labels)
            if constraint.data_mode in (DataMode.OUTGOING, DataMode.ANY):
                for name, labels in state.outgoing_variables().items():
                    candidates.setdefault(name, []).append(labels)

            for variable in sorted(candidates):
                for labels in candidates[variable]:
                    data_bindings = _match_labels(constraint.data_selections, labels,
                                                  variable, None)
                    if data_bindings is None:
                        continue
                    bindings = {**data_bindings, **vertex_bindings}
                    if constraint.condition is not None and not evaluate_condition(
                            constraint.condition, bindings):
                        continue
                    trace = {"node": vertex.origin}
                    if traces and vertex.origin in traces:
                        trace["origin"] = traces[vertex.origin]
                    violations.append(Violation(
                        constraint=constraint.name,
                        tfg_index=tfg_index,
                        vertex_id=vertex.id,
                        variable=variable,
                        labels=labels,
                        node_labels=state.node_labels,
                        trace=trace,
                    ))
                    break  # one violation per variable, even in `any` mode
    violations.sort(key=lambda v: (v.tfg_index, v.vertex_id, v.variable))
    return violations


def execute_all(constraints: list[Constraint], propagated: list[PropagatedFlowGraph],
                diagram: DataFlowDiagram,
                traces: Mapping[str, str] | None = None) -> dict[str, list[Violation]]:
    """Execute several constraints independently; keyed by constraint name."""
    return {c.name: execute(c, propagated, diagram, traces) for c in constraints}


# ---------------------------------------------------------------------------
# Programmatic builder, mirroring the textual grammar

class ConstraintBuilder:
    """Fluent construction of constraints, equivalent to the textual DSL.

    ``ConstraintBuilder("C1").of_data().with_label("Sensitivity", "Personal")
    .without_label("Encryption", "Encrypted").never_flows().to_vertex()
    .with_label("Location", "offPremise").create()`` builds the same AST as
    the parsed text form.
    """

    def __init__(self, name: str):
        self._name = name
        self._data: list[Selection] = []
        self._vertex: list[Selection] = []
        self._current: list[Selection] | None = None
        self._condition: Condition | None = None
        self._mode = DataMode.INCOMING

    def of_data(self) -> "ConstraintBuilder":
        self._current = self._data
        return self

    def outgoing(self) -> "ConstraintBuilder":
        self._mode = DataMode.OUTGOING
        return self

    def any_direction(self) -> "ConstraintBuilder":
        self._mode = DataMode.ANY
        return self

    def never_flows(self) -> "ConstraintBuilder":
        return self

    def to_vertex(self) -> "ConstraintBuilder":
        self._current = self._vertex
        return self

    def _add(self, selection: Selection) -> "ConstraintBuilder":
        if self._current is None:
            raise ConstraintError("call of_data() or to_vertex() before adding selections")
        self._current.append(selection)
        return self

    def with_label(self, label_type: str, label: str) -> "ConstraintBuilder":
        return self._add(LabelSelection(label_type, label))

    def without_label(self, label_type: str, label: str) -> "ConstraintBuilder":
        return self._add(LabelSelection(label_type, label, negated=True))

    def named(self, name: str) -> "ConstraintBuilder":
        return self._add(NameSelection(name))

    def of_kind(self, kind: NodeKind | str) -> "ConstraintBuilder":
        if self._current is not self._vertex:
            raise ConstraintError("kind selections apply to vertices only")
        if isinstance(kind, str):
            kind = NodeKind.parse(kind)
        return self._add(KindSelection(kind))

    def with_label_variable(self, label_type: str, variable: str) -> "ConstraintBuilder":
        return self._add(VariableLabelSelection(label_type, variable))

    def where(self, condition: str) -> "ConstraintBuilder":
        parser = _Parser(condition)
        self._condition = parser.parse_condition()
        if parser.peek().kind != "end":
            raise parser.error("unexpected trailing input in condition")
        return self

    def create(self) -> Constraint:
        if not self._data or not self._vertex:
            raise ConstraintError("a constraint needs selections on both sides of never-flows")
        constraint = Constraint(self._name, tuple(self._data), tuple(self._vertex),
                                self._condition, self._mode)
        _Parser("").check_variables(constraint)
        return constraint
