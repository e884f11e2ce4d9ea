"""Textual assignment DSL used by the editor and the architecture language.

One assignment per line, in the context of a single output pin::

    forward userData, sessionKey
    set Encryption.Encrypted if TRUE
    set Audit.Flagged if Sensitivity.Personal AND NOT Encryption.Encrypted

``forward`` names incoming data (by the name of the incoming edge);
``set`` names labels to add when the term holds and to remove when it does
not.  Terms combine TRUE/FALSE constants and label references with AND, OR
and NOT (``&&``/``||``/``!`` are accepted too); a reference may be scoped to
one incoming edge as ``edgeName:Type.Label``.  The grammar is deterministic;
numeric or probabilistic expressions are rejected.
"""

from __future__ import annotations

from dataclasses import dataclass

from .core import And, Constant, LabelRef, ModelError, Not, Or, Term


class AssignmentSyntaxError(ModelError):
    def __init__(self, message: str, line: int, column: int):
        super().__init__(f"{line}:{column}: {message}")
        self.line = line
        self.column = column


@dataclass(frozen=True)
class Diagnostic:
    line: int
    column: int
    message: str


@dataclass(frozen=True)
class ParsedForward:
    inputs: tuple[str, ...]


@dataclass(frozen=True)
class ParsedSet:
    labels: tuple[tuple[str, str], ...]  # (type name, label name)
    term: Term


ParsedAssignment = ParsedForward | ParsedSet


@dataclass(frozen=True)
class _Tok:
    kind: str  # ident | punct | string | end
    value: str
    column: int


def _tokenize_line(text: str, line_no: int) -> list[_Tok]:
    tokens: list[_Tok] = []
    i = 0
    n = len(text)
    while i < n:
        ch = text[i]
        if ch in " \t":
            i += 1
            continue
        col = i + 1
        if ch == "#":
            break
        if ch == '"':
            j = text.find('"', i + 1)
            if j < 0:
                raise AssignmentSyntaxError("unterminated string", line_no, col)
            tokens.append(_Tok("string", text[i + 1:j], col))
            i = j + 1
            continue
        if ch.isalpha() or ch == "_":
            j = i
            while j < n and (text[j].isalnum() or text[j] == "_"):
                j += 1
            tokens.append(_Tok("ident", text[i:j], col))
            i = j
            continue
        if ch.isdigit():
            raise AssignmentSyntaxError(
                "numeric expressions are not supported; terms are deterministic",
                line_no, col)
        if text.startswith("&&", i) or text.startswith("||", i):
            tokens.append(_Tok("punct", text[i:i + 2], col))
            i += 2
            continue
        if ch in ".,:!()":
            tokens.append(_Tok("punct", ch, col))
            i += 1
            continue
        raise AssignmentSyntaxError(f"unexpected character '{ch}'", line_no, col)
    tokens.append(_Tok("end", "", n + 1))
    return tokens


class _TermParser:
    """Recursive-descent parser over one line's tokens."""

    def __init__(self, tokens: list[_Tok], line_no: int):
        self.tokens = tokens
        self.line_no = line_no
        self.pos = 0

    def peek(self) -> _Tok:
        return self.tokens[self.pos]

    def next(self) -> _Tok:
        tok = self.tokens[self.pos]
        if tok.kind != "end":
            self.pos += 1
        return tok

    def error(self, message: str, tok: _Tok | None = None) -> AssignmentSyntaxError:
        tok = tok or self.peek()
        return AssignmentSyntaxError(message, self.line_no, tok.column)

    def at_keyword(self, *words: str) -> bool:
        tok = self.peek()
        return tok.kind == "ident" and tok.value.upper() in words

    def parse_term(self) -> Term:
        term = self.parse_and()
        while self.at_keyword("OR") or (self.peek().kind == "punct" and self.peek().value == "||"):
            self.next()
            term = Or(term, self.parse_and())
        return term

    def parse_and(self) -> Term:
        term = self.parse_unary()
        while self.at_keyword("AND") or (self.peek().kind == "punct" and self.peek().value == "&&"):
            self.next()
            term = And(term, self.parse_unary())
        return term

    def parse_unary(self) -> Term:
        tok = self.peek()
        if self.at_keyword("NOT") or (tok.kind == "punct" and tok.value == "!"):
            self.next()
            return Not(self.parse_unary())
        if tok.kind == "punct" and tok.value == "(":
            self.next()
            term = self.parse_term()
            closing = self.next()
            if closing.kind != "punct" or closing.value != ")":
                raise self.error("expected ')'", closing)
            return term
        if self.at_keyword("TRUE"):
            self.next()
            return Constant(True)
        if self.at_keyword("FALSE"):
            self.next()
            return Constant(False)
        if tok.kind == "ident":
            if tok.value.lower() == "prob":
                raise self.error("probabilistic expressions are not supported; "
                                 "terms are deterministic")
            return self.parse_label_ref()
        raise self.error(f"expected a term, found '{tok.value or 'end of line'}'")

    def parse_label_ref(self) -> Term:
        first = self.next()
        sep = self.peek()
        scope: str | None = None
        if sep.kind == "punct" and sep.value == ":":
            self.next()
            scope = first.value
            first = self.next()
            if first.kind != "ident":
                raise self.error("expected label type after scope", first)
        dot = self.next()
        if dot.kind != "punct" or dot.value != ".":
            raise self.error("expected '.' in label reference", dot)
        label = self.next()
        if label.kind != "ident":
            raise self.error("expected label name", label)
        return LabelRef(first.value, label.value, scope)

    def expect_end(self) -> None:
        tok = self.peek()
        if tok.kind != "end":
            raise self.error(f"unexpected trailing input '{tok.value}'")


def parse_term_text(text: str, line_no: int = 1) -> Term:
    """Parse a single-line term expression."""
    parser = _TermParser(_tokenize_line(text, line_no), line_no)
    term = parser.parse_term()
    parser.expect_end()
    return term


def _parse_line(tokens: list[_Tok], line_no: int) -> ParsedAssignment | None:
    if tokens[0].kind == "end":
        return None
    head = tokens[0]
    if head.kind != "ident" or head.value not in ("forward", "set"):
        raise AssignmentSyntaxError(
            f"unknown keyword '{head.value}'; expected 'forward' or 'set'",
            line_no, head.column)
    parser = _TermParser(tokens, line_no)
    parser.next()  # consume keyword
    if head.value == "forward":
        inputs = []
        while True:
            tok = parser.next()
            if tok.kind not in ("ident", "string"):
                raise parser.error("expected an incoming data name", tok)
            inputs.append(tok.value)
            if parser.peek().kind == "punct" and parser.peek().value == ",":
                parser.next()
                continue
            break
        parser.expect_end()
        return ParsedForward(tuple(inputs))

    labels: list[tuple[str, str]] = []
    while True:
        type_tok = parser.next()
        if type_tok.kind != "ident":
            raise parser.error("expected a Type.Label reference", type_tok)
        dot = parser.next()
        if dot.kind != "punct" or dot.value != ".":
            raise parser.error("expected '.' in label reference", dot)
        label_tok = parser.next()
        if label_tok.kind != "ident":
            raise parser.error("expected label name", label_tok)
        labels.append((type_tok.value, label_tok.value))
        if parser.peek().kind == "punct" and parser.peek().value == ",":
            parser.next()
            continue
        break
    if not parser.at_keyword("IF"):
        raise parser.error("expected 'if' before the term")
    parser.next()
    term = parser.parse_term()
    parser.expect_end()
    return ParsedSet(tuple(labels), term)


def parse_assignments(text: str) -> list[tuple[int, ParsedAssignment]]:
    """Parse assignment text; returns (line number, assignment) pairs."""
    parsed = []
    for line_no, line in enumerate(text.splitlines(), start=1):
        tokens = _tokenize_line(line, line_no)
        assignment = _parse_line(tokens, line_no)
        if assignment is not None:
            parsed.append((line_no, assignment))
    return parsed


def _term_scopes_and_refs(term: Term) -> tuple[set[str], set[tuple[str, str]]]:
    scopes: set[str] = set()
    refs: set[tuple[str, str]] = set()
    stack = [term]
    while stack:
        node = stack.pop()
        if isinstance(node, LabelRef):
            refs.add((node.label_type, node.label))
            if node.flow is not None:
                scopes.add(node.flow)
        elif isinstance(node, Not):
            stack.append(node.term)
        elif isinstance(node, (And, Or)):
            stack.extend((node.left, node.right))
    return scopes, refs


def check_assignment_text(
    text: str,
    inputs: list[str] | None = None,
    label_types: dict[str, list[str]] | None = None,
) -> list[Diagnostic]:
    """Syntax-check assignment text, optionally against a behavior context.

    ``inputs`` are the names of the incoming edges available to the pin;
    ``label_types`` maps label type names to their label names.  Without
    context only the grammar is checked.
    """
    diagnostics: list[Diagnostic] = []
    try:
        parsed = parse_assignments(text)
    except AssignmentSyntaxError as exc:
        return [Diagnostic(exc.line, exc.column, str(exc).split(": ", 1)[1])]

    for line_no, assignment in parsed:
        if isinstance(assignment, ParsedForward):
            if inputs is not None:
                for name in assignment.inputs:
                    if name not in inputs:
                        diagnostics.append(Diagnostic(
                            line_no, 1, f"unknown incoming data '{name}'"))
        else:
            scopes, refs = _term_scopes_and_refs(assignment.term)
            refs |= set(assignment.labels)
            if inputs is not None:
                for scope in sorted(scopes):
                    if scope not in inputs:
                        diagnostics.append(Diagnostic(
                            line_no, 1, f"unknown incoming data '{scope}'"))
            if label_types is not None:
                for type_name, label_name in sorted(refs):
                    if type_name not in label_types:
                        diagnostics.append(Diagnostic(
                            line_no, 1, f"unknown label type '{type_name}'"))
                    elif label_name not in label_types[type_name]:
                        diagnostics.append(Diagnostic(
                            line_no, 1,
                            f"unknown label '{type_name}.{label_name}'"))
    return diagnostics


def compile_assignment_text(text: str) -> list[dict]:
    """Compile assignment text into name-based structures for the editor.

    The caller resolves names to pin ids; the service stays free of any
    per-document state.
    """
    from .model_io import term_to_json  # local import: io depends on this module's parser

    compiled = []
    for _line_no, assignment in parse_assignments(text):
        if isinstance(assignment, ParsedForward):
            compiled.append({"kind": "forward", "inputs": list(assignment.inputs)})
        else:
            compiled.append({
                "kind": "set",
                "labels": [{"labelType": t, "label": l} for (t, l) in assignment.labels],
                "term": term_to_json(assignment.term),
            })
    return compiled
