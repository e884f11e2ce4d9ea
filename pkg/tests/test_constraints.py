"""Constraint DSL: parsing, conditions, execution, builder equivalence."""

import itertools
import random

import pytest

from flowcheck.constraints import (
    Constraint,
    ConstraintBindError,
    ConstraintBuilder,
    ConstraintError,
    ConstraintSyntaxError,
    DataMode,
    Intersect,
    IsEmpty,
    KindSelection,
    LabelSelection,
    NameSelection,
    SetVar,
    Subset,
    UnboundVariableError,
    VariableLabelSelection,
    evaluate_condition,
    execute,
    parse_constraint,
    parse_constraints,
)
from flowcheck.core import (
    Behavior,
    DataDictionary,
    DataFlowDiagram,
    Direction,
    Flow,
    ForwardingAssignment,
    Label,
    LabelType,
    Node,
    NodeKind,
    Pin,
    SetAssignment,
    TRUE,
    validate_model,
)
from flowcheck.flowgraph import extract_tfgs
from flowcheck.propagation import propagate_all

from oracles import brute_force_violations
from random_models import random_constraint, random_model

C1_TEXT = ("constraint C1: data Sensitivity.Personal, !Encryption.Encrypted "
           "never flows vertex Location.offPremise")


class TestParsing:
    def test_c1_ast(self):
        constraint = parse_constraint(C1_TEXT)
        assert constraint == Constraint(
            name="C1",
            data_selections=(LabelSelection("Sensitivity", "Personal"),
                             LabelSelection("Encryption", "Encrypted", negated=True)),
            vertex_selections=(LabelSelection("Location", "offPremise"),),
        )

    def test_rbac_constraint_with_condition(self):
        constraint = parse_constraint(
            "constraint R: data Roles.$d never flows vertex Roles.$v "
            "where isEmpty(intersect($d,$v))")
        assert constraint.data_selections == (VariableLabelSelection("Roles", "d"),)
        assert constraint.vertex_selections == (VariableLabelSelection("Roles", "v"),)
        assert constraint.condition == IsEmpty(Intersect(SetVar("d"), SetVar("v")))

    def test_empty_data_selector_is_a_syntax_error(self):
        with pytest.raises(ConstraintSyntaxError):
            parse_constraint("constraint X: data never flows vertex A.B")

    def test_syntax_error_carries_position(self):
        with pytest.raises(ConstraintSyntaxError) as excinfo:
            parse_constraint("constraint X data A.B never flows vertex C.D")
        assert excinfo.value.line == 1
        assert excinfo.value.column > 1

    def test_named_kind_and_modes(self):
        constraint = parse_constraint(
            'constraint K: data outgoing named "userData" '
            "never flows vertex kind Store, named \"Database\"")
        assert constraint.data_mode is DataMode.OUTGOING
        assert constraint.data_selections == (NameSelection("userData"),)
        assert constraint.vertex_selections == (
            KindSelection(NodeKind.STORE), NameSelection("Database"))

    def test_unbound_condition_variable(self):
        with pytest.raises(UnboundVariableError):
            parse_constraint("constraint X: data A.B never flows vertex C.D "
                             "where isEmpty($ghost)")

    def test_duplicate_variable_rejected(self):
        with pytest.raises(ConstraintError):
            parse_constraint("constraint X: data Roles.$d, Other.$d "
                             "never flows vertex C.D")

    def test_file_with_comments_and_multiple_blocks(self):
        text = """
        # first
        constraint A: data T.L never flows vertex T.L
        # second
        constraint B: data any T.L never flows vertex kind Process
        """
        constraints = parse_constraints(text)
        assert [c.name for c in constraints] == ["A", "B"]
        assert constraints[1].data_mode is DataMode.ANY

    def test_builder_equals_parsed_ast(self):
        built = (ConstraintBuilder("C1")
                 .of_data()
                 .with_label("Sensitivity", "Personal")
                 .without_label("Encryption", "Encrypted")
                 .never_flows()
                 .to_vertex()
                 .with_label("Location", "offPremise")
                 .create())
        assert built == parse_constraint(C1_TEXT)

    def test_builder_with_condition_equals_parsed(self):
        built = (ConstraintBuilder("R")
                 .of_data().with_label_variable("Roles", "d")
                 .never_flows()
                 .to_vertex().with_label_variable("Roles", "v")
                 .where("isEmpty(intersect($d,$v))")
                 .create())
        parsed = parse_constraint(
            "constraint R: data Roles.$d never flows vertex Roles.$v "
            "where isEmpty(intersect($d,$v))")
        assert built == parsed


CLERK = Label("Roles.Clerk", "Clerk", "Roles")
ADMIN = Label("Roles.Admin", "Admin", "Roles")


class TestConditions:
    def test_is_empty_intersection_examples(self):
        condition = IsEmpty(Intersect(SetVar("d"), SetVar("v")))
        assert evaluate_condition(condition, {"d": {CLERK}, "v": {CLERK}}) is False
        assert evaluate_condition(condition, {"d": {ADMIN}, "v": {CLERK}}) is True

    def test_subset_matches_brute_force_over_small_sets(self):
        universe = [CLERK, ADMIN,
                    Label("Roles.Guest", "Guest", "Roles"),
                    Label("Roles.Auditor", "Auditor", "Roles")]
        condition = Subset(SetVar("d"), SetVar("v"))
        subsets = [set(c) for r in range(5)
                   for c in itertools.combinations(universe, r)]
        for d, v in itertools.product(subsets, subsets):
            expected = d <= v  # independent set oracle
            assert evaluate_condition(condition, {"d": d, "v": v}) is expected

    def test_unbound_variable_raises(self):
        with pytest.raises(UnboundVariableError):
            evaluate_condition(IsEmpty(SetVar("nope")), {})


def rbac_model(handler_labels: tuple[Label, ...]) -> DataFlowDiagram:
    """user -> service -> handler; the request data carries the Clerk role."""
    roles = LabelType("Roles", "Roles", (ADMIN, CLERK))
    u_out = Pin("u.out", "request", Direction.OUTPUT)
    s_in = Pin("s.in", "request", Direction.INPUT)
    s_out = Pin("s.out", "request", Direction.OUTPUT)
    h_in = Pin("h.in", "request", Direction.INPUT)
    behaviors = (
        Behavior("b.h", "handler", (h_in,), (), ()),
        Behavior("b.s", "service", (s_in,), (s_out,),
                 (ForwardingAssignment(("s.in",), "s.out"),)),
        Behavior("b.u", "user", (), (u_out,),
                 (SetAssignment(out_pin="u.out", labels=(CLERK,), term=TRUE),)),
    )
    dictionary = DataDictionary((roles,), behaviors)
    diagram = DataFlowDiagram(
        dictionary=dictionary,
        nodes=(Node("handler", "handler", NodeKind.PROCESS, "b.h",
                    tuple(sorted(handler_labels, key=lambda l: l.id))),
               Node("service", "service", NodeKind.PROCESS, "b.s", (CLERK,)),
               Node("user", "user", NodeKind.EXTERNAL, "b.u", (CLERK,))),
        flows=(Flow("f1", "request", "user", "u.out", "service", "s.in"),
               Flow("f2", "request", "service", "s.out", "handler", "h.in")),
    )
    assert validate_model(dictionary, diagram).ok
    return diagram


RBAC = parse_constraint("constraint rbac: data Roles.$d never flows vertex Roles.$v "
                        "where isEmpty(intersect($d,$v))")


def run(constraint, diagram):
    propagated = propagate_all(extract_tfgs(diagram))
    return execute(constraint, propagated, diagram)


class TestExecute:
    def test_unencrypted_shop_has_one_violation_at_database(self, shop_unencrypted):
        _dictionary, diagram = shop_unencrypted
        violations = run(parse_constraint(C1_TEXT), diagram)
        assert len(violations) == 1
        v = violations[0]
        assert v.vertex_id == "database"
        assert v.variable == "userData"
        assert {str(lab) for lab in v.labels} == {"Sensitivity.Personal"}
        assert {str(lab) for lab in v.node_labels} == {"Location.offPremise"}

    def test_encrypted_shop_is_clean(self, shop_encrypted):
        _dictionary, diagram = shop_encrypted
        assert run(parse_constraint(C1_TEXT), diagram) == []

    def test_rbac_matching_role_passes(self):
        assert run(RBAC, rbac_model((CLERK,))) == []

    def test_rbac_disjoint_role_violates(self):
        violations = run(RBAC, rbac_model((ADMIN,)))
        assert [(v.vertex_id, v.variable) for v in violations] == [("handler", "request")]

    def test_rbac_brute_force_over_all_label_assignments(self):
        subsets = [(), (CLERK,), (ADMIN,), (ADMIN, CLERK)]
        for handler_labels in subsets:
            diagram = rbac_model(handler_labels)
            tfgs = list(extract_tfgs(diagram).tfgs)
            expected = brute_force_violations(RBAC, diagram, tfgs)
            actual = {(v.tfg_index, v.vertex_id, v.variable)
                      for v in run(RBAC, diagram)}
            assert actual == expected, handler_labels

    def test_negation_soundness(self, shop_unencrypted):
        _dictionary, diagram = shop_unencrypted
        positive = parse_constraint(
            "constraint P: data Sensitivity.Personal never flows vertex Location.offPremise")
        negative = parse_constraint(
            "constraint N: data !Sensitivity.Personal never flows vertex Location.offPremise")
        hit_pos = {(v.vertex_id, v.variable) for v in run(positive, diagram)}
        hit_neg = {(v.vertex_id, v.variable) for v in run(negative, diagram)}
        assert not (hit_pos & hit_neg)

    def test_removing_a_selection_never_shrinks_the_violation_set(self, shop_unencrypted):
        _dictionary, diagram = shop_unencrypted
        narrow = parse_constraint(C1_TEXT)
        wide = parse_constraint("constraint W: data Sensitivity.Personal "
                                "never flows vertex Location.offPremise")
        narrow_hits = {(v.tfg_index, v.vertex_id, v.variable)
                       for v in run(narrow, diagram)}
        wide_hits = {(v.tfg_index, v.vertex_id, v.variable)
                     for v in run(wide, diagram)}
        assert narrow_hits <= wide_hits

    def test_selector_matching_no_vertex_is_empty_not_error(self, shop_unencrypted):
        _dictionary, diagram = shop_unencrypted
        constraint = parse_constraint(
            'constraint Z: data Sensitivity.Personal never flows vertex named "Nowhere"')
        assert run(constraint, diagram) == []

    def test_unknown_label_is_a_bind_error(self, shop_unencrypted):
        _dictionary, diagram = shop_unencrypted
        constraint = parse_constraint(
            "constraint X: data Sensitivity.Secret never flows vertex Location.offPremise")
        propagated = propagate_all(extract_tfgs(diagram))
        with pytest.raises(ConstraintBindError):
            execute(constraint, propagated, diagram)

    def test_outgoing_mode_matches_data_leaving_a_vertex(self, shop_unencrypted):
        _dictionary, diagram = shop_unencrypted
        constraint = parse_constraint(
            "constraint O: data outgoing Sensitivity.Personal "
            'never flows vertex named "User"')
        violations = run(constraint, diagram)
        assert [(v.vertex_id, v.variable) for v in violations] == [("user", "userData")]

    def test_any_mode_counts_each_variable_once(self, shop_unencrypted):
        _dictionary, diagram = shop_unencrypted
        constraint = parse_constraint(
            "constraint A: data any Sensitivity.Personal "
            "never flows vertex Location.onPremise")
        violations = run(constraint, diagram)
        # user (outgoing only), shop and encrypt (incoming and outgoing,
        # deduplicated per variable); the off-premise database is excluded.
        assert [(v.vertex_id, v.variable) for v in violations] == [
            ("encrypt", "userData"), ("shop", "userData"), ("user", "userData")]

    def test_violation_order_is_deterministic(self):
        diagram = random_model(random.Random(33))
        constraint = Constraint(
            "order", (VariableLabelSelection("T0", "d"),),
            (VariableLabelSelection("T0", "v"),), None, DataMode.ANY)
        violations = run(constraint, diagram)
        keys = [(v.tfg_index, v.vertex_id, v.variable) for v in violations]
        assert keys == sorted(keys)

    def test_matches_brute_force_oracle_on_random_models(self):
        for seed in range(150):
            rng = random.Random(seed)
            diagram = random_model(rng)
            constraint = random_constraint(rng, diagram)
            tfgs = list(extract_tfgs(diagram).tfgs)
            propagated = propagate_all(extract_tfgs(diagram))
            actual = {(v.tfg_index, v.vertex_id, v.variable)
                      for v in execute(constraint, propagated, diagram)}
            expected = brute_force_violations(constraint, diagram, tfgs)
            assert actual == expected, f"seed {seed}"
