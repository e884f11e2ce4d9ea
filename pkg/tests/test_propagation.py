"""Label propagation: single-pass evaluation against the exhaustive oracle."""

import random

import pytest

import flowcheck.propagation as propagation_mod
from flowcheck.core import evaluate_behavior
from flowcheck.flowgraph import extract_tfgs
from flowcheck.propagation import (
    PropagationError,
    TraceError,
    compute_node_labels,
    propagate,
    propagate_all,
)

from oracles import naive_propagate
from random_models import random_model
from make_fixtures import PERSONAL, ENCRYPTED


def keys(labels):
    return {(lab.type_name, lab.name) for lab in labels}


class TestComputeNodeLabels:
    def test_labels_copied_from_nodes(self, shop_unencrypted):
        _dictionary, diagram = shop_unencrypted
        tfg = extract_tfgs(diagram).tfgs[0]
        labels = compute_node_labels(tfg, diagram)
        assert keys(labels["database"]) == {("Location", "offPremise")}
        assert keys(labels["user"]) == {("Location", "onPremise")}

    def test_unannotated_node_has_empty_set(self):
        diagram = random_model(random.Random(0))
        tfg = extract_tfgs(diagram).tfgs[0]
        labels = compute_node_labels(tfg, diagram)
        assert all(isinstance(v, frozenset) for v in labels.values())

    def test_dangling_origin_is_a_trace_error(self, shop_unencrypted):
        _dictionary, diagram = shop_unencrypted
        tfg = extract_tfgs(diagram).tfgs[0]
        smaller = diagram.__class__(dictionary=diagram.dictionary,
                                    nodes=diagram.nodes[:-1], flows=diagram.flows)
        with pytest.raises(TraceError):
            compute_node_labels(tfg, smaller)


class TestPropagate:
    def test_forwarding_chain_transitivity(self, shop_unencrypted):
        _dictionary, diagram = shop_unencrypted
        pfg = propagate(extract_tfgs(diagram).tfgs[0], diagram)
        db = pfg.state("database")
        assert db.incoming_variables() == {"userData": frozenset({PERSONAL})}

    def test_encrypting_hop_adds_label(self, shop_encrypted):
        _dictionary, diagram = shop_encrypted
        pfg = propagate(extract_tfgs(diagram).tfgs[0], diagram)
        db = pfg.state("database")
        assert db.incoming_variables()["userData"] == {PERSONAL, ENCRYPTED}

    def test_matches_exhaustive_recursion_oracle_on_random_dags(self):
        for seed in range(120):
            diagram = random_model(random.Random(seed))
            for tfg in extract_tfgs(diagram).tfgs:
                expected = naive_propagate(tfg, diagram)
                actual = propagate(tfg, diagram)
                for vertex in tfg.vertices:
                    state = actual.state(vertex.id)
                    exp_incoming, exp_outputs = expected[vertex.id]
                    act_incoming = {
                        (pin, flow): keys(labels)
                        for pin, per_flow in state.incoming.items()
                        for flow, labels in per_flow.items()
                    }
                    assert act_incoming == {
                        k: set(v) for k, v in exp_incoming.items()
                    }, f"seed {seed} vertex {vertex.id}"
                    for pin, per_flow in state.outgoing.items():
                        for _flow, labels in per_flow.items():
                            assert keys(labels) == exp_outputs[pin], \
                                f"seed {seed} vertex {vertex.id} pin {pin}"

    def test_each_vertex_evaluated_exactly_once(self, monkeypatch):
        calls = []

        def counting(behavior, incoming):
            calls.append(behavior.id)
            return evaluate_behavior(behavior, incoming)

        monkeypatch.setattr(propagation_mod, "evaluate_behavior", counting)
        diagram = random_model(random.Random(5))
        for tfg in extract_tfgs(diagram).tfgs:
            calls.clear()
            propagate(tfg, diagram)
            assert len(calls) == len(tfg.vertices)
            assert len(set(calls)) == len(calls)

    def test_incoming_equals_predecessor_outgoing(self):
        for seed in range(30):
            diagram = random_model(random.Random(seed))
            for tfg in extract_tfgs(diagram).tfgs:
                pfg = propagate(tfg, diagram)
                for vertex in tfg.vertices:
                    state = pfg.state(vertex.id)
                    for edge in vertex.predecessors:
                        pred = pfg.state(edge.vertex.id)
                        assert state.incoming[edge.pin_id][edge.flow.name] == \
                            pred.outgoing[edge.flow.source_pin][edge.flow.name]

    def test_forwarding_only_sink_sees_union_of_source_labels(self):
        from flowcheck.core import (Behavior, DataDictionary, DataFlowDiagram,
                                    Direction, Flow, ForwardingAssignment, Label,
                                    LabelType, Node, NodeKind, Pin, SetAssignment,
                                    TRUE)
        la = Label("T.A", "A", "T")
        lb = Label("T.B", "B", "T")
        lt = LabelType("T", "T", (la, lb))
        s1_out = Pin("s1.out", "x", Direction.OUTPUT)
        s2_out = Pin("s2.out", "y", Direction.OUTPUT)
        j_in1 = Pin("j.in1", "x", Direction.INPUT)
        j_in2 = Pin("j.in2", "y", Direction.INPUT)
        j_out = Pin("j.out", "z", Direction.OUTPUT)
        t_in = Pin("t.in", "z", Direction.INPUT)
        behaviors = (
            Behavior("b.j", "j", (j_in1, j_in2), (j_out,),
                     (ForwardingAssignment(("j.in1", "j.in2"), "j.out"),)),
            Behavior("b.s1", "s1", (), (s1_out,),
                     (SetAssignment(out_pin="s1.out", labels=(la,), term=TRUE),)),
            Behavior("b.s2", "s2", (), (s2_out,),
                     (SetAssignment(out_pin="s2.out", labels=(lb,), term=TRUE),)),
            Behavior("b.t", "t", (t_in,), (), ()),
        )
        dictionary = DataDictionary((lt,), behaviors)
        diagram = DataFlowDiagram(
            dictionary=dictionary,
            nodes=(Node("j", "j", NodeKind.PROCESS, "b.j"),
                   Node("s1", "s1", NodeKind.PROCESS, "b.s1"),
                   Node("s2", "s2", NodeKind.PROCESS, "b.s2"),
                   Node("t", "t", NodeKind.STORE, "b.t")),
            flows=(Flow("f1", "x", "s1", "s1.out", "j", "j.in1"),
                   Flow("f2", "y", "s2", "s2.out", "j", "j.in2"),
                   Flow("f3", "z", "j", "j.out", "t", "t.in")),
        )
        collection = extract_tfgs(diagram)
        assert len(collection.tfgs) == 1  # joint inputs, no fork
        pfg = propagate(collection.tfgs[0], diagram)
        assert pfg.state("t").incoming_variables()["z"] == {la, lb}

    def test_deterministic_across_runs(self):
        diagram = random_model(random.Random(9))
        tfgs = extract_tfgs(diagram).tfgs
        once = [propagate(tfg, diagram) for tfg in tfgs]
        twice = [propagate(tfg, diagram) for tfg in tfgs]
        for a, b in zip(once, twice):
            for vertex in a.tfg.vertices:
                assert a.state(vertex.id).incoming == b.state(vertex.id).incoming
                assert a.state(vertex.id).outgoing == b.state(vertex.id).outgoing


class TestPropagateAll:
    def test_empty_collection(self, shop_unencrypted):
        _dictionary, diagram = shop_unencrypted
        collection = extract_tfgs(diagram)
        empty = collection.__class__(tfgs=(), source=diagram)
        assert propagate_all(empty) == []

    def test_order_matches_collection_and_results_are_independent(self):
        diagram = random_model(random.Random(21))
        collection = extract_tfgs(diagram)
        forward = propagate_all(collection)
        reversed_collection = collection.__class__(
            tfgs=tuple(reversed(collection.tfgs)), source=diagram)
        backward = propagate_all(reversed_collection)
        assert len(forward) == len(collection.tfgs)
        for pfg_a, pfg_b in zip(forward, reversed(backward)):
            assert pfg_a.tfg is pfg_b.tfg
            for vertex in pfg_a.tfg.vertices:
                assert pfg_a.state(vertex.id).incoming == pfg_b.state(vertex.id).incoming

    def test_errors_are_aggregated_with_tfg_index(self, shop_unencrypted):
        # A behavior whose assignment references a pin that never receives
        # data fails during propagation with the TFG index attached.
        from flowcheck.core import (Behavior, DataDictionary, DataFlowDiagram,
                                    Direction, Flow, ForwardingAssignment,
                                    Node, NodeKind, Pin)
        a_out = Pin("a.out", "d", Direction.OUTPUT)
        b_in = Pin("b.in", "d", Direction.INPUT)
        b_ghost = Pin("b.ghost", "ghost", Direction.INPUT)
        behaviors = (
            Behavior("b.a", "a", (), (a_out,), ()),
            Behavior("b.b", "b", (b_in, b_ghost), (),
                     ()),
        )
        # Rebuild b with an assignment needing the unconnected ghost pin.
        b_out = Pin("b.out", "d", Direction.OUTPUT)
        behaviors = (
            Behavior("b.a", "a", (), (a_out,), ()),
            Behavior("b.b", "b", (b_in, b_ghost), (b_out,),
                     (ForwardingAssignment(("b.in", "b.ghost"), "b.out"),)),
        )
        dictionary = DataDictionary((), behaviors)
        diagram = DataFlowDiagram(
            dictionary=dictionary,
            nodes=(Node("a", "a", NodeKind.PROCESS, "b.a"),
                   Node("b", "b", NodeKind.PROCESS, "b.b")),
            flows=(Flow("f", "d", "a", "a.out", "b", "b.in"),),
        )
        collection = extract_tfgs(diagram)
        with pytest.raises(PropagationError) as excinfo:
            propagate_all(collection)
        assert excinfo.value.tfg_index is not None
        assert "b.ghost" in str(excinfo.value)
