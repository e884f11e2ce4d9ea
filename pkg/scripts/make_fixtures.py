#!/usr/bin/env python3
"""Regenerate the canonical JSON fixtures under fixtures/ from hand-built models."""

from pathlib import Path

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
from flowcheck.model_io import save_model

FIXTURES = Path(__file__).resolve().parent.parent / "fixtures"

PERSONAL = Label(id="Sensitivity.Personal", name="Personal", type_name="Sensitivity")
ENCRYPTED = Label(id="Encryption.Encrypted", name="Encrypted", type_name="Encryption")
ON_PREMISE = Label(id="Location.onPremise", name="onPremise", type_name="Location")
OFF_PREMISE = Label(id="Location.offPremise", name="offPremise", type_name="Location")

LABEL_TYPES = (
    LabelType(id="Encryption", name="Encryption", labels=(ENCRYPTED,)),
    LabelType(id="Location", name="Location", labels=(OFF_PREMISE, ON_PREMISE)),
    LabelType(id="Sensitivity", name="Sensitivity", labels=(PERSONAL,)),
)


def online_shop(encrypting: bool) -> tuple[DataDictionary, DataFlowDiagram]:
    """The simplified online shop: user -> shop -> encrypt -> database."""
    user_out = Pin("user.out", "userData", Direction.OUTPUT)
    shop_in = Pin("shop.in", "userData", Direction.INPUT)
    shop_out = Pin("shop.out", "userData", Direction.OUTPUT)
    encrypt_in = Pin("encrypt.in", "userData", Direction.INPUT)
    encrypt_out = Pin("encrypt.out", "userData", Direction.OUTPUT)
    database_in = Pin("database.in", "userData", Direction.INPUT)

    encrypt_assignments: tuple = (
        ForwardingAssignment(in_pins=(encrypt_in.id,), out_pin=encrypt_out.id),
    )
    if encrypting:
        encrypt_assignments += (
            SetAssignment(out_pin=encrypt_out.id, labels=(ENCRYPTED,), term=TRUE),
        )

    behaviors = (
        Behavior(id="b.database", name="store records", in_pins=(database_in,),
                 out_pins=(), assignments=()),
        Behavior(id="b.encrypt", name="encrypt payload", in_pins=(encrypt_in,),
                 out_pins=(encrypt_out,), assignments=encrypt_assignments),
        Behavior(id="b.shop", name="process order", in_pins=(shop_in,),
                 out_pins=(shop_out,),
                 assignments=(ForwardingAssignment(in_pins=(shop_in.id,),
                                                   out_pin=shop_out.id),)),
        Behavior(id="b.user", name="submit order",
                 in_pins=(), out_pins=(user_out,),
                 assignments=(SetAssignment(out_pin=user_out.id,
                                            labels=(PERSONAL,), term=TRUE),)),
    )
    dictionary = DataDictionary(label_types=LABEL_TYPES, behaviors=behaviors)

    nodes = (
        Node(id="database", name="Database", kind=NodeKind.STORE,
             behavior="b.database", labels=(OFF_PREMISE,)),
        Node(id="encrypt", name="Encrypt", kind=NodeKind.PROCESS,
             behavior="b.encrypt", labels=(ON_PREMISE,)),
        Node(id="shop", name="Online Shop", kind=NodeKind.PROCESS,
             behavior="b.shop", labels=(ON_PREMISE,)),
        Node(id="user", name="User", kind=NodeKind.EXTERNAL,
             behavior="b.user", labels=(ON_PREMISE,)),
    )
    flows = (
        Flow(id="f1", name="userData", source="user", source_pin=user_out.id,
             target="shop", target_pin=shop_in.id),
        Flow(id="f2", name="userData", source="shop", source_pin=shop_out.id,
             target="encrypt", target_pin=encrypt_in.id),
        Flow(id="f3", name="userData", source="encrypt", source_pin=encrypt_out.id,
             target="database", target_pin=database_in.id),
    )
    diagram = DataFlowDiagram(dictionary=dictionary, nodes=nodes, flows=flows)
    report = validate_model(dictionary, diagram)
    assert report.ok, report.findings
    return dictionary, diagram


def main() -> None:
    FIXTURES.mkdir(exist_ok=True)
    for name, encrypting in (("onlineshop_unencrypted", False),
                             ("onlineshop_encrypted", True)):
        dictionary, diagram = online_shop(encrypting)
        path = FIXTURES / f"{name}.json"
        path.write_text(save_model(dictionary, diagram), encoding="utf-8")
        print(f"wrote {path}")


if __name__ == "__main__":
    main()
