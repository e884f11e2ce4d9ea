"""HTTP service endpoints and their status-code contract."""

import json

import pytest
from fastapi.testclient import TestClient

from flowcheck.model_io import save_model
from flowcheck.pipeline import analyze_model, load_model_data
from flowcheck.constraints import parse_constraints
from flowcheck.service import create_app

C1_TEXT = ("constraint C1: data Sensitivity.Personal, !Encryption.Encrypted "
           "never flows vertex Location.offPremise")


@pytest.fixture(scope="module")
def client():
    return TestClient(create_app())


def shop_document(shop) -> dict:
    dictionary, diagram = shop
    return json.loads(save_model(dictionary, diagram))


class TestHealth:
    def test_health_returns_200(self, client):
        response = client.get("/health")
        assert response.status_code == 200
        assert response.json() == {"status": "ok"}


class TestAnalyze:
    def test_online_shop_violation_report(self, client, shop_unencrypted):
        response = client.post("/api/v1/analyze", json={
            "model": shop_document(shop_unencrypted),
            "constraints": [C1_TEXT],
        })
        assert response.status_code == 200
        report = response.json()
        assert report["constraints"][0]["count"] == 1
        assert report["constraints"][0]["violations"][0]["vertex"] == "database"
        assert report["nodeViolations"] == {
            "database": True, "encrypt": False, "shop": False, "user": False}

    def test_byte_identical_with_cli_report(self, client, shop_unencrypted):
        dictionary, diagram = shop_unencrypted
        loaded = load_model_data(save_model(dictionary, diagram), "dfd-json")
        cli_bytes = analyze_model(
            loaded, parse_constraints(C1_TEXT)).render_json().encode("utf-8")
        response = client.post("/api/v1/analyze", json={
            "model": shop_document(shop_unencrypted),
            "constraints": [C1_TEXT],
        })
        assert response.content == cli_bytes

    def test_missing_model_is_400(self, client):
        response = client.post("/api/v1/analyze", json={"constraints": []})
        assert response.status_code == 400

    def test_malformed_json_body_is_400(self, client):
        response = client.post("/api/v1/analyze", content=b"{oops",
                               headers={"content-type": "application/json"})
        assert response.status_code == 400

    def test_bad_constraint_is_422(self, client, shop_unencrypted):
        response = client.post("/api/v1/analyze", json={
            "model": shop_document(shop_unencrypted),
            "constraints": ["constraint X: data never flows vertex A.B"],
        })
        assert response.status_code == 422
        assert "error" in response.json()

    def test_invalid_model_is_422(self, client, shop_unencrypted):
        document = shop_document(shop_unencrypted)
        document["dfd"]["nodes"][0]["behavior"] = "b.ghost"
        response = client.post("/api/v1/analyze", json={
            "model": document, "constraints": [C1_TEXT]})
        assert response.status_code == 422

    def test_stateless_repeated_requests(self, client, shop_encrypted):
        body = {"model": shop_document(shop_encrypted), "constraints": [C1_TEXT]}
        first = client.post("/api/v1/analyze", json=body)
        second = client.post("/api/v1/analyze", json=body)
        assert first.content == second.content


class TestValidate:
    def test_clean_model(self, client, shop_encrypted):
        response = client.post("/api/v1/validate", json=shop_document(shop_encrypted))
        assert response.status_code == 200
        assert response.json() == {"findings": []}

    def test_findings_reported(self, client, shop_encrypted):
        document = shop_document(shop_encrypted)
        document["dfd"]["nodes"][0]["behavior"] = "b.ghost"
        response = client.post("/api/v1/validate", json=document)
        assert response.status_code == 200
        codes = {f["code"] for f in response.json()["findings"]}
        assert "unknown-behavior" in codes


class TestCheckAssignment:
    def test_misspelled_keyword_diagnostic(self, client):
        response = client.post("/api/v1/check-assignment", json={"text": "forwrd in1"})
        assert response.status_code == 200
        diagnostics = response.json()["diagnostics"]
        assert diagnostics[0]["column"] == 1
        assert "unknown keyword" in diagnostics[0]["message"]

    def test_valid_assignment_clean_with_compiled_form(self, client):
        response = client.post("/api/v1/check-assignment", json={
            "text": "forward userData\nset Encryption.Encrypted if TRUE",
            "inputs": ["userData"],
            "labelTypes": {"Encryption": ["Encrypted"]},
        })
        payload = response.json()
        assert payload["diagnostics"] == []
        assert payload["compiled"] == [
            {"kind": "forward", "inputs": ["userData"]},
            {"kind": "set",
             "labels": [{"labelType": "Encryption", "label": "Encrypted"}],
             "term": {"op": "true"}},
        ]

    def test_syntax_error_omits_compiled_form(self, client):
        response = client.post("/api/v1/check-assignment", json={"text": "forwrd x"})
        assert "compiled" not in response.json()

    def test_context_mismatch_reported(self, client):
        response = client.post("/api/v1/check-assignment", json={
            "text": "forward ghost", "inputs": ["userData"]})
        messages = [d["message"] for d in response.json()["diagnostics"]]
        assert messages == ["unknown incoming data 'ghost'"]

    def test_wrong_type_is_400(self, client):
        response = client.post("/api/v1/check-assignment", json={"text": 5})
        assert response.status_code == 400
