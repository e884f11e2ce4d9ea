"""Stateless HTTP analysis service backing the web editor.

Every request is self-contained: the model document travels in the body,
nothing is cached between requests.  Structurally invalid bodies get 400
with diagnostics; bodies that parse but cannot be analyzed get 422 with the
failure trace.  The analyze endpoint returns exactly the bytes the CLI
prints for the same inputs.
"""

from __future__ import annotations

import json

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse, Response

from .assignments import (
    AssignmentSyntaxError,
    check_assignment_text,
    compile_assignment_text,
)
from .constraints import parse_constraints
from .core import ModelError, validate_model
from .model_io import load_document
from .pipeline import LoadedModel, analyze_model

API_PREFIX = "/api/v1"


def _bad_request(message: str, diagnostics: list | None = None) -> JSONResponse:
    return JSONResponse(status_code=400,
                        content={"error": message, "diagnostics": diagnostics or []})


def _unprocessable(message: str) -> JSONResponse:
    return JSONResponse(status_code=422, content={"error": message})


async def _read_json_object(request: Request) -> dict | JSONResponse:
    try:
        body = await request.json()
    except json.JSONDecodeError as exc:
        return _bad_request(f"request body is not valid JSON: {exc}")
    if not isinstance(body, dict):
        return _bad_request("request body must be a JSON object")
    return body


def create_app() -> FastAPI:
    app = FastAPI(title="flowcheck analysis service")

    @app.get("/health")
    async def health() -> dict:
        return {"status": "ok"}

    @app.post(f"{API_PREFIX}/validate")
    async def validate(request: Request):
        body = await _read_json_object(request)
        if isinstance(body, Response):
            return body
        try:
            document = load_document(json.dumps(body), strict=False)
        except ModelError as exc:
            return _unprocessable(str(exc))
        report = validate_model(document.dictionary, document.diagram)
        return {
            "findings": [
                {"severity": f.severity, "code": f.code,
                 "element": f.element, "message": f.message}
                for f in report.findings
            ]
        }

    @app.post(f"{API_PREFIX}/analyze")
    async def analyze(request: Request):
        body = await _read_json_object(request)
        if isinstance(body, Response):
            return body
        if "model" not in body or not isinstance(body["model"], dict):
            return _bad_request("'model' must be a model document object")
        constraints_raw = body.get("constraints")
        if not isinstance(constraints_raw, list) or not all(
                isinstance(c, str) for c in constraints_raw):
            return _bad_request("'constraints' must be an array of strings")

        try:
            document = load_document(json.dumps(body["model"]))
            constraints = []
            for text in constraints_raw:
                constraints.extend(parse_constraints(text))
            loaded = LoadedModel(document.dictionary, document.diagram,
                                 dict(document.traces))
            report = analyze_model(loaded, constraints)
        except ModelError as exc:
            return _unprocessable(str(exc))
        return Response(content=report.render_json(),
                        media_type="application/json")

    @app.post(f"{API_PREFIX}/check-assignment")
    async def check_assignment(request: Request):
        body = await _read_json_object(request)
        if isinstance(body, Response):
            return body
        text = body.get("text")
        if not isinstance(text, str):
            return _bad_request("'text' must be a string")
        inputs = body.get("inputs")
        if inputs is not None and (not isinstance(inputs, list) or not all(
                isinstance(i, str) for i in inputs)):
            return _bad_request("'inputs' must be an array of strings")
        label_types = body.get("labelTypes")
        if label_types is not None and not isinstance(label_types, dict):
            return _bad_request("'labelTypes' must be an object")
        diagnostics = check_assignment_text(text, inputs, label_types)
        result: dict = {
            "diagnostics": [
                {"line": d.line, "column": d.column, "message": d.message}
                for d in diagnostics
            ]
        }
        # The editor installs assignments from this compiled, name-based
        # form so that no parsing logic lives client-side.
        try:
            result["compiled"] = compile_assignment_text(text)
        except AssignmentSyntaxError:
            pass
        return result

    return app
