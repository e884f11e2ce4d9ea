"""Command-line entry point: validate, analyze, convert, bench, plot, serve."""

from __future__ import annotations

import argparse
import logging
import os
import sys
from pathlib import Path

from .bench import DIMENSIONS, BenchConfig, run_bench
from .constraints import parse_constraints
from .core import ModelError, validate_model
from .flowgraph import diagram_to_dot, extract_tfgs, tfg_to_dot
from .model_io import load_document, save_model
from .pipeline import analyze_model, detect_format, load_model_file
from .plotting import plot_bench_csv

log = logging.getLogger("flowcheck")

EXIT_OK = 0
EXIT_VIOLATIONS = 1
EXIT_ERROR = 2


def _configure_logging() -> None:
    level_name = os.environ.get("FLOWCHECK_LOG", "warning").upper()
    logging.basicConfig(level=getattr(logging, level_name, logging.WARNING),
                        format="%(levelname)s %(name)s: %(message)s")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="flowcheck",
        description="Design-time data flow analysis for DFD and architecture models.")
    sub = parser.add_subparsers(dest="command", required=True)

    p_validate = sub.add_parser("validate", help="check model well-formedness")
    p_validate.add_argument("model", help="model file (.json, .adl, .puml)")

    p_analyze = sub.add_parser("analyze", help="run the never-flows analysis")
    p_analyze.add_argument("model", help="model file (.json, .adl, .puml)")
    p_analyze.add_argument("--constraints", required=True,
                           help="constraint file (.dfdc)")
    p_analyze.add_argument("--format", choices=("json", "text"), default="text")
    p_analyze.add_argument("--tfg-dot", metavar="DIR",
                           help="write one DOT file per extracted TFG")
    p_analyze.add_argument("--timings", action="store_true",
                           help="include stage timings in JSON output")

    p_convert = sub.add_parser("convert", help="convert between model formats")
    p_convert.add_argument("input", help="model file (.json, .adl, .puml)")
    p_convert.add_argument("--to", required=True, choices=("dfd-json", "dot"))
    p_convert.add_argument("--out", help="output file (default: stdout)")

    p_bench = sub.add_parser("bench", help="run the scalability harness")
    p_bench.add_argument("--dimension", required=True, choices=DIMENSIONS)
    p_bench.add_argument("--sizes", required=True, type=int, nargs="+")
    p_bench.add_argument("--repetitions", type=int, default=10)
    p_bench.add_argument("--out", required=True, help="CSV output path")
    p_bench.add_argument("--raw", action="store_true",
                         help="also write per-repetition timings")
    p_bench.add_argument("--plot", action="store_true",
                         help="render a log-log figure next to the CSV")

    p_plot = sub.add_parser("plot", help="plot a bench CSV")
    p_plot.add_argument("csv", help="bench CSV file")
    p_plot.add_argument("--out", help="figure path (default: CSV name with .png)")

    p_serve = sub.add_parser("serve", help="run the HTTP analysis service")
    p_serve.add_argument("--port", type=int, default=8000)
    p_serve.add_argument("--host", default="127.0.0.1")

    return parser


def _cmd_validate(args: argparse.Namespace) -> int:
    path = Path(args.model)
    data = path.read_bytes()
    fmt = detect_format(path, data)
    if fmt == "dfd-json":
        document = load_document(data, strict=False)
        dictionary, diagram = document.dictionary, document.diagram
    else:
        loaded = load_model_file(path)
        dictionary, diagram = loaded.dictionary, loaded.diagram
    report = validate_model(dictionary, diagram)
    for finding in report.findings:
        print(f"{finding.severity}: {finding.code} at {finding.element}: "
              f"{finding.message}")
    if report.ok:
        print(f"ok: {len(diagram.nodes)} nodes, {len(diagram.flows)} flows, "
              f"{len(report.findings)} finding(s)")
        return EXIT_OK
    return EXIT_ERROR


def _cmd_analyze(args: argparse.Namespace) -> int:
    loaded = load_model_file(args.model)
    for warning in loaded.warnings:
        print(f"warning: {warning}", file=sys.stderr)
    constraints = parse_constraints(Path(args.constraints).read_text(encoding="utf-8"))
    if not constraints:
        print("error: constraint file contains no constraints", file=sys.stderr)
        return EXIT_ERROR
    report = analyze_model(loaded, constraints)

    if args.tfg_dot:
        out_dir = Path(args.tfg_dot)
        out_dir.mkdir(parents=True, exist_ok=True)
        for index, tfg in enumerate(extract_tfgs(loaded.diagram).tfgs):
            dot = tfg_to_dot(tfg, loaded.diagram, name=f"tfg_{index}")
            (out_dir / f"tfg_{index:03d}.dot").write_text(dot, encoding="utf-8")

    if args.format == "json":
        sys.stdout.write(report.render_json(include_timings=args.timings))
    else:
        sys.stdout.write(report.render_text())
    return EXIT_VIOLATIONS if report.violation_total else EXIT_OK


def _cmd_convert(args: argparse.Namespace) -> int:
    loaded = load_model_file(args.input)
    for warning in loaded.warnings:
        print(f"warning: {warning}", file=sys.stderr)
    if args.to == "dfd-json":
        text = save_model(loaded.dictionary, loaded.diagram, loaded.traces or None)
    else:
        text = diagram_to_dot(loaded.diagram)
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    return EXIT_OK


def _cmd_bench(args: argparse.Namespace) -> int:
    config = BenchConfig(dimension=args.dimension, sizes=tuple(args.sizes),
                         repetitions=args.repetitions, output=Path(args.out),
                         raw_output=args.raw)
    rows = run_bench(config)
    for row in rows:
        if row.ok:
            print(f"{row.dimension} size={row.size}: median {row.median_ms:.2f} ms "
                  f"(min {row.min_ms:.2f}, max {row.max_ms:.2f})")
        else:
            print(f"{row.dimension} size={row.size}: FAILED ({row.error})")
    print(f"wrote {args.out}")
    if args.plot:
        figure = plot_bench_csv(args.out)
        print(f"wrote {figure}")
    return EXIT_OK if all(r.ok for r in rows) else EXIT_ERROR


def _cmd_plot(args: argparse.Namespace) -> int:
    figure = plot_bench_csv(args.csv, args.out)
    print(f"wrote {figure}")
    return EXIT_OK


def _cmd_serve(args: argparse.Namespace) -> int:
    import uvicorn

    from .service import create_app

    uvicorn.run(create_app(), host=args.host, port=args.port)
    return EXIT_OK


_COMMANDS = {
    "validate": _cmd_validate,
    "analyze": _cmd_analyze,
    "convert": _cmd_convert,
    "bench": _cmd_bench,
    "plot": _cmd_plot,
    "serve": _cmd_serve,
}


def main(argv: list[str] | None = None) -> int:
    _configure_logging()
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except (ModelError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
