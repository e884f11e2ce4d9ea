"""flowcheck: design-time data flow analysis for DFD and architecture models."""

from .adl import ArchitectureModel, TraceMap, parse_adl, transform_to_dfd
from .constraints import (
    Constraint,
    ConstraintBuilder,
    Violation,
    execute,
    execute_all,
    parse_constraint,
    parse_constraints,
)
from .core import (
    Behavior,
    DataDictionary,
    DataFlowDiagram,
    Flow,
    ForwardingAssignment,
    Label,
    LabelType,
    Node,
    NodeKind,
    Pin,
    SetAssignment,
    ValidationReport,
    evaluate_behavior,
    evaluate_term,
    validate_model,
)
from .flowgraph import FlowGraphCollection, TransposeFlowGraph, extract_tfgs, identify_sinks
from .model_io import import_plantuml, load_document, load_model, save_model
from .pipeline import AnalysisReport, analyze_model, load_model_data, load_model_file
from .propagation import PropagatedFlowGraph, propagate, propagate_all

__version__ = "0.1.0"

__all__ = [
    "AnalysisReport",
    "ArchitectureModel",
    "Behavior",
    "Constraint",
    "ConstraintBuilder",
    "DataDictionary",
    "DataFlowDiagram",
    "Flow",
    "FlowGraphCollection",
    "ForwardingAssignment",
    "Label",
    "LabelType",
    "Node",
    "NodeKind",
    "Pin",
    "PropagatedFlowGraph",
    "SetAssignment",
    "TraceMap",
    "TransposeFlowGraph",
    "ValidationReport",
    "Violation",
    "analyze_model",
    "evaluate_behavior",
    "evaluate_term",
    "execute",
    "execute_all",
    "extract_tfgs",
    "identify_sinks",
    "import_plantuml",
    "load_document",
    "load_model",
    "load_model_data",
    "load_model_file",
    "parse_adl",
    "parse_constraint",
    "parse_constraints",
    "propagate",
    "propagate_all",
    "save_model",
    "transform_to_dfd",
    "validate_model",
]
