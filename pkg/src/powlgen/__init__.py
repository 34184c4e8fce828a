"""Sound process model generation from natural-language descriptions.

The package is organized bottom-up: ``model`` defines the partially ordered
workflow language and its validation, ``semantics`` enumerates behavior,
``dsl`` interprets and renders construction scripts, ``translate`` exports
Petri nets and BPMN, ``conformance`` scores models against logs, ``llm``
drives chat models through the generation protocol, ``bench`` runs the
evaluation harness, and ``service`` exposes the HTTP studio API.
"""

from .model import (
    Activity,
    Diagnostic,
    DiagnosticError,
    Loop,
    PartialOrder,
    PowlNode,
    Severity,
    Silent,
    ValidationReport,
    Xor,
    auto_fix_reuse,
    canonicalize,
    model_from_dict,
    model_to_dict,
    structural_equal,
    validate,
)

__version__ = "0.1.0"

__all__ = [
    "Activity",
    "Diagnostic",
    "DiagnosticError",
    "Loop",
    "PartialOrder",
    "PowlNode",
    "Severity",
    "Silent",
    "ValidationReport",
    "Xor",
    "auto_fix_reuse",
    "canonicalize",
    "model_from_dict",
    "model_to_dict",
    "structural_equal",
    "validate",
    "__version__",
]
