"""Execution-based verification, rewards and data curation for code transpilation."""

from transpile_harness.core import (
    CorrectnessVerdict,
    LanguageId,
    SourceProgram,
    TestCase,
    TranspilationTask,
    VerdictClass,
    behaviorally_equivalent,
    classify,
    is_valid_result,
)

__version__ = "0.1.0"

__all__ = [
    "CorrectnessVerdict",
    "LanguageId",
    "SourceProgram",
    "TestCase",
    "TranspilationTask",
    "VerdictClass",
    "behaviorally_equivalent",
    "classify",
    "is_valid_result",
]
