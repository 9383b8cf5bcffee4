from transpile_harness.sandbox.compare import ComparisonPolicy, normalize_output, outputs_match
from transpile_harness.sandbox.executor import (
    KEEP,
    BuildHandle,
    ExecutionLimits,
    ExecutionReport,
    ExecutionStatus,
    FilterDecision,
    Sandbox,
    SandboxError,
)
from transpile_harness.sandbox.runtimes import (
    ProbeResult,
    RuntimeSpec,
    default_runtimes,
    load_registry,
    probe,
    probe_all,
)

__all__ = [
    "KEEP",
    "BuildHandle",
    "ComparisonPolicy",
    "ExecutionLimits",
    "ExecutionReport",
    "ExecutionStatus",
    "FilterDecision",
    "ProbeResult",
    "RuntimeSpec",
    "Sandbox",
    "SandboxError",
    "default_runtimes",
    "load_registry",
    "normalize_output",
    "outputs_match",
    "probe",
    "probe_all",
]
