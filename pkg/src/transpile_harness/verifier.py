"""Run a candidate over a task's tests and score the outcome."""

from __future__ import annotations

import enum
import math
from collections import Counter, defaultdict
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Iterable, Mapping, Sequence

from transpile_harness.core import (
    CorrectnessVerdict,
    LanguageId,
    TranspilationTask,
    VerdictClass,
    classify,
)
from transpile_harness.sandbox import (
    ComparisonPolicy,
    ExecutionLimits,
    ExecutionReport,
    ExecutionStatus,
    Sandbox,
    SandboxError,
    outputs_match,
)


class CandidateOrigin(str, enum.Enum):
    MODEL_RESPONSE = "model-response"
    ORACLE = "oracle"
    FIXTURE = "fixture"


@dataclass(frozen=True)
class CandidateProgram:
    code: str
    language: LanguageId
    origin: CandidateOrigin = CandidateOrigin.MODEL_RESPONSE
    rollout_id: str | None = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "language", LanguageId.parse(self.language))
        object.__setattr__(self, "origin", CandidateOrigin(self.origin))


@dataclass(frozen=True)
class EvaluationRecord:
    task_id: str
    candidate_index: int
    verdict: CorrectnessVerdict
    per_test_reports: tuple[ExecutionReport, ...]
    format_ok: bool = True
    language: LanguageId | None = None
    notes: tuple[str, ...] = ()
    rollout_id: str | None = None
    trial: int = 0

    @property
    def language_ok(self) -> bool:
        return "language-mismatch" not in self.notes

    @property
    def valid(self) -> bool:
        """Valid transpilation result on a curated task (source passes all)."""
        return self.language_ok and self.verdict.verdict_class is VerdictClass.CORRECT

    def to_dict(self) -> dict[str, Any]:
        return {
            "task_id": self.task_id,
            "candidate_index": self.candidate_index,
            "trial": self.trial,
            "rollout_id": self.rollout_id,
            "language": self.language.value if self.language else None,
            "verdict": self.verdict.to_dict(),
            "format_ok": self.format_ok,
            "notes": list(self.notes),
            "per_test_reports": [r.to_dict() for r in self.per_test_reports],
        }

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "EvaluationRecord":
        lang = data.get("language")
        return cls(
            task_id=str(data["task_id"]),
            candidate_index=int(data.get("candidate_index", 0)),
            verdict=CorrectnessVerdict.from_dict(data["verdict"]),
            per_test_reports=tuple(ExecutionReport.from_dict(r) for r in data.get("per_test_reports", [])),
            format_ok=bool(data.get("format_ok", True)),
            language=LanguageId.parse(lang) if lang else None,
            notes=tuple(data.get("notes", ())),
            rollout_id=data.get("rollout_id"),
            trial=int(data.get("trial", 0)),
        )


def verify(
    task: TranspilationTask,
    candidate: CandidateProgram,
    limits: ExecutionLimits | None = None,
    sandbox: Sandbox | None = None,
    *,
    candidate_index: int = 0,
    format_ok: bool = True,
    policy: ComparisonPolicy | None = None,
    trial: int = 0,
) -> EvaluationRecord:
    """Execute ``candidate`` on every test of ``task``.

    Sandbox problems are recorded per test and never raised. A compile error
    short-circuits to an all-false pass vector with one diagnostic report.
    """
    sandbox = sandbox or Sandbox()
    policy = sandbox.policy if policy is None else ComparisonPolicy(policy)
    n = len(task.tests)
    base = dict(
        task_id=task.task_id,
        candidate_index=candidate_index,
        format_ok=format_ok,
        language=candidate.language,
        rollout_id=candidate.rollout_id,
        trial=trial,
    )

    if candidate.language != task.target_language:
        return EvaluationRecord(
            verdict=classify([False] * n),
            per_test_reports=(),
            notes=("language-mismatch",),
            **base,
        )
    if not candidate.code.strip():
        return EvaluationRecord(
            verdict=classify([False] * n),
            per_test_reports=(),
            notes=("no-code",),
            **base,
        )

    try:
        handle = sandbox.prepare(
            candidate.code, candidate.language, limits,
            task_id=task.task_id, candidate_index=candidate_index,
        )
    except SandboxError as exc:
        report = ExecutionReport(ExecutionStatus.SANDBOX_ERROR, note=str(exc))
        return EvaluationRecord(
            verdict=classify([False] * n),
            per_test_reports=(report,) * n,
            notes=("sandbox-error",),
            **base,
        )
    if isinstance(handle, ExecutionReport):
        return EvaluationRecord(
            verdict=classify([False] * n),
            per_test_reports=(handle,),
            notes=("compile-error",),
            **base,
        )

    reports = []
    with handle:
        for test in task.tests:
            reports.append(sandbox.run_one(handle, test, limits))
    passes = [
        r.status is ExecutionStatus.OK and outputs_match(r.stdout, t.expected_output, policy)
        for r, t in zip(reports, task.tests)
    ]
    notes = ("sandbox-error",) if any(r.status is ExecutionStatus.SANDBOX_ERROR for r in reports) else ()
    return EvaluationRecord(verdict=classify(passes), per_test_reports=tuple(reports), notes=notes, **base)


@dataclass(frozen=True)
class VerifyJob:
    task: TranspilationTask
    candidate: CandidateProgram
    candidate_index: int = 0
    format_ok: bool = True
    trial: int = 0


def verify_many(
    jobs: Sequence[VerifyJob],
    limits: ExecutionLimits | None = None,
    sandbox: Sandbox | None = None,
) -> list[EvaluationRecord]:
    """Fan candidates out over the sandbox pool; tests within one candidate
    run sequentially on a shared build."""
    sandbox = sandbox or Sandbox()
    return sandbox.map(
        lambda job: verify(
            job.task, job.candidate, limits, sandbox,
            candidate_index=job.candidate_index, format_ok=job.format_ok, trial=job.trial,
        ),
        jobs,
    )


def _check_pass_args(n: int, c: int, k: int) -> None:
    for name, value in (("n", n), ("c", c), ("k", k)):
        if isinstance(value, bool) or not isinstance(value, int):
            raise ValueError(f"{name} must be an integer, got {value!r}")
    if not 0 <= c <= n:
        raise ValueError(f"need 0 <= c <= n, got c={c}, n={n}")
    if not 1 <= k <= n:
        raise ValueError(f"need 1 <= k <= n, got k={k}, n={n}")


def pass_at_k_exact(n: int, c: int, k: int) -> Fraction:
    _check_pass_args(n, c, k)
    return 1 - Fraction(math.comb(n - c, k), math.comb(n, k))


def pass_at_k(n: int, c: int, k: int) -> float:
    """Unbiased pass@k estimate, 1 - C(n-c, k) / C(n, k).

    Integer binomials and an exact rational keep this free of overflow and
    cancellation for any n.
    """
    return float(pass_at_k_exact(n, c, k))


def pass_at_1_repeated(trials: Sequence[Sequence[bool]]) -> float:
    """Mean over trials of each trial's valid-task rate."""
    if not trials:
        raise ValueError("need at least one trial")
    sizes = {len(t) for t in trials}
    if 0 in sizes:
        raise ValueError("a trial has no tasks")
    if len(sizes) != 1:
        raise ValueError(f"trials cover different task counts: {sorted(sizes)}")
    rates = [Fraction(sum(bool(v) for v in t), len(t)) for t in trials]
    return float(sum(rates) / len(rates))


def summarize(records: Iterable[EvaluationRecord], tasks: Mapping[str, TranspilationTask] | None = None) -> dict[str, Any]:
    """Per-target-language Pass@1 plus a class histogram.

    With several trials per task, Pass@1 is the mean over trials. Language is
    taken from the task when available, else from the record.
    """
    records = list(records)
    by_lang_trial: dict[str, dict[int, list[bool]]] = defaultdict(lambda: defaultdict(list))
    hist: Counter[str] = Counter()
    for rec in records:
        if tasks is not None and rec.task_id in tasks:
            lang = tasks[rec.task_id].target_language.value
        else:
            lang = rec.language.value if rec.language else "unknown"
        by_lang_trial[lang][rec.trial].append(rec.valid)
        hist[rec.verdict.verdict_class.value] += 1

    per_language = {}
    all_trials: dict[int, list[bool]] = defaultdict(list)
    for lang in sorted(by_lang_trial):
        trials = by_lang_trial[lang]
        per_language[lang] = {
            "pass_at_1": _mean_over_trials(trials),
            "n_tasks": max(len(v) for v in trials.values()),
        }
        for trial, values in trials.items():
            all_trials[trial].extend(values)
    overall = {
        "pass_at_1": _mean_over_trials(all_trials) if all_trials else 0.0,
        "n_tasks": max((len(v) for v in all_trials.values()), default=0),
    }
    return {
        "per_language": per_language,
        "overall": overall,
        "class_histogram": {c.value: hist.get(c.value, 0) for c in VerdictClass},
        "n_records": len(records),
    }


def _mean_over_trials(trials: Mapping[int, list[bool]]) -> float:
    groups = [v for _, v in sorted(trials.items())]
    if len({len(g) for g in groups}) == 1:
        return pass_at_1_repeated(groups)
    # unequal trial sizes: fall back to the pooled rate
    flat = [x for g in groups for x in g]
    return sum(flat) / len(flat)
