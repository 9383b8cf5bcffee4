"""Execution-based rejection sampling of distillation pairs."""

from __future__ import annotations

import json
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Iterable, Mapping, Sequence

from transpile_harness.core import LanguageId, TranspilationTask, VerdictClass
from transpile_harness.model_client import ModelClient, ModelClientError
from transpile_harness.pipeline.prompts import build_prompt, parse_response, prompt_messages
from transpile_harness.sandbox import ExecutionLimits, Sandbox
from transpile_harness.verifier import CandidateOrigin, CandidateProgram, EvaluationRecord, verify

log = logging.getLogger(__name__)


class PipelineError(RuntimeError):
    """The model could not be reached; distinct from 'no correct sample'."""


@dataclass(frozen=True)
class DistillationPair:
    prompt: str
    response: str
    task_id: str
    target_language: LanguageId

    def to_dict(self) -> dict[str, str]:
        return {
            "prompt": self.prompt,
            "response": self.response,
            "task_id": self.task_id,
            "target_language": self.target_language.value,
        }

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "DistillationPair":
        return cls(
            prompt=data["prompt"],
            response=data["response"],
            task_id=str(data["task_id"]),
            target_language=LanguageId.parse(data["target_language"]),
        )


@dataclass
class SampleOutcome:
    task_id: str
    pair: DistillationPair | None = None
    model_calls: int = 0
    records: list[EvaluationRecord] = field(default_factory=list)
    error: str | None = None


def rejection_sample_detailed(
    task: TranspilationTask,
    model: ModelClient,
    attempts: int,
    sandbox: Sandbox | None = None,
    limits: ExecutionLimits | None = None,
    require_format: bool = False,
) -> SampleOutcome:
    if attempts < 1:
        raise ValueError("attempts must be positive")
    sandbox = sandbox or Sandbox()
    system, user = prompt_messages(task)
    outcome = SampleOutcome(task.task_id)
    for attempt in range(attempts):
        try:
            raw = model.complete(system, user)
        except ModelClientError as exc:
            raise PipelineError(f"task {task.task_id}: model request failed: {exc}") from exc
        outcome.model_calls += 1
        parsed = parse_response(raw, task.target_language)
        candidate = CandidateProgram(
            code=parsed.code or "",
            language=task.target_language,
            origin=CandidateOrigin.MODEL_RESPONSE,
            rollout_id=f"{task.task_id}#{attempt}",
        )
        record = verify(
            task, candidate, limits, sandbox,
            candidate_index=attempt, format_ok=parsed.format_ok,
        )
        outcome.records.append(record)
        accepted = record.verdict.verdict_class is VerdictClass.CORRECT
        if accepted and (parsed.format_ok or not require_format):
            outcome.pair = DistillationPair(
                prompt=build_prompt(task),
                response=raw,
                task_id=task.task_id,
                target_language=task.target_language,
            )
            log.info("task %s: accepted on attempt %d", task.task_id, attempt + 1)
            return outcome
    log.info("task %s: no correct sample in %d attempts", task.task_id, attempts)
    return outcome


def rejection_sample(
    task: TranspilationTask,
    model: ModelClient,
    attempts: int,
    sandbox: Sandbox | None = None,
    limits: ExecutionLimits | None = None,
    require_format: bool = False,
) -> DistillationPair | None:
    """Query the model up to ``attempts`` times and keep the first response
    whose program verifies correct. Raises PipelineError when the model
    itself is unreachable."""
    return rejection_sample_detailed(task, model, attempts, sandbox, limits, require_format).pair


@dataclass
class DistillStats:
    tasks: int = 0
    kept: int = 0
    missed: int = 0
    errors: int = 0
    model_calls: int = 0

    def to_dict(self) -> dict[str, int]:
        return dict(vars(self))


def distill(
    tasks: Sequence[TranspilationTask],
    model: ModelClient,
    attempts: int,
    out_path: str,
    sandbox: Sandbox | None = None,
    limits: ExecutionLimits | None = None,
    parallel_requests: int = 4,
    require_format: bool = False,
) -> DistillStats:
    """Rejection-sample every task and append kept pairs to ``out_path``.

    Tasks run concurrently up to ``parallel_requests``; the single writer
    emits pairs in task order so reruns produce identical files.
    """
    sandbox = sandbox or Sandbox()

    def one(task: TranspilationTask) -> SampleOutcome:
        try:
            return rejection_sample_detailed(task, model, attempts, sandbox, limits, require_format)
        except PipelineError as exc:
            log.error("%s", exc)
            return SampleOutcome(task.task_id, error=str(exc))

    stats = DistillStats(tasks=len(tasks))
    with ThreadPoolExecutor(max_workers=max(1, parallel_requests)) as pool, open(
        out_path, "a", encoding="utf-8"
    ) as fh:
        for outcome in pool.map(one, tasks):
            stats.model_calls += outcome.model_calls
            if outcome.error:
                stats.errors += 1
            elif outcome.pair is None:
                stats.missed += 1
            else:
                stats.kept += 1
                fh.write(json.dumps(outcome.pair.to_dict(), ensure_ascii=False, sort_keys=True) + "\n")
                fh.flush()
    return stats


def replay(
    pairs: Iterable[DistillationPair],
    tasks: Mapping[str, TranspilationTask],
    sandbox: Sandbox | None = None,
    limits: ExecutionLimits | None = None,
) -> list[EvaluationRecord]:
    """Re-verify stored pairs against their tasks."""
    sandbox = sandbox or Sandbox()
    records = []
    for i, pair in enumerate(pairs):
        task = tasks[pair.task_id]
        parsed = parse_response(pair.response, pair.target_language)
        candidate = CandidateProgram(parsed.code or "", pair.target_language, CandidateOrigin.MODEL_RESPONSE)
        records.append(verify(task, candidate, limits, sandbox, candidate_index=i, format_ok=parsed.format_ok))
    return records
