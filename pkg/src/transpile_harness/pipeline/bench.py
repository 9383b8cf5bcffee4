"""Benchmark and pair builders.

py2others   Python sources sampled by class-diversity weight, an equal
            number of tasks per target language.
others2all  verified oracle programs paired with every other language.
any2any     ordered cross-language pairs within each source-problem group.
"""

from __future__ import annotations

import dataclasses
import hashlib
import logging
from collections import defaultdict
from dataclasses import dataclass
from typing import Any, Iterable, Mapping, Sequence

from transpile_harness.core import (
    CorrectnessVerdict,
    LanguageId,
    SourceProgram,
    TestCase,
    TranspilationTask,
    VerdictClass,
)
from transpile_harness.pipeline.sampling import (
    WeightedPool,
    sampling_weights,
    weighted_sample_without_replacement,
)

log = logging.getLogger(__name__)

PY2OTHERS = "py2others"
OTHERS2ALL = "others2all"
MIN_SOURCE_LINES = 50


class BenchmarkError(ValueError):
    pass


def derive_seed(seed: int, label: str) -> int:
    digest = hashlib.sha256(f"{seed}:{label}".encode()).digest()
    return int.from_bytes(digest[:8], "big")


def non_python_languages() -> list[LanguageId]:
    return [lang for lang in LanguageId if lang is not LanguageId.PYTHON]


def build_py2others_bench(
    pool: Sequence[TranspilationTask],
    per_language: int,
    *,
    exclude: Iterable[str] = (),
    min_lines: int = MIN_SOURCE_LINES,
    seed: int = 0,
    targets: Sequence[LanguageId] | None = None,
) -> list[TranspilationTask]:
    """Sample ``per_language`` tasks for every target language.

    Weights are computed over the whole supplied pool; candidates are Python
    sources with more than ``min_lines`` non-blank lines whose task id is not
    excluded. Each language is sampled with its own derived seed.
    """
    if per_language < 1:
        raise BenchmarkError("per_language must be positive")
    targets = list(targets) if targets is not None else non_python_languages()
    excluded = set(exclude)
    weights = sampling_weights(pool)

    by_target: dict[LanguageId, list[tuple[TranspilationTask, int]]] = defaultdict(list)
    for task, weight in zip(pool, weights):
        if task.source_language is not LanguageId.PYTHON:
            continue
        if task.task_id in excluded or task.source.line_count() <= min_lines:
            continue
        by_target[task.target_language].append((task, weight))

    out: list[TranspilationTask] = []
    for lang in targets:
        entries = by_target.get(lang, [])
        candidates = WeightedPool.of([t for t, _ in entries], [w for _, w in entries])
        available = candidates.positive_count()
        if available < per_language:
            raise BenchmarkError(
                f"not enough eligible tasks for target {lang.value}: need {per_language}, have {available}"
            )
        chosen = weighted_sample_without_replacement(candidates, per_language, derive_seed(seed, lang.value))
        out.extend(dataclasses.replace(t, suite=PY2OTHERS) for t in chosen)
    return out


@dataclass(frozen=True)
class OracleProgram:
    """A translated program together with the tests it was verified on."""

    oracle_id: str
    program: SourceProgram
    tests: tuple[TestCase, ...]
    verdict: CorrectnessVerdict | None = None

    def is_verified(self) -> bool:
        return (
            self.verdict is not None
            and self.verdict.verdict_class is VerdictClass.CORRECT
            and len(self.verdict.pass_vector) == len(self.tests)
        )

    def to_dict(self) -> dict[str, Any]:
        return {
            "oracle_id": self.oracle_id,
            "program": self.program.to_dict(),
            "tests": [t.to_dict() for t in self.tests],
            "verdict": self.verdict.to_dict() if self.verdict else None,
        }

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "OracleProgram":
        verdict = data.get("verdict")
        return cls(
            oracle_id=str(data["oracle_id"]),
            program=SourceProgram.from_dict(data["program"]),
            tests=tuple(TestCase.from_dict(t) for t in data["tests"]),
            verdict=CorrectnessVerdict.from_dict(verdict) if verdict else None,
        )


def build_others2all_bench(
    oracles: Sequence[OracleProgram],
    targets: Sequence[LanguageId] | None = None,
) -> list[TranspilationTask]:
    """Pair every oracle with every target except its own language."""
    targets = list(targets) if targets is not None else list(LanguageId)
    unverified = [o.oracle_id for o in oracles if not o.is_verified()]
    if unverified:
        shown = ", ".join(unverified[:10]) + (" ..." if len(unverified) > 10 else "")
        raise BenchmarkError(f"{len(unverified)} oracle program(s) not verified correct: {shown}")

    seen: set[str] = set()
    out: list[TranspilationTask] = []
    for oracle in oracles:
        if oracle.oracle_id in seen:
            log.warning("duplicate oracle id %s dropped", oracle.oracle_id)
            continue
        seen.add(oracle.oracle_id)
        for lang in targets:
            if lang is oracle.program.language:
                continue
            out.append(
                TranspilationTask(
                    task_id=f"{oracle.oracle_id}__to__{lang.value}",
                    source=oracle.program,
                    tests=oracle.tests,
                    target_language=lang,
                    suite=OTHERS2ALL,
                )
            )
    return out


def build_any2any_pairs(groups: Mapping[str, Sequence[SourceProgram]]) -> list[dict[str, Any]]:
    """All ordered (a, b) pairs of distinct-language members per group."""
    rows = []
    for group_id in sorted(groups):
        members = list(groups[group_id])
        for i, a in enumerate(members):
            for j, b in enumerate(members):
                if i == j or a.language is b.language:
                    continue
                rows.append(
                    {
                        "group_id": group_id,
                        "source_language": a.language.value,
                        "target_language": b.language.value,
                        "source_code": a.code,
                        "target_code": b.code,
                    }
                )
    return rows


def group_by_problem(
    pairs: Iterable,
    tasks: Mapping[str, TranspilationTask],
    include_sources: bool = True,
) -> dict[str, list[SourceProgram]]:
    """Group verified distillation outputs by their source problem.

    Each group holds the original source (optional) plus the code extracted
    from every pair translating that problem.
    """
    from transpile_harness.pipeline.prompts import parse_response

    groups: dict[str, dict[LanguageId, SourceProgram]] = defaultdict(dict)
    for pair in pairs:
        task = tasks[pair.task_id]
        key = task.source.problem_id or task.task_id
        if include_sources:
            groups[key].setdefault(task.source_language, task.source)
        code = parse_response(pair.response, pair.target_language).code
        if code:
            groups[key].setdefault(
                pair.target_language,
                SourceProgram(code=code, language=pair.target_language, problem_id=key,
                              problem_class=task.source.problem_class),
            )
    return {k: list(v.values()) for k, v in groups.items()}
