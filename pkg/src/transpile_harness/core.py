"""Task, test-case and verdict types shared by every other module.

Everything here is immutable and pure; the sandbox, verifier, reward engine
and curation pipeline all consume these objects.
"""

from __future__ import annotations

import enum
import json
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Iterable, Iterator, Mapping, Sequence


class LanguageId(str, enum.Enum):
    PYTHON = "python"
    CPP = "cpp"
    CSHARP = "csharp"
    JAVA = "java"
    JAVASCRIPT = "javascript"
    GO = "go"
    PERL = "perl"
    RUBY = "ruby"
    RUST = "rust"
    HASKELL = "haskell"

    @property
    def display_name(self) -> str:
        return _DISPLAY_NAMES[self]

    @property
    def fence_tag(self) -> str:
        """Tag used on markdown code fences for this language."""
        return self.value

    @classmethod
    def parse(cls, text: str) -> "LanguageId":
        """Resolve a language from its id, display name or a common alias."""
        if isinstance(text, LanguageId):
            return text
        key = str(text).strip().lower()
        try:
            return _ALIASES[key]
        except KeyError:
            raise ValueError(f"unknown language: {text!r}") from None


_DISPLAY_NAMES = {
    LanguageId.PYTHON: "Python",
    LanguageId.CPP: "C++",
    LanguageId.CSHARP: "C#",
    LanguageId.JAVA: "Java",
    LanguageId.JAVASCRIPT: "JavaScript",
    LanguageId.GO: "Golang",
    LanguageId.PERL: "Perl",
    LanguageId.RUBY: "Ruby",
    LanguageId.RUST: "Rust",
    LanguageId.HASKELL: "Haskell",
}

_ALIASES: dict[str, LanguageId] = {}
for _lang in LanguageId:
    _ALIASES[_lang.value] = _lang
    _ALIASES[_DISPLAY_NAMES[_lang].lower()] = _lang
_ALIASES.update(
    {
        "py": LanguageId.PYTHON,
        "python3": LanguageId.PYTHON,
        "c++": LanguageId.CPP,
        "cxx": LanguageId.CPP,
        "cc": LanguageId.CPP,
        "c#": LanguageId.CSHARP,
        "cs": LanguageId.CSHARP,
        "js": LanguageId.JAVASCRIPT,
        "node": LanguageId.JAVASCRIPT,
        "golang": LanguageId.GO,
        "pl": LanguageId.PERL,
        "rb": LanguageId.RUBY,
        "rs": LanguageId.RUST,
        "hs": LanguageId.HASKELL,
    }
)


@dataclass(frozen=True)
class TestCase:
    """One (stdin, expected stdout) pair, stored verbatim."""

    __test__ = False  # keep pytest from collecting this class

    input: str
    expected_output: str

    def to_dict(self) -> dict[str, str]:
        return {"input": self.input, "expected_output": self.expected_output}

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "TestCase":
        return cls(input=data["input"], expected_output=data["expected_output"])


@dataclass(frozen=True)
class SourceProgram:
    code: str
    language: LanguageId
    problem_id: str = ""
    problem_class: str | None = None
    metadata: Mapping[str, str] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if not self.code:
            raise ValueError("program code must be non-empty")
        object.__setattr__(self, "language", LanguageId.parse(self.language))

    def line_count(self) -> int:
        """Number of non-blank source lines."""
        return sum(1 for line in self.code.splitlines() if line.strip())

    def to_dict(self) -> dict[str, Any]:
        out: dict[str, Any] = {
            "code": self.code,
            "language": self.language.value,
            "problem_id": self.problem_id,
            "problem_class": self.problem_class,
        }
        if self.metadata:
            out["metadata"] = dict(self.metadata)
        return out

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "SourceProgram":
        return cls(
            code=data["code"],
            language=LanguageId.parse(data["language"]),
            problem_id=str(data.get("problem_id", "")),
            problem_class=data.get("problem_class"),
            metadata=dict(data.get("metadata") or {}),
        )


@dataclass(frozen=True)
class TranspilationTask:
    task_id: str
    source: SourceProgram
    tests: tuple[TestCase, ...]
    target_language: LanguageId
    suite: str | None = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "tests", tuple(self.tests))
        object.__setattr__(self, "target_language", LanguageId.parse(self.target_language))
        if not self.tests:
            raise ValueError(f"task {self.task_id}: test list must be non-empty")
        if self.source.language == self.target_language:
            raise ValueError(
                f"task {self.task_id}: source and target language are both {self.target_language.value}"
            )

    @property
    def source_language(self) -> LanguageId:
        return self.source.language

    def to_dict(self) -> dict[str, Any]:
        out: dict[str, Any] = {
            "task_id": self.task_id,
            "source": self.source.to_dict(),
            "target_language": self.target_language.value,
            "tests": [t.to_dict() for t in self.tests],
        }
        if self.suite is not None:
            out["suite"] = self.suite
        return out

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "TranspilationTask":
        return cls(
            task_id=str(data["task_id"]),
            source=SourceProgram.from_dict(data["source"]),
            tests=tuple(TestCase.from_dict(t) for t in data["tests"]),
            target_language=LanguageId.parse(data["target_language"]),
            suite=data.get("suite"),
        )


class VerdictClass(str, enum.Enum):
    INCORRECT = "incorrect"
    PARTIAL = "partial"
    CORRECT = "correct"


@dataclass(frozen=True)
class CorrectnessVerdict:
    pass_vector: tuple[bool, ...]
    passed_count: int
    verdict_class: VerdictClass

    @property
    def total(self) -> int:
        return len(self.pass_vector)

    @property
    def pass_fraction(self) -> Fraction:
        return Fraction(self.passed_count, len(self.pass_vector))

    def to_dict(self) -> dict[str, Any]:
        return {
            "pass_vector": list(self.pass_vector),
            "passed_count": self.passed_count,
            "pass_fraction": float(self.pass_fraction),
            "class": self.verdict_class.value,
        }

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "CorrectnessVerdict":
        verdict = classify(data["pass_vector"])
        if "class" in data and data["class"] != verdict.verdict_class.value:
            raise ValueError(
                f"stored class {data['class']!r} disagrees with pass vector ({verdict.verdict_class.value})"
            )
        return verdict


def classify(pass_vector: Sequence[bool]) -> CorrectnessVerdict:
    """Three-way classification of a pass vector.

    The class is decided from the integer count so a float fraction can never
    land on the wrong side of a boundary.
    """
    vector = tuple(bool(v) for v in pass_vector)
    if not vector:
        raise ValueError("cannot classify an empty pass vector: a task needs at least one test")
    passed = sum(vector)
    if passed == len(vector):
        cls = VerdictClass.CORRECT
    elif passed == 0:
        cls = VerdictClass.INCORRECT
    else:
        cls = VerdictClass.PARTIAL
    return CorrectnessVerdict(pass_vector=vector, passed_count=passed, verdict_class=cls)


def behaviorally_equivalent(v1: CorrectnessVerdict, v2: CorrectnessVerdict) -> bool:
    if len(v1.pass_vector) != len(v2.pass_vector):
        raise ValueError(
            f"verdicts cover different test lists ({len(v1.pass_vector)} vs {len(v2.pass_vector)} tests)"
        )
    return v1.pass_vector == v2.pass_vector


def is_valid_result(
    source_verdict: CorrectnessVerdict,
    target_verdict: CorrectnessVerdict,
    target_lang_ok: bool,
) -> bool:
    """A target program is valid iff it is in the target language and
    matches the source's pass subset."""
    equivalent = behaviorally_equivalent(source_verdict, target_verdict)
    return bool(target_lang_ok) and equivalent


def read_jsonl(path) -> Iterator[dict[str, Any]]:
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip():
                continue
            try:
                yield json.loads(line)
            except json.JSONDecodeError as exc:
                raise ValueError(f"{path}:{lineno}: invalid JSON ({exc.msg})") from exc


def write_jsonl(path, rows: Iterable[Mapping[str, Any]]) -> int:
    count = 0
    with open(path, "w", encoding="utf-8") as fh:
        for row in rows:
            fh.write(json.dumps(row, ensure_ascii=False, sort_keys=True))
            fh.write("\n")
            count += 1
    return count


def load_tasks(path) -> list[TranspilationTask]:
    return [TranspilationTask.from_dict(row) for row in read_jsonl(path)]
