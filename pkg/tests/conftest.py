import sys

import pytest

from programs import DOUBLE_INPUTS, DOUBLE_OUTPUTS
from transpile_harness.core import LanguageId, SourceProgram, TestCase, TranspilationTask
from transpile_harness.sandbox import ExecutionLimits, Sandbox

FAST_LIMITS = ExecutionLimits(wall_clock_timeout=10.0, compile_timeout=180.0)


@pytest.fixture(scope="session")
def sandbox(tmp_path_factory):
    return Sandbox(workspace_root=str(tmp_path_factory.mktemp("sandbox")), max_workers=4)


@pytest.fixture
def limits():
    return FAST_LIMITS


def double_task(target: LanguageId, task_id: str | None = None) -> TranspilationTask:
    source_lang = LanguageId.CPP if target is LanguageId.PYTHON else LanguageId.PYTHON
    return TranspilationTask(
        task_id=task_id or f"double-{target.value}",
        source=SourceProgram(
            code="n = int(input())\nprint(n * 2)\n" if source_lang is LanguageId.PYTHON else "int main(){}",
            language=source_lang,
            problem_id="double",
            problem_class="arithmetic",
        ),
        tests=tuple(TestCase(i, o) for i, o in zip(DOUBLE_INPUTS, DOUBLE_OUTPUTS)),
        target_language=target,
    )


def requires(sandbox: Sandbox, language: LanguageId) -> None:
    if not sandbox.available(language):
        pytest.skip(f"{language.value} toolchain not installed")


def pytest_terminal_summary(terminalreporter):
    module = sys.modules.get("test_acceptance")
    results = getattr(module, "RESULTS", None)
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(results):
        terminalreporter.write_line(results[n])
