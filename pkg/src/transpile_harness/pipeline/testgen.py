"""Test-case synthesis for new source programs.

A model proposes inputs; the program is run twice per input to drop
non-deterministic ones, and the first run's output becomes the expected
output. The prompt lives in ``assets/testgen_prompt.txt`` and can be
replaced per call.
"""

from __future__ import annotations

import json
import logging
import re

from transpile_harness.core import SourceProgram, TestCase
from transpile_harness.model_client import ModelClient
from transpile_harness.pipeline.prompts import fill_template, load_asset
from transpile_harness.sandbox import ExecutionLimits, ExecutionStatus, Sandbox, outputs_match

log = logging.getLogger(__name__)

_JSON_ARRAY = re.compile(r"\[.*\]", re.DOTALL)


def render_testgen_prompt(program: SourceProgram, count: int, template: str | None = None) -> str:
    template = template if template is not None else load_asset("testgen_prompt.txt")
    return fill_template(
        template.rstrip("\n"),
        {
            "language": program.language.display_name,
            "fence": program.language.fence_tag,
            "program": program.code.rstrip("\n"),
            "count": str(count),
        },
    )


def parse_inputs(text: str) -> list[str]:
    """Pull the JSON array of input strings out of a model reply."""
    match = _JSON_ARRAY.search(text)
    if not match:
        return []
    try:
        values = json.loads(match.group(0))
    except json.JSONDecodeError:
        return []
    if not isinstance(values, list):
        return []
    out = []
    for v in values:
        # tolerate structured inputs by re-serializing them
        out.append(v if isinstance(v, str) else json.dumps(v))
    return list(dict.fromkeys(out))


def synthesize_tests(
    program: SourceProgram,
    model: ModelClient,
    count: int = 10,
    sandbox: Sandbox | None = None,
    limits: ExecutionLimits | None = None,
    template: str | None = None,
) -> list[TestCase]:
    """Return test cases for ``program``, or [] if it looks nondeterministic.

    Inputs on which the program fails or disagrees with itself are dropped
    individually; an output mismatch on any input discards the program,
    matching the run-twice filter.
    """
    sandbox = sandbox or Sandbox()
    reply = model.complete("", render_testgen_prompt(program, count, template))
    inputs = parse_inputs(reply)
    if not inputs:
        log.warning("program %s: model returned no usable inputs", program.problem_id)
        return []
    first = sandbox.run_program(program, inputs, limits=limits, task_id=program.problem_id or "testgen")
    second = sandbox.run_program(program, inputs, limits=limits, task_id=program.problem_id or "testgen")
    tests = []
    for text, a, b in zip(inputs, first, second):
        if a.status is ExecutionStatus.COMPILE_ERROR:
            return []
        if a.status is not ExecutionStatus.OK or b.status is not ExecutionStatus.OK:
            continue
        if not outputs_match(a.stdout, b.stdout, sandbox.policy):
            log.info("program %s: inconsistent output across runs, discarded", program.problem_id)
            return []
        tests.append(TestCase(text, a.stdout.decode("utf-8", errors="replace")))
    return tests
