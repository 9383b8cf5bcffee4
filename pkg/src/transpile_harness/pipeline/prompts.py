"""Transpilation prompt rendering and model-response parsing."""

from __future__ import annotations

import re
from dataclasses import dataclass
from functools import lru_cache
from importlib import resources

from transpile_harness.core import LanguageId, TranspilationTask


@lru_cache(maxsize=None)
def load_asset(name: str) -> str:
    return resources.files("transpile_harness.assets").joinpath(name).read_text(encoding="utf-8")


def system_prompt() -> str:
    return load_asset("system_prompt.txt").rstrip("\n")


def fill_template(template: str, values: dict[str, str]) -> str:
    # single pass, so braces inside substituted code are never re-expanded
    pattern = re.compile("|".join(re.escape("{" + k + "}") for k in values))
    return pattern.sub(lambda m: values[m.group(0)[1:-1]], template)


def user_prompt(source_code: str, source_language: LanguageId, target_language: LanguageId) -> str:
    return fill_template(
        load_asset("user_prompt.txt").rstrip("\n"),
        {
            "source_language": source_language.display_name,
            "target_language": target_language.display_name,
            "source_fence": source_language.fence_tag,
            "source_program": source_code.rstrip("\n"),
        },
    )


def prompt_messages(task: TranspilationTask) -> tuple[str, str]:
    return system_prompt(), user_prompt(task.source.code, task.source_language, task.target_language)


def build_prompt(task: TranspilationTask) -> str:
    """The full prompt as one text: system turn, blank line, user turn."""
    system, user = prompt_messages(task)
    return f"{system}\n\n{user}"


_THINK = re.compile(r"<think>(.*?)</think>", re.DOTALL)
_ANSWER = re.compile(r"<answer>(.*?)</answer>", re.DOTALL)
_STRICT_LAYOUT = re.compile(r"\s*<think>.*?</think>\s*<answer>.*?</answer>\s*\Z", re.DOTALL)
_FENCE = re.compile(r"^```[ \t]*([^\n`]*?)[ \t]*\n(.*?)\n?^```[ \t]*$", re.DOTALL | re.MULTILINE)


@dataclass(frozen=True)
class CodeBlock:
    tag: str
    code: str

    def language(self) -> LanguageId | None:
        try:
            return LanguageId.parse(self.tag)
        except ValueError:
            return None


@dataclass(frozen=True)
class ModelResponse:
    raw_text: str
    think_section: str | None
    answer_section: str | None
    extracted_code: CodeBlock | None
    format_ok: bool

    @property
    def code(self) -> str | None:
        return self.extracted_code.code if self.extracted_code else None


def find_code_blocks(text: str) -> list[CodeBlock]:
    return [CodeBlock(m.group(1).strip(), m.group(2)) for m in _FENCE.finditer(text)]


def parse_response(raw: str, expected_language: LanguageId) -> ModelResponse:
    """Split a response into think/answer parts and pull out the code.

    ``format_ok`` requires a think block followed by an answer block holding
    exactly one fenced block (and nothing else) tagged with the expected
    language. Code is still recovered from malformed responses: the answer
    block is preferred, then the whole text; among several blocks the last
    one tagged with the expected language wins, else the last block.
    """
    expected_language = LanguageId.parse(expected_language)
    think = _THINK.search(raw)
    answer = _ANSWER.search(raw)
    think_text = think.group(1) if think else None
    answer_text = answer.group(1) if answer else None

    format_ok = False
    if think and answer and think.end() <= answer.start() and _STRICT_LAYOUT.match(raw):
        blocks = find_code_blocks(answer_text)
        if len(blocks) == 1 and blocks[0].language() is expected_language:
            leftover = _FENCE.sub("", answer_text)
            format_ok = not leftover.strip()

    blocks = find_code_blocks(answer_text) if answer_text is not None else []
    if not blocks:
        blocks = find_code_blocks(raw)
    chosen = None
    if blocks:
        tagged = [b for b in blocks if b.language() is expected_language]
        chosen = tagged[-1] if tagged else blocks[-1]
    elif answer_text and answer_text.strip():
        chosen = CodeBlock("", answer_text.strip("\n"))
    return ModelResponse(
        raw_text=raw,
        think_section=think_text,
        answer_section=answer_text,
        extracted_code=chosen,
        format_ok=format_ok,
    )


def render_response(code: str, language: LanguageId, reasoning: str = "") -> str:
    """A response in the required layout; used for fixtures and stubs."""
    language = LanguageId.parse(language)
    return f"<think>\n{reasoning}\n</think>\n<answer>\n```{language.fence_tag}\n{code}\n```\n</answer>"
