"""``transpile-harness`` command line entry point.

Machine-readable outputs are JSONL/JSON files; tables go to stdout and logs
to stderr.
"""

from __future__ import annotations

import json
import logging
import secrets
import sys
from typing import Any, Callable, Sequence

import click

from transpile_harness.config import ConfigError, HarnessConfig, load_config
from transpile_harness.core import LanguageId, TranspilationTask, load_tasks, read_jsonl, write_jsonl
from transpile_harness.model_client import HttpChatClient, ModelClient, ModelClientError, ScriptedModelClient
from transpile_harness.pipeline import (
    DistillationPair,
    OracleProgram,
    WeightedPool,
    build_any2any_pairs,
    build_others2all_bench,
    build_py2others_bench,
    distill,
    group_by_problem,
    parse_response,
    prompt_messages,
    weighted_sample_without_replacement,
)
from transpile_harness.rewards import Gate, RewardConfig, StdMode, group_advantages, reward
from transpile_harness.sandbox import Sandbox, load_registry, probe_all
from transpile_harness.verifier import (
    CandidateOrigin,
    CandidateProgram,
    EvaluationRecord,
    VerifyJob,
    summarize,
    verify_many,
)

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_CONFIG = 3
EXIT_PROBE = 4
EXIT_TASK_FAILURES = 5
EXIT_DATA = 6

log = logging.getLogger("transpile_harness")


class _Exit(Exception):
    def __init__(self, code: int, message: str):
        super().__init__(message)
        self.code = code


def _fail(code: int, message: str) -> None:
    raise _Exit(code, message)


def _setup_logging(level: str) -> None:
    logging.basicConfig(
        stream=sys.stderr,
        level=getattr(logging, level.upper(), logging.INFO),
        format="%(asctime)s level=%(levelname)s logger=%(name)s msg=%(message)s",
        force=True,
    )


def _cfg(ctx: click.Context) -> HarnessConfig:
    obj = ctx.find_root().obj
    if "config" not in obj:
        try:
            obj["config"] = load_config(obj["config_path"])
        except ConfigError as exc:
            _fail(EXIT_CONFIG, str(exc))
    return obj["config"]


def _sandbox(cfg: HarnessConfig) -> Sandbox:
    try:
        registry = load_registry(cfg.runtime_registry)
    except (OSError, ValueError) as exc:
        _fail(EXIT_CONFIG, f"runtime registry: {exc}")
    return Sandbox(registry, cfg.workspace_root, cfg.workers, cfg.policy)


def _read(path: str, parse: Callable[[dict], Any]) -> list[Any]:
    try:
        return [parse(row) for row in read_jsonl(path)]
    except (OSError, KeyError, ValueError, TypeError) as exc:
        _fail(EXIT_DATA, f"{path}: {exc.__class__.__name__}: {exc}")


def _seed(seed: int | None) -> int:
    if seed is None:
        seed = secrets.randbelow(2**31)
        log.info("no --seed given, using seed=%d", seed)
        click.echo(f"seed={seed}", err=True)
    return seed


class HarnessGroup(click.Group):
    def invoke(self, ctx: click.Context) -> Any:
        try:
            return super().invoke(ctx)
        except _Exit as exc:
            click.echo(f"error: {exc}", err=True)
            ctx.exit(exc.code)


@click.group(cls=HarnessGroup)
@click.option("--config", "config_path", envvar="HARNESS_CONFIG", type=click.Path(dir_okay=False),
              help="Harness config file (YAML/JSON). Defaults to $HARNESS_CONFIG.")
@click.option("--log-level", default="info", show_default=True)
@click.pass_context
def main(ctx: click.Context, config_path: str | None, log_level: str) -> None:
    """Verification, reward and curation harness for code transpilation."""
    _setup_logging(log_level)
    ctx.obj = {"config_path": config_path}


# -- runtimes ------------------------------------------------------------------

@main.group()
def runtimes() -> None:
    """Inspect registered language runtimes."""


@runtimes.command("check")
@click.option("--strict/--no-strict", "strict", default=None,
              help="Fail unless every toolchain matches the reference versions.")
@click.option("--language", "languages", multiple=True, help="Limit to these languages.")
@click.pass_context
def runtimes_check(ctx: click.Context, strict: bool | None, languages: Sequence[str]) -> None:
    """Probe toolchains and print a version table."""
    cfg = _cfg(ctx)
    strict = cfg.strict_runtimes if strict is None else strict
    try:
        registry = load_registry(cfg.runtime_registry)
        langs = [LanguageId.parse(l) for l in languages] or None
    except (OSError, ValueError) as exc:
        _fail(EXIT_CONFIG, str(exc))
    results = probe_all(registry, langs)
    click.echo(f"{'language':<12} {'available':<10} {'expected':<10} version")
    for r in results:
        click.echo(
            f"{r.language.value:<12} {'yes' if r.available else 'no':<10} "
            f"{'match' if r.matches_expected else 'differs':<10} {r.version_output or r.message}"
        )
    if strict and not all(r.available and r.matches_expected for r in results):
        _fail(EXIT_PROBE, "strict runtimes: at least one toolchain is missing or differs from the reference")
    if not strict and not any(r.available for r in results):
        _fail(EXIT_PROBE, "no runtime toolchain is available")


# -- verify / evaluate / report ------------------------------------------------

def _print_summary(summary: dict[str, Any]) -> None:
    click.echo(f"{'language':<12} {'tasks':>6} {'pass@1':>8}")
    for lang, row in summary["per_language"].items():
        click.echo(f"{lang:<12} {row['n_tasks']:>6} {row['pass_at_1']:>8.4f}")
    o = summary["overall"]
    click.echo(f"{'overall':<12} {o['n_tasks']:>6} {o['pass_at_1']:>8.4f}")
    hist = ", ".join(f"{k}={v}" for k, v in summary["class_histogram"].items())
    click.echo(f"classes: {hist}")


def _write_summary(path: str | None, summary: dict[str, Any]) -> None:
    if path:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(summary, fh, indent=2, sort_keys=True)
            fh.write("\n")


def _finish(records: list[EvaluationRecord], tasks: dict[str, TranspilationTask],
            out: str, summary_path: str | None) -> None:
    write_jsonl(out, (r.to_dict() for r in records))
    summary = summarize(records, tasks)
    _write_summary(summary_path, summary)
    _print_summary(summary)
    broken = sum(1 for r in records if "sandbox-error" in r.notes)
    if broken:
        _fail(EXIT_TASK_FAILURES, f"{broken} record(s) hit sandbox errors")


@main.command("verify")
@click.option("--tasks", "tasks_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--candidates", "cand_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--out", required=True, type=click.Path(dir_okay=False), help="EvaluationRecord JSONL.")
@click.option("--summary", "summary_path", type=click.Path(dir_okay=False), help="Summary JSON.")
@click.pass_context
def verify_cmd(ctx, tasks_path, cand_path, out, summary_path) -> None:
    """Run candidate programs against their tasks' tests.

    Candidate rows: {task_id, code | response, language?, candidate_index?, trial?}.
    """
    cfg = _cfg(ctx)
    tasks = {t.task_id: t for t in _read(tasks_path, TranspilationTask.from_dict)}
    rows = _read(cand_path, dict)
    jobs = []
    for i, row in enumerate(rows):
        task = tasks.get(str(row.get("task_id")))
        if task is None:
            _fail(EXIT_DATA, f"{cand_path}: row {i + 1} references unknown task {row.get('task_id')!r}")
        language = LanguageId.parse(row.get("language") or task.target_language)
        format_ok = bool(row.get("format_ok", True))
        code = row.get("code")
        if code is None and "response" in row:
            parsed = parse_response(row["response"], task.target_language)
            code, format_ok = parsed.code or "", parsed.format_ok
        origin = row.get("origin", CandidateOrigin.MODEL_RESPONSE.value)
        jobs.append(
            VerifyJob(
                task,
                CandidateProgram(code or "", language, origin, row.get("rollout_id")),
                candidate_index=int(row.get("candidate_index", i)),
                format_ok=format_ok,
                trial=int(row.get("trial", 0)),
            )
        )
    records = verify_many(jobs, cfg.limits.build(), _sandbox(cfg))
    _finish(records, tasks, out, summary_path)


def _client(cfg: HarnessConfig, model: str | None, replay: str | None, tasks: list[TranspilationTask]) -> ModelClient:
    if replay:
        script = {}
        for row in _read(replay, dict):
            script[str(row["task_id"])] = list(row["responses"])
        missing = [t.task_id for t in tasks if t.task_id not in script]
        if missing:
            _fail(EXIT_DATA, f"{replay}: no scripted responses for {', '.join(missing[:5])}")
        # the client only sees the prompt, so tasks sharing one must share a script
        by_prompt: dict[str, str] = {}
        for t in tasks:
            owner = by_prompt.setdefault(prompt_messages(t)[1], t.task_id)
            if script[owner] != script[t.task_id]:
                _fail(EXIT_DATA, f"{replay}: tasks {owner} and {t.task_id} share a prompt but have different scripts")
        return ScriptedModelClient(script, key_of=lambda prompt: by_prompt[prompt])
    try:
        return HttpChatClient(cfg.endpoint(model))
    except (ConfigError, ValueError) as exc:
        _fail(EXIT_CONFIG, str(exc))


@main.command("evaluate")
@click.option("--tasks", "tasks_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--model", help="Endpoint name from the config's models section.")
@click.option("--replay", type=click.Path(exists=True, dir_okay=False),
              help="Scripted responses JSONL {task_id, responses[]} instead of a live endpoint.")
@click.option("--trials", default=3, show_default=True, type=click.IntRange(min=1))
@click.option("--out", required=True, type=click.Path(dir_okay=False))
@click.option("--responses-out", type=click.Path(dir_okay=False), help="Raw responses JSONL.")
@click.option("--summary", "summary_path", type=click.Path(dir_okay=False))
@click.pass_context
def evaluate_cmd(ctx, tasks_path, model, replay, trials, out, responses_out, summary_path) -> None:
    """Query a model on every task and score Pass@1 averaged over trials."""
    cfg = _cfg(ctx)
    tasks = _read(tasks_path, TranspilationTask.from_dict)
    client = _client(cfg, model, replay, tasks)
    sandbox = _sandbox(cfg)
    jobs, responses = [], []
    for trial in range(trials):
        for task in tasks:
            system, user = prompt_messages(task)
            try:
                raw = client.complete(system, user)
            except ModelClientError as exc:
                _fail(EXIT_TASK_FAILURES, f"task {task.task_id}: {exc}")
            parsed = parse_response(raw, task.target_language)
            responses.append({"task_id": task.task_id, "trial": trial, "response": raw})
            jobs.append(
                VerifyJob(
                    task,
                    CandidateProgram(parsed.code or "", task.target_language, CandidateOrigin.MODEL_RESPONSE,
                                     f"{task.task_id}#t{trial}"),
                    candidate_index=trial,
                    format_ok=parsed.format_ok,
                    trial=trial,
                )
            )
    if responses_out:
        write_jsonl(responses_out, responses)
    records = verify_many(jobs, cfg.limits.build(), sandbox)
    _finish(records, {t.task_id: t for t in tasks}, out, summary_path)


@main.command("report")
@click.option("--records", "records_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--tasks", "tasks_path", type=click.Path(exists=True, dir_okay=False),
              help="Task JSONL used to attribute records to target languages.")
@click.option("--out", type=click.Path(dir_okay=False), help="Summary JSON.")
def report_cmd(records_path, tasks_path, out) -> None:
    """Summarize EvaluationRecord files; never re-executes code."""
    records = _read(records_path, EvaluationRecord.from_dict)
    tasks = {t.task_id: t for t in _read(tasks_path, TranspilationTask.from_dict)} if tasks_path else None
    summary = summarize(records, tasks)
    _write_summary(out, summary)
    _print_summary(summary)


# -- reward ----------------------------------------------------------------------

@main.command("reward")
@click.option("--records", "records_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--out", required=True, type=click.Path(dir_okay=False))
@click.option("--gate", "gate_kind", type=click.Choice(["aggressive", "conservative", "discrete", "linear"]))
@click.option("--lambda", "lam", type=float)
@click.option("--r0", type=float)
@click.pass_context
def reward_cmd(ctx, records_path, out, gate_kind, lam, r0) -> None:
    """Compute one reward per EvaluationRecord."""
    cfg = _cfg(ctx).reward
    try:
        config = RewardConfig(
            gate=Gate(gate_kind or cfg.gate, cfg.lam if lam is None else lam),
            format_reward_r0=cfg.r0 if r0 is None else r0,
            advantage_std=cfg.advantage_std,
            eps_guard=cfg.eps_guard,
        )
    except ValueError as exc:
        raise click.BadParameter(str(exc)) from None
    records = _read(records_path, EvaluationRecord.from_dict)
    rows = [
        {
            "task_id": r.task_id,
            "candidate_index": r.candidate_index,
            "trial": r.trial,
            "rollout_id": r.rollout_id,
            "passed_count": r.verdict.passed_count,
            "n_tests": len(r.verdict.pass_vector),
            "format_ok": r.format_ok,
            "reward": reward(r, config),
        }
        for r in records
    ]
    write_jsonl(out, rows)
    click.echo(f"wrote {len(rows)} rewards ({config.gate.kind.value}, lambda={config.gate.lam}, r0={config.format_reward_r0})")


@main.command("advantages")
@click.option("--groups", "groups_path", required=True, type=click.Path(exists=True, dir_okay=False),
              help="JSONL of {prompt_id, rewards[]}.")
@click.option("--out", required=True, type=click.Path(dir_okay=False))
@click.option("--std", "std_mode", type=click.Choice(["population", "sample"]))
@click.option("--eps-guard", type=float)
@click.pass_context
def advantages_cmd(ctx, groups_path, out, std_mode, eps_guard) -> None:
    """Group-normalize rewards into advantages."""
    cfg = _cfg(ctx).reward
    std_mode = StdMode(std_mode or cfg.advantage_std)
    eps_guard = cfg.eps_guard if eps_guard is None else eps_guard
    rows = []
    for group in _read(groups_path, dict):
        try:
            adv = group_advantages(group["rewards"], eps_guard, std_mode)
        except (KeyError, ValueError) as exc:
            _fail(EXIT_DATA, f"group {group.get('prompt_id')!r}: {exc}")
        rows.append({"prompt_id": group["prompt_id"], "advantages": adv})
    write_jsonl(out, rows)
    click.echo(f"wrote {len(rows)} groups")


# -- curation ------------------------------------------------------------------

@main.command("distill")
@click.option("--tasks", "tasks_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--model", help="Endpoint name from the config's models section.")
@click.option("--replay", type=click.Path(exists=True, dir_okay=False),
              help="Scripted responses JSONL {task_id, responses[]} instead of a live endpoint.")
@click.option("--attempts", default=4, show_default=True, type=click.IntRange(min=1))
@click.option("--parallel", default=4, show_default=True, type=click.IntRange(min=1))
@click.option("--require-format", is_flag=True, help="Also require a format-compliant response.")
@click.option("--out", required=True, type=click.Path(dir_okay=False), help="DistillationPair JSONL (appended).")
@click.pass_context
def distill_cmd(ctx, tasks_path, model, replay, attempts, parallel, require_format, out) -> None:
    """Execution-based rejection sampling of distillation pairs."""
    cfg = _cfg(ctx)
    tasks = _read(tasks_path, TranspilationTask.from_dict)
    client = _client(cfg, model, replay, tasks)
    stats = distill(tasks, client, attempts, out, _sandbox(cfg), cfg.limits.build(), parallel, require_format)
    click.echo(json.dumps(stats.to_dict(), sort_keys=True))
    if stats.errors:
        _fail(EXIT_TASK_FAILURES, f"{stats.errors} task(s) failed to reach the model")


@main.command("sample")
@click.option("--pool", "pool_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("-n", "--n", "count", required=True, type=click.IntRange(min=0))
@click.option("--seed", type=int)
@click.option("--out", required=True, type=click.Path(dir_okay=False))
def sample_cmd(pool_path, count, seed, out) -> None:
    """Class-diversity weighted sampling without replacement from a task pool."""
    pool = _read(pool_path, TranspilationTask.from_dict)
    try:
        chosen = weighted_sample_without_replacement(WeightedPool.from_tasks(pool), count, _seed(seed))
    except ValueError as exc:
        _fail(EXIT_DATA, str(exc))
    write_jsonl(out, (t.to_dict() for t in chosen))
    click.echo(f"sampled {len(chosen)} of {len(pool)} tasks")


@main.group("bench")
def bench() -> None:
    """Benchmark construction."""


@bench.group("build")
def bench_build() -> None:
    """Build a benchmark or pair file."""


def _read_ids(path: str | None) -> set[str]:
    if not path:
        return set()
    ids = set()
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            ids.add(str(json.loads(line)["task_id"]) if line.startswith("{") else line)
    return ids


@bench_build.command("py2others")
@click.option("--pool", "pool_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--per-language", required=True, type=click.IntRange(min=1))
@click.option("--exclude", type=click.Path(exists=True, dir_okay=False),
              help="Task ids to exclude (one per line, or task JSONL).")
@click.option("--min-lines", default=50, show_default=True, type=int)
@click.option("--seed", type=int)
@click.option("--out", required=True, type=click.Path(dir_okay=False))
def bench_py2others(pool_path, per_language, exclude, min_lines, seed, out) -> None:
    pool = _read(pool_path, TranspilationTask.from_dict)
    try:
        tasks = build_py2others_bench(pool, per_language, exclude=_read_ids(exclude),
                                      min_lines=min_lines, seed=_seed(seed))
    except ValueError as exc:
        _fail(EXIT_DATA, str(exc))
    write_jsonl(out, (t.to_dict() for t in tasks))
    click.echo(f"wrote {len(tasks)} py2others tasks")


@bench_build.command("others2all")
@click.option("--oracles", "oracles_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--target", "targets", multiple=True, help="Target languages (default: all ten).")
@click.option("--out", required=True, type=click.Path(dir_okay=False))
def bench_others2all(oracles_path, targets, out) -> None:
    oracles = _read(oracles_path, OracleProgram.from_dict)
    try:
        langs = [LanguageId.parse(t) for t in targets] or None
        tasks = build_others2all_bench(oracles, langs)
    except ValueError as exc:
        _fail(EXIT_DATA, str(exc))
    write_jsonl(out, (t.to_dict() for t in tasks))
    click.echo(f"wrote {len(tasks)} others2all tasks")


@bench_build.command("any2any")
@click.option("--pairs", "pairs_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--tasks", "tasks_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--out", required=True, type=click.Path(dir_okay=False))
def bench_any2any(pairs_path, tasks_path, out) -> None:
    pairs = _read(pairs_path, DistillationPair.from_dict)
    tasks = {t.task_id: t for t in _read(tasks_path, TranspilationTask.from_dict)}
    try:
        rows = build_any2any_pairs(group_by_problem(pairs, tasks))
    except KeyError as exc:
        _fail(EXIT_DATA, f"pair references unknown task {exc}")
    write_jsonl(out, rows)
    click.echo(f"wrote {len(rows)} any2any pairs")


def run(argv: Sequence[str] | None = None) -> int:
    """Invoke the CLI and return its exit status instead of exiting."""
    try:
        main.main(args=list(argv) if argv is not None else None, prog_name="transpile-harness",
                  standalone_mode=True)
    except SystemExit as exc:
        return int(exc.code or 0)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(run())
