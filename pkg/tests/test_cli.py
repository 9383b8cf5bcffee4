import json

import pytest
from click.testing import CliRunner

from conftest import double_task
from programs import PROGRAMS
from transpile_harness.cli import EXIT_CONFIG, EXIT_DATA, EXIT_USAGE, main, run
from transpile_harness.core import LanguageId, SourceProgram, TestCase, TranspilationTask, classify, read_jsonl, write_jsonl
from transpile_harness.pipeline.bench import OracleProgram
from transpile_harness.pipeline.prompts import render_response
from transpile_harness.verifier import EvaluationRecord

PY = LanguageId.PYTHON


@pytest.fixture
def cli(tmp_path, monkeypatch):
    monkeypatch.delenv("HARNESS_CONFIG", raising=False)
    monkeypatch.setenv("SANDBOX_WORKDIR", str(tmp_path / "ws"))
    runner = CliRunner()

    def invoke(*args):
        return runner.invoke(main, [str(a) for a in args], catch_exceptions=False)

    return invoke


def py_tasks(tmp_path, n=2):
    tasks = []
    for i in range(n):
        task = double_task(PY, f"t{i}")
        # distinct sources give distinct prompts, which replay mode keys on
        src = SourceProgram(f"// {i}\n{task.source.code}", task.source.language, f"p{i}", "arithmetic")
        tasks.append(TranspilationTask(task.task_id, src, task.tests, PY))
    path = tmp_path / "tasks.jsonl"
    write_jsonl(path, [t.to_dict() for t in tasks])
    return tasks, path


def test_unknown_command_is_usage_error(cli):
    result = cli("frobnicate")
    assert result.exit_code == EXIT_USAGE
    assert "No such command" in result.stderr


def test_run_returns_exit_code():
    assert run(["--help"]) == 0
    assert run(["nope"]) == EXIT_USAGE


def test_config_error_exit(cli, tmp_path):
    bad = tmp_path / "bad.yaml"
    bad.write_text("limits: {wall_clock_timeout: 0}\n")
    result = cli("--config", bad, "runtimes", "check")
    assert result.exit_code == EXIT_CONFIG
    assert "limits.wall_clock_timeout" in result.stderr


def test_runtimes_check_table(cli):
    result = cli("runtimes", "check", "--language", "python", "--no-strict")
    assert result.exit_code == 0
    assert "python" in result.stdout


def test_verify_all_correct(cli, tmp_path):
    _, tasks_path = py_tasks(tmp_path)
    cands = tmp_path / "cands.jsonl"
    write_jsonl(cands, [
        {"task_id": "t0", "code": PROGRAMS[PY]["correct"]},
        {"task_id": "t1", "response": render_response(PROGRAMS[PY]["correct"], PY)},
    ])
    out, summary = tmp_path / "records.jsonl", tmp_path / "summary.json"
    result = cli("verify", "--tasks", tasks_path, "--candidates", cands, "--out", out, "--summary", summary)
    assert result.exit_code == 0, result.output
    data = json.loads(summary.read_text())
    assert data["overall"]["pass_at_1"] == 1.0
    assert data["per_language"]["python"]["pass_at_1"] == 1.0
    assert len(list(read_jsonl(out))) == 2


def test_verify_unknown_task_is_data_error(cli, tmp_path):
    _, tasks_path = py_tasks(tmp_path)
    cands = tmp_path / "cands.jsonl"
    write_jsonl(cands, [{"task_id": "ghost", "code": "print(1)"}])
    result = cli("verify", "--tasks", tasks_path, "--candidates", cands, "--out", tmp_path / "o.jsonl")
    assert result.exit_code == EXIT_DATA


def test_reward_worked_example(cli, tmp_path):
    record = EvaluationRecord("t", 0, classify([True, True, True, False]), (), True)
    records = tmp_path / "records.jsonl"
    write_jsonl(records, [record.to_dict()])
    out = tmp_path / "rewards.jsonl"
    result = cli("reward", "--records", records, "--out", out, "--gate", "aggressive", "--lambda", 2, "--r0", 0.1)
    assert result.exit_code == 0, result.output
    (row,) = list(read_jsonl(out))
    assert row["reward"] == pytest.approx(0.910793, abs=5e-7)


def test_reward_bad_lambda_is_usage_error(cli, tmp_path):
    records = tmp_path / "records.jsonl"
    write_jsonl(records, [])
    result = cli("reward", "--records", records, "--out", tmp_path / "o", "--lambda", 1)
    assert result.exit_code == EXIT_USAGE


def test_advantages(cli, tmp_path):
    groups = tmp_path / "groups.jsonl"
    write_jsonl(groups, [{"prompt_id": "p", "rewards": [1.1, 0.1, 1.1, 0.1]}, {"prompt_id": "q", "rewards": [0.5, 0.5]}])
    out = tmp_path / "adv.jsonl"
    assert cli("advantages", "--groups", groups, "--out", out).exit_code == 0
    rows = list(read_jsonl(out))
    assert rows[0]["advantages"] == pytest.approx([1, -1, 1, -1])
    assert rows[1]["advantages"] == [0.0, 0.0]


def test_sample_is_seeded(cli, tmp_path):
    pool = tmp_path / "pool.jsonl"
    tasks = [
        TranspilationTask(f"t{i}", SourceProgram("x", PY, f"p{i}", "ABC"[i % 3]), (TestCase("", ""),), LanguageId.GO)
        for i in range(12)
    ]
    write_jsonl(pool, [t.to_dict() for t in tasks])
    a, b = tmp_path / "a.jsonl", tmp_path / "b.jsonl"
    assert cli("sample", "--pool", pool, "-n", 5, "--seed", 9, "--out", a).exit_code == 0
    assert cli("sample", "--pool", pool, "-n", 5, "--seed", 9, "--out", b).exit_code == 0
    assert a.read_bytes() == b.read_bytes()
    assert len(list(read_jsonl(a))) == 5
    unseeded = cli("sample", "--pool", pool, "-n", 1, "--out", tmp_path / "c.jsonl")
    assert "seed=" in unseeded.stderr
    assert cli("sample", "--pool", pool, "-n", 50, "--seed", 1, "--out", a).exit_code == EXIT_DATA


def test_bench_others2all(cli, tmp_path):
    oracles = tmp_path / "oracles.jsonl"
    tests = (TestCase("1", "2"),)
    write_jsonl(oracles, [
        OracleProgram(f"o{i}", SourceProgram("c", LanguageId.RUST, f"o{i}"), tests, classify([True])).to_dict()
        for i in range(3)
    ])
    out = tmp_path / "bench.jsonl"
    assert cli("bench", "build", "others2all", "--oracles", oracles, "--out", out).exit_code == 0
    rows = list(read_jsonl(out))
    assert len(rows) == 27
    assert all(r["suite"] == "others2all" for r in rows)


def test_distill_replay_and_report(cli, tmp_path):
    tasks, tasks_path = py_tasks(tmp_path)
    script = tmp_path / "script.jsonl"
    good = render_response(PROGRAMS[PY]["correct"], PY)
    bad = render_response(PROGRAMS[PY]["partial"], PY)
    write_jsonl(script, [{"task_id": "t0", "responses": [bad, good]}, {"task_id": "t1", "responses": [bad]}])
    pairs = tmp_path / "pairs.jsonl"
    result = cli("distill", "--tasks", tasks_path, "--replay", script, "--attempts", 3, "--out", pairs)
    assert result.exit_code == 0, result.output
    stats = json.loads(result.stdout.strip().splitlines()[-1])
    # t0 hits on call 2; t1 spends all 3 attempts
    assert stats == {"tasks": 2, "kept": 1, "missed": 1, "errors": 0, "model_calls": 5}
    assert [r["task_id"] for r in list(read_jsonl(pairs))] == ["t0"]

    records = tmp_path / "records.jsonl"
    result = cli("evaluate", "--tasks", tasks_path, "--replay", script, "--trials", 1, "--out", records)
    assert result.exit_code == 0, result.output
    summary = tmp_path / "summary.json"
    assert cli("report", "--records", records, "--tasks", tasks_path, "--out", summary).exit_code == 0
    assert json.loads(summary.read_text())["overall"]["pass_at_1"] == 0.0


def test_replay_rejects_ambiguous_prompts(cli, tmp_path):
    tasks_path = tmp_path / "dup.jsonl"
    write_jsonl(tasks_path, [double_task(PY, "a").to_dict(), double_task(PY, "b").to_dict()])
    script = tmp_path / "script.jsonl"
    write_jsonl(script, [{"task_id": "a", "responses": ["x"]}, {"task_id": "b", "responses": ["y"]}])
    result = cli("distill", "--tasks", tasks_path, "--replay", script, "--out", tmp_path / "p.jsonl")
    assert result.exit_code == EXIT_DATA
    assert "share a prompt" in result.stderr


def test_outputs_are_idempotent(cli, tmp_path):
    _, tasks_path = py_tasks(tmp_path)
    cands = tmp_path / "cands.jsonl"
    write_jsonl(cands, [{"task_id": "t0", "code": PROGRAMS[PY]["partial"]}])
    a, b = tmp_path / "a.jsonl", tmp_path / "b.jsonl"
    cli("verify", "--tasks", tasks_path, "--candidates", cands, "--out", a)
    cli("verify", "--tasks", tasks_path, "--candidates", cands, "--out", b)
    strip = lambda p: [{**r, "per_test_reports": [{**x, "wall_time": 0} for x in r["per_test_reports"]]}  # noqa: E731
                       for r in list(read_jsonl(p))]
    assert strip(a) == strip(b)
