import itertools
from fractions import Fraction

import pytest

from conftest import double_task, requires
from programs import PARTIAL_VECTOR, PROGRAMS
from transpile_harness.core import LanguageId, SourceProgram, TestCase, TranspilationTask, VerdictClass, classify
from transpile_harness.sandbox import ExecutionStatus
from transpile_harness.verifier import (
    CandidateOrigin,
    CandidateProgram,
    EvaluationRecord,
    VerifyJob,
    pass_at_1_repeated,
    pass_at_k,
    pass_at_k_exact,
    summarize,
    verify,
    verify_many,
)

PY = LanguageId.PYTHON


def enumerate_pass_at_k(n: int, c: int, k: int) -> Fraction:
    """Fraction of k-subsets of n samples (c correct) containing a correct one."""
    samples = [True] * c + [False] * (n - c)
    subsets = list(itertools.combinations(range(n), k))
    hits = sum(1 for s in subsets if any(samples[i] for i in s))
    return Fraction(hits, len(subsets))


def test_pass_at_k_examples():
    assert pass_at_k(1, 1, 1) == 1.0
    assert pass_at_k(3, 0, 1) == 0.0
    assert pass_at_k(3, 1, 1) == pytest.approx(1 / 3)
    assert pass_at_k_exact(3, 1, 1) == enumerate_pass_at_k(3, 1, 1) == Fraction(1, 3)


@pytest.mark.parametrize("n, c, k", [(3, 4, 1), (3, -1, 1), (3, 1, 0), (3, 1, 4), (2.0, 1, 1)])
def test_pass_at_k_rejects_bad_arguments(n, c, k):
    with pytest.raises(ValueError):
        pass_at_k(n, c, k)


def test_pass_at_k_matches_enumeration_and_is_monotone():
    for n in range(1, 7):
        for c in range(n + 1):
            for k in range(1, n + 1):
                assert pass_at_k_exact(n, c, k) == enumerate_pass_at_k(n, c, k)
                if k > 1:
                    assert pass_at_k(n, c, k) >= pass_at_k(n, c, k - 1)
                if c > 0:
                    assert pass_at_k(n, c, k) >= pass_at_k(n, c - 1, k)
            assert all(pass_at_k(n, n, k) == 1.0 for k in range(1, n + 1))


def test_pass_at_k_large_n_is_finite():
    value = pass_at_k(2000, 3, 1000)
    assert 0.0 < value <= 1.0


def _trial(rate_tenths: int) -> list[bool]:
    return [True] * rate_tenths + [False] * (10 - rate_tenths)


def test_pass_at_1_repeated():
    assert pass_at_1_repeated([_trial(10)] * 3) == 1.0
    assert pass_at_1_repeated([_trial(6), _trial(5), _trial(7)]) == 0.6
    assert pass_at_1_repeated([_trial(5)]) == 0.5
    with pytest.raises(ValueError):
        pass_at_1_repeated([])
    with pytest.raises(ValueError):
        pass_at_1_repeated([[True], [True, False]])


# -- verify ----------------------------------------------------------------------

def test_oracle_source_verifies_correct(sandbox, limits):
    task = double_task(LanguageId.CPP)
    oracle = CandidateProgram(task.source.code, PY, CandidateOrigin.ORACLE)
    # oracle programs are checked against their own tests regardless of target
    own = TranspilationTask("own", SourceProgram("int main(){}", LanguageId.CPP), task.tests, PY)
    record = verify(own, oracle, limits, sandbox)
    assert record.verdict.verdict_class is VerdictClass.CORRECT


def test_crashing_candidate_is_incorrect(sandbox, limits):
    task = double_task(PY)
    record = verify(task, CandidateProgram("raise SystemExit(2)\n", PY), limits, sandbox)
    assert record.verdict.verdict_class is VerdictClass.INCORRECT
    assert len(record.per_test_reports) == len(task.tests)
    assert all(r.status is ExecutionStatus.RUNTIME_ERROR for r in record.per_test_reports)


def test_parity_candidate_is_partial(sandbox, limits):
    task = double_task(PY)
    record = verify(task, CandidateProgram(PROGRAMS[PY]["partial"], PY), limits, sandbox)
    assert record.verdict.pass_vector == PARTIAL_VECTOR
    assert record.verdict.verdict_class is VerdictClass.PARTIAL
    assert record.verdict.pass_fraction == Fraction(1, 2)


def test_compile_error_short_circuits(sandbox, limits):
    requires(sandbox, LanguageId.CPP)
    task = double_task(LanguageId.CPP)
    record = verify(task, CandidateProgram(PROGRAMS[LanguageId.CPP]["broken"], LanguageId.CPP), limits, sandbox)
    assert record.verdict.pass_vector == (False,) * 4
    assert record.verdict.verdict_class is VerdictClass.INCORRECT
    assert [r.status for r in record.per_test_reports] == [ExecutionStatus.COMPILE_ERROR]
    assert "compile-error" in record.notes


def test_language_mismatch(sandbox, limits):
    task = double_task(LanguageId.RUST)
    record = verify(task, CandidateProgram(PROGRAMS[PY]["correct"], PY), limits, sandbox)
    assert record.verdict.passed_count == 0
    assert "language-mismatch" in record.notes
    assert not record.valid


def test_verify_equals_classify_of_raw_vector(sandbox, limits):
    task = double_task(PY)
    record = verify(task, CandidateProgram(PROGRAMS[PY]["partial"], PY), limits, sandbox)
    assert record.verdict == classify(record.verdict.pass_vector)


def test_verify_is_idempotent(sandbox, limits):
    task = double_task(PY)
    cand = CandidateProgram(PROGRAMS[PY]["partial"], PY)
    first = verify(task, cand, limits, sandbox)
    second = verify(task, cand, limits, sandbox)
    assert first.verdict == second.verdict
    assert [r.stdout for r in first.per_test_reports] == [r.stdout for r in second.per_test_reports]


def test_record_round_trip(sandbox, limits):
    task = double_task(PY)
    record = verify(task, CandidateProgram(PROGRAMS[PY]["partial"], PY), limits, sandbox, format_ok=False)
    again = EvaluationRecord.from_dict(record.to_dict())
    assert again.verdict == record.verdict
    assert again.format_ok is False
    assert [r.status for r in again.per_test_reports] == [r.status for r in record.per_test_reports]


def test_verify_many_and_summary(sandbox, limits):
    tasks = {lang: double_task(lang, f"t-{lang.value}") for lang in (PY, LanguageId.JAVASCRIPT)}
    if not sandbox.available(LanguageId.JAVASCRIPT):
        tasks.pop(LanguageId.JAVASCRIPT)
    jobs = []
    for lang, task in tasks.items():
        for idx, kind in enumerate(["correct", "partial"]):
            jobs.append(VerifyJob(task, CandidateProgram(PROGRAMS[lang][kind], lang), candidate_index=idx, trial=idx))
    records = verify_many(jobs, limits, sandbox)
    assert [r.task_id for r in records] == [j.task.task_id for j in jobs]
    summary = summarize(records, {t.task_id: t for t in tasks.values()})
    for lang in tasks:
        # trial 0 all correct, trial 1 all partial -> mean 0.5
        assert summary["per_language"][lang.value] == {"pass_at_1": 0.5, "n_tasks": 1}
    assert summary["overall"]["pass_at_1"] == 0.5
    assert summary["class_histogram"]["correct"] == len(tasks)
    assert summary["class_histogram"]["partial"] == len(tasks)
