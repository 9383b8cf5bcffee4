import random
from collections import Counter

import pytest
from hypothesis import given, settings, strategies as st

from transpile_harness.core import LanguageId, SourceProgram, TestCase, TranspilationTask
from transpile_harness.pipeline.sampling import (
    WeightedPool,
    sampling_weight,
    sampling_weights,
    sequential_weighted_sample,
    weighted_sample_without_replacement,
)


def make_task(i: int, cls: str | None) -> TranspilationTask:
    return TranspilationTask(
        f"t{i}",
        SourceProgram("print(1)", LanguageId.PYTHON, f"p{i}", cls),
        (TestCase("", "1"),),
        LanguageId.CPP,
    )


def pool_of(classes):
    return [make_task(i, c) for i, c in enumerate(classes)]


def test_weight_examples():
    pool = pool_of("AABC")
    assert sampling_weight(pool[0].source, pool) == 2
    assert sampling_weight(SourceProgram("x", LanguageId.PYTHON, "q", "Z"), pool) == 4
    same = pool_of("AAAA")
    assert sampling_weight(same[0].source, same) == 0


def test_missing_class_names_ids():
    pool = pool_of(["A", None, "B", None])
    with pytest.raises(ValueError, match="t1, t3"):
        sampling_weights(pool)
    with pytest.raises(ValueError, match="t1"):
        sampling_weight(pool[0].source, pool)


@given(st.lists(st.sampled_from("ABCDE"), min_size=1, max_size=50))
def test_bulk_weights_match_single(classes):
    pool = pool_of(classes)
    assert sampling_weights(pool) == [sampling_weight(t.source, pool) for t in pool]


def test_equal_weights_full_draw_is_permutation():
    items = list("abcdef")
    out = weighted_sample_without_replacement(WeightedPool.of(items, [2] * 6), 6, seed=3)
    assert sorted(out) == items


def test_zero_weight_never_drawn():
    pool = WeightedPool.of(["x", "zero", "y"], [1, 0, 1])
    for seed in range(300):
        assert sorted(weighted_sample_without_replacement(pool, 2, seed)) == ["x", "y"]


def test_insufficient_positive_weights():
    pool = WeightedPool.of(["x", "zero"], [1, 0])
    with pytest.raises(ValueError):
        weighted_sample_without_replacement(pool, 2, 0)
    with pytest.raises(ValueError):
        WeightedPool.of(["x"], [-1])


def test_first_draw_frequency():
    pool = WeightedPool.of(["a", "b"], [3, 1])
    trials = 100_000
    hits = sum(weighted_sample_without_replacement(pool, 1, s)[0] == "a" for s in range(trials))
    assert abs(hits / trials - 0.75) < 0.01


def test_deterministic_for_seed():
    pool = WeightedPool.from_tasks(pool_of("AABBCCCDDE" * 3))
    a = weighted_sample_without_replacement(pool, 10, 42)
    assert a == weighted_sample_without_replacement(pool, 10, 42)
    assert a != weighted_sample_without_replacement(pool, 10, 43)


def test_matches_sequential_distribution():
    # ordered pairs drawn from weights [4, 2, 1, 1]
    weights = [4, 2, 1, 1]
    pool = WeightedPool.of(list(range(4)), weights)
    total = sum(weights)
    exact = {}
    for i in range(4):
        for j in range(4):
            if i != j:
                exact[(i, j)] = weights[i] / total * weights[j] / (total - weights[i])
    trials = 40_000
    keyed = Counter(tuple(weighted_sample_without_replacement(pool, 2, s)) for s in range(trials))
    seq = Counter(tuple(sequential_weighted_sample(pool, 2, s)) for s in range(trials))
    for pair, p in exact.items():
        assert abs(keyed[pair] / trials - p) < 0.01
        assert abs(seq[pair] / trials - p) < 0.01


@settings(max_examples=50)
@given(st.lists(st.integers(0, 5), min_size=1, max_size=30), st.integers(0, 2**32))
def test_sample_is_distinct_and_positive(weights, seed):
    pool = WeightedPool.of(list(range(len(weights))), weights)
    n = random.Random(seed).randint(0, pool.positive_count())
    out = weighted_sample_without_replacement(pool, n, seed)
    assert len(out) == n == len(set(out))
    assert all(weights[i] > 0 for i in out)
