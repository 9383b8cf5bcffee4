"""Class-diversity sampling weights and weighted sampling without replacement."""

from __future__ import annotations

import heapq
import math
import random
from collections import Counter
from dataclasses import dataclass
from typing import Generic, Iterable, Sequence, TypeVar

from transpile_harness.core import SourceProgram, TranspilationTask

T = TypeVar("T")


def _class_of(item: SourceProgram | TranspilationTask) -> str | None:
    program = item.source if isinstance(item, TranspilationTask) else item
    return program.problem_class


def _item_id(item: SourceProgram | TranspilationTask) -> str:
    if isinstance(item, TranspilationTask):
        return item.task_id
    return item.problem_id or "<unnamed program>"


def _require_classes(items: Iterable[SourceProgram | TranspilationTask]) -> None:
    missing = [_item_id(it) for it in items if _class_of(it) is None]
    if missing:
        shown = ", ".join(missing[:10]) + (" ..." if len(missing) > 10 else "")
        raise ValueError(f"problem_class missing for {len(missing)} item(s): {shown}")


def sampling_weight(p: SourceProgram, pool: Sequence[TranspilationTask]) -> int:
    """Number of pool tasks whose source problem class differs from p's."""
    _require_classes([p, *pool])
    return sum(1 for task in pool if task.source.problem_class != p.problem_class)


def sampling_weights(pool: Sequence[TranspilationTask]) -> list[int]:
    """Weight of every task's source program against the whole pool.

    Same values as calling sampling_weight per task, in O(n).
    """
    _require_classes(pool)
    counts = Counter(task.source.problem_class for task in pool)
    total = len(pool)
    return [total - counts[task.source.problem_class] for task in pool]


@dataclass(frozen=True)
class WeightedEntry(Generic[T]):
    item: T
    weight: int


@dataclass(frozen=True)
class WeightedPool(Generic[T]):
    entries: tuple[WeightedEntry[T], ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "entries", tuple(self.entries))
        for e in self.entries:
            if e.weight < 0 or not math.isfinite(e.weight):
                raise ValueError(f"weights must be finite and nonnegative, got {e.weight!r}")

    @classmethod
    def of(cls, items: Sequence[T], weights: Sequence[int]) -> "WeightedPool[T]":
        if len(items) != len(weights):
            raise ValueError("items and weights differ in length")
        return cls(tuple(WeightedEntry(i, w) for i, w in zip(items, weights)))

    @classmethod
    def from_tasks(cls, pool: Sequence[TranspilationTask]) -> "WeightedPool[TranspilationTask]":
        return cls.of(pool, sampling_weights(pool))

    def positive_count(self) -> int:
        return sum(1 for e in self.entries if e.weight > 0)


def weighted_sample_without_replacement(pool: WeightedPool[T], n: int, seed: int) -> list[T]:
    """Draw n distinct items, each draw proportional to weight among the
    items not yet drawn.

    Uses exponential keys (log(u) / w, largest first), which yields exactly
    the distribution of sequential draw-remove-renormalize sampling, with
    the selection listed in draw order. Zero-weight items are never drawn.
    """
    if n < 0:
        raise ValueError("sample size must be nonnegative")
    positive = pool.positive_count()
    if n > positive:
        raise ValueError(f"requested {n} items but only {positive} have positive weight")
    rng = random.Random(seed)
    keyed = []
    for idx, entry in enumerate(pool.entries):
        u = rng.random()
        if entry.weight <= 0:
            continue
        # 1 - u lies in (0, 1], so the log is finite
        keyed.append((math.log(1.0 - u) / entry.weight, idx))
    top = heapq.nlargest(n, keyed)
    return [pool.entries[idx].item for _, idx in top]


def sequential_weighted_sample(pool: WeightedPool[T], n: int, seed: int) -> list[T]:
    """Literal draw, remove, renormalize loop. O(n * len(pool)); kept as a
    cross-check for the keyed sampler and for small pools."""
    positive = pool.positive_count()
    if n > positive:
        raise ValueError(f"requested {n} items but only {positive} have positive weight")
    rng = random.Random(seed)
    remaining = [(e.item, e.weight) for e in pool.entries if e.weight > 0]
    out = []
    for _ in range(n):
        total = sum(w for _, w in remaining)
        target = rng.random() * total
        acc = 0.0
        for j, (item, w) in enumerate(remaining):
            acc += w
            if target < acc:
                break
        out.append(item)
        del remaining[j]
    return out
