"""Execution rewards, gate functions and GRPO bookkeeping.

All functions are pure. Log-probabilities are supplied by the caller; nothing
here talks to a model or produces gradients.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from fractions import Fraction
from numbers import Real
from typing import Any, Mapping, Sequence

from transpile_harness.core import CorrectnessVerdict

DEFAULT_LAMBDA = 4.0
DEFAULT_R0 = 0.1
DEFAULT_CLIP_EPSILON = 0.2
DEFAULT_EPS_GUARD = 1e-8


class GateKind(str, enum.Enum):
    AGGRESSIVE = "aggressive"
    CONSERVATIVE = "conservative"
    DISCRETE = "discrete"
    LINEAR = "linear"


class StdMode(str, enum.Enum):
    POPULATION = "population"
    SAMPLE = "sample"


@dataclass(frozen=True)
class Gate:
    kind: GateKind = GateKind.AGGRESSIVE
    lam: float = DEFAULT_LAMBDA

    def __post_init__(self) -> None:
        object.__setattr__(self, "kind", GateKind(self.kind))
        if self.kind in (GateKind.AGGRESSIVE, GateKind.CONSERVATIVE):
            if not (math.isfinite(self.lam) and self.lam > 1):
                raise ValueError(f"{self.kind.value} gate needs a finite lambda > 1, got {self.lam!r}")

    def __call__(self, x: float) -> float:
        return gate(self, x)


@dataclass(frozen=True)
class RewardConfig:
    gate: Gate = field(default_factory=Gate)
    format_reward_r0: float = DEFAULT_R0
    advantage_std: StdMode = StdMode.POPULATION
    eps_guard: float = DEFAULT_EPS_GUARD

    def __post_init__(self) -> None:
        if not (math.isfinite(self.format_reward_r0) and self.format_reward_r0 >= 0):
            raise ValueError("format_reward_r0 must be finite and >= 0")
        object.__setattr__(self, "advantage_std", StdMode(self.advantage_std))


def gate(g: Gate, x: float) -> float:
    """Map a pass fraction in [0, 1] to a reward in [0, 1].

    aggressive:   (1 - lam**-x) / (1 - 1/lam)      concave
    conservative: (lam**x - 1) / (lam - 1)         convex
    linear:       x
    discrete:     1 only at x == 1

    The exponential forms go through expm1 so small x keeps full precision.
    """
    if isinstance(x, bool) or not isinstance(x, (Real, Fraction)):
        raise ValueError(f"gate input must be a real number, got {x!r}")
    if not 0 <= x <= 1:
        raise ValueError(f"gate input must lie in [0, 1], got {x!r}")
    kind = g.kind
    if kind is GateKind.LINEAR:
        return float(x)
    if kind is GateKind.DISCRETE:
        return 1.0 if x == 1 else 0.0
    x = float(x)
    log_lam = math.log(g.lam)
    if kind is GateKind.AGGRESSIVE:
        return math.expm1(-x * log_lam) / math.expm1(-log_lam)
    return math.expm1(x * log_lam) / math.expm1(log_lam)


def gate_counts(g: Gate, passed: int, total: int) -> float:
    """Gate applied to passed/total, with the discrete case decided on integers."""
    if total <= 0 or not 0 <= passed <= total:
        raise ValueError(f"invalid test counts {passed}/{total}")
    if g.kind is GateKind.DISCRETE:
        return 1.0 if passed == total else 0.0
    return gate(g, Fraction(passed, total))


def reward_from_verdict(verdict: CorrectnessVerdict, format_ok: bool, config: RewardConfig) -> float:
    functional = gate_counts(config.gate, verdict.passed_count, len(verdict.pass_vector))
    return functional + (config.format_reward_r0 if format_ok else 0.0)


def reward(record, config: RewardConfig) -> float:
    """Reward for one evaluated rollout: gated pass fraction plus R0 when the
    response followed the required format."""
    return reward_from_verdict(record.verdict, record.format_ok, config)


def group_advantages(
    rewards: Sequence[float],
    eps_guard: float = DEFAULT_EPS_GUARD,
    std_mode: StdMode = StdMode.POPULATION,
) -> list[float]:
    """Normalize rewards within one group: (r - mean) / std.

    A group whose std falls below ``eps_guard`` gets all-zero advantages.
    """
    values = [float(r) for r in rewards]
    g = len(values)
    if g < 2:
        raise ValueError(f"advantage normalization needs at least 2 rollouts, got {g}")
    if not all(math.isfinite(v) for v in values):
        raise ValueError("rewards must be finite")
    mean = math.fsum(values) / g
    centered = [v - mean for v in values]
    # second pass removes the rounding residue left in the first mean
    residue = math.fsum(centered) / g
    centered = [c - residue for c in centered]
    denom = g if StdMode(std_mode) is StdMode.POPULATION else g - 1
    std = math.sqrt(math.fsum(c * c for c in centered) / denom)
    if std < eps_guard:
        return [0.0] * g
    return [c / std for c in centered]


def kl_estimate(policy_logprob: float, reference_logprob: float) -> float:
    """Per-token KL estimate exp(d) - d - 1 with d = ref - policy.

    Nonnegative, and zero only when the two log-probs agree.
    """
    if not (math.isfinite(policy_logprob) and math.isfinite(reference_logprob)):
        raise ValueError("log-probabilities must be finite")
    delta = reference_logprob - policy_logprob
    if delta == 0:
        return 0.0
    if abs(delta) < 1e-4:
        # expm1(d) - d cancels catastrophically here
        return delta * delta * (0.5 + delta * (1.0 / 6.0 + delta / 24.0))
    return max(math.expm1(delta) - delta, 0.0)


def clip(value: float, low: float, high: float) -> float:
    return min(max(value, low), high)


def clipped_surrogate(ratio: float, advantage: float, epsilon: float = DEFAULT_CLIP_EPSILON) -> float:
    """min(ratio * A, clip(ratio, 1 - eps, 1 + eps) * A)."""
    if not ratio > 0:
        raise ValueError(f"probability ratio must be positive, got {ratio!r}")
    if not 0 < epsilon < 1:
        raise ValueError(f"clip epsilon must lie in (0, 1), got {epsilon!r}")
    return min(ratio * advantage, clip(ratio, 1 - epsilon, 1 + epsilon) * advantage)


@dataclass(frozen=True)
class RolloutTokens:
    policy_logprobs: Sequence[float]
    old_logprobs: Sequence[float]
    ref_logprobs: Sequence[float]

    def __len__(self) -> int:
        return len(self.policy_logprobs)


@dataclass(frozen=True)
class RolloutGroup:
    prompt_id: str
    rewards: Sequence[float]
    tokens: Sequence[RolloutTokens] | None = None

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "RolloutGroup":
        tokens = None
        if data.get("tokens") is not None:
            tokens = [
                RolloutTokens(t["policy_logprobs"], t["old_logprobs"], t["ref_logprobs"])
                for t in data["tokens"]
            ]
        return cls(prompt_id=str(data["prompt_id"]), rewards=list(data["rewards"]), tokens=tokens)


@dataclass(frozen=True)
class TokenTerm:
    rollout: int
    position: int
    ratio: float
    surrogate: float
    kl: float
    combined: float


@dataclass(frozen=True)
class GrpoTerms:
    advantages: list[float]
    terms: list[TokenTerm]
    rollout_means: list[float]
    objective: float


def grpo_objective_terms(
    group: RolloutGroup,
    epsilon: float = DEFAULT_CLIP_EPSILON,
    beta: float = 0.0,
    config: RewardConfig | None = None,
) -> GrpoTerms:
    """Per-token surrogate/KL table and the group objective.

    Each token contributes clipped_surrogate(ratio, A_i) - beta * KL; tokens
    are averaged within a rollout, rollouts averaged across the group.
    """
    config = config or RewardConfig()
    if group.tokens is None:
        raise ValueError(f"group {group.prompt_id}: per-token log-prob data is missing")
    if len(group.tokens) != len(group.rewards):
        raise ValueError(
            f"group {group.prompt_id}: {len(group.rewards)} rewards but {len(group.tokens)} token lists"
        )
    advantages = group_advantages(group.rewards, config.eps_guard, config.advantage_std)
    terms: list[TokenTerm] = []
    means: list[float] = []
    for i, (tok, adv) in enumerate(zip(group.tokens, advantages)):
        n = len(tok.policy_logprobs)
        if n == 0 or len(tok.old_logprobs) != n or len(tok.ref_logprobs) != n:
            raise ValueError(f"group {group.prompt_id}: rollout {i} has ragged or empty token data")
        row = []
        for t in range(n):
            pol, old, ref = tok.policy_logprobs[t], tok.old_logprobs[t], tok.ref_logprobs[t]
            ratio = math.exp(pol - old)
            surrogate = clipped_surrogate(ratio, adv, epsilon)
            kl = kl_estimate(pol, ref)
            combined = surrogate - beta * kl if beta else surrogate
            terms.append(TokenTerm(i, t, ratio, surrogate, kl, combined))
            row.append(combined)
        means.append(math.fsum(row) / n)
    return GrpoTerms(
        advantages=advantages,
        terms=terms,
        rollout_means=means,
        objective=math.fsum(means) / len(means),
    )
