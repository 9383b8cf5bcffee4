"""Harness configuration file (YAML or JSON), validated before any work."""

from __future__ import annotations

import os
from typing import Literal

import yaml
from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from transpile_harness.model_client import ModelEndpointConfig
from transpile_harness.rewards import DEFAULT_EPS_GUARD, DEFAULT_LAMBDA, DEFAULT_R0, Gate, RewardConfig
from transpile_harness.sandbox import ComparisonPolicy, ExecutionLimits

CONFIG_ENV_VAR = "HARNESS_CONFIG"


class ConfigError(ValueError):
    pass


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid")


class LimitsSection(_Strict):
    wall_clock_timeout: float = Field(10.0, gt=0)
    memory_cap: int = Field(512 * 1024 * 1024, gt=0)
    max_output_bytes: int = Field(8 * 1024 * 1024, gt=0)
    compile_timeout: float = Field(120.0, gt=0)

    def build(self) -> ExecutionLimits:
        return ExecutionLimits(**self.model_dump())


class RewardSection(_Strict):
    gate: Literal["aggressive", "conservative", "discrete", "linear"] = "aggressive"
    lam: float = Field(DEFAULT_LAMBDA, alias="lambda")
    r0: float = Field(DEFAULT_R0, ge=0)
    advantage_std: Literal["population", "sample"] = "population"
    eps_guard: float = Field(DEFAULT_EPS_GUARD, gt=0)

    model_config = ConfigDict(extra="forbid", populate_by_name=True)

    @model_validator(mode="after")
    def _lambda_ok(self) -> "RewardSection":
        if self.gate in ("aggressive", "conservative") and not self.lam > 1:
            raise ValueError(f"lambda must be > 1 for the {self.gate} gate")
        return self

    def build(self) -> RewardConfig:
        return RewardConfig(
            gate=Gate(self.gate, self.lam),
            format_reward_r0=self.r0,
            advantage_std=self.advantage_std,
            eps_guard=self.eps_guard,
        )


class EndpointSection(_Strict):
    base_url: str
    model_name: str
    api_key_env_var: str = "OPENAI_API_KEY"
    temperature: float = Field(0.0, ge=0)
    max_response_tokens: int = Field(16384, gt=0)
    request_timeout: float = Field(600.0, gt=0)
    max_retries: int = Field(3, ge=0)
    max_in_flight: int = Field(8, ge=1)

    def build(self, paper_faithful: bool = False) -> ModelEndpointConfig:
        return ModelEndpointConfig(**self.model_dump(), paper_faithful=paper_faithful)


class HarnessConfig(_Strict):
    runtime_registry: str | None = None
    workspace_root: str | None = None
    workers: int = Field(default_factory=lambda: min(8, os.cpu_count() or 1), ge=1)
    comparison_policy: Literal["default", "bit-exact"] = "default"
    strict_runtimes: bool = False
    paper_faithful: bool = False
    limits: LimitsSection = Field(default_factory=LimitsSection)
    reward: RewardSection = Field(default_factory=RewardSection)
    models: dict[str, EndpointSection] = Field(default_factory=dict)

    @model_validator(mode="after")
    def _faithful_temperature(self) -> "HarnessConfig":
        if self.paper_faithful:
            for name, ep in self.models.items():
                if ep.temperature != 0:
                    raise ValueError(f"models.{name}.temperature must be 0 when paper_faithful is on")
        return self

    @property
    def policy(self) -> ComparisonPolicy:
        return ComparisonPolicy(self.comparison_policy)

    def endpoint(self, name: str | None = None) -> ModelEndpointConfig:
        if not self.models:
            raise ConfigError("no model endpoints configured (models: section is empty)")
        if name is None:
            if len(self.models) != 1:
                raise ConfigError(f"several endpoints configured, pick one of: {', '.join(self.models)}")
            name = next(iter(self.models))
        if name not in self.models:
            raise ConfigError(f"unknown model endpoint {name!r}")
        return self.models[name].build(self.paper_faithful)


def _format_errors(source: str, exc: ValidationError) -> str:
    lines = [f"invalid configuration in {source}:"]
    for err in exc.errors():
        loc = ".".join(str(p) for p in err["loc"]) or "<root>"
        lines.append(f"  {loc}: {err['msg']}")
    return "\n".join(lines)


def load_config(path: str | os.PathLike | None = None) -> HarnessConfig:
    """Load from ``path``, else $HARNESS_CONFIG, else defaults."""
    path = path or os.environ.get(CONFIG_ENV_VAR)
    if not path:
        return HarnessConfig()
    try:
        with open(path, encoding="utf-8") as fh:
            data = yaml.safe_load(fh) or {}
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except yaml.YAMLError as exc:
        raise ConfigError(f"cannot parse config {path}: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: top level must be a mapping")
    try:
        return HarnessConfig.model_validate(data)
    except ValidationError as exc:
        raise ConfigError(_format_errors(str(path), exc)) from None
