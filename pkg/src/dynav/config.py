"""Run configuration with defaults, file loading, and flag precedence."""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, fields, replace
from typing import Optional

from .errors import ConfigError


@dataclass(frozen=True)
class RunConfig:
    """Free parameters of the pipeline.  Flags beat the config file, which
    beats these defaults."""

    alpha: float = 0.8                 # boundary safety scale, (0, 1]
    theta_delta_deg: float = 15.0      # min angular gap between candidates
    r_min: float = 0.1                 # drop candidates shorter than this, meters
    tau_stop: float = 0.6              # stop-confidence threshold
    success_threshold_m: float = 0.3   # distance to goal boundary counting as success
    visibility_required: bool = False  # success additionally needs the goal in view
    d_max: float = 10.0                # sensing range, meters
    n_rays: int = 181
    fov_deg: float = 131.0
    agent_radius: float = 0.17
    avoid_clearance_m: Optional[float] = None  # default: agent_radius + 0.15
    hazard_clearance_m: float = 0.5
    epsilon_mask: float = 0.0          # per-ray traversability corruption probability
    memory_enabled: bool = True
    memory_budget: int = 12            # clauses in a rendered memory excerpt
    memory_hops: int = 2
    seed: int = 0
    workers: int = 1
    max_steps: int = 200               # per-goal step budget
    max_distance_m: float = 200.0      # per-goal distance budget
    backend: str = "oracle"            # "oracle" | "remote"
    endpoint: Optional[str] = None
    timeout_ms: int = 10_000
    max_retries: int = 2
    max_backend_failures: int = 5      # consecutive failures before aborting

    def __post_init__(self):
        if not 0.0 < self.alpha <= 1.0:
            raise ConfigError("alpha must lie in (0, 1]")
        if self.theta_delta_deg < 0 or self.tau_stop < 0 or self.tau_stop > 1:
            raise ConfigError("theta_delta_deg must be >= 0 and tau_stop in [0, 1]")
        if self.success_threshold_m < 0 or self.d_max <= 0 or self.n_rays < 2:
            raise ConfigError("thresholds and sensing parameters must be positive")
        if self.r_min < 0 or self.agent_radius <= 0:
            raise ConfigError("r_min must be >= 0 and agent_radius positive")
        if not 0.0 <= self.epsilon_mask <= 1.0:
            raise ConfigError("epsilon_mask must lie in [0, 1]")
        if self.workers < 1 or self.max_steps < 1 or self.max_distance_m <= 0:
            raise ConfigError("workers and budgets must be positive")
        if self.backend not in ("oracle", "remote"):
            raise ConfigError(f"unknown backend {self.backend!r}")
        if self.backend == "remote" and not self.endpoint:
            raise ConfigError("remote backend needs --endpoint")

    # radians views used throughout the geometry code
    @property
    def theta_delta(self) -> float:
        return math.radians(self.theta_delta_deg)

    @property
    def fov(self) -> float:
        return math.radians(self.fov_deg)

    @property
    def avoid_clearance(self) -> float:
        if self.avoid_clearance_m is not None:
            return self.avoid_clearance_m
        return self.agent_radius + 0.15

    def with_overrides(self, **kwargs) -> "RunConfig":
        clean = {k: v for k, v in kwargs.items() if v is not None}
        return replace(self, **clean) if clean else self


_FIELDS = {f.name for f in fields(RunConfig)}


def load_config(path: Optional[str] = None, overrides: Optional[dict] = None) -> RunConfig:
    """Defaults, then config-file values, then explicit flag overrides."""
    values: dict = {}
    if path:
        try:
            with open(path) as fh:
                raw = json.load(fh)
        except json.JSONDecodeError as e:
            raise ConfigError(f"{path}:{e.lineno}:{e.colno}: {e.msg}") from e
        except OSError as e:
            raise ConfigError(f"cannot read config file: {e}") from e
        if not isinstance(raw, dict):
            raise ConfigError(f"{path}: config must be a JSON object")
        unknown = set(raw) - _FIELDS
        if unknown:
            raise ConfigError(f"{path}: unknown config keys: {sorted(unknown)}")
        values.update(raw)
    for key, val in (overrides or {}).items():
        if val is not None:
            values[key] = val
    try:
        return RunConfig(**values)
    except TypeError as e:
        raise ConfigError(str(e)) from e
