"""Experiment configuration: flat ``key = value`` text files.

Values are Python literals (numbers, strings, lists); bare words are read as
strings.  ``#`` starts a comment.  Unknown keys are rejected.
"""
from __future__ import annotations

import ast
import dataclasses
from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import List, Optional, Tuple

from .ddqn_agent import AgentConfig
from .env_sim import EnvConfig
from .errors import ConfigError, ConfigNotFoundError, ConfigParseError, ConfigValidationError
from .federation import FED_MODES, FedConfig
from .neural import BASE_HIDDEN, layer_spec

SWEEP_VARS = ("batch_size", "architecture", "f_update")


@dataclass(frozen=True)
class ExperimentConfig:
    # federation
    n_devices: int = 100
    n_selected: int = 20
    n_rounds: int = 200
    modes: Tuple[str, ...] = ("fed-ddqn",)
    # harness
    seed: int = 0
    n_seeds: int = 1
    smoothing_window: int = 10
    out_dir: str = "runs"
    # agent
    gamma: float = 0.9
    batch_size: int = 30
    f_update: int = 20
    epsilon0: float = 1.0
    epsilon_decay: float = 0.95
    epsilon_min: float = 0.05
    memory_capacity: int = 10_000
    lr: float = 1e-3
    hidden: Tuple[int, ...] = BASE_HIDDEN
    # environment
    queue_size: int = 20
    t_max: int = 200
    bits_lo: float = 2e5
    bits_hi: float = 2e6
    cpb_lo: float = 20.0
    cpb_hi: float = 300.0
    deadline_lo: float = 0.4
    deadline_hi: float = 1.5
    path_loss_ref: float = 1e-3
    path_loss_exp: float = 3.0
    distance_lo: float = 10.0
    distance_hi: float = 200.0
    f_max: float = 1e9
    p_max_dbm: float = 23.0
    e_max: Optional[float] = None
    limit_jitter: float = 0.3
    kappa: float = 1e-27
    lambda_weight: float = 1.0
    bandwidth_hz: float = 1e6
    noise_w: float = 1e-13
    f_edge: float = 1e10
    f_cloud: float = 1e11
    psi_s: float = 0.2

    def __post_init__(self):
        object.__setattr__(self, "modes", tuple(self.modes))
        object.__setattr__(self, "hidden", tuple(int(h) for h in self.hidden))
        if not self.modes:
            raise ConfigValidationError("modes: at least one mode is required")
        for m in self.modes:
            if m not in FED_MODES:
                raise ConfigValidationError(f"modes: unknown mode {m!r} (choose from {FED_MODES})")
        if self.n_seeds < 1:
            raise ConfigValidationError(f"n_seeds must be >= 1, got {self.n_seeds}")
        if self.smoothing_window < 1:
            raise ConfigValidationError(
                f"smoothing_window must be >= 1, got {self.smoothing_window}")
        # building the component configs runs their bounds checks
        try:
            self.env_config()
            self.agent_config()
            self.fed_config(self.modes[0])
        except ConfigValidationError:
            raise
        except ConfigError as exc:
            raise ConfigValidationError(str(exc)) from None

    @property
    def seeds(self) -> List[int]:
        return [self.seed + k for k in range(self.n_seeds)]

    def env_config(self) -> EnvConfig:
        names = {f.name for f in fields(EnvConfig)}
        return EnvConfig(**{k: v for k, v in self.as_dict().items() if k in names})

    def agent_config(self, mode: str = "fed-ddqn") -> AgentConfig:
        return AgentConfig(
            gamma=self.gamma, batch_size=self.batch_size, f_update=self.f_update,
            epsilon0=self.epsilon0, epsilon_decay=self.epsilon_decay,
            epsilon_min=self.epsilon_min, memory_capacity=self.memory_capacity, lr=self.lr,
            architecture=layer_spec(self.hidden),
            target_mode="dqn" if mode == "fed-dqn" else "ddqn",
        )

    def fed_config(self, mode: str) -> FedConfig:
        return FedConfig(self.n_devices, self.n_selected, self.n_rounds, mode)

    def as_dict(self) -> dict:
        return {f.name: getattr(self, f.name) for f in fields(self)}

    def replace(self, **changes) -> "ExperimentConfig":
        return dataclasses.replace(self, **changes)


KNOWN_KEYS = tuple(f.name for f in fields(ExperimentConfig))


def _parse_value(raw: str):
    try:
        return ast.literal_eval(raw)
    except (ValueError, SyntaxError):
        if raw.replace("-", "").replace("_", "").isalnum():
            return raw
        raise


def parse_config(text: str, source: str = "<string>") -> ExperimentConfig:
    values = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigParseError(f"{source}:{lineno}: expected 'key = value', got {line!r}")
        key, raw = (s.strip() for s in line.split("=", 1))
        if not key:
            raise ConfigParseError(f"{source}:{lineno}: empty key")
        try:
            values[key] = _parse_value(raw)
        except (ValueError, SyntaxError):
            raise ConfigParseError(f"{source}:{lineno}: cannot parse value {raw!r}") from None
    return make_config(values)


def make_config(values: dict) -> ExperimentConfig:
    unknown = sorted(set(values) - set(KNOWN_KEYS))
    if unknown:
        raise ConfigValidationError(f"unknown config key(s): {', '.join(unknown)}")
    values = dict(values)
    if isinstance(values.get("modes"), str):
        values["modes"] = (values["modes"],)
    try:
        return ExperimentConfig(**values)
    except ConfigError:
        raise
    except (TypeError, ValueError) as exc:
        raise ConfigValidationError(str(exc)) from None


def load_config(path) -> ExperimentConfig:
    path = Path(path)
    if not path.is_file():
        raise ConfigNotFoundError(f"config file not found: {path}")
    return parse_config(path.read_text(), str(path))


def format_config(cfg: ExperimentConfig) -> str:
    lines = ["# effective configuration (all keys, defaults filled)"]
    for key, val in cfg.as_dict().items():
        if isinstance(val, tuple):
            val = list(val)
        lines.append(f"{key} = {val!r}")
    return "\n".join(lines) + "\n"


def write_config(cfg: ExperimentConfig, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(format_config(cfg))
    return path
