"""Federated training loop: broadcast, select, train locally, average."""
from __future__ import annotations

import hashlib
import logging
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .ddqn_agent import AgentConfig, DDQNAgent
from .domain import DeviceProfile
from .env_sim import EnvConfig, OffloadingEnv
from .errors import ConfigError, UsageError
from .neural import ParamVector, init_network, save_checkpoint

log = logging.getLogger(__name__)

FED_MODES = ("fed-ddqn", "fed-dqn", "dist-ddqn")


@dataclass(frozen=True)
class FedConfig:
    n_devices: int = 20
    n_selected: int = 5
    n_rounds: int = 60
    mode: str = "fed-ddqn"

    def __post_init__(self):
        if self.n_devices < 1:
            raise ConfigError(f"n_devices must be >= 1, got {self.n_devices}")
        if not 1 <= self.n_selected <= self.n_devices:
            raise ConfigError(
                f"n_selected must be in [1, n_devices={self.n_devices}], got {self.n_selected}")
        if self.n_rounds < 1:
            raise ConfigError(f"n_rounds must be >= 1, got {self.n_rounds}")
        if self.mode not in FED_MODES:
            raise ConfigError(f"mode must be one of {FED_MODES}, got {self.mode!r}")

    @property
    def federated(self) -> bool:
        return self.mode.startswith("fed-")

    @property
    def target_mode(self) -> str:
        return "dqn" if self.mode == "fed-dqn" else "ddqn"


@dataclass
class RoundReport:
    round: int
    selected: List[int]
    episode_costs: Dict[int, float]
    global_params_id: str
    wall_time_s: float = field(default=0.0, compare=False)

    @property
    def mean_cost(self) -> float:
        return float(np.mean([self.episode_costs[i] for i in self.selected]))


def params_id(params: ParamVector) -> str:
    return hashlib.sha1(params.values.tobytes()).hexdigest()[:16]


def select_devices(profiles: Sequence[DeviceProfile], n_selected: int) -> List[int]:
    """Pick the devices whose d*P_max/F_max lies farthest from the population mean.

    Ties go to the lower id.  Returned ids are sorted.
    """
    n = len(profiles)
    if not 1 <= n_selected <= n:
        raise UsageError(f"cannot select {n_selected} of {n} devices")
    m = np.array([p.selection_metric for p in profiles])
    dev = np.abs(m - m.mean())
    # lexsort: last key is primary
    order = np.lexsort((np.arange(n), -dev))
    return sorted(int(i) for i in order[:n_selected])


def aggregate_fedavg(params: Sequence[ParamVector]) -> ParamVector:
    """Unweighted elementwise mean.

    Values are sorted per coordinate before summation, so the result does not
    depend on the order of ``params``; it is clipped to the per-coordinate
    [min, max] to absorb rounding.
    """
    if not params:
        raise UsageError("nothing to aggregate")
    sizes = params[0].sizes
    if any(p.sizes != sizes for p in params):
        raise UsageError("cannot aggregate parameter vectors of different shapes")
    if len(params) == 1:
        return params[0].copy()
    stack = np.sort(np.stack([p.values for p in params]), axis=0)
    mean = stack.sum(axis=0) / len(params)
    return ParamVector(np.clip(mean, stack[0], stack[-1]), sizes)


def run_episode(env: OffloadingEnv, agent: DDQNAgent, device: int) -> float:
    """One episode on ``device``; returns the mean step cost."""
    obs = env.reset_device(device)
    done = obs.terminal
    total, steps = 0.0, 0
    while not done:
        a = agent.select_action(obs.vector)
        out, nxt, done = env.step(device, a)
        agent.remember(obs.vector, a, out.cost, nxt.vector, nxt.terminal)
        agent.learn_step()
        total += out.cost
        steps += 1
        obs = nxt
    return total / steps if steps else 0.0


def run_round(global_params: ParamVector, env: OffloadingEnv, agents: Sequence[DDQNAgent],
              fed: FedConfig, round_index: int,
              selected: Optional[Sequence[int]] = None) -> Tuple[ParamVector, RoundReport]:
    t0 = time.perf_counter()
    if fed.federated:
        for agent in agents:
            agent.set_params(global_params)
    if selected is None:
        selected = select_devices(env.profiles, fed.n_selected)
    costs = {}
    for i in selected:
        agents[i].start_round(round_index)
        costs[i] = run_episode(env, agents[i], i)
    if fed.federated:
        new_global = aggregate_fedavg([agents[i].online for i in selected])
    else:
        new_global = global_params
    report = RoundReport(round_index, list(selected), costs, params_id(new_global),
                         time.perf_counter() - t0)
    return new_global, report


def build(env_config: EnvConfig, agent_config: AgentConfig, fed: FedConfig, seed: int):
    """Environment, global model and one agent per device, all derived from ``seed``."""
    if env_config.n_devices != fed.n_devices:
        raise ConfigError("env and federation disagree on n_devices")
    if agent_config.target_mode != fed.target_mode:
        agent_config = AgentConfig(**{**agent_config.__dict__, "target_mode": fed.target_mode})
    env = OffloadingEnv(env_config)
    env.reset(seed)
    root = np.random.SeedSequence([seed % 2**64, 0xFED])
    init_seq, *agent_seqs = root.spawn(1 + fed.n_devices)
    global_params = init_network(agent_config.architecture, np.random.default_rng(init_seq))
    agents = [DDQNAgent(agent_config, np.random.default_rng(s), global_params)
              for s in agent_seqs]
    return env, global_params, agents


def run_training(env_config: EnvConfig, agent_config: AgentConfig, fed: FedConfig,
                 seed: int, checkpoint_dir=None) -> List[RoundReport]:
    """Run ``fed.n_rounds`` rounds in the configured mode.

    In ``dist-ddqn`` mode nothing is broadcast or averaged: the participating
    devices (the same set federated modes would select) keep their own models.
    """
    env, global_params, agents = build(env_config, agent_config, fed, seed)
    selected = select_devices(env.profiles, fed.n_selected)
    if checkpoint_dir is not None:
        checkpoint_dir = Path(checkpoint_dir)
        checkpoint_dir.mkdir(parents=True, exist_ok=True)
    reports = []
    for r in range(fed.n_rounds):
        global_params, rep = run_round(global_params, env, agents, fed, r, selected)
        reports.append(rep)
        log.debug("seed %s %s round %d mean cost %.4f", seed, fed.mode, r, rep.mean_cost)
        if checkpoint_dir is not None:
            save_checkpoint(global_params, checkpoint_dir / f"global_round{r:04d}.txt")
    return reports
