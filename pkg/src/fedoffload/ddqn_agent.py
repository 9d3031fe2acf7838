"""Per-device double deep Q-learning agent.

Q-values are expected discounted *costs*, so the greedy action is the
argmin and the bootstrap action is chosen by argmin as well.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .domain import N_ACTIONS
from .errors import ConfigError, UsageError
from .neural import (
    N_FEATURES, AdamState, ParamVector, apply_update, forward, init_network, layer_spec,
    loss_and_gradients, validate_spec,
)

MODES = ("ddqn", "dqn")


@dataclass(frozen=True)
class AgentConfig:
    gamma: float = 0.9
    batch_size: int = 30
    f_update: int = 20
    epsilon0: float = 1.0
    epsilon_decay: float = 0.95
    epsilon_min: float = 0.05
    memory_capacity: int = 10_000
    lr: float = 1e-3
    architecture: tuple = layer_spec()
    target_mode: str = "ddqn"
    # actions 0..n_actions-1 are valid; the network always has N_ACTIONS outputs
    n_actions: int = N_ACTIONS

    def __post_init__(self):
        object.__setattr__(self, "architecture", validate_spec(self.architecture))
        if not 1 <= self.n_actions <= N_ACTIONS:
            raise ConfigError(f"n_actions must be in [1, {N_ACTIONS}], got {self.n_actions}")
        if not 0 <= self.gamma < 1:
            raise ConfigError(f"gamma must be in [0, 1), got {self.gamma}")
        if self.batch_size < 1:
            raise ConfigError(f"batch_size must be >= 1, got {self.batch_size}")
        if self.f_update < 1:
            raise ConfigError(f"f_update must be >= 1, got {self.f_update}")
        if not 0 <= self.epsilon_min <= self.epsilon0 <= 1:
            raise ConfigError("need 0 <= epsilon_min <= epsilon0 <= 1")
        if not 0 < self.epsilon_decay <= 1:
            raise ConfigError(f"epsilon_decay must be in (0, 1], got {self.epsilon_decay}")
        if self.memory_capacity < 1:
            raise ConfigError(f"memory_capacity must be >= 1, got {self.memory_capacity}")
        if not self.lr > 0:
            raise ConfigError(f"lr must be positive, got {self.lr}")
        if self.target_mode not in MODES:
            raise ConfigError(f"target_mode must be one of {MODES}, got {self.target_mode!r}")

    def epsilon_at(self, round_index: int) -> float:
        return max(self.epsilon_min, self.epsilon0 * self.epsilon_decay ** round_index)


@dataclass(frozen=True)
class Transition:
    state: np.ndarray
    action: int
    cost: float
    next_state: np.ndarray
    done: bool


class ReplayMemory:
    """Fixed-capacity FIFO ring of transitions stored column-wise."""

    def __init__(self, capacity: int, n_features: int = N_FEATURES):
        self.capacity = capacity
        self.states = np.zeros((capacity, n_features))
        self.actions = np.zeros(capacity, dtype=np.intp)
        self.costs = np.zeros(capacity)
        self.next_states = np.zeros((capacity, n_features))
        self.dones = np.zeros(capacity, dtype=bool)
        self.inserted = 0

    def __len__(self):
        return min(self.inserted, self.capacity)

    def push(self, state, action: int, cost: float, next_state, done: bool):
        if not 0 <= action < N_ACTIONS:
            raise UsageError(f"invalid action {action}")
        if not np.isfinite(cost):
            raise UsageError("transition cost must be finite")
        k = self.inserted % self.capacity
        self.states[k] = state
        self.actions[k] = action
        self.costs[k] = cost
        self.next_states[k] = next_state
        self.dones[k] = done
        self.inserted += 1

    def add(self, tr: Transition):
        self.push(tr.state, tr.action, tr.cost, tr.next_state, tr.done)

    def oldest_first(self):
        """Indices of stored transitions from oldest to newest."""
        n = len(self)
        start = self.inserted - n
        return [(start + i) % self.capacity for i in range(n)]

    def sample(self, batch_size: int, rng: np.random.Generator):
        idx = rng.integers(0, len(self), size=batch_size)
        return (self.states[idx], self.actions[idx], self.costs[idx],
                self.next_states[idx], self.dones[idx])


def bootstrap_targets(costs, next_q_online, next_q_target, dones, gamma: float,
                      mode: str = "ddqn", n_actions: int = N_ACTIONS) -> np.ndarray:
    """TD targets from precomputed next-state Q-values.

    ddqn: u + gamma * Q_target(s', argmin_a Q_online(s', a));
    dqn:  u + gamma * min_a Q_target(s', a); terminal rows get u.
    """
    costs = np.asarray(costs, dtype=float)
    if costs.size == 0:
        raise UsageError("empty batch")
    if mode == "ddqn":
        a_star = np.argmin(next_q_online[:, :n_actions], axis=1)
        boot = next_q_target[np.arange(len(a_star)), a_star]
    elif mode == "dqn":
        boot = np.min(next_q_target[:, :n_actions], axis=1)
    else:
        raise UsageError(f"unknown target mode {mode!r}")
    return np.where(dones, costs, costs + gamma * boot)


class DDQNAgent:
    def __init__(self, config: AgentConfig, rng: np.random.Generator,
                 params: Optional[ParamVector] = None):
        self.config = config
        self.rng = rng
        if params is None:
            params = init_network(config.architecture, rng)
        self.online = params.copy()
        self.target = params.copy()
        self.adam = AdamState.zeros(params.values.size, lr=config.lr)
        self.memory = ReplayMemory(config.memory_capacity)
        self.learn_steps = 0
        self.epsilon = config.epsilon0

    def set_params(self, params: ParamVector):
        """Overwrite online and target networks (federation broadcast)."""
        self.online = params.copy()
        self.target = params.copy()

    def start_round(self, round_index: int):
        self.epsilon = self.config.epsilon_at(round_index)

    def q_values(self, state) -> np.ndarray:
        return forward(self.online, state)

    def select_action(self, state) -> int:
        """Epsilon-greedy on costs; ties go to the lowest index."""
        n = self.config.n_actions
        if self.rng.random() < self.epsilon:
            return int(self.rng.integers(n))
        return int(np.argmin(self.q_values(state)[:n]))

    def remember(self, state, action, cost, next_state, done):
        self.memory.push(state, action, cost, next_state, done)

    def compute_targets(self, batch: Sequence[Transition] = None, mode: str = None, *,
                        costs=None, next_states=None, dones=None) -> np.ndarray:
        if batch is not None:
            if len(batch) == 0:
                raise UsageError("empty batch")
            costs = np.array([t.cost for t in batch], dtype=float)
            next_states = np.array([t.next_state for t in batch], dtype=float)
            dones = np.array([t.done for t in batch], dtype=bool)
        mode = self.config.target_mode if mode is None else mode
        if mode not in MODES:
            raise UsageError(f"unknown target mode {mode!r}")
        q_target = forward(self.target, next_states)
        q_online = forward(self.online, next_states) if mode == "ddqn" else None
        return bootstrap_targets(costs, q_online, q_target, dones, self.config.gamma, mode,
                                 self.config.n_actions)

    def learn_step(self) -> Optional[float]:
        """One optimiser update on a uniform minibatch.

        Returns the loss, or ``None`` (no update) while the memory holds
        fewer than ``batch_size`` transitions.
        """
        if len(self.memory) < self.config.batch_size:
            return None
        s, a, u, s2, d = self.memory.sample(self.config.batch_size, self.rng)
        targets = self.compute_targets(costs=u, next_states=s2, dones=d)
        loss, grad = loss_and_gradients(self.online, s, a, targets)
        self.online, self.adam = apply_update(self.online, grad, self.adam)
        self.learn_steps += 1
        if self.learn_steps % self.config.f_update == 0:
            self.sync_target()
        return loss

    def sync_target(self):
        self.target = self.online.copy()
        return self
