"""Multi-device offloading environment.

Every device owns a task queue, a fading channel and its own random stream
spawned from the master seed, so devices can be stepped in any order (or in
parallel) without changing results.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np

from .domain import N_ACTIONS, Action, DeviceProfile, RadioParams, ServerParams, TaskSpec
from .errors import ConfigError, UsageError
from .subsolvers import solve_step

__all__ = [
    "Action", "ChannelState", "DeviceEnv", "DeviceProfile", "EnvConfig",
    "Observation", "OffloadingEnv", "StepOutcome", "TaskSpec", "dbm_to_watts",
    "make_profiles",
]


def dbm_to_watts(dbm: float) -> float:
    return 10.0 ** ((dbm - 30.0) / 10.0)


@dataclass(frozen=True)
class EnvConfig:
    n_devices: int = 20
    queue_size: int = 20
    t_max: int = 200
    # task generator bounds
    bits_lo: float = 2e5
    bits_hi: float = 2e6
    cpb_lo: float = 20.0
    cpb_hi: float = 300.0
    deadline_lo: float = 0.4
    deadline_hi: float = 1.5
    # channel: A * d**-alpha * Exp(1)
    path_loss_ref: float = 1e-3
    path_loss_exp: float = 3.0
    distance_lo: float = 10.0
    distance_hi: float = 200.0
    # device limits (nominal values, jittered per device)
    f_max: float = 1e9
    p_max_dbm: float = 23.0
    e_max: Optional[float] = None  # defaults to p_max * 1 s
    limit_jitter: float = 0.3
    kappa: float = 1e-27
    lambda_weight: float = 1.0
    # radio and servers
    bandwidth_hz: float = 1e6
    noise_w: float = 1e-13
    f_edge: float = 1e10
    f_cloud: float = 1e11
    psi_s: float = 0.2

    def __post_init__(self):
        self.validate()

    @property
    def p_max(self) -> float:
        return dbm_to_watts(self.p_max_dbm)

    @property
    def e_max_nominal(self) -> float:
        return self.p_max * 1.0 if self.e_max is None else self.e_max

    @property
    def radio(self) -> RadioParams:
        return RadioParams(self.bandwidth_hz, self.noise_w)

    @property
    def servers(self) -> ServerParams:
        return ServerParams(self.f_edge, self.f_cloud, self.psi_s)

    def validate(self):
        if self.n_devices < 1:
            raise ConfigError(f"n_devices must be >= 1, got {self.n_devices}")
        if self.queue_size < 0:
            raise ConfigError(f"queue_size must be >= 0, got {self.queue_size}")
        if self.t_max < 1:
            raise ConfigError(f"t_max must be >= 1, got {self.t_max}")
        positive = ("bits_lo", "cpb_lo", "deadline_lo", "path_loss_ref", "path_loss_exp",
                    "distance_lo", "f_max", "kappa", "bandwidth_hz", "noise_w",
                    "f_edge", "f_cloud")
        for name in positive:
            val = getattr(self, name)
            if not (math.isfinite(val) and val > 0):
                raise ConfigError(f"{name} must be positive, got {val!r}")
        for lo, hi in (("bits_lo", "bits_hi"), ("cpb_lo", "cpb_hi"),
                       ("deadline_lo", "deadline_hi"), ("distance_lo", "distance_hi")):
            if getattr(self, hi) < getattr(self, lo):
                raise ConfigError(f"{hi} must be >= {lo}")
        if self.e_max is not None and not self.e_max > 0:
            raise ConfigError(f"e_max must be positive, got {self.e_max!r}")
        if not 0 <= self.limit_jitter < 1:
            raise ConfigError(f"limit_jitter must be in [0, 1), got {self.limit_jitter}")
        if not self.lambda_weight >= 0:
            raise ConfigError(f"lambda_weight must be >= 0, got {self.lambda_weight}")
        if not self.psi_s >= 0:
            raise ConfigError(f"psi_s must be >= 0, got {self.psi_s}")
        if self.f_cloud < self.f_edge:
            raise ConfigError("f_cloud must be >= f_edge")

    def penalty(self, task: TaskSpec, profile: DeviceProfile) -> float:
        """Cost of an infeasible step; exceeds every feasible cost."""
        return 2.0 * (task.deadline_s + profile.lambda_weight * profile.e_max)

    @property
    def obs_scale(self) -> np.ndarray:
        h_ref = self.path_loss_ref * self.distance_lo ** (-self.path_loss_exp)
        return np.array([
            max(self.queue_size, 1), h_ref, self.bits_hi, self.cpb_hi * self.bits_hi,
            self.e_max_nominal, self.f_max,
        ])


@dataclass(frozen=True)
class ChannelState:
    path_gain: float
    rng_stream: int


@dataclass(frozen=True)
class Observation:
    queue_len: int
    path_gain: float
    task_bits: float
    task_cycles: float
    e_max: float
    f_max: float
    vector: np.ndarray = field(repr=False, compare=False)

    @property
    def terminal(self) -> bool:
        return self.queue_len == 0

    def __eq__(self, other):
        if not isinstance(other, Observation):
            return NotImplemented
        return (self.queue_len, self.path_gain, self.task_bits, self.task_cycles,
                self.e_max, self.f_max) == (other.queue_len, other.path_gain,
                                            other.task_bits, other.task_cycles,
                                            other.e_max, other.f_max)

    __hash__ = None


@dataclass(frozen=True)
class StepOutcome:
    cost: float
    delay_s: Optional[float]
    energy_j: Optional[float]
    feasible: bool
    resource: Optional[float]
    action: Action


def make_profiles(config: EnvConfig, rng: np.random.Generator) -> List[DeviceProfile]:
    """Heterogeneous devices: uniform distances, limits jittered around nominal."""
    n = config.n_devices
    dist = rng.uniform(config.distance_lo, config.distance_hi, size=n)
    j = config.limit_jitter
    f_mult = rng.uniform(1.0 - j, 1.0 + j, size=n)
    e_mult = rng.uniform(1.0 - j, 1.0 + j, size=n)
    return [
        DeviceProfile(
            f_max=float(config.f_max * f_mult[i]),
            e_max=float(config.e_max_nominal * e_mult[i]),
            p_max=config.p_max,
            kappa=config.kappa,
            lambda_weight=config.lambda_weight,
            distance_m=float(dist[i]),
        )
        for i in range(n)
    ]


class DeviceEnv:
    """Single-device state machine: task queue, channel and step counter."""

    def __init__(self, device_id: int, profile: DeviceProfile, config: EnvConfig,
                 rng: np.random.Generator):
        self.device_id = device_id
        self.profile = profile
        self.config = config
        self.rng = rng
        self._radio = config.radio
        self._servers = config.servers
        self._scale = config.obs_scale
        self.queue: List[TaskSpec] = []
        self.channel = ChannelState(0.0, device_id)
        self.t = 0
        self.done = True

    def generate_task(self) -> TaskSpec:
        c = self.config
        bits = self.rng.uniform(c.bits_lo, c.bits_hi)
        cpb = self.rng.uniform(c.cpb_lo, c.cpb_hi)
        deadline = self.rng.uniform(c.deadline_lo, c.deadline_hi)
        return TaskSpec(float(bits), float(cpb * bits), float(deadline))

    def update_channel(self) -> ChannelState:
        c = self.config
        fading = self.rng.exponential(1.0)
        gain = c.path_loss_ref * self.profile.distance_m ** (-c.path_loss_exp) * fading
        # an exact zero draw would make the rate degenerate
        gain = max(float(gain), 1e-300)
        self.channel = ChannelState(gain, self.device_id)
        return self.channel

    def reset(self) -> Observation:
        """Start a new episode with a fresh queue; the random stream continues."""
        self.queue = [self.generate_task() for _ in range(self.config.queue_size)]
        self.t = 0
        self.update_channel()
        self.done = not self.queue
        return self.observe()

    def observe(self) -> Observation:
        if self.queue:
            head = self.queue[0]
            bits, cycles = head.size_bits, head.cpu_cycles
        else:
            bits = cycles = 0.0
        raw = (len(self.queue), self.channel.path_gain, bits, cycles,
               self.profile.e_max, self.profile.f_max)
        vec = np.array(raw, dtype=float) / self._scale
        return Observation(*raw, vector=vec)

    def step(self, action) -> Tuple[StepOutcome, Observation, bool]:
        if self.done:
            raise UsageError(f"device {self.device_id}: step called on a finished episode")
        action = Action(action)
        task = self.queue[0]
        res = solve_step(task, action, self.channel.path_gain, self.profile,
                         self._radio, self._servers)
        if res.feasible:
            self.queue.pop(0)
            outcome = StepOutcome(res.cost, res.delay_s, res.energy_j, True,
                                  res.optimizer, action)
        else:
            # the task stays at the head of the queue
            outcome = StepOutcome(self.config.penalty(task, self.profile), None, None,
                                  False, None, action)
        self.t += 1
        self.update_channel()
        self.done = not self.queue or self.t >= self.config.t_max
        return outcome, self.observe(), self.done


class OffloadingEnv:
    """All devices of the network, built from one config and master seed."""

    n_actions = N_ACTIONS

    def __init__(self, config: EnvConfig, profiles: Optional[Sequence[DeviceProfile]] = None):
        self.config = config
        self._fixed_profiles = list(profiles) if profiles is not None else None
        if self._fixed_profiles is not None and len(self._fixed_profiles) != config.n_devices:
            raise ConfigError("number of profiles does not match n_devices")
        self.devices: List[DeviceEnv] = []
        self.seed: Optional[int] = None

    @property
    def profiles(self) -> List[DeviceProfile]:
        return [d.profile for d in self.devices]

    def reset(self, seed: int) -> List[Observation]:
        """Rebuild every device from ``seed`` and start an episode on each."""
        self.seed = seed
        root = np.random.SeedSequence(seed % 2**64)
        prof_seq, *dev_seqs = root.spawn(1 + self.config.n_devices)
        if self._fixed_profiles is not None:
            profiles = self._fixed_profiles
        else:
            profiles = make_profiles(self.config, np.random.default_rng(prof_seq))
        self.devices = [
            DeviceEnv(i, profiles[i], self.config, np.random.default_rng(dev_seqs[i]))
            for i in range(self.config.n_devices)
        ]
        return [d.reset() for d in self.devices]

    def reset_device(self, device: int) -> Observation:
        return self.devices[device].reset()

    def step(self, device: int, action) -> Tuple[StepOutcome, Observation, bool]:
        return self.devices[device].step(action)

    def update_channel(self, device: int) -> ChannelState:
        return self.devices[device].update_channel()

    def generate_task(self, device: int) -> TaskSpec:
        return self.devices[device].generate_task()
