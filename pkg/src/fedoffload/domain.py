"""Plain data types shared by the environment and the subproblem solvers."""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass

from .errors import ConfigError


class Action(enum.IntEnum):
    """Offloading decision; exactly one per step."""

    LOCAL = 0
    EDGE = 1
    CLOUD = 2


N_ACTIONS = len(Action)


@dataclass(frozen=True)
class TaskSpec:
    size_bits: float
    cpu_cycles: float
    deadline_s: float

    def __post_init__(self):
        for name in ("size_bits", "cpu_cycles", "deadline_s"):
            val = getattr(self, name)
            if not (math.isfinite(val) and val > 0):
                raise ConfigError(f"TaskSpec.{name} must be positive and finite, got {val!r}")


@dataclass(frozen=True)
class DeviceProfile:
    """Static per-device limits.

    ``e_max`` is a per-step energy cap in joules, ``kappa`` the effective
    switched capacitance and ``lambda_weight`` converts joules to seconds in
    the cost.
    """

    f_max: float
    e_max: float
    p_max: float
    kappa: float
    lambda_weight: float
    distance_m: float

    def __post_init__(self):
        for name in ("f_max", "e_max", "p_max", "kappa", "distance_m"):
            val = getattr(self, name)
            if not (math.isfinite(val) and val > 0):
                raise ConfigError(f"DeviceProfile.{name} must be positive and finite, got {val!r}")
        if not (math.isfinite(self.lambda_weight) and self.lambda_weight >= 0):
            raise ConfigError(f"DeviceProfile.lambda_weight must be >= 0, got {self.lambda_weight!r}")

    @property
    def selection_metric(self) -> float:
        """d * P_max / F_max, the per-device scalar used for device selection."""
        return self.distance_m * self.p_max / self.f_max


@dataclass(frozen=True)
class RadioParams:
    bandwidth_hz: float = 1e6
    noise_w: float = 1e-13

    def __post_init__(self):
        if not (self.bandwidth_hz > 0 and self.noise_w > 0):
            raise ConfigError("RadioParams: bandwidth and noise must be positive")


@dataclass(frozen=True)
class ServerParams:
    f_edge: float = 1e10
    f_cloud: float = 1e11
    psi_s: float = 0.2

    def __post_init__(self):
        if not self.f_edge > 0:
            raise ConfigError("ServerParams.f_edge must be positive")
        if not self.f_cloud >= self.f_edge:
            raise ConfigError("ServerParams.f_cloud must be >= f_edge")
        if not self.psi_s >= 0:
            raise ConfigError("ServerParams.psi_s must be >= 0")
