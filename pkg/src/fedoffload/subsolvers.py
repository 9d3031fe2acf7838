"""Per-step resource allocation subproblems.

Once the offloading decision is fixed, the immediate cost of a step is the
optimum of a single-variable problem: CPU frequency for local execution,
transmit power for edge/cloud execution.  The closed-form rate, delay and
energy primitives live here too, together with a brute-force grid oracle
used to cross-check the solvers.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from . import kernels
from .domain import Action, DeviceProfile, RadioParams, ServerParams, TaskSpec
from .errors import DomainError, InfeasibleInputError

GSS_TOL = 1e-9
GSS_MAX_ITER = 200
BISECT_ITER = 100


@dataclass(frozen=True)
class SolverResult:
    """Outcome of one subproblem.  ``optimizer`` is f (cycles/s) or p (W).

    For infeasible instances every numeric field is ``None``.
    """

    feasible: bool
    optimizer: Optional[float] = None
    cost: Optional[float] = None
    delay_s: Optional[float] = None
    energy_j: Optional[float] = None


INFEASIBLE = SolverResult(False)


def transmission_rate(p: float, h: float, radio: RadioParams) -> float:
    """Shannon rate B*log2(1 + p*h/noise) in bits/s."""
    if p < 0:
        raise DomainError(f"transmit power must be >= 0, got {p}")
    if h <= 0:
        raise DomainError(f"path gain must be > 0, got {h}")
    return radio.bandwidth_hz * math.log2(1.0 + p * h / radio.noise_w)


def comm_delay_energy(p: float, task: TaskSpec, h: float, radio: RadioParams):
    """Upload delay L/r and energy p*L/r of sending ``task`` at power ``p``."""
    if p == 0:
        raise InfeasibleInputError("zero transmit power gives infinite upload delay")
    rate = transmission_rate(p, h, radio)
    delay = task.size_bits / rate
    return delay, p * delay


def local_delay_energy(f: float, task: TaskSpec, profile: DeviceProfile):
    """Local execution delay C/f and energy kappa*f**2."""
    if not f > 0:
        raise DomainError(f"CPU frequency must be > 0, got {f}")
    return task.cpu_cycles / f, profile.kappa * (f * f)


def fixed_delay(task: TaskSpec, action: Action, servers: ServerParams) -> float:
    """Server-side delay that does not depend on transmit power."""
    if action == Action.EDGE:
        return task.cpu_cycles / servers.f_edge
    if action == Action.CLOUD:
        return task.cpu_cycles / servers.f_cloud + servers.psi_s
    raise DomainError(f"no fixed server delay for action {action!r}")


def solve_local_cpu(task: TaskSpec, profile: DeviceProfile) -> SolverResult:
    ok, f, delay, energy, cost = kernels.solve_local(
        task.cpu_cycles, task.deadline_s, profile.f_max, profile.e_max,
        profile.kappa, profile.lambda_weight)
    if not ok:
        return INFEASIBLE
    return SolverResult(True, f, cost, delay, energy)


def solve_transmit_power(task: TaskSpec, action: Action, h: float,
                         profile: DeviceProfile, radio: RadioParams,
                         servers: ServerParams) -> SolverResult:
    """Optimal transmit power for offloading ``task`` to the edge or the cloud.

    The deadline gives a closed-form lower bound on p, the energy cap an
    upper bound found by bisection (upload energy grows with p), and the
    cost is minimised in between by golden-section search.
    """
    if action == Action.LOCAL:
        raise DomainError("solve_transmit_power needs an offloading action")
    if not h > 0:
        raise DomainError(f"path gain must be > 0, got {h}")
    ok, p, delay, energy, cost = kernels.solve_power(
        task.size_bits, fixed_delay(task, action, servers), task.deadline_s,
        profile.lambda_weight, h, radio.noise_w, radio.bandwidth_hz,
        profile.p_max, profile.e_max, GSS_TOL, GSS_MAX_ITER, BISECT_ITER)
    if not ok:
        return INFEASIBLE
    return SolverResult(True, p, cost, delay, energy)


def solve_step(task: TaskSpec, action: Action, h: float, profile: DeviceProfile,
               radio: RadioParams, servers: ServerParams) -> SolverResult:
    if action == Action.LOCAL:
        return solve_local_cpu(task, profile)
    return solve_transmit_power(task, action, h, profile, radio, servers)


def grid_refine_oracle(objective: Callable[[np.ndarray], np.ndarray], lo: float,
                       hi: float, coarse_points: int = 201, refinements: int = 12):
    """Exhaustive grid minimisation with recursive zoom around the best point.

    ``objective`` must accept a 1-D float array and return an array of the
    same shape; non-finite values are treated as +inf.  Returns
    ``(argmin, min)``; ``min`` is ``inf`` if no grid point was finite.
    """
    if not (math.isfinite(lo) and math.isfinite(hi)) or not lo < hi:
        raise DomainError(f"empty or invalid interval [{lo}, {hi}]")
    if coarse_points < 3:
        raise DomainError("coarse_points must be >= 3")
    best_x, best_y = lo, math.inf
    a, b = lo, hi
    for _ in range(refinements + 1):
        xs = np.linspace(a, b, coarse_points)
        with np.errstate(all="ignore"):
            ys = np.asarray(objective(xs), dtype=float)
        ys = np.where(np.isfinite(ys), ys, np.inf)
        k = int(np.argmin(ys))
        if ys[k] < best_y:
            best_x, best_y = float(xs[k]), float(ys[k])
        if not math.isfinite(best_y):
            break
        step = (b - a) / (coarse_points - 1)
        a = max(lo, best_x - step)
        b = min(hi, best_x + step)
        if not a < b:
            break
    return best_x, best_y
