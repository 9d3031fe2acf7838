"""Pure-Python kernels.

Arithmetic mirrors ``_ckernels.pyx`` operation for operation so that both
backends return bit-identical results (libm is shared, no FMA contraction).
"""
import math

import numpy as np

INV_PHI = 0.6180339887498949
_NUDGES = 8


def _rate(p, h, noise, bandwidth):
    return bandwidth * math.log2(1.0 + p * h / noise)


def _comm_delay(p, size_bits, h, noise, bandwidth):
    r = _rate(p, h, noise, bandwidth)
    if r <= 0.0:
        return math.inf
    return size_bits / r


def _power_objective(p, size_bits, lam, h, noise, bandwidth):
    # variable part of the offloading cost: (1 + lam*p) * L / r(p)
    d = _comm_delay(p, size_bits, h, noise, bandwidth)
    return d + lam * (p * d)


def solve_local(cycles, deadline, f_max, e_max, kappa, lam):
    """Minimise C/f + lam*kappa*f**2 on [C/deadline, min(f_max, sqrt(e_max/kappa))].

    Returns ``(feasible, f, delay, energy, cost)``.
    """
    f_lo = cycles / deadline
    for _ in range(_NUDGES):
        if cycles / f_lo <= deadline:
            break
        f_lo = math.nextafter(f_lo, math.inf)
    f_hi = math.sqrt(e_max / kappa)
    for _ in range(_NUDGES):
        if kappa * (f_hi * f_hi) <= e_max:
            break
        f_hi = math.nextafter(f_hi, 0.0)
    if f_max < f_hi:
        f_hi = f_max
    if f_lo > f_hi:
        return False, math.nan, math.nan, math.nan, math.nan

    if lam > 0.0:
        f = (cycles / (2.0 * lam * kappa)) ** (1.0 / 3.0)
        if f < f_lo:
            f = f_lo
        elif f > f_hi:
            f = f_hi
    else:
        f = f_hi
    delay = cycles / f
    energy = kappa * (f * f)
    return True, f, delay, energy, delay + lam * energy


def solve_power(size_bits, t_fixed, deadline, lam, h, noise, bandwidth,
                p_max, e_max, tol, max_iter, bisect_iter):
    """Minimise t_fixed + (1 + lam*p) * L / r(p) subject to delay and energy caps.

    Returns ``(feasible, p, delay, energy, cost)`` where ``delay`` includes
    ``t_fixed`` and ``energy`` is the transmission energy only.
    """
    budget = deadline - t_fixed
    if budget <= 0.0:
        return False, math.nan, math.nan, math.nan, math.nan

    # smallest power meeting the deadline, from the inverted rate formula
    expo = size_bits / (bandwidth * budget)
    if expo > 1000.0:
        return False, math.nan, math.nan, math.nan, math.nan
    p_lo = (2.0 ** expo - 1.0) * noise / h
    if p_lo <= 0.0:
        p_lo = 5e-324
    for _ in range(_NUDGES):
        if t_fixed + _comm_delay(p_lo, size_bits, h, noise, bandwidth) <= deadline:
            break
        p_lo = math.nextafter(p_lo, math.inf)
    if p_lo > p_max:
        return False, math.nan, math.nan, math.nan, math.nan

    # largest power within the energy cap; comm energy is increasing in p
    if p_max * _comm_delay(p_max, size_bits, h, noise, bandwidth) <= e_max:
        p_hi = p_max
    else:
        lo = 0.0
        hi = p_max
        for _ in range(bisect_iter):
            mid = 0.5 * (lo + hi)
            if mid * _comm_delay(mid, size_bits, h, noise, bandwidth) <= e_max:
                lo = mid
            else:
                hi = mid
        p_hi = lo
    if p_lo > p_hi:
        return False, math.nan, math.nan, math.nan, math.nan

    # golden-section search on the unimodal objective
    a = p_lo
    b = p_hi
    c = b - INV_PHI * (b - a)
    d = a + INV_PHI * (b - a)
    fc = _power_objective(c, size_bits, lam, h, noise, bandwidth)
    fd = _power_objective(d, size_bits, lam, h, noise, bandwidth)
    it = 0
    while it < max_iter and (b - a) > tol * b:
        if fc < fd:
            b = d
            d = c
            fd = fc
            c = b - INV_PHI * (b - a)
            fc = _power_objective(c, size_bits, lam, h, noise, bandwidth)
        else:
            a = c
            c = d
            fc = fd
            d = a + INV_PHI * (b - a)
            fd = _power_objective(d, size_bits, lam, h, noise, bandwidth)
        it += 1
    if fc < fd:
        p, best = c, fc
    else:
        p, best = d, fd
    f_lo = _power_objective(p_lo, size_bits, lam, h, noise, bandwidth)
    if f_lo <= best:
        p, best = p_lo, f_lo
    f_hi = _power_objective(p_hi, size_bits, lam, h, noise, bandwidth)
    if f_hi < best:
        p, best = p_hi, f_hi

    comm = _comm_delay(p, size_bits, h, noise, bandwidth)
    energy = p * comm
    if energy > e_max:
        p = p_hi
        comm = _comm_delay(p, size_bits, h, noise, bandwidth)
        energy = p * comm
    delay = t_fixed + comm
    return True, p, delay, energy, delay + lam * energy


def adam_step(params, grad, m, v, lr, beta1, beta2, eps, bc1, bc2):
    """In-place Adam update of ``params``, ``m`` and ``v`` (float64 arrays)."""
    m *= beta1
    m += (1.0 - beta1) * grad
    v *= beta2
    v += (1.0 - beta2) * (grad * grad)
    params -= lr * (m / bc1) / (np.sqrt(v / bc2) + eps)
