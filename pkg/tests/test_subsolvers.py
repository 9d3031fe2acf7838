import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from fedoffload import _pykernels, kernels
from fedoffload.domain import Action, DeviceProfile, RadioParams, ServerParams, TaskSpec
from fedoffload.errors import DomainError, InfeasibleInputError
from fedoffload.subsolvers import (
    comm_delay_energy, grid_refine_oracle, local_delay_energy, solve_local_cpu, solve_step,
    solve_transmit_power, transmission_rate,
)

from oracles import (
    local_objective, oracle_local, oracle_power, random_local_instance, random_power_instance,
)

RADIO = RadioParams(1e6, 1e-13)
SERVERS = ServerParams(1e10, 1e11, 0.2)


def profile(**kw):
    base = dict(f_max=1e9, e_max=1.0, p_max=0.1995, kappa=1e-27, lambda_weight=1.0,
                distance_m=50.0)
    base.update(kw)
    return DeviceProfile(**base)


# --- primitives -------------------------------------------------------------

def test_rate_snr_one_gives_bandwidth():
    assert transmission_rate(1e-7, 1e-6, RADIO) == pytest.approx(1e6, rel=1e-12)


def test_rate_snr_three_doubles():
    assert transmission_rate(3e-7, 1e-6, RADIO) == pytest.approx(2e6, rel=1e-12)


def test_rate_zero_power():
    assert transmission_rate(0.0, 1e-3, RADIO) == 0.0


def test_rate_rejects_negative_power():
    with pytest.raises(DomainError):
        transmission_rate(-1.0, 1e-6, RADIO)


def test_comm_delay_energy_unit_rate():
    task = TaskSpec(1e6, 1e8, 1.0)
    d, e = comm_delay_energy(0.1, task, 1e-12, RADIO)   # p*h/sigma^2 = 1
    assert d == pytest.approx(1.0, rel=1e-12)
    assert e == pytest.approx(0.1, rel=1e-12)


def test_comm_outputs_linear_in_size():
    d1, e1 = comm_delay_energy(0.05, TaskSpec(1e5, 1e7, 1.0), 1e-7, RADIO)
    d2, e2 = comm_delay_energy(0.05, TaskSpec(2e5, 1e7, 1.0), 1e-7, RADIO)
    assert d2 == pytest.approx(2 * d1, rel=1e-14)
    assert e2 == pytest.approx(2 * e1, rel=1e-14)


def test_comm_zero_power_is_infeasible_input():
    with pytest.raises(InfeasibleInputError):
        comm_delay_energy(0.0, TaskSpec(1e5, 1e7, 1.0), 1e-7, RADIO)


def test_comm_energy_increases_with_power():
    task = TaskSpec(1e5, 1e7, 1.0)
    energies = [comm_delay_energy(p, task, 1e-7, RADIO)[1] for p in np.linspace(0.01, 0.2, 20)]
    assert np.all(np.diff(energies) > 0)


def test_local_delay_energy_example():
    d, e = local_delay_energy(1e9, TaskSpec(1e6, 1e8, 1.0), profile())
    assert d == pytest.approx(0.1, rel=1e-15)
    assert e == pytest.approx(1e-9, rel=1e-15)


def test_local_scaling_laws():
    task, prof = TaskSpec(1e6, 1e8, 1.0), profile()
    d1, e1 = local_delay_energy(3e8, task, prof)
    d2, e2 = local_delay_energy(6e8, task, prof)
    assert d2 == pytest.approx(d1 / 2, rel=1e-15)
    assert e2 == pytest.approx(4 * e1, rel=1e-15)


@pytest.mark.parametrize("f", [0.0, -1.0])
def test_local_rejects_nonpositive_frequency(f):
    with pytest.raises(DomainError):
        local_delay_energy(f, TaskSpec(1e6, 1e8, 1.0), profile())


@given(p=st.floats(1e-6, 10.0), h=st.floats(1e-15, 1e-3), k=st.floats(1.001, 3.0))
def test_rate_strictly_increasing(p, h, k):
    assert transmission_rate(p * k, h, RADIO) > transmission_rate(p, h, RADIO)
    assert transmission_rate(p, h * k, RADIO) > transmission_rate(p, h, RADIO)


# --- local CPU subproblem ---------------------------------------------------

def test_local_clamped_at_fmax():
    r = solve_local_cpu(TaskSpec(1e6, 1e8, 1.0), profile())
    assert r.feasible
    assert r.optimizer == 1e9
    # frozen from the grid-refine oracle
    assert r.cost == pytest.approx(0.100000001, rel=1e-12)


def test_local_interior_optimum():
    r = solve_local_cpu(TaskSpec(1e6, 1e8, 1.0), profile(lambda_weight=1e8))
    assert r.feasible
    assert r.optimizer == pytest.approx(7.937005259840998e8, rel=1e-9)
    # frozen from the grid-refine oracle
    assert r.cost == pytest.approx(0.18898815748423098, rel=1e-9)


def test_local_unreachable_deadline():
    r = solve_local_cpu(TaskSpec(1e6, 1e8, 0.05), profile())
    assert not r.feasible
    assert r.optimizer is None and r.cost is None


def test_local_zero_weight_picks_upper_bound():
    r = solve_local_cpu(TaskSpec(1e6, 1e8, 1.0), profile(lambda_weight=0.0, e_max=1e-10))
    assert r.feasible
    assert r.optimizer == pytest.approx(math.sqrt(1e-10 / 1e-27), rel=1e-12)


def test_local_oracle_reproduces_examples():
    for lam, x_expect in [(1.0, 1e9), (1e8, 7.937005259840998e8)]:
        ok, x, y = oracle_local(TaskSpec(1e6, 1e8, 1.0), profile(lambda_weight=lam))
        assert ok
        assert x == pytest.approx(x_expect, rel=1e-6)


def test_local_convexity_witness():
    rng = np.random.default_rng(3)
    checked = 0
    while checked < 200:
        task, prof = random_local_instance(rng)
        r = solve_local_cpu(task, prof)
        if not r.feasible:
            continue
        lo = task.cpu_cycles / task.deadline_s
        hi = min(prof.f_max, math.sqrt(prof.e_max / prof.kappa))
        f1, f2 = rng.uniform(lo, hi, 2)
        g = lambda f: task.cpu_cycles / f + prof.lambda_weight * prof.kappa * f * f
        assert g((f1 + f2) / 2) <= (g(f1) + g(f2)) / 2 + 1e-12 * max(1.0, g(f1), g(f2))
        checked += 1


def test_local_feasible_result_respects_constraints():
    rng = np.random.default_rng(4)
    for _ in range(300):
        task, prof = random_local_instance(rng)
        r = solve_local_cpu(task, prof)
        if r.feasible:
            assert r.delay_s <= task.deadline_s
            assert r.energy_j <= prof.e_max
            assert r.optimizer <= prof.f_max
            assert r.cost == r.delay_s + prof.lambda_weight * r.energy_j


# --- transmit power subproblem ----------------------------------------------

EDGE_TASK = TaskSpec(1e5, 1e8, 1.0)
EDGE_H = 1e-6


def test_cloud_fixed_delay_exceeds_deadline():
    task = TaskSpec(1e5, 2e9, 0.1)  # C/F^c + psi = 0.02 + 0.1 = 0.12 s
    servers = ServerParams(1e10, 1e11, 0.1)
    r = solve_transmit_power(task, Action.CLOUD, 1e-3, profile(), RADIO, servers)
    assert not r.feasible


def test_edge_example_matches_frozen_oracle():
    r = solve_transmit_power(EDGE_TASK, Action.EDGE, EDGE_H, profile(), RADIO, SERVERS)
    assert r.feasible
    assert r.cost == pytest.approx(0.015507485203892888, rel=1e-6)
    assert r.optimizer == pytest.approx(0.07945611042862502, rel=1e-4)


def test_edge_example_live_oracle():
    r = solve_transmit_power(EDGE_TASK, Action.EDGE, EDGE_H, profile(), RADIO, SERVERS)
    ok, _, y = oracle_power(EDGE_TASK, Action.EDGE, EDGE_H, profile(), RADIO, SERVERS)
    assert ok
    assert abs(r.cost - y) / y <= 1e-6


def test_cloud_equals_edge_plus_access_delay():
    servers = ServerParams(1e10, 1e10, 0.2)
    e = solve_transmit_power(EDGE_TASK, Action.EDGE, EDGE_H, profile(), RADIO, servers)
    c = solve_transmit_power(EDGE_TASK, Action.CLOUD, EDGE_H, profile(), RADIO, servers)
    assert c.cost == pytest.approx(e.cost + 0.2, rel=1e-12)


def test_power_rejects_local_action():
    with pytest.raises(DomainError):
        solve_transmit_power(EDGE_TASK, Action.LOCAL, EDGE_H, profile(), RADIO, SERVERS)


def test_power_unimodality_witness():
    rng = np.random.default_rng(5)
    checked = 0
    while checked < 50:
        task, action, h, prof, radio, servers = random_power_instance(rng)
        r = solve_transmit_power(task, action, h, prof, radio, servers)
        if not r.feasible:
            continue
        fixed = (task.cpu_cycles / servers.f_edge if action == Action.EDGE
                 else task.cpu_cycles / servers.f_cloud + servers.psi_s)
        p = np.linspace(prof.p_max / 1000, prof.p_max, 1000)
        comm = task.size_bits / (radio.bandwidth_hz * np.log2(1 + p * h / radio.noise_w))
        y = fixed + comm + prof.lambda_weight * p * comm
        tol = 1e-12 * np.abs(y).max()
        d = np.diff(y)
        signs = np.sign(np.where(np.abs(d) <= tol, 0.0, d))
        signs = signs[signs != 0]
        # at most one sign change from descending to ascending
        assert np.sum(np.diff(signs) > 0) <= 1
        assert np.sum(np.diff(signs) < 0) == 0
        checked += 1


def test_power_feasible_result_respects_constraints():
    rng = np.random.default_rng(6)
    for _ in range(300):
        task, action, h, prof, radio, servers = random_power_instance(rng)
        r = solve_transmit_power(task, action, h, prof, radio, servers)
        if r.feasible:
            assert 0 < r.optimizer <= prof.p_max
            assert r.delay_s <= task.deadline_s
            assert r.energy_j <= prof.e_max


def test_tightening_never_lowers_cost():
    rng = np.random.default_rng(7)
    n = 0
    while n < 100:
        task, action, h, prof, radio, servers = random_power_instance(rng)
        base = solve_transmit_power(task, action, h, prof, radio, servers)
        if not base.feasible:
            continue
        tight_e = solve_transmit_power(task, action, h, profile(
            e_max=prof.e_max / 2, p_max=prof.p_max, lambda_weight=prof.lambda_weight),
            radio, servers)
        tight_d = solve_transmit_power(
            TaskSpec(task.size_bits, task.cpu_cycles, task.deadline_s / 2), action, h, prof,
            radio, servers)
        for r in (tight_e, tight_d):
            if r.feasible:
                assert r.cost >= base.cost * (1 - 1e-9)
        lt, lp = random_local_instance(rng)
        lb = solve_local_cpu(lt, lp)
        if lb.feasible:
            le = solve_local_cpu(lt, DeviceProfile(lp.f_max, lp.e_max / 2, lp.p_max, lp.kappa,
                                                   lp.lambda_weight, lp.distance_m))
            if le.feasible:
                assert le.cost >= lb.cost
        n += 1


def test_solve_step_dispatches():
    prof = profile()
    assert solve_step(EDGE_TASK, Action.LOCAL, EDGE_H, prof, RADIO, SERVERS) == \
        solve_local_cpu(EDGE_TASK, prof)
    assert solve_step(EDGE_TASK, Action.EDGE, EDGE_H, prof, RADIO, SERVERS) == \
        solve_transmit_power(EDGE_TASK, Action.EDGE, EDGE_H, prof, RADIO, SERVERS)


# --- oracle -----------------------------------------------------------------

def test_oracle_quadratic():
    x, y = grid_refine_oracle(lambda x: (x - 2.0) ** 2, 0.0, 10.0, 101, 5)
    assert x == pytest.approx(2.0, abs=1e-6)


def test_oracle_monotone_boundary():
    x, y = grid_refine_oracle(lambda x: x, 1.0, 3.0)
    assert x == 1.0 and y == 1.0


def test_oracle_deterministic():
    obj, _ = local_objective(TaskSpec(1e6, 1e8, 1.0), profile(lambda_weight=1e8))
    assert grid_refine_oracle(obj, 1.0, 1e9) == grid_refine_oracle(obj, 1.0, 1e9)


@pytest.mark.parametrize("lo,hi,n", [(1.0, 1.0, 11), (2.0, 1.0, 11), (0.0, 1.0, 2)])
def test_oracle_rejects_bad_input(lo, hi, n):
    with pytest.raises(DomainError):
        grid_refine_oracle(lambda x: x, lo, hi, n)


# --- backend equivalence ----------------------------------------------------

needs_ext = pytest.mark.skipif(kernels.available_backends()["cython"] is None,
                               reason="compiled extension not built")


def same(a, b):
    """Bitwise tuple equality where NaN matches NaN."""
    return np.array_equal(np.array(a, dtype=float), np.array(b, dtype=float), equal_nan=True)


@needs_ext
def test_backends_bit_identical_on_subproblems():
    ck = kernels.available_backends()["cython"]
    rng = np.random.default_rng(8)
    for _ in range(500):
        task, prof = random_local_instance(rng)
        args = (task.cpu_cycles, task.deadline_s, prof.f_max, prof.e_max, prof.kappa,
                prof.lambda_weight)
        assert same(ck.solve_local(*args), _pykernels.solve_local(*args))
        task, action, h, prof, radio, servers = random_power_instance(rng)
        fixed = (task.cpu_cycles / servers.f_edge if action == Action.EDGE
                 else task.cpu_cycles / servers.f_cloud + servers.psi_s)
        args = (task.size_bits, fixed, task.deadline_s, prof.lambda_weight, h, radio.noise_w,
                radio.bandwidth_hz, prof.p_max, prof.e_max, 1e-9, 200, 100)
        assert same(ck.solve_power(*args), _pykernels.solve_power(*args))


@needs_ext
def test_backends_bit_identical_adam():
    ck = kernels.available_backends()["cython"]
    rng = np.random.default_rng(9)
    p1 = rng.normal(size=500)
    g = rng.normal(size=500)
    m1, v1 = np.zeros(500), np.zeros(500)
    p2, m2, v2 = p1.copy(), m1.copy(), v1.copy()
    for t in range(1, 20):
        bc1, bc2 = 1 - 0.9 ** t, 1 - 0.999 ** t
        ck.adam_step(p1, g, m1, v1, 1e-3, 0.9, 0.999, 1e-8, bc1, bc2)
        _pykernels.adam_step(p2, g, m2, v2, 1e-3, 0.9, 0.999, 1e-8, bc1, bc2)
    assert np.array_equal(p1, p2) and np.array_equal(m1, m2) and np.array_equal(v1, v2)


@settings(max_examples=50, deadline=None)
@given(seed=st.integers(0, 2**32 - 1))
def test_solver_agrees_with_oracle_property(seed):
    rng = np.random.default_rng(seed)
    inst = random_power_instance(rng)
    r = solve_transmit_power(*inst)
    ok, _, y = oracle_power(*inst)
    assert r.feasible == ok
    if ok:
        assert abs(r.cost - y) <= 1e-6 * y
