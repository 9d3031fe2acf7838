# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernels; same arithmetic as ``_pykernels``."""
from libc.math cimport log2, sqrt, pow, nextafter, INFINITY, NAN

cdef double INV_PHI = 0.6180339887498949
cdef int _NUDGES = 8


cdef inline double _rate(double p, double h, double noise, double bandwidth) nogil:
    return bandwidth * log2(1.0 + p * h / noise)


cdef inline double _comm_delay(double p, double size_bits, double h, double noise,
                               double bandwidth) nogil:
    cdef double r = _rate(p, h, noise, bandwidth)
    if r <= 0.0:
        return INFINITY
    return size_bits / r


cdef inline double _power_objective(double p, double size_bits, double lam, double h,
                                    double noise, double bandwidth) nogil:
    cdef double d = _comm_delay(p, size_bits, h, noise, bandwidth)
    return d + lam * (p * d)


def solve_local(double cycles, double deadline, double f_max, double e_max,
                double kappa, double lam):
    cdef double f_lo = cycles / deadline
    cdef double f_hi, f, delay, energy
    cdef int k
    for k in range(_NUDGES):
        if cycles / f_lo <= deadline:
            break
        f_lo = nextafter(f_lo, INFINITY)
    f_hi = sqrt(e_max / kappa)
    for k in range(_NUDGES):
        if kappa * (f_hi * f_hi) <= e_max:
            break
        f_hi = nextafter(f_hi, 0.0)
    if f_max < f_hi:
        f_hi = f_max
    if f_lo > f_hi:
        return False, NAN, NAN, NAN, NAN

    if lam > 0.0:
        f = pow(cycles / (2.0 * lam * kappa), 1.0 / 3.0)
        if f < f_lo:
            f = f_lo
        elif f > f_hi:
            f = f_hi
    else:
        f = f_hi
    delay = cycles / f
    energy = kappa * (f * f)
    return True, f, delay, energy, delay + lam * energy


def solve_power(double size_bits, double t_fixed, double deadline, double lam,
                double h, double noise, double bandwidth, double p_max,
                double e_max, double tol, int max_iter, int bisect_iter):
    cdef double budget = deadline - t_fixed
    cdef double expo, p_lo, p_hi, lo, hi, mid
    cdef double a, b, c, d, fc, fd, p, best, f_lo, f_hi, comm, energy, delay
    cdef int k, it
    if budget <= 0.0:
        return False, NAN, NAN, NAN, NAN

    expo = size_bits / (bandwidth * budget)
    if expo > 1000.0:
        return False, NAN, NAN, NAN, NAN
    p_lo = (pow(2.0, expo) - 1.0) * noise / h
    if p_lo <= 0.0:
        p_lo = 5e-324
    for k in range(_NUDGES):
        if t_fixed + _comm_delay(p_lo, size_bits, h, noise, bandwidth) <= deadline:
            break
        p_lo = nextafter(p_lo, INFINITY)
    if p_lo > p_max:
        return False, NAN, NAN, NAN, NAN

    if p_max * _comm_delay(p_max, size_bits, h, noise, bandwidth) <= e_max:
        p_hi = p_max
    else:
        lo = 0.0
        hi = p_max
        for k in range(bisect_iter):
            mid = 0.5 * (lo + hi)
            if mid * _comm_delay(mid, size_bits, h, noise, bandwidth) <= e_max:
                lo = mid
            else:
                hi = mid
        p_hi = lo
    if p_lo > p_hi:
        return False, NAN, NAN, NAN, NAN

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
        p = c
        best = fc
    else:
        p = d
        best = fd
    f_lo = _power_objective(p_lo, size_bits, lam, h, noise, bandwidth)
    if f_lo <= best:
        p = p_lo
        best = f_lo
    f_hi = _power_objective(p_hi, size_bits, lam, h, noise, bandwidth)
    if f_hi < best:
        p = p_hi
        best = f_hi

    comm = _comm_delay(p, size_bits, h, noise, bandwidth)
    energy = p * comm
    if energy > e_max:
        p = p_hi
        comm = _comm_delay(p, size_bits, h, noise, bandwidth)
        energy = p * comm
    delay = t_fixed + comm
    return True, p, delay, energy, delay + lam * energy


def adam_step(double[::1] params, const double[::1] grad, double[::1] m,
              double[::1] v, double lr, double beta1, double beta2, double eps,
              double bc1, double bc2):
    cdef Py_ssize_t i, n = params.shape[0]
    cdef double g
    if grad.shape[0] != n or m.shape[0] != n or v.shape[0] != n:
        raise ValueError("adam_step: length mismatch")
    with nogil:
        for i in range(n):
            g = grad[i]
            m[i] = beta1 * m[i] + (1.0 - beta1) * g
            v[i] = beta2 * v[i] + (1.0 - beta2) * (g * g)
            params[i] = params[i] - lr * (m[i] / bc1) / (sqrt(v[i] / bc2) + eps)
