# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot kernels; same contracts as ``_purepy``."""
from libc.math cimport sqrt, fabs

import numpy as np
cimport numpy as cnp

from .errors import InfeasibleAllocation, InvalidInput, UnstableQueue

cnp.import_array()


cdef double _rate(double mu, double delay, double deadline) except? -1.0:
    cdef double slack, b, omega
    if not (mu >= 0.0) or not (delay >= 0.0):
        raise InvalidInput(f"rates and delays must be non-negative (mu={mu}, delay={delay})")
    if not (deadline > 0.0):
        raise InvalidInput(f"deadline must be positive, got {deadline}")
    slack = mu * deadline - 1.0
    if mu == 0.0 or slack <= 0.0:
        return 0.0
    if delay == 0.0:
        return mu - 1.0 / deadline
    b = deadline + delay * mu
    omega = sqrt((deadline - delay * mu) * (deadline - delay * mu) + 4.0 * delay)
    return 2.0 * slack / (b + omega)


def max_admissible_rate(double mu, double delay, double deadline):
    return _rate(mu, delay, deadline)


cdef int _fill_rates(const double[::1] free, const double[::1] delays, double deadline,
                     double[::1] out) except -1:
    cdef Py_ssize_t j
    for j in range(free.shape[0]):
        out[j] = _rate(free[j], delays[j], deadline)
    return 0


def admissible_rates(free_rates, delays, double deadline):
    cdef const double[::1] f = np.ascontiguousarray(free_rates, dtype=np.float64)
    cdef const double[::1] d = np.ascontiguousarray(delays, dtype=np.float64)
    out = np.empty(f.shape[0])
    _fill_rates(f, d, deadline, out)
    return out


cdef int _waterfill(const double[::1] init, double arrival, Py_ssize_t* order,
                    double[::1] rho) except -1:
    cdef Py_ssize_t h = init.shape[0]
    cdef Py_ssize_t i, j, k, tmp
    cdef double total = 0.0, prefix, level
    if not (arrival > 0.0):
        raise InvalidInput(f"arrival rate must be positive, got {arrival}")
    for j in range(h):
        total += init[j]
        order[j] = j
    if total <= arrival:
        raise InfeasibleAllocation(
            f"total admissible rate {total:.6g} does not exceed arrival rate {arrival:.6g}"
        )
    # insertion sort, descending by rate; stable so ties keep ascending index
    for i in range(1, h):
        tmp = order[i]
        j = i - 1
        while j >= 0 and init[order[j]] < init[tmp]:
            order[j + 1] = order[j]
            j -= 1
        order[j + 1] = tmp
    k = h
    prefix = total
    level = (prefix - arrival) / k
    while level > init[order[k - 1]]:
        prefix -= init[order[k - 1]]
        k -= 1
        level = (prefix - arrival) / k
    for j in range(h):
        rho[j] = 0.0
    for j in range(k):
        rho[order[j]] = (init[order[j]] - level) / arrival
    return 0


def waterfill(initial, double arrival):
    cdef const double[::1] init = np.ascontiguousarray(initial, dtype=np.float64)
    cdef Py_ssize_t h = init.shape[0]
    cdef cnp.ndarray[Py_ssize_t, ndim=1] order = np.empty(h, dtype=np.intp)
    rho = np.zeros(h)
    _waterfill(init, arrival, <Py_ssize_t*> order.data, rho)
    return rho


cdef double _response_time(const double[::1] rho, const double[::1] avail, const double[::1] delays,
                           double arrival, Py_ssize_t* bad) noexcept:
    cdef Py_ssize_t j
    cdef double p, load, total = 0.0
    bad[0] = -1
    for j in range(rho.shape[0]):
        p = rho[j]
        if p <= 0.0:
            continue
        load = p * arrival
        if load >= avail[j]:
            bad[0] = j
            return 0.0
        total += p * (1.0 / (avail[j] - load) + p * arrival * delays[j])
    return total


def response_time(rho, avail, delays, double arrival):
    cdef const double[::1] r = np.ascontiguousarray(rho, dtype=np.float64)
    cdef const double[::1] a = np.ascontiguousarray(avail, dtype=np.float64)
    cdef const double[::1] d = np.ascontiguousarray(delays, dtype=np.float64)
    cdef Py_ssize_t bad
    cdef double t = _response_time(r, a, d, arrival, &bad)
    if bad >= 0:
        raise UnstableQueue(
            f"node {bad}: load {r[bad] * arrival:.6g} >= available rate {a[bad]:.6g}", node=bad
        )
    return t


def best_response_sweep(const double[::1] edge_rates, const double[::1] local_rates,
                        const double[:, ::1] delays, const double[::1] deadlines,
                        const double[::1] arrivals, double[:, ::1] rho,
                        double[::1] last_times, double[::1] edge_loads,
                        bint relax=False):
    cdef Py_ssize_t m = edge_rates.shape[0]
    cdef Py_ssize_t n = arrivals.shape[0]
    cdef Py_ssize_t i, j, best, bad
    cdef double lam, t, total = 0.0
    cdef int relaxed = 0
    cdef cnp.ndarray[Py_ssize_t, ndim=1] order_arr = np.empty(m + 1, dtype=np.intp)
    cdef Py_ssize_t* order = <Py_ssize_t*> order_arr.data
    cdef double[::1] free = np.empty(m + 1)
    cdef double[::1] init = np.empty(m + 1)
    cdef double[::1] new = np.empty(m + 1)
    for i in range(n):
        lam = arrivals[i]
        for j in range(m):
            free[j] = edge_rates[j] - edge_loads[j] + rho[i, j] * lam
            if free[j] < 0.0:
                free[j] = 0.0
        free[m] = local_rates[i]
        _fill_rates(free, delays[i], deadlines[i], init)
        if lam == 0.0:
            best = 0
            for j in range(m + 1):
                new[j] = 0.0
                if init[j] > init[best]:
                    best = j
            new[best] = 1.0
        else:
            try:
                _waterfill(init, lam, order, new)
            except InfeasibleAllocation as exc:
                if not relax:
                    raise InfeasibleAllocation(f"user {i}: {exc}", user=i) from None
                relaxed += 1
                try:
                    _waterfill(free, lam, order, new)
                except InfeasibleAllocation as exc2:
                    raise InfeasibleAllocation(f"user {i}: {exc2}", user=i) from None
        for j in range(m):
            edge_loads[j] += (new[j] - rho[i, j]) * lam
        for j in range(m + 1):
            rho[i, j] = new[j]
        t = _response_time(new, free, delays[i], lam, &bad)
        if bad >= 0:
            raise UnstableQueue(
                f"user {i}: node {bad}: load {new[bad] * lam:.6g} >= available rate {free[bad]:.6g}",
                node=bad, user=i,
            )
        total += fabs(t - last_times[i])
        last_times[i] = t
    return total, relaxed
