"""Reference NumPy implementation of the hot kernels.

Mirrors ``_kernels.pyx`` function for function; selected by ``kernels`` when
the compiled module is unavailable or ``EDGEOFFLOAD_PURE=1`` is set.
"""
import math

import numpy as np

from .errors import InfeasibleAllocation, InvalidInput, UnstableQueue


def max_admissible_rate(mu, delay, deadline):
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
    # discriminant rewritten as (T - L*mu)^2 + 4L, always positive
    omega = math.sqrt((deadline - delay * mu) ** 2 + 4.0 * delay)
    # minus root, conjugate form: (b - omega) / 2L == 2(T*mu - 1) / (b + omega)
    return 2.0 * slack / (b + omega)


def admissible_rates(free_rates, delays, deadline):
    free_rates = np.asarray(free_rates, dtype=float)
    delays = np.asarray(delays, dtype=float)
    out = np.empty(free_rates.shape[0])
    for j in range(free_rates.shape[0]):
        out[j] = max_admissible_rate(free_rates[j], delays[j], deadline)
    return out


def waterfill(initial, arrival):
    """Water-filling split of ``arrival`` over ``initial`` rates.

    Nodes are sorted by rate (descending, ties by index), the weakest are
    trimmed while the water level exceeds them, and survivors receive
    ``(rate - level) / arrival``.
    """
    initial = np.asarray(initial, dtype=float)
    if not (arrival > 0.0):
        raise InvalidInput(f"arrival rate must be positive, got {arrival}")
    total = float(initial.sum())
    if total <= arrival:
        raise InfeasibleAllocation(
            f"total admissible rate {total:.6g} does not exceed arrival rate {arrival:.6g}"
        )
    order = np.argsort(-initial, kind="stable")
    ranked = initial[order]
    k = ranked.shape[0]
    prefix = total
    level = (prefix - arrival) / k
    while level > ranked[k - 1]:
        prefix -= ranked[k - 1]
        k -= 1
        level = (prefix - arrival) / k
    rho = np.zeros(initial.shape[0])
    rho[order[:k]] = (ranked[:k] - level) / arrival
    return rho


def response_time(rho, avail, delays, arrival):
    total = 0.0
    for j in range(len(rho)):
        p = rho[j]
        if p <= 0.0:
            continue
        load = p * arrival
        if load >= avail[j]:
            raise UnstableQueue(
                f"node {j}: load {load:.6g} >= available rate {avail[j]:.6g}", node=j
            )
        total += p * (1.0 / (avail[j] - load) + p * arrival * delays[j])
    return total


def best_response_sweep(edge_rates, local_rates, delays, deadlines, arrivals,
                        rho, last_times, edge_loads, relax=False):
    """One round of sequential best responses, updating arrays in place.

    Returns ``(deviation_sum, relaxed_count)``.
    """
    m = edge_rates.shape[0]
    n = arrivals.shape[0]
    total = 0.0
    relaxed = 0
    free = np.empty(m + 1)
    for i in range(n):
        lam = arrivals[i]
        free[:m] = np.maximum(0.0, edge_rates - edge_loads + rho[i, :m] * lam)
        free[m] = local_rates[i]
        init = admissible_rates(free, delays[i], deadlines[i])
        if lam == 0.0:
            new = np.zeros(m + 1)
            new[int(np.argmax(init))] = 1.0
        else:
            try:
                new = waterfill(init, lam)
            except InfeasibleAllocation as exc:
                if not relax:
                    raise InfeasibleAllocation(f"user {i}: {exc}", user=i) from None
                relaxed += 1
                try:
                    new = waterfill(free, lam)
                except InfeasibleAllocation as exc2:
                    raise InfeasibleAllocation(f"user {i}: {exc2}", user=i) from None
        edge_loads += (new[:m] - rho[i, :m]) * lam
        rho[i] = new
        try:
            t = response_time(new, free, delays[i], lam)
        except UnstableQueue as exc:
            raise UnstableQueue(f"user {i}: {exc}", node=exc.node, user=i) from None
        total += abs(t - last_times[i])
        last_times[i] = t
    return total, relaxed
