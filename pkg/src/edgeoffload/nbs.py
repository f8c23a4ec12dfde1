"""Nash-bargaining allocation of one user's tasks (OTOM) and a bisection oracle."""
from __future__ import annotations

import math

import numpy as np

from . import kernels
from .capacity import InitialRates, initial_rates
from .errors import InfeasibleAllocation, InvalidInput, NoConvergence
from .queueing import Strategy, UserProfile


def find_k(sorted_rates, arrival_rate):
    """Number of nodes that receive tasks.

    Largest ``k`` with ``rates[k-1] > (sum(rates[:k]) - arrival_rate) / k``,
    searched from the full set downwards. ``sorted_rates`` must be descending.
    """
    rates = np.asarray(sorted_rates, dtype=float)
    if rates.size == 0 or not np.any(rates > 0):
        raise InvalidInput("need at least one positive rate")
    if np.any(np.diff(rates) > 0):
        raise InvalidInput("rates must be sorted in descending order")
    prefix = np.cumsum(rates)
    if prefix[-1] <= arrival_rate:
        raise InfeasibleAllocation(
            f"total rate {prefix[-1]:.6g} does not exceed arrival rate {arrival_rate:.6g}"
        )
    for k in range(rates.size, 0, -1):
        if rates[k - 1] > (prefix[k - 1] - arrival_rate) / k:
            return k
    raise AssertionError("unreachable: k=1 always qualifies")


def _as_rates(initial):
    if isinstance(initial, InitialRates):
        return initial.rates
    return np.asarray(initial, dtype=float)


def allocate(initial, arrival_rate) -> Strategy:
    """Closed-form bargaining split over precomputed initial rates."""
    rates = _as_rates(initial)
    if np.any(~(rates >= 0)):
        raise InvalidInput("initial rates must be non-negative")
    return Strategy(kernels.waterfill(rates, float(arrival_rate)))


def otom(free_rates, delays, deadline, arrival_rate) -> Strategy:
    """Best response of a single user given the free rates she observes.

    Deadline-filters each node's free rate, then splits the arrival rate so
    that every selected node is left with the same residual capacity.
    """
    if not (arrival_rate > 0):
        raise InvalidInput(f"arrival rate must be positive, got {arrival_rate}")
    free = np.asarray(free_rates, dtype=float)
    delays = np.asarray(delays, dtype=float)
    if free.shape != delays.shape:
        raise InvalidInput("free rates and delays must have equal length")
    init = kernels.admissible_rates(free, delays, float(deadline))
    return allocate(init, arrival_rate)


def otom_for_user(user: UserProfile, observed_free_rates) -> Strategy:
    return allocate(initial_rates(user, observed_free_rates), user.arrival_rate)


def solve_p2_oracle(initial, arrival_rate, tol=1e-12, max_iter=200) -> Strategy:
    """Maximise ``sum(log(rate_j - rho_j*arrival))`` over the simplex by bisection.

    For a multiplier ``theta`` the stationarity condition gives
    ``rho_j = max(0, (rate_j - arrival/theta)/arrival)``; total mass is
    decreasing in the water level ``arrival/theta``, so the level is bisected
    until the mass is 1.
    """
    rates = _as_rates(initial)
    lam = float(arrival_rate)
    if not (lam > 0):
        raise InvalidInput(f"arrival rate must be positive, got {arrival_rate}")
    if np.any(~(rates >= 0)):
        raise InvalidInput("initial rates must be non-negative")
    if rates.sum() <= lam:
        raise InfeasibleAllocation(
            f"total rate {rates.sum():.6g} does not exceed arrival rate {lam:.6g}"
        )

    def mass(level):
        return np.maximum(0.0, rates - level).sum() / lam

    # level = arrival/theta; mass(lo) > 1 >= mass(hi)
    lo, hi = 0.0, float(rates.max())
    level = 0.5 * (lo + hi)
    for _ in range(max_iter):
        level = 0.5 * (lo + hi)
        excess = mass(level) - 1.0
        if abs(excess) < tol:
            break
        if excess > 0:
            lo = level
        else:
            hi = level
        if hi - lo <= 4 * math.ulp(hi):
            break
    else:
        raise NoConvergence(f"bisection did not reach tolerance {tol} in {max_iter} steps")
    rho = np.maximum(0.0, rates - level) / lam
    if abs(rho.sum() - 1.0) > max(tol, 1e-9):
        raise NoConvergence(f"bisection stalled with mass {rho.sum()!r}")
    return Strategy(rho)


def bargaining_objective(rho, initial, arrival_rate):
    """Negative log-residual objective over nodes with positive initial rate.

    ``inf`` when any node would be overloaded or a removed node gets mass.
    """
    rates = _as_rates(initial)
    rho = np.asarray(rho, dtype=float)
    live = rates > 0
    if np.any(rho[~live] > 0):
        return math.inf
    resid = rates[live] - rho[live] * arrival_rate
    if np.any(resid <= 0):
        return math.inf
    return float(-np.log(resid).sum())
