"""Comparison schemes: proportional split and the delay-free global optimum."""
from __future__ import annotations

import numpy as np

from .capacity import InitialRates
from .errors import InfeasibleAllocation, InvalidInput, UnstableQueue
from .queueing import Strategy


def ps_strategy(initial) -> Strategy:
    """Split in proportion to each node's initial (deadline-filtered) rate."""
    rates = initial.rates if isinstance(initial, InitialRates) else np.asarray(initial, float)
    if np.any(~(rates >= 0)):
        raise InvalidInput("initial rates must be non-negative")
    total = rates.sum()
    if not (total > 0):
        raise InvalidInput("proportional split needs at least one positive rate")
    return Strategy(rates / total)


def gos_allocation(ecn_rates, total_arrival):
    """Centrally optimal per-node arrival rates ignoring transmission delay.

    Minimises ``sum(x_j / (mu_j - x_j))`` subject to ``sum(x) = total_arrival``
    and ``x >= 0``. On the active set the optimum is
    ``x_j = mu_j - sqrt(mu_j) * (sum(mu) - total) / sum(sqrt(mu))``; the
    slowest node is dropped while any share comes out negative.
    """
    mu = np.asarray(ecn_rates, dtype=float)
    lam = float(total_arrival)
    if mu.ndim != 1 or mu.size == 0 or np.any(~(mu > 0)):
        raise InvalidInput("node rates must be a non-empty vector of positive values")
    if not (lam >= 0):
        raise InvalidInput(f"total arrival must be >= 0, got {total_arrival}")
    if lam >= mu.sum():
        raise InfeasibleAllocation(f"total arrival {lam:.6g} >= total capacity {mu.sum():.6g}")
    x = np.zeros_like(mu)
    if lam == 0:
        return x
    active = np.ones(mu.size, dtype=bool)
    # ascending rate, ties by index
    drop_order = list(np.argsort(mu, kind="stable"))
    while True:
        root = np.sqrt(mu[active])
        share = mu[active] - root * (mu[active].sum() - lam) / root.sum()
        if np.all(share >= 0):
            x[active] = share
            return x
        active[drop_order.pop(0)] = False


def gos_mean_response_time(allocation, ecn_rates, total_arrival):
    """Mean sojourn time over all tasks, ``sum(x_j/(mu_j - x_j)) / total``."""
    x = np.asarray(allocation, dtype=float)
    mu = np.asarray(ecn_rates, dtype=float)
    if total_arrival == 0:
        return 0.0
    bad = np.flatnonzero(x >= mu)
    if bad.size:
        j = int(bad[0])
        raise UnstableQueue(f"node {j}: load {x[j]:.6g} >= rate {mu[j]:.6g}", node=j)
    return float(np.sum(x / (mu - x)) / total_arrival)
