"""Deadline-limited dispatch rates per computing node."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import kernels
from .errors import InvalidInput


@dataclass(frozen=True)
class InitialRates:
    """Largest rate each node can take from ``owner`` without breaking her deadline.

    Zero entries stay in place so indices line up with the user's strategy.
    """

    rates: np.ndarray
    owner: int

    def __post_init__(self):
        r = np.array(self.rates, dtype=float)
        if np.any(~(r >= 0)):
            raise InvalidInput("initial rates must be non-negative")
        r.setflags(write=False)
        object.__setattr__(self, "rates", r)

    @property
    def excluded(self) -> np.ndarray:
        return self.rates == 0.0

    @property
    def total(self) -> float:
        return float(self.rates.sum())

    def __len__(self):
        return self.rates.size


def max_admissible_rate(free_rate, delay, deadline):
    """Largest arrival rate ``x`` with ``1/(free_rate - x) + x*delay <= deadline``.

    Returns 0 when even an idle node misses the deadline (``free_rate*deadline <= 1``).
    For ``delay == 0`` this is ``free_rate - 1/deadline``.
    """
    return kernels.max_admissible_rate(float(free_rate), float(delay), float(deadline))


def initial_rates(user, observed_free_rates) -> InitialRates:
    free = np.asarray(observed_free_rates, dtype=float)
    if free.shape != user.delays.shape:
        raise InvalidInput(
            f"user {user.id}: expected {user.delays.size} observed rates, got {free.shape}"
        )
    return InitialRates(kernels.admissible_rates(free, user.delays, user.deadline), user.id)
