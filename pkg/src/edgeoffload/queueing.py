"""M/M/1 response times and the per-user utility with its derivatives."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import kernels
from .errors import InvalidInput, UnstableQueue

SIMPLEX_TOL = 1e-9


@dataclass(frozen=True)
class ComputingNode:
    """An edge cloud node (``owner is None``) or a user's local terminal."""

    id: int
    rate: float
    owner: Optional[int] = None

    def __post_init__(self):
        if not (self.rate > 0):
            raise InvalidInput(f"node {self.id}: rate must be positive, got {self.rate}")

    @property
    def kind(self) -> str:
        return "edge" if self.owner is None else "local"


@dataclass(frozen=True)
class UserProfile:
    """A mobile user.

    ``delays`` is indexed by the user's own view of the system: the ``m``
    edge nodes first, then her local terminal, whose delay must be 0.
    """

    id: int
    arrival_rate: float
    local_rate: float
    deadline: float
    delays: np.ndarray = field(repr=False)

    def __post_init__(self):
        delays = np.array(self.delays, dtype=float)
        delays.setflags(write=False)
        object.__setattr__(self, "delays", delays)
        if not (self.arrival_rate >= 0):
            raise InvalidInput(f"user {self.id}: arrival_rate must be >= 0")
        if not (self.local_rate > 0):
            raise InvalidInput(f"user {self.id}: local_rate must be > 0")
        if not (self.deadline > 0):
            raise InvalidInput(f"user {self.id}: deadline must be > 0")
        if delays.ndim != 1 or delays.size < 1:
            raise InvalidInput(f"user {self.id}: delays must be a non-empty vector")
        if delays[-1] != 0.0:
            raise InvalidInput(f"user {self.id}: delay to own terminal must be 0")
        if np.any(~(delays >= 0)):
            raise InvalidInput(f"user {self.id}: delays must be non-negative")

    @property
    def n_nodes(self) -> int:
        return self.delays.size


class Strategy:
    """Probability vector over a user's computing nodes.

    Input is renormalised once here; afterwards the vector is read-only.
    """

    __slots__ = ("probs",)

    def __init__(self, probs):
        p = np.array(probs, dtype=float)
        if p.ndim != 1 or p.size == 0:
            raise InvalidInput("strategy must be a non-empty vector")
        if np.any(~np.isfinite(p)) or np.any(p < 0):
            raise InvalidInput(f"strategy entries must be finite and >= 0: {p}")
        s = p.sum()
        if abs(s - 1.0) > 1e-6:
            raise InvalidInput(f"strategy sums to {s!r}, not 1")
        p = p / s
        p.setflags(write=False)
        self.probs = p

    def __len__(self):
        return self.probs.size

    def __getitem__(self, j):
        return self.probs[j]

    def __array__(self, dtype=None, copy=None):
        return self.probs if dtype is None else self.probs.astype(dtype)

    def __eq__(self, other):
        if not isinstance(other, Strategy):
            return NotImplemented
        return np.array_equal(self.probs, other.probs)

    def __repr__(self):
        return f"Strategy({np.array2string(self.probs, precision=6)})"

    def is_valid(self, tol=SIMPLEX_TOL) -> bool:
        return bool(np.all(self.probs >= 0) and abs(self.probs.sum() - 1.0) <= tol)


def check_simplex(probs, tol=SIMPLEX_TOL):
    """Raise ``InvalidInput`` naming the violation if ``probs`` is off the simplex."""
    p = np.asarray(probs, dtype=float)
    if np.any(p < 0):
        raise InvalidInput(f"simplex violation: negative entry {float(p.min())!r}")
    if abs(p.sum() - 1.0) > tol:
        raise InvalidInput(f"simplex violation: entries sum to {float(p.sum())!r}")


def mm1_response_time(rate, load):
    """Mean sojourn time ``1/(rate - load)`` of an M/M/1 queue."""
    if load >= rate:
        raise UnstableQueue(f"load {load} >= rate {rate}: queue builds without bound")
    return 1.0 / (rate - load)


def _prepare(strategy, avail_rates, delays):
    rho = np.asarray(strategy, dtype=float)
    avail = np.asarray(avail_rates, dtype=float)
    delays = np.asarray(delays, dtype=float)
    if not (rho.shape == avail.shape == delays.shape):
        raise InvalidInput("strategy, rates and delays must have equal length")
    return rho, avail, delays


def user_expected_response_time(strategy, avail_rates, delays, arrival_rate):
    """Expected response time of a user's tasks under ``strategy``.

    Sum over nodes of ``rho_j * (1/(mu_j - rho_j*lam) + rho_j*lam*L_j)``; the
    transmission term is quadratic in ``rho_j``.
    """
    rho, avail, delays = _prepare(strategy, avail_rates, delays)
    return kernels.response_time(rho, avail, delays, float(arrival_rate))


def _residual(rho, avail, arrival_rate):
    resid = avail - rho * arrival_rate
    bad = np.flatnonzero(resid <= 0)
    if bad.size:
        j = int(bad[0])
        raise UnstableQueue(f"node {j}: load {rho[j] * arrival_rate:.6g} >= {avail[j]:.6g}", node=j)
    return resid


def utility_gradient(strategy, avail_rates, delays, arrival_rate):
    rho, avail, delays = _prepare(strategy, avail_rates, delays)
    resid = _residual(rho, avail, arrival_rate)
    return avail / resid**2 + 2.0 * rho * arrival_rate * delays


def utility_hessian_diag(strategy, avail_rates, delays, arrival_rate):
    """Diagonal of the (diagonal) Hessian; strictly positive when ``arrival_rate > 0``."""
    rho, avail, delays = _prepare(strategy, avail_rates, delays)
    resid = _residual(rho, avail, arrival_rate)
    return 2.0 * avail * arrival_rate / resid**3 + 2.0 * arrival_rate * delays
