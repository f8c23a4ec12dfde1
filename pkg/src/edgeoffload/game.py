"""Game state, the iterated best-response loop and equilibrium checks."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from . import kernels
from .capacity import initial_rates
from .csvio import write_rows
from .errors import InfeasibleAllocation, InvalidInput, UnstableQueue, VisibilityViolation
from .nbs import allocate
from .queueing import ComputingNode, Strategy, UserProfile, user_expected_response_time

INIT_MODES = ("initial_0", "initial_P")
TRACE_COLUMNS = ("round", "user_id", "response_time_s", "round_deviation_sum_s")


class GameState:
    """All users' strategies plus the load they put on each node.

    Nodes ``0..m-1`` are edge nodes; node ``m + i`` is user ``i``'s terminal.
    Strategies are stored in each user's own view (``m`` edge entries, then
    her terminal), so foreign terminals can never receive mass.
    """

    def __init__(self, edge_rates: Sequence[float], users: Sequence[UserProfile]):
        self.edge_rates = np.array(edge_rates, dtype=float)
        m = self.edge_rates.size
        if m == 0 or np.any(~(self.edge_rates > 0)):
            raise InvalidInput("edge rates must be a non-empty vector of positive rates")
        for i, u in enumerate(users):
            if u.id != i:
                raise InvalidInput(f"user ids must be 0..n-1 in order, got {u.id} at {i}")
            if u.n_nodes != m + 1:
                raise InvalidInput(f"user {i}: expected {m + 1} delays, got {u.n_nodes}")
        self.users = list(users)
        n = len(self.users)
        self.nodes = [ComputingNode(j, float(r)) for j, r in enumerate(self.edge_rates)]
        self.nodes += [ComputingNode(m + u.id, u.local_rate, owner=u.id) for u in self.users]
        self.local_rates = np.array([u.local_rate for u in self.users], dtype=float)
        self.arrivals = np.array([u.arrival_rate for u in self.users], dtype=float)
        self.deadlines = np.array([u.deadline for u in self.users], dtype=float)
        self.delays = np.ascontiguousarray(
            np.array([u.delays for u in self.users], dtype=float).reshape(n, m + 1)
        )
        self.rho = np.zeros((n, m + 1))
        self.last_times = np.zeros(n)
        self.edge_loads = np.zeros(m)

    @property
    def n_users(self) -> int:
        return len(self.users)

    @property
    def n_edges(self) -> int:
        return self.edge_rates.size

    def copy(self) -> "GameState":
        new = object.__new__(GameState)
        new.__dict__.update(self.__dict__)
        for name in ("rho", "last_times", "edge_loads"):
            setattr(new, name, getattr(self, name).copy())
        return new

    def strategy(self, user: int) -> Optional[Strategy]:
        row = self.rho[user]
        return None if not row.any() else Strategy(row)

    @property
    def strategies(self):
        return [self.strategy(i) for i in range(self.n_users)]

    def global_strategy(self, user: int) -> np.ndarray:
        """The user's strategy indexed over every node in ``self.nodes``."""
        m = self.n_edges
        out = np.zeros(len(self.nodes))
        out[:m] = self.rho[user, :m]
        out[m + user] = self.rho[user, m]
        return out

    @property
    def node_loads(self) -> np.ndarray:
        return np.concatenate([self.edge_loads, self.rho[:, -1] * self.arrivals])

    def recomputed_node_loads(self) -> np.ndarray:
        edge = (self.rho[:, :-1] * self.arrivals[:, None]).sum(axis=0)
        return np.concatenate([edge, self.rho[:, -1] * self.arrivals])

    def node_rates(self) -> np.ndarray:
        return np.concatenate([self.edge_rates, self.local_rates])

    def install(self, user: int, probs) -> None:
        """Replace a user's strategy, keeping the edge loads in step."""
        p = np.asarray(probs, dtype=float)
        if p.shape != self.rho[user].shape:
            raise InvalidInput(f"user {user}: strategy must have length {self.rho.shape[1]}")
        self.edge_loads += (p[:-1] - self.rho[user, :-1]) * self.arrivals[user]
        self.rho[user] = p

    def check_stable(self) -> None:
        loads = self.node_loads
        rates = self.node_rates()
        bad = np.flatnonzero(loads >= rates)
        if bad.size:
            j = int(bad[0])
            raise UnstableQueue(f"node {j}: load {loads[j]:.6g} >= rate {rates[j]:.6g}", node=j)

    def response_times(self) -> np.ndarray:
        """Current expected response time of every user (zero for idle rows)."""
        out = np.zeros(self.n_users)
        for i in range(self.n_users):
            if self.rho[i].any():
                free = release_user_load(self, i)
                out[i] = user_expected_response_time(
                    self.rho[i], free, self.delays[i], self.arrivals[i]
                )
        return out


def _check_user(state, user):
    if not 0 <= user < state.n_users:
        raise InvalidInput(f"unknown user {user}")


def observe_free_rate(state: GameState, user: int, node: int) -> float:
    """Spare rate of ``node`` as ``user`` sees it, including her own current load."""
    _check_user(state, user)
    m = state.n_edges
    if 0 <= node < m:
        return max(0.0, float(state.edge_rates[node] - state.edge_loads[node]))
    if node == m + user:
        return max(0.0, float(state.local_rates[user] - state.rho[user, m] * state.arrivals[user]))
    if m <= node < m + state.n_users:
        raise VisibilityViolation(f"user {user} cannot see terminal of user {node - m}")
    raise InvalidInput(f"unknown node {node}")


def observe_free_rates(state: GameState, user: int) -> np.ndarray:
    m = state.n_edges
    return np.array([observe_free_rate(state, user, j) for j in range(m)] +
                    [observe_free_rate(state, user, m + user)])


def release_user_load(state: GameState, user: int, observed=None) -> np.ndarray:
    """Free rates in the user's view once her own dispatched load is added back."""
    if observed is None:
        observed = observe_free_rates(state, user)
    return np.asarray(observed, dtype=float) + state.rho[user] * state.arrivals[user]


@dataclass
class RoundRecord:
    index: int
    response_times: np.ndarray
    deviations: np.ndarray
    deviation_sum: float


@dataclass
class ConvergenceTrace:
    rounds: list = field(default_factory=list)
    converged: bool = False
    xi: float = float("nan")
    relaxed_count: int = 0

    @property
    def total_rounds(self) -> int:
        return len(self.rounds)

    @property
    def final_sum(self) -> float:
        return self.rounds[-1].deviation_sum if self.rounds else float("nan")

    def rows(self):
        for r in self.rounds:
            for uid, t in enumerate(r.response_times):
                yield (r.index, uid, float(t), float(r.deviation_sum))

    def to_csv(self, dest) -> None:
        write_rows(dest, TRACE_COLUMNS, self.rows())


def best_response_round(state: GameState, relax: bool = False):
    """One pass of best responses in ascending user order (in place).

    Each user sees the updates made earlier in the same pass. Returns
    ``(deviation_sum, relaxed_count)`` where the sum adds ``|T_i' - T_i|``.
    ``relax`` lets a user whose deadline-filtered capacity is too small fall
    back to bargaining over raw free rates instead of raising.
    """
    total, relaxed = kernels.best_response_sweep(
        state.edge_rates, state.local_rates, state.delays, state.deadlines,
        state.arrivals, state.rho, state.last_times, state.edge_loads, relax,
    )
    state.check_stable()
    return total, relaxed


def proportional_start(state: GameState) -> None:
    """Warm start: every user splits in proportion to her idle-system initial rates."""
    from .baselines import ps_strategy

    for i, u in enumerate(state.users):
        idle = np.append(state.edge_rates, u.local_rate)
        init = initial_rates(u, idle)
        if init.total > 0:
            probs = ps_strategy(init).probs
        else:
            probs = idle / idle.sum()
        state.install(i, probs)


def run_ditoa(state: GameState, xi: float, init_mode: str = "initial_0",
              max_rounds: int = 10_000, relax: bool = False):
    """Iterate best-response rounds until a round's deviation sum is ``<= xi``.

    Hitting ``max_rounds`` returns with ``trace.converged`` false.
    """
    if not (xi > 0):
        raise InvalidInput(f"xi must be positive, got {xi}")
    if init_mode not in INIT_MODES:
        raise InvalidInput(f"init_mode must be one of {INIT_MODES}, got {init_mode!r}")
    state.rho[:] = 0.0
    state.edge_loads[:] = 0.0
    state.last_times[:] = 0.0
    if init_mode == "initial_P":
        proportional_start(state)
    trace = ConvergenceTrace(xi=xi)
    for r in range(1, max_rounds + 1):
        before = state.last_times.copy()
        total, relaxed = best_response_round(state, relax)
        trace.relaxed_count += relaxed
        after = state.last_times.copy()
        trace.rounds.append(RoundRecord(r, after, np.abs(after - before), total))
        if total <= xi:
            trace.converged = True
            break
    return state, trace


@dataclass
class NashReport:
    ok: bool
    improvements: np.ndarray
    eps: float

    def __bool__(self):
        return self.ok

    def worst_user(self) -> int:
        return int(np.argmax(self.improvements))


def verify_nash_equilibrium(state: GameState, eps: float, relax: bool = False) -> NashReport:
    """Check that no user gains ``eps`` or more by switching to her best response.

    Others are held fixed; the gain is ``T_i(current) - T_i(best response)``.
    """
    gains = np.zeros(state.n_users)
    for i, u in enumerate(state.users):
        free = release_user_load(state, i)
        if u.arrival_rate == 0:
            continue
        init = initial_rates(u, free).rates
        try:
            best = allocate(init, u.arrival_rate)
        except InfeasibleAllocation:
            if not relax:
                raise
            best = allocate(free, u.arrival_rate)
        t_best = user_expected_response_time(best, free, u.delays, u.arrival_rate)
        if not state.rho[i].any():
            gains[i] = np.inf
            continue
        try:
            t_cur = user_expected_response_time(state.rho[i], free, u.delays, u.arrival_rate)
        except UnstableQueue:
            t_cur = np.inf
        gains[i] = t_cur - t_best
    return NashReport(bool(np.all(gains < eps)), gains, eps)
