"""Reference scenarios, seeded repetitions and summary metrics."""
from __future__ import annotations

import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from .baselines import gos_allocation, gos_mean_response_time, ps_strategy
from .capacity import initial_rates
from .csvio import write_rows
from .errors import EdgeOffloadError, InvalidInput
from .game import INIT_MODES, GameState, run_ditoa, verify_nash_equilibrium
from .queueing import UserProfile

log = logging.getLogger(__name__)

REFERENCE_EDGE_RATES = (80.0, 60.0, 100.0, 160.0, 90.0, 70.0)
# (number of users, scaling factor, local rate) per user group
REFERENCE_USER_GROUPS = ((3, 0.02, 3.6), (4, 0.035, 4.8), (5, 0.04, 5.2), (5, 0.06, 6.0), (3, 0.1, 7.0))
REFERENCE_DELAY_BOUNDS = (0.005, 0.100)
REFERENCE_DEADLINE_BOUNDS = (0.200, 0.280)

METHODS = ("DITOA", "PS", "GOS")
SUMMARY_COLUMNS = (
    "method", "utilization", "xi", "init_mode", "user_id", "mean_T_s", "std_T_s",
    "normalized_T_s", "mean_iterations", "nonconverged_count", "failed_count",
)


def reference_user_table():
    factors, local = [], []
    for count, f, mu in REFERENCE_USER_GROUPS:
        factors += [f] * count
        local += [mu] * count
    return np.array(factors), np.array(local)


@dataclass
class Scenario:
    """A concrete game instance plus the parameters that generated it."""

    edge_rates: np.ndarray
    users: list
    utilization: float
    aggregate_arrival: float
    seed: int
    xi: float = 0.001
    init_mode: str = "initial_0"
    delay_bounds: tuple = REFERENCE_DELAY_BOUNDS
    deadline_bounds: tuple = REFERENCE_DEADLINE_BOUNDS
    scaling_factors: Optional[np.ndarray] = field(default=None, repr=False)

    @property
    def arrival_rates(self) -> np.ndarray:
        return np.array([u.arrival_rate for u in self.users])

    @property
    def total_capacity(self) -> float:
        return float(np.sum(self.edge_rates) + sum(u.local_rate for u in self.users))

    def game(self) -> GameState:
        return GameState(self.edge_rates, self.users)

    def reseeded(self, seed: int) -> "Scenario":
        return build_paper_scenario(
            self.utilization, seed, self.xi, self.init_mode,
            delay_bounds=self.delay_bounds, deadline_bounds=self.deadline_bounds,
        )

    def capacity_warnings(self):
        """Users whose arrival rate exceeds their idle-system deadline-filtered capacity."""
        out = []
        for u in self.users:
            idle = np.append(self.edge_rates, u.local_rate)
            if initial_rates(u, idle).total <= u.arrival_rate:
                out.append(u.id)
        return out


def build_paper_scenario(utilization, seed, xi=0.001, init_mode="initial_0", *,
                         delay_bounds=REFERENCE_DELAY_BOUNDS,
                         deadline_bounds=REFERENCE_DEADLINE_BOUNDS) -> Scenario:
    """Six edge nodes, twenty users; delays and deadlines drawn from ``seed``.

    The aggregate arrival rate is ``utilization`` times the total capacity
    of edge nodes and user terminals together (667 tasks/s).
    """
    if not (0 < utilization < 1):
        raise InvalidInput(f"utilization must lie in (0, 1), got {utilization}")
    if init_mode not in INIT_MODES:
        raise InvalidInput(f"init_mode must be one of {INIT_MODES}, got {init_mode!r}")
    lo_d, hi_d = delay_bounds
    lo_t, hi_t = deadline_bounds
    if not (0 <= lo_d <= hi_d) or not (0 < lo_t <= hi_t):
        raise InvalidInput("invalid delay or deadline bounds")
    edge = np.array(REFERENCE_EDGE_RATES)
    factors, local = reference_user_table()
    n, m = factors.size, edge.size
    aggregate = utilization * (edge.sum() + local.sum())
    rng = np.random.default_rng(seed)
    delays = rng.uniform(lo_d, hi_d, size=(n, m))
    deadlines = rng.uniform(lo_t, hi_t, size=n)
    users = [
        UserProfile(i, aggregate * factors[i], local[i], deadlines[i], np.append(delays[i], 0.0))
        for i in range(n)
    ]
    return Scenario(edge, users, utilization, aggregate, seed, xi, init_mode,
                    tuple(delay_bounds), tuple(deadline_bounds), factors)


def normalized_overall_response_time(per_user_times, arrival_rates):
    """Arrival-weighted mean of per-user response times."""
    t = np.asarray(per_user_times, dtype=float)
    lam = np.asarray(arrival_rates, dtype=float)
    if t.shape != lam.shape or t.ndim != 1:
        raise InvalidInput("times and arrival rates must be vectors of equal length")
    if not (lam.sum() > 0):
        raise InvalidInput("total arrival rate must be positive")
    return float(np.dot(lam, t) / lam.sum())


@dataclass
class RepResult:
    rep: int
    seed: int
    times: Optional[np.ndarray] = None
    iterations: Optional[int] = None
    converged: bool = True
    nash_ok: Optional[bool] = None
    error: Optional[str] = None
    relaxed_count: int = 0


@dataclass
class MetricsReport:
    method: str
    utilization: float
    xi: float
    init_mode: str
    repetitions: int
    user_ids: np.ndarray
    mean_times: np.ndarray
    std_times: np.ndarray
    normalized_overall_time: float
    normalized_std: float
    mean_iterations: Optional[float]
    nonconverged_count: int
    failed_count: int
    nash_failures: int
    capacity_warnings: int
    reps: list = field(default_factory=list, repr=False)

    @property
    def successful(self) -> int:
        return self.repetitions - self.failed_count - self.nonconverged_count

    def rows(self):
        init = self.init_mode if self.method == "DITOA" else ""
        iters = self.mean_iterations
        for uid, mu, sd in zip(self.user_ids, self.mean_times, self.std_times):
            yield (self.method, self.utilization, self.xi, init, int(uid), float(mu), float(sd),
                   None, None, None, None)
        yield (self.method, self.utilization, self.xi, init, "ALL", self.normalized_overall_time,
               self.normalized_std, self.normalized_overall_time, iters,
               self.nonconverged_count, self.failed_count)

    def summary_row(self):
        return list(self.rows())[-1]


def write_summary_csv(reports, dest, per_user=True):
    rows = []
    for rep in reports:
        rows.extend(rep.rows() if per_user else [rep.summary_row()])
    write_rows(dest, SUMMARY_COLUMNS, rows)


def _run_ditoa_rep(sc: Scenario, max_rounds, relax, check_nash):
    state, trace = run_ditoa(sc.game(), sc.xi, sc.init_mode, max_rounds, relax)
    nash = verify_nash_equilibrium(state, sc.xi, relax).ok if check_nash and trace.converged else None
    return state.response_times(), trace.total_rounds, trace.converged, nash, trace.relaxed_count


def _run_ps_rep(sc: Scenario):
    state = sc.game()
    for u in sc.users:
        idle = np.append(sc.edge_rates, u.local_rate)
        state.install(u.id, ps_strategy(initial_rates(u, idle)).probs)
    state.check_stable()
    return state.response_times()


def _run_gos(sc: Scenario):
    total = float(sc.arrival_rates.sum())
    alloc = gos_allocation(sc.edge_rates, total)
    return np.full(len(sc.users), gos_mean_response_time(alloc, sc.edge_rates, total))


def _run_rep(args):
    template, method, rep, max_rounds, relax, check_nash = args
    seed = template.seed ^ rep
    res = RepResult(rep, seed)
    try:
        sc = template.reseeded(seed)
        if method == "DITOA":
            res.times, res.iterations, res.converged, res.nash_ok, res.relaxed_count = \
                _run_ditoa_rep(sc, max_rounds, relax, check_nash)
        elif method == "PS":
            res.times = _run_ps_rep(sc)
        else:
            res.times = _run_gos(sc)
    except EdgeOffloadError as exc:
        res.error = f"{type(exc).__name__}: {exc}"
        res.times = None
    return res


def run_experiment(template: Scenario, method: str, repetitions: int, *, jobs: int = 1,
                   max_rounds: int = 10_000, relax: bool = False,
                   check_nash: bool = True) -> MetricsReport:
    """Run ``method`` on ``repetitions`` reseeded copies of ``template``.

    Repetition ``r`` uses seed ``template.seed ^ r``. Failed repetitions
    (infeasible users, overloaded nodes) and non-converged DITOA runs are
    counted and left out of the averages.
    """
    method = method.upper()
    if method not in METHODS:
        raise InvalidInput(f"method must be one of {METHODS}, got {method!r}")
    if repetitions < 1:
        raise InvalidInput("repetitions must be >= 1")
    tasks = [(template, method, r, max_rounds, relax, check_nash) for r in range(repetitions)]
    if jobs > 1 and repetitions > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            reps = list(pool.map(_run_rep, tasks, chunksize=max(1, repetitions // (4 * jobs))))
    else:
        reps = [_run_rep(t) for t in tasks]

    failed = [r for r in reps if r.error is not None]
    nonconv = [r for r in reps if r.error is None and not r.converged]
    good = [r for r in reps if r.error is None and r.converged]
    for r in failed:
        log.info("%s u=%.2f rep %d failed: %s", method, template.utilization, r.rep, r.error)

    n = len(template.users)
    lam = template.arrival_rates
    if good:
        times = np.array([r.times for r in good])
        mean_t, std_t = times.mean(axis=0), times.std(axis=0)
        per_rep = times @ lam / lam.sum()
        norm = normalized_overall_response_time(mean_t, lam)
        norm_std = float(per_rep.std())
    else:
        mean_t = std_t = np.full(n, np.nan)
        norm = norm_std = float("nan")
    iters = None
    if method == "DITOA":
        iters = float(np.mean([r.iterations for r in good])) if good else float("nan")
    return MetricsReport(
        method=method,
        utilization=float(template.utilization),
        xi=float(template.xi) if method == "DITOA" else float("nan"),
        init_mode=template.init_mode,
        repetitions=repetitions,
        user_ids=np.arange(n),
        mean_times=mean_t,
        std_times=std_t,
        normalized_overall_time=norm,
        normalized_std=norm_std,
        mean_iterations=iters,
        nonconverged_count=len(nonconv),
        failed_count=len(failed),
        nash_failures=sum(1 for r in good if r.nash_ok is False),
        capacity_warnings=len(template.capacity_warnings()),
        reps=reps,
    )


DEFAULT_UTILIZATIONS = (0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7)
DEFAULT_XIS = (0.0001, 0.0005, 0.001, 0.005, 0.01, 0.05)


def convergence_study(axis, *, xi=0.001, utilization=0.5, utilizations=DEFAULT_UTILIZATIONS,
                      xis=DEFAULT_XIS, repetitions=100, seed=0, init_modes=INIT_MODES,
                      **run_kw):
    """DITOA iteration counts along a utilization sweep or a ``xi`` sweep.

    Returns one report per (sweep point, init mode), sweep point major.
    """
    if axis not in ("utilization", "xi"):
        raise InvalidInput(f"axis must be 'utilization' or 'xi', got {axis!r}")
    points = list(utilizations if axis == "utilization" else xis)
    if not points:
        raise InvalidInput("empty sweep")
    reports = []
    for p in points:
        u, x = (p, xi) if axis == "utilization" else (utilization, p)
        for mode in init_modes:
            template = build_paper_scenario(u, seed, x, mode)
            reports.append(run_experiment(template, "DITOA", repetitions, **run_kw))
    return reports


def with_settings(template: Scenario, **changes) -> Scenario:
    """Copy of ``template`` with generating parameters replaced and data regenerated."""
    params = replace(template, **changes)
    return params.reseeded(params.seed)
