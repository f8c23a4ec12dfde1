"""Invariant and oracle checks behind ``edgeoffload verify``."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .baselines import gos_allocation
from .capacity import max_admissible_rate
from .errors import EdgeOffloadError
from .game import run_ditoa, verify_nash_equilibrium
from .nbs import allocate, solve_p2_oracle
from .queueing import check_simplex, user_expected_response_time, utility_gradient


@dataclass
class CheckResult:
    name: str
    ok: bool
    detail: str


def random_bargaining_instance(rng, max_nodes=8, lo=1.0, hi=200.0):
    """Initial rates in ``[lo, hi]`` (some zeroed) and an arrival rate below their sum."""
    h = int(rng.integers(1, max_nodes + 1))
    rates = rng.uniform(lo, hi, size=h)
    rates[rng.random(h) < 0.15] = 0.0
    if not rates.any():
        rates[0] = rng.uniform(lo, hi)
    arrival = rng.uniform(0.01, 0.99) * rates.sum()
    return rates, arrival


def equal_residual_gap(rates, rho, arrival):
    """Spread of residuals on selected nodes, and worst excess of an excluded node."""
    resid = rates - rho * arrival
    sel = rho > 0
    level = resid[sel].mean()
    spread = float(np.ptp(resid[sel]))
    excess = float(np.max(rates[~sel] - level, initial=-np.inf))
    return spread, excess


def otom_oracle_sweep(instances=500, seed=0, tol=1e-6):
    rng = np.random.default_rng(seed)
    agree, worst = 0, 0.0
    for _ in range(instances):
        rates, arrival = random_bargaining_instance(rng)
        diff = np.max(np.abs(allocate(rates, arrival).probs -
                             solve_p2_oracle(rates, arrival, tol=1e-12).probs))
        worst = max(worst, float(diff))
        agree += diff <= tol
    return CheckResult("otom-oracle", agree == instances,
                       f"{agree}/{instances} agreements (max deviation {worst:.3g})")


def kkt_sweep(instances=500, seed=1, tol=1e-9):
    rng = np.random.default_rng(seed)
    worst_spread, worst_excess = 0.0, -np.inf
    for _ in range(instances):
        rates, arrival = random_bargaining_instance(rng)
        spread, excess = equal_residual_gap(rates, allocate(rates, arrival).probs, arrival)
        worst_spread = max(worst_spread, spread)
        worst_excess = max(worst_excess, excess)
    ok = worst_spread <= tol and worst_excess <= tol
    return CheckResult("equal-residual", ok,
                       f"max residual spread {worst_spread:.3g}, max excluded excess {worst_excess:.3g}")


def deadline_tightness(samples=10_000, seed=2, tol=1e-9):
    rng = np.random.default_rng(seed)
    worst, n = 0.0, 0
    for _ in range(samples):
        mu, delay, deadline = rng.uniform(0, 300), rng.uniform(1e-4, 0.2), rng.uniform(0.01, 1.0)
        lam = max_admissible_rate(mu, delay, deadline)
        if lam > 0:
            n += 1
            worst = max(worst, abs(1.0 / (mu - lam) + lam * delay - deadline))
    return CheckResult("deadline-tightness", worst < tol, f"{n} positive cases, max gap {worst:.3g}")


def gradient_check(samples=1000, seed=3, h=1e-6, tol=1e-5):
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(samples):
        H = int(rng.integers(1, 8))
        lam = rng.uniform(0.1, 50)
        rho = rng.dirichlet(np.ones(H))
        avail = rho * lam + rng.uniform(0.5, 100, size=H)
        delays = rng.uniform(0, 0.1, size=H)
        g = utility_gradient(rho, avail, delays, lam)
        for j in range(H):
            e = np.zeros(H)
            e[j] = h
            fd = (user_expected_response_time(rho + e, avail, delays, lam) -
                  user_expected_response_time(rho - e, avail, delays, lam)) / (2 * h)
            worst = max(worst, abs(fd - g[j]) / max(abs(g[j]), 1e-12))
    return CheckResult("gradient-fd", worst < tol, f"max relative error {worst:.3g}")


def gos_kkt(instances=300, seed=4, tol=1e-8):
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(instances):
        mu = rng.uniform(1, 200, size=int(rng.integers(1, 7)))
        lam = rng.uniform(0, 0.99) * mu.sum()
        x = gos_allocation(mu, lam)
        act = x > 0
        if act.sum() > 1:
            c = (mu[act] - x[act]) / np.sqrt(mu[act])
            worst = max(worst, float(np.ptp(c)) / c.mean())
    return CheckResult("gos-kkt", worst < tol, f"max relative spread {worst:.3g}")


def equilibrium_checks(template, corrupt=False, relax=False):
    """Run DITOA on ``template`` and check the resulting state's invariants."""
    out = []
    try:
        state, trace = run_ditoa(template.game(), template.xi, template.init_mode, relax=relax)
    except EdgeOffloadError as exc:
        return [CheckResult("ditoa-run", False, f"{type(exc).__name__}: {exc}")]
    out.append(CheckResult("ditoa-converged", trace.converged,
                           f"{trace.total_rounds} rounds, final deviation {trace.final_sum:.3g}s"))
    if corrupt:
        state.rho[0] *= 1.25
    bad = []
    for i in range(state.n_users):
        try:
            check_simplex(state.rho[i])
        except EdgeOffloadError as exc:
            bad.append(f"user {i}: {exc}")
    out.append(CheckResult("simplex", not bad, "; ".join(bad) or "all strategies on the simplex"))
    drift = float(np.max(np.abs(state.node_loads - state.recomputed_node_loads())))
    out.append(CheckResult("load-consistency", drift <= 1e-9, f"max drift {drift:.3g}"))
    slack = float(np.min(state.node_rates() - state.recomputed_node_loads()))
    out.append(CheckResult("stability", slack > 0, f"min spare rate {slack:.6g} tasks/s"))
    m = state.n_edges
    foreign = 0.0
    for i in range(state.n_users):
        g = state.global_strategy(i)
        mask = np.ones(g.size, dtype=bool)
        mask[:m] = False
        mask[m + i] = False
        foreign = max(foreign, float(g[mask].max(initial=0.0)))
    out.append(CheckResult("locality", foreign == 0.0, f"max foreign-terminal mass {foreign}"))
    if trace.converged and not corrupt:
        rep = verify_nash_equilibrium(state, template.xi, relax)
        out.append(CheckResult("nash-equilibrium", rep.ok,
                               f"max unilateral gain {rep.improvements.max():.3g}s (eps {template.xi}s)"))
    return out


def run_all(template, instances=200, seed=0, corrupt=False, relax=False):
    return [
        otom_oracle_sweep(instances, seed),
        kkt_sweep(instances, seed + 1),
        deadline_tightness(10 * instances, seed + 2),
        gradient_check(max(10, instances // 2), seed + 3),
        gos_kkt(instances, seed + 4),
        *equilibrium_checks(template, corrupt, relax),
    ]
