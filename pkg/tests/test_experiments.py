import io

import numpy as np
import pytest

from edgeoffload.capacity import initial_rates
from edgeoffload.baselines import ps_strategy
from edgeoffload.errors import InvalidInput
from edgeoffload.experiments import (
    SUMMARY_COLUMNS, build_paper_scenario, convergence_study, normalized_overall_response_time,
    run_experiment, write_summary_csv,
)
from edgeoffload.queueing import user_expected_response_time


def test_reference_scenario_shape():
    sc = build_paper_scenario(0.5, 1)
    assert sc.aggregate_arrival == pytest.approx(333.5)
    assert sc.total_capacity == pytest.approx(667.0)
    assert len(sc.users) == 20 and len(sc.edge_rates) == 6
    assert sc.scaling_factors.sum() == pytest.approx(1.0, abs=1e-12)
    np.testing.assert_allclose(sc.arrival_rates, 333.5 * sc.scaling_factors)
    assert [u.local_rate for u in sc.users[:4]] == [3.6, 3.6, 3.6, 4.8]
    d = np.array([u.delays for u in sc.users])
    assert np.all(d[:, :6] >= 0.005) and np.all(d[:, :6] <= 0.1) and np.all(d[:, 6] == 0)
    t = np.array([u.deadline for u in sc.users])
    assert np.all((t >= 0.2) & (t <= 0.28))


def test_reference_scenario_deterministic():
    a, b = build_paper_scenario(0.4, 99), build_paper_scenario(0.4, 99)
    for ua, ub in zip(a.users, b.users):
        assert ua.deadline == ub.deadline
        np.testing.assert_array_equal(ua.delays, ub.delays)
    c = build_paper_scenario(0.4, 100)
    assert c.users[0].deadline != a.users[0].deadline


@pytest.mark.parametrize("u", [0.0, 1.0, 1.2, -0.1])
def test_reference_scenario_rejects_utilization(u):
    with pytest.raises(InvalidInput):
        build_paper_scenario(u, 0)


def test_normalized_time():
    assert normalized_overall_response_time([0.2, 0.4], [1, 3]) == pytest.approx(0.35)
    assert normalized_overall_response_time([0.7] * 4, [1, 2, 3, 4]) == pytest.approx(0.7)
    assert normalized_overall_response_time([0.3], [5]) == pytest.approx(0.3)
    with pytest.raises(InvalidInput):
        normalized_overall_response_time([0.1, 0.2], [0, 0])
    with pytest.raises(InvalidInput):
        normalized_overall_response_time([0.1], [1, 2])


def test_normalized_time_within_bounds(rng):
    for _ in range(100):
        t, lam = rng.uniform(0, 1, 10), rng.uniform(0, 5, 10)
        v = normalized_overall_response_time(t, lam)
        assert t.min() - 1e-15 <= v <= t.max() + 1e-15


@pytest.mark.parametrize("method", ["DITOA", "PS", "GOS"])
def test_run_experiment_reproducible(method):
    sc = build_paper_scenario(0.2, 3)
    a, b = run_experiment(sc, method, 5), run_experiment(sc, method, 5)
    np.testing.assert_array_equal(a.mean_times, b.mean_times)
    assert a.normalized_overall_time == b.normalized_overall_time
    assert a.repetitions == 5 and np.all(a.std_times >= 0)


def test_parallel_matches_serial():
    sc = build_paper_scenario(0.3, 8)
    a = run_experiment(sc, "DITOA", 6)
    b = run_experiment(sc, "DITOA", 6, jobs=2)
    np.testing.assert_array_equal(a.mean_times, b.mean_times)
    assert a.mean_iterations == b.mean_iterations


def test_repetition_seeds_are_xor():
    sc = build_paper_scenario(0.2, 10)
    rep = run_experiment(sc, "PS", 4)
    assert [r.seed for r in rep.reps] == [10, 11, 8, 9]


def test_ps_uses_same_evaluator():
    sc = build_paper_scenario(0.2, 4)
    rep = run_experiment(sc, "PS", 1)
    rho = []
    for u in sc.users:
        idle = np.append(sc.edge_rates, u.local_rate)
        rho.append(ps_strategy(initial_rates(u, idle)).probs)
    rho = np.array(rho)
    lam = sc.arrival_rates
    loads = (rho[:, :6] * lam[:, None]).sum(axis=0)
    expected = []
    for i, u in enumerate(sc.users):
        free = np.append(sc.edge_rates - loads + rho[i, :6] * lam[i], u.local_rate)
        expected.append(user_expected_response_time(rho[i], free, u.delays, lam[i]))
    np.testing.assert_allclose(rep.mean_times, expected, rtol=1e-12)
    assert rep.normalized_overall_time == pytest.approx(
        normalized_overall_response_time(expected, lam), rel=1e-12)


def test_failures_are_counted_not_hidden():
    sc = build_paper_scenario(0.6, 0)
    rep = run_experiment(sc, "DITOA", 10)
    assert rep.failed_count > 0
    assert rep.failed_count + rep.nonconverged_count + rep.successful == 10
    assert all(r.error for r in rep.reps if r.times is None)
    assert rep.capacity_warnings >= 0


def test_nonconvergence_counted():
    sc = build_paper_scenario(0.2, 0, xi=1e-15)
    rep = run_experiment(sc, "DITOA", 3, max_rounds=2)
    assert rep.nonconverged_count == 3 and np.isnan(rep.mean_iterations)


def test_summary_csv_schema():
    sc = build_paper_scenario(0.2, 0)
    reps = [run_experiment(sc, m, 2) for m in ("DITOA", "PS", "GOS")]
    buf = io.StringIO()
    write_summary_csv(reps, buf)
    lines = buf.getvalue().split("\n")
    assert lines[0] == ",".join(SUMMARY_COLUMNS)
    assert lines[-1] == ""
    assert sum(1 for ln in lines if ",ALL," in ln) == 3
    assert len(lines) == 1 + 3 * 21 + 1


def test_convergence_study():
    reps = convergence_study("utilization", utilizations=[0.2], repetitions=3, seed=1)
    assert [r.init_mode for r in reps] == ["initial_0", "initial_P"]
    assert all(r.method == "DITOA" for r in reps)
    reps = convergence_study("xi", xis=[0.01], utilization=0.2, repetitions=2,
                             init_modes=("initial_0",))
    assert len(reps) == 1 and reps[0].xi == 0.01
    with pytest.raises(InvalidInput):
        convergence_study("load")
    with pytest.raises(InvalidInput):
        convergence_study("xi", xis=[])
