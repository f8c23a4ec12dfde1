import numpy as np
import pytest
from hypothesis import assume, given
from hypothesis import strategies as st
from scipy.optimize import brentq

from edgeoffload.capacity import InitialRates, initial_rates, max_admissible_rate
from edgeoffload.errors import InvalidInput
from edgeoffload.queueing import UserProfile


def _deadline_oracle(mu, delay, deadline):
    """Root of 1/(mu-x) + x*delay = deadline on [0, mu), found by bracketing."""
    f = lambda x: 1.0 / (mu - x) + x * delay - deadline
    if f(0.0) > 0:
        return 0.0
    hi = mu * (1 - 1e-15)
    return brentq(f, 0.0, hi, xtol=1e-14, rtol=1e-15)


def test_examples():
    # root of 0.1 x^2 - 2x + 9 = 0 below 10
    assert max_admissible_rate(10, 0.1, 1) == pytest.approx(6.837722339831621, rel=1e-13)
    assert max_admissible_rate(10, 0.0, 1) == pytest.approx(9.0)
    assert max_admissible_rate(0.5, 0.05, 1) == 0.0
    assert max_admissible_rate(0.0, 0.05, 1) == 0.0
    assert max_admissible_rate(4.0, 0.1, 0.25) == 0.0  # mu*T == 1


@pytest.mark.parametrize("args", [(-1, 0.1, 1), (10, -0.1, 1), (10, 0.1, 0), (10, 0.1, -2)])
def test_invalid(args):
    with pytest.raises(InvalidInput):
        max_admissible_rate(*args)


def test_matches_root_bracketing_oracle(rng):
    for _ in range(2000):
        mu, delay, deadline = rng.uniform(0, 300), rng.uniform(0, 0.2), rng.uniform(0.01, 1)
        assert max_admissible_rate(mu, delay, deadline) == pytest.approx(
            _deadline_oracle(mu, delay, deadline), rel=1e-9, abs=1e-9)


@given(st.floats(1e-3, 500), st.floats(1e-6, 0.5), st.floats(1e-3, 2))
def test_deadline_tight_and_feasible(mu, delay, deadline):
    lam = max_admissible_rate(mu, delay, deadline)
    assert 0 <= lam < mu
    assert deadline - lam * delay > 0
    if lam > 0:
        assert abs(1 / (mu - lam) + lam * delay - deadline) < 1e-9
    # discriminant is (T - L mu)^2 + 4L
    disc = (deadline + delay * mu) ** 2 - 4 * delay * (deadline * mu - 1)
    assert disc == pytest.approx((deadline - delay * mu) ** 2 + 4 * delay, rel=1e-9, abs=1e-12)
    assert disc > 0


@given(st.floats(0, 300), st.floats(0, 300), st.floats(0, 0.2), st.floats(0.01, 1))
def test_monotone_in_rate(a, b, delay, deadline):
    lo, hi = sorted((a, b))
    assert max_admissible_rate(lo, delay, deadline) <= max_admissible_rate(hi, delay, deadline) + 1e-12


@given(st.floats(0.1, 300), st.floats(0, 0.2), st.floats(0, 0.2), st.floats(0.01, 1))
def test_monotone_in_delay(mu, a, b, deadline):
    lo, hi = sorted((a, b))
    assert max_admissible_rate(mu, hi, deadline) <= max_admissible_rate(mu, lo, deadline) + 1e-12


@given(st.floats(0.1, 300), st.floats(0, 0.2), st.floats(0.01, 1), st.floats(0.01, 1))
def test_monotone_in_deadline(mu, delay, a, b):
    lo, hi = sorted((a, b))
    assert max_admissible_rate(mu, delay, lo) <= max_admissible_rate(mu, delay, hi) + 1e-12


@given(st.floats(1, 300), st.floats(0.01, 1))
def test_small_delay_approaches_zero_delay_limit(mu, deadline):
    assume(mu * deadline > 1)
    assert max_admissible_rate(mu, 1e-15, deadline) == pytest.approx(
        max_admissible_rate(mu, 0.0, deadline), rel=1e-6, abs=1e-6)


def test_initial_rates():
    user = UserProfile(0, 2.0, 4.0, 1.0, [0.1, 0.0])
    init = initial_rates(user, [10.0, 4.0])
    np.testing.assert_allclose(init.rates, [6.837722339831621, 3.0], rtol=1e-12)
    assert init.owner == 0
    np.testing.assert_array_equal(initial_rates(user, [0.0, 0.0]).rates, [0.0, 0.0])
    single = UserProfile(1, 2.0, 8.0, 0.5, [0.0])
    assert initial_rates(single, [8.0]).rates[0] == pytest.approx(6.0)


def test_initial_rates_keeps_excluded_nodes_in_place():
    user = UserProfile(0, 1.0, 6.0, 0.2, [0.05, 0.01, 0.0])
    init = initial_rates(user, [4.0, 50.0, 6.0])
    assert init.rates[0] == 0.0 and init.excluded.tolist() == [True, False, False]
    assert len(init) == 3


def test_initial_rates_shape_and_sign_checks():
    user = UserProfile(0, 1.0, 5.0, 0.2, [0.05, 0.0])
    with pytest.raises(InvalidInput):
        initial_rates(user, [1.0, 2.0, 3.0])
    with pytest.raises(InvalidInput):
        initial_rates(user, [-1.0, 2.0])
    with pytest.raises(InvalidInput):
        InitialRates([-1.0], 0)
