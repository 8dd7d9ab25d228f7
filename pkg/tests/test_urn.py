import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from shockmodel.errors import ConfigError, DegenerateModelError, StateBudgetExceeded
from shockmodel.urn import (ReinforcementMatrix, UrnState, exact_factorial_moment, exact_urn_distribution,
                            expected_counts, factorial_moment_3, factorial_moment_4, first_failure_curve,
                            first_failure_probability, simulate_urn_batch, step_urn, u_survival_probability)

THREE = ReinforcementMatrix.three_color(2, 1)
FOUR = ReinforcementMatrix.four_color(2, 1)


def test_single_step_transitions(rng):
    seen = {}
    state = UrnState((1, 1, 1))
    for _ in range(3000):
        new, color = step_urn(state, THREE, rng)
        seen[color] = new.counts
        assert new.step == 1 and new.total == 5
    assert seen == {"x": (3, 1, 1), "y": (1, 2, 2), "w": (1, 1, 3)}


def test_single_step_distribution():
    dist = exact_urn_distribution(UrnState((1, 1, 1)), THREE, 1)
    assert set(dist) == {(3, 1, 1), (1, 2, 2), (1, 1, 3)}
    assert all(p == pytest.approx(1 / 3) for p in dist.values())
    assert exact_factorial_moment(dist, 0, 1) == pytest.approx(5 / 3)


def test_displayed_matrix_subtracts_replacement():
    disp = [[3, 0, 0], [0, 2, 1], [0, 0, 3]]
    assert ReinforcementMatrix.from_displayed(("x", "y", "w"), disp) == THREE


def test_matrix_validation():
    with pytest.raises(ConfigError):
        ReinforcementMatrix(("x", "y"), [[2, 0], [0, 1]])
    with pytest.raises(ConfigError):
        ReinforcementMatrix(("x", "y"), [[3, -1], [0, 2]])
    with pytest.raises(ConfigError):
        ReinforcementMatrix.three_color(2, 2)
    with pytest.raises(ConfigError):
        THREE.index("u")


def test_expected_counts_match_distribution():
    init = UrnState((2, 1, 1, 1))
    means = expected_counts(init, FOUR, 6)
    for n in (1, 3, 6):
        dist = exact_urn_distribution(init, FOUR, n)
        assert sum(dist.values()) == pytest.approx(1.0)
        for i in range(4):
            assert exact_factorial_moment(dist, i, 1) == pytest.approx(means[n, i], rel=1e-12)


def test_first_failure():
    assert first_failure_probability(UrnState((1, 1, 1)), THREE, 1) == pytest.approx(1 / 3)
    curve = first_failure_curve(UrnState((1, 1, 1)), THREE, 6)
    # second step: no w at step one (2/3), then w from (3,1,1) or (1,2,2)
    assert curve[1] == pytest.approx(1 / 3 * 1 / 5 + 1 / 3 * 2 / 5)
    assert np.all(curve >= 0) and curve.sum() < 1


def test_first_failure_fallback_to_simulation():
    init = UrnState((1, 1, 1))
    exact = first_failure_probability(init, THREE, 6)
    with pytest.raises(StateBudgetExceeded):
        first_failure_probability(init, THREE, 6, max_states=3)
    est = first_failure_probability(init, THREE, 6, max_states=3, fallback_reps=40_000, seed=1)
    assert abs(est - exact) < 4 * math.sqrt(exact * (1 - exact) / 40_000)


def test_first_draw_tracking_matches_curve():
    init = UrnState((1, 1, 1))
    batch = simulate_urn_batch(init, THREE, 5, 30_000, seed=4, track_first="w")
    curve = first_failure_curve(init, THREE, 5)
    for n in range(1, 6):
        p = curve[n - 1]
        assert abs(np.mean(batch.first_draw == n) - p) < 4.5 * math.sqrt(p * (1 - p) / batch.reps)


def test_u_count_is_invariant_without_depletion():
    batch = simulate_urn_batch(UrnState((1, 3, 1, 1)), FOUR, 200, 500, seed=0)
    assert np.all(batch.counts[:, 1] == 3)
    assert np.all(batch.count_min[:, 1] == 3) and np.all(batch.count_max[:, 1] == 3)
    assert factorial_moment_4("u", 2, 200, 1, 3, 1, 1, 2, 1) == 6.0
    assert factorial_moment_4("u", 2, 200, 1, 3, 1, 1, 2, 1, as_printed=True) == 3.0
    assert u_survival_probability(UrnState((1, 3, 1, 1)), FOUR, 10_000) == 1.0


def test_depleting_u_survival_exact_vs_simulation():
    rm = ReinforcementMatrix.four_color(2, 1, depleting_u=True)
    init = UrnState((1, 1, 1, 1))
    n = 40
    exact = u_survival_probability(init, rm, n)
    dist = exact_urn_distribution(init, rm, 12)
    assert u_survival_probability(init, rm, 12) == pytest.approx(sum(p for c, p in dist.items() if c[1] > 0))
    batch = simulate_urn_batch(init, rm, n, 40_000, seed=9)
    est = np.mean(batch.counts[:, 1] > 0)
    assert abs(est - exact) < 4 * math.sqrt(exact * (1 - exact) / batch.reps)
    assert batch.balance_violations == 0


def test_depleting_u_survival_decays_slowly():
    # survival after n draws decays like n**(-1/theta), far above 1e-3 at n = 1e4
    rm = ReinforcementMatrix.four_color(2, 1, depleting_u=True)
    init = UrnState((1, 1, 1, 1))
    p3, p4 = (u_survival_probability(init, rm, n) for n in (1000, 10_000))
    assert p4 > 1e-3
    assert math.log(p3 / p4) / math.log(10) == pytest.approx(0.5, abs=0.02)


def test_simulation_is_deterministic_and_balanced():
    init = UrnState((2, 1, 1, 1))
    a = simulate_urn_batch(init, FOUR, 100, 3000, seed=5, checkpoints=(10, 50))
    b = simulate_urn_batch(init, FOUR, 100, 3000, seed=5, checkpoints=(10, 50))
    assert np.array_equal(a.counts, b.counts) and np.array_equal(a.checkpoints[10], b.checkpoints[10])
    assert a.balance_violations == 0
    assert np.all(a.counts.sum(axis=1) == init.total + 100 * FOUR.theta)
    assert np.all(a.checkpoints[50].sum(axis=1) == init.total + 50 * FOUR.theta)


def test_simulated_states_match_exact_law():
    init = UrnState((1, 1, 1))
    dist = exact_urn_distribution(init, THREE, 4)
    batch = simulate_urn_batch(init, THREE, 4, 50_000, seed=2)
    freq = batch.state_frequencies()
    assert set(freq) <= set(dist)
    for state, p in dist.items():
        assert abs(freq.get(state, 0) / batch.reps - p) < 4.5 * math.sqrt(p * (1 - p) / batch.reps)


def test_leading_terms_for_x():
    # E[X_n] / n -> theta * a0 / t0
    n = 20_000
    lead = factorial_moment_3("x", 1, n, 1, 1, 1, 2, 1)
    exact = expected_counts(UrnState((1, 1, 1)), THREE, n)[n, 0]
    assert lead == pytest.approx(2 * n / 3)
    assert exact / lead == pytest.approx(1.0, abs=1e-3)
    lead4 = factorial_moment_4("x", 1, n, 1, 1, 1, 1, 2, 1)
    exact4 = expected_counts(UrnState((1, 1, 1, 1)), FOUR, n)[n, 0]
    assert exact4 / lead4 == pytest.approx(1.0, abs=1e-3)


def test_leading_term_for_y_matches_exact_mean():
    n = 50_000
    exact = expected_counts(UrnState((1, 1, 1)), THREE, n)[n, 1]
    assert exact / factorial_moment_3("y", 1, n, 1, 1, 1, 2, 1) == pytest.approx(1.0, abs=5e-3)


def test_w_term_as_displayed_misses_linear_growth():
    # the w-count grows linearly, so a term of order n**(delta/theta) falls behind
    means = expected_counts(UrnState((1, 1, 1)), THREE, 10_000)
    ratios = [means[n, 2] / factorial_moment_3("w", 1, n, 1, 1, 1, 2, 1) for n in (100, 1000, 10_000)]
    assert ratios[0] < ratios[1] < ratios[2]
    # the x share of the total is a0 / t0 = 1/3 in mean, and almost all the rest is w
    assert means[10_000, 2] / 10_000 == pytest.approx(4 / 3, abs=0.02)


def test_moment_argument_checks():
    with pytest.raises(DegenerateModelError):
        factorial_moment_3("y", 1, 10, 1, 1, 1, 2, 0)
    with pytest.raises(ConfigError):
        factorial_moment_3("z", 1, 10, 1, 1, 1, 2, 1)
    with pytest.raises(ConfigError):
        factorial_moment_3("x", 0, 10, 1, 1, 1, 2, 1)


@settings(max_examples=25)
@given(theta=st.integers(1, 4), data=st.data())
def test_total_is_deterministic(theta, data):
    delta = data.draw(st.integers(0, theta - 1))
    init = UrnState(tuple(data.draw(st.integers(0, 3)) for _ in range(3)))
    if init.total == 0:
        init = UrnState((1, 0, 0))
    rm = ReinforcementMatrix.three_color(theta, delta)
    dist = exact_urn_distribution(init, rm, 4)
    assert all(sum(c) == init.total + 4 * theta for c in dist)
    assert sum(dist.values()) == pytest.approx(1.0)
