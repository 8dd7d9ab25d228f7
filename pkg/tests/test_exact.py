import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from shockmodel.distributions import DiscreteFinite, Exponential
from shockmodel.enumeration import absorption_distribution
from shockmodel.errors import ConfigError, DegenerateModelError
from shockmodel.exact import (SurvivalTriple, joint_pmf, joint_survival, nplus_nminus_table, pmf_nplus_nminus,
                              pmf_nu, survival_nu, survival_nu_table)
from shockmodel.model import AffineIncrements, ModelParams


def _triple(s_alpha):
    return SurvivalTriple(0.2, 0.1, lambda k, l: s_alpha[(k, l)] if (k, l) in s_alpha else s_alpha["default"])


def realizing_law():
    """Discrete law and model with tails 0.2 at gamma, 0.1 at beta, 0.05 at
    alpha_{0,0} and alpha_{1,1}, 0.04 at alpha_{1,0}."""
    f = DiscreteFinite((0.0, 1.5, 3.0, 5.0, 6.0), (0.8, 0.1, 0.05, 0.01, 0.04))
    params = ModelParams(5, 2, 1, AffineIncrements(1.0, cap=1.0), AffineIncrements(1.0))
    return f, params


def test_no_weakening_no_strengthening_example():
    st_ = SurvivalTriple.from_table(0.2, 0.1, {(0, 0): 0.05})
    assert pmf_nplus_nminus(0, 0, st_) == pytest.approx(0.25, abs=1e-15)


def test_one_and_one_example():
    st_ = SurvivalTriple.from_table(0.2, 0.1, {(1, 0): 0.04, (1, 1): 0.05})
    assert pmf_nplus_nminus(1, 1, st_) == pytest.approx(0.5 * 0.6 * 0.25, abs=1e-15)


def test_one_and_one_example_three_routes():
    f, params = realizing_law()
    st_ = SurvivalTriple.from_model(params, f)
    assert (st_.s_gamma, st_.s_beta) == pytest.approx((0.2, 0.1))
    assert st_.alpha(0, 0) == pytest.approx(0.05) and st_.alpha(1, 0) == pytest.approx(0.04)
    assert st_.alpha(1, 1) == pytest.approx(0.05)
    closed = pmf_nplus_nminus(1, 1, st_)
    assert closed == pytest.approx(0.075, abs=1e-14)
    # summing the joint law over the failure epoch and the first harmful epoch
    total = sum(joint_pmf(m, 1, 1, j, st_) for m in range(1, 500) for j in range(2, m))
    assert total == pytest.approx(0.075, abs=1e-12)
    absorbed, residual = absorption_distribution(f, params)
    assert residual < 1e-15
    assert absorbed[(1, 1)] == pytest.approx(0.075, abs=1e-14)


def test_joint_pmf_support():
    st_ = SurvivalTriple.from_model(ModelParams(5, 4, 3, AffineIncrements(1), AffineIncrements(0.5)),
                                    DiscreteFinite((1, 2, 3, 4, 5), (0.2,) * 5))
    assert joint_pmf(5, 2, 1, 2, st_) == 0.0  # k >= j
    assert joint_pmf(5, 1, 3, 3, st_) == 0.0  # m < j + l
    assert joint_pmf(5, 1, 0, 4, st_) == 0.0  # l = 0 forces j = m
    assert joint_pmf(5, 1, 0, 5, st_) == 0.0  # one strengthening lifts the threshold past the top atom
    assert joint_pmf(5, 0, 0, 5, st_) > 0.0
    assert joint_survival(5, 1, 0, 5, st_) == 0.0  # l = 0 needs j > m
    assert joint_survival(5, 1, 0, 6, st_) > 0.0
    assert joint_survival(5, 1, 3, 4, st_) == 0.0  # m < j + l - 1
    assert joint_survival(5, 1, 3, 3, st_) > 0.0


def test_index_validation():
    st_ = SurvivalTriple.from_table(0.2, 0.1, {(0, 0): 0.05})
    with pytest.raises(ConfigError):
        joint_pmf(0, 0, 0, 1, st_)
    with pytest.raises(ConfigError):
        pmf_nplus_nminus(-1, 0, st_)
    with pytest.raises(ConfigError):
        SurvivalTriple(0.1, 0.2, lambda k, l: 0.0)
    bad = SurvivalTriple(0.2, 0.1, lambda k, l: 0.3)
    with pytest.raises(ConfigError):
        bad.alpha(0, 0)


def test_degenerate_gamma():
    st_ = SurvivalTriple(0.0, 0.0, lambda k, l: 0.0)
    with pytest.raises(DegenerateModelError):
        pmf_nplus_nminus(0, 0, st_)


def test_joint_pmf_marginalizes_to_counts_law(uniform5):
    f, params = uniform5
    st_ = SurvivalTriple.from_model(params, f)
    for k in range(3):
        for l in range(3):
            total = sum(joint_pmf(m, k, l, j, st_) for m in range(1, 300) for j in range(1, m + 1))
            assert total == pytest.approx(pmf_nplus_nminus(k, l, st_), abs=1e-12)


def test_survival_telescopes(uniform5):
    f, params = uniform5
    st_ = SurvivalTriple.from_model(params, f)
    surv = survival_nu_table(40, st_)
    assert surv[0] == 1.0
    pm = np.array([pmf_nu(m, st_) for m in range(1, 41)])
    assert np.allclose(np.cumsum(pm), 1 - surv[1:], atol=1e-13)
    # joint survival summed over (k, l, j) is the survival of nu
    m = 7
    total = sum(joint_survival(m, k, l, j, st_) for k in range(m + 1) for l in range(m + 1) for j in range(1, m + 2))
    total += sum(joint_survival(m, k, 0, j, st_) for k in range(m) for j in range(m + 2, 400))
    assert total == pytest.approx(surv[m], abs=1e-12)


def test_geometric_survival_when_thresholds_are_fixed():
    alpha = math.log(10.0)
    params = ModelParams(alpha, alpha / 2, alpha / 2)
    st_ = SurvivalTriple.from_model(params, Exponential(1.0))
    for m in (1, 2, 3, 10, 50):
        assert survival_nu(m, st_) == pytest.approx(0.9 ** m, rel=1e-12)


def test_counts_table_sums_to_one(uniform5):
    f, params = uniform5
    table, bound = nplus_nminus_table(SurvivalTriple.from_model(params, f), tol=1e-12)
    assert abs(sum(table.values()) - 1.0) <= bound + 1e-14
    assert bound < 1e-11


survivals = st.tuples(st.floats(0.01, 1.0), st.floats(0.01, 1.0), st.floats(0.0, 1.0), st.floats(0.0, 1.0),
                      st.floats(0.0, 0.5), st.floats(0.0, 0.5))


def _random_triple(vals):
    sg, rb, ra, rate_l, drop_k, _ = vals
    sb = sg * rb
    base = sb * ra

    def s_alpha(k, l):
        return min(sb, base * (1 - drop_k) ** k + rate_l * l * (sb - base) / 4)

    return SurvivalTriple(sg, sb, s_alpha)


@given(vals=survivals, m=st.integers(1, 12), k=st.integers(0, 6), l=st.integers(0, 6), j=st.integers(1, 13))
def test_probabilities_in_unit_interval(vals, m, k, l, j):
    st_ = _random_triple(vals)
    for p in (joint_pmf(m, k, l, j, st_), joint_survival(m, k, l, j, st_), pmf_nplus_nminus(k, l, st_),
              survival_nu(m, st_), pmf_nu(m, st_)):
        assert 0.0 <= p <= 1.0 + 1e-12


@given(vals=survivals, m=st.integers(1, 15))
def test_survival_nonincreasing(vals, m):
    st_ = _random_triple(vals)
    assert survival_nu(m, st_) <= survival_nu(m - 1, st_) + 1e-13
