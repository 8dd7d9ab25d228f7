from collections import defaultdict

import numpy as np
import pytest

from shockmodel.distributions import DiscreteFinite
from shockmodel.enumeration import (absorption_distribution, enumerate_sequences, enumerate_sequences_literal,
                                    state_distribution)
from shockmodel.errors import StateBudgetExceeded
from shockmodel.harness import enumeration_check
from shockmodel.model import AffineIncrements, ModelParams
from shockmodel.verify import ORACLE_LAWS


def test_vectorized_sequences_match_literal_replay(uniform5):
    f, params = uniform5
    tab = enumerate_sequences(f, params, 4)
    literal = list(enumerate_sequences_literal(f, params, 4))
    assert len(literal) == tab.prob.size
    for i, (p, stats, prefix) in enumerate(literal):
        assert tab.prob[i] == pytest.approx(p)
        assert (tab.nu[i] or None) == stats.nu
        assert (tab.w[i] or None) == stats.w
        assert (tab.n_plus[i], tab.n_minus[i]) == (stats.n_plus, stats.n_minus)
        assert (tab.plus_after[3, i], tab.minus_after[3, i]) == (prefix.n_plus, prefix.n_minus)


def test_merged_states_match_sequences(uniform5):
    f, params = uniform5
    n = 6
    tab = enumerate_sequences(f, params, n)
    brute = defaultdict(float)
    for p, k, l, w, nu in zip(tab.prob, tab.n_plus, tab.n_minus, tab.w, tab.nu):
        brute[(int(k), int(l), int(w), int(nu))] += p
    merged = state_distribution(f, params, n)
    assert set(k for k, v in brute.items() if v > 0) == set(merged)
    for key, p in merged.items():
        assert p == pytest.approx(brute[key], abs=1e-14)
    assert sum(merged.values()) == pytest.approx(1.0, abs=1e-14)


def test_absorption_is_a_distribution(uniform5):
    f, params = uniform5
    absorbed, residual = absorption_distribution(f, params)
    assert residual < 1e-15
    assert sum(absorbed.values()) == pytest.approx(1.0, abs=1e-14)


def test_sequence_budget():
    f = DiscreteFinite(tuple(range(10)), (0.1,) * 10)
    with pytest.raises(StateBudgetExceeded):
        enumerate_sequences(f, ModelParams(8, 5, 2), 8)


@pytest.mark.parametrize("law", sorted(ORACLE_LAWS))
def test_formulas_match_enumeration(law):
    f, params = ORACLE_LAWS[law]
    report = enumeration_check(f, params, m_max=7)
    assert report.passed, report.to_text()
    assert max(report.max_error.values()) < 1e-13
