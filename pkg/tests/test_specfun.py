import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import special

from shockmodel.specfun import falling_factorial, gamma_p, gamma_q, pochhammer, upper_gamma


@given(a=st.floats(0.05, 80.0), x=st.floats(0.0, 150.0))
def test_regularized_gamma_against_scipy(a, x):
    assert gamma_q(a, x) == pytest.approx(special.gammaincc(a, x), rel=1e-10, abs=1e-300)
    assert gamma_p(a, x) == pytest.approx(special.gammainc(a, x), rel=1e-10, abs=1e-300)


def test_gamma_edges():
    assert gamma_q(3.0, 0.0) == 1.0 and gamma_p(3.0, 0.0) == 0.0
    assert gamma_q(1.0, 2.0) == pytest.approx(math.exp(-2.0), rel=1e-14)
    assert upper_gamma(2.5, 1.0) == pytest.approx(special.gammaincc(2.5, 1.0) * math.gamma(2.5), rel=1e-12)


def test_pochhammer_values():
    assert pochhammer(2, 3) == pytest.approx(24.0)
    assert pochhammer(2, 0.5) == pytest.approx(1.329340388, rel=1e-9)
    assert pochhammer(5.0, 0) == 1.0
    assert falling_factorial(5, 3) == 60
    assert falling_factorial(np.array([2, 3, 4]), 3).tolist() == [0, 6, 24]
