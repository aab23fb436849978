import math

import numpy as np
import pytest

from eprbfock.errors import AccuracyError
from eprbfock.quadrature import adaptive_gauss_legendre, composite_gauss_legendre_rule


@pytest.mark.parametrize("f,a,b,exact", [
    (np.exp, 0.0, 1.0, math.e - 1),
    (lambda x: np.exp(-x * x), -8.0, 8.0, math.sqrt(math.pi)),
    (lambda x: 1 / (1 + 100 * x * x), -1.0, 1.0, 0.2 * math.atan(10)),
    (np.sqrt, 0.0, 1.0, 2 / 3),
])
def test_adaptive_accuracy(f, a, b, exact):
    res = adaptive_gauss_legendre(f, a, b, rtol=1e-12)
    assert abs(res.value - exact) <= 1e-11 * abs(exact)


def test_reversed_and_empty_intervals():
    assert adaptive_gauss_legendre(np.cos, 1.0, 1.0).value == 0
    fwd = adaptive_gauss_legendre(np.cos, 0.0, 2.0).value
    assert adaptive_gauss_legendre(np.cos, 2.0, 0.0).value == pytest.approx(-fwd, rel=1e-14)


def test_forced_breakpoints_catch_narrow_peak():
    f = lambda x: np.exp(-0.5 * ((x - 7.3) / 1e-3) ** 2)
    exact = 1e-3 * math.sqrt(2 * math.pi)
    # bracket the peak; a lone point at the peak leaves it on panel edges,
    # where no Gauss node samples it
    pts = [7.3 + k * 1e-3 for k in (-12, -6, -3, 0, 3, 6, 12)]
    res = adaptive_gauss_legendre(f, 0.0, 10.0, points=pts, rtol=1e-10)
    assert abs(res.value - exact) <= 1e-9 * exact


def test_non_convergence_reports_estimate():
    with pytest.raises(AccuracyError) as err:
        adaptive_gauss_legendre(lambda x: np.sin(1 / x), 1e-6, 1.0, rtol=1e-14, max_intervals=20)
    assert err.value.estimate is not None
    assert err.value.error_bound > 0


def test_composite_rule_integrates_polynomials():
    x, w = composite_gauss_legendre_rule(-1.0, 3.0, 5, order=4)
    assert np.sum(w * x**7) == pytest.approx((3.0**8 - 1.0) / 8, rel=1e-13)
    assert np.sum(w) == pytest.approx(4.0, rel=1e-15)
