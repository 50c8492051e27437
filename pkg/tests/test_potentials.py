import numpy as np
import pytest

import fraclayer as fl
from fraclayer.potentials import Potential


def _fd(f, r, eps=1e-6):
    return (f(r + eps) - f(r - eps)) / (2 * eps)


def test_quartic_values():
    W = fl.quartic()
    assert W.w(1.0) == 0.0
    assert W.w(0.0) == pytest.approx(0.25)
    # second derivative at the well against a finite-difference oracle on W'
    assert W.w_second(1.0) == pytest.approx(_fd(W.w_prime, 1.0), abs=1e-8)
    assert W.w_second(1.0) == pytest.approx(2.0)


def test_quartic_assumptions():
    rep = fl.check_assumptions(fl.quartic())
    assert rep == {"W1": True, "W2": True, "W3": True, "W4": True}


def test_asymmetric_variant_fails_w4():
    base = fl.quartic()
    P = Potential(
        w=lambda r: base.w(r) * (1.0 + r) / 2.0,
        w_prime=lambda r: base.w_prime(r) * (1.0 + r) / 2.0 + base.w(r) / 2.0,
        w_second=lambda r: base.w_second(r) * (1.0 + r) / 2.0 + base.w_prime(r),
    )
    rep = fl.check_assumptions(P)
    assert not rep["W4"]
    assert rep["W2"]


def test_flat_well_variant_fails_w3():
    P = Potential(
        w=lambda r: (1.0 - r ** 2) ** 4 / 4.0,
        w_prime=lambda r: -2.0 * r * (1.0 - r ** 2) ** 3,
        w_second=lambda r: -2.0 * (1.0 - r ** 2) ** 3 + 12.0 * r ** 2 * (1.0 - r ** 2) ** 2,
    )
    # finite-difference oracle confirms the curvature vanishes at the wells
    assert _fd(P.w_prime, 1.0) == pytest.approx(0.0, abs=1e-8)
    rep = fl.check_assumptions(P)
    assert not rep["W3"]
    assert rep["W1"] and rep["W2"] and rep["W4"]


def test_derivative_consistency():
    W = fl.quartic()
    rs = np.arange(-1.5, 1.5 + 1e-12, 1e-4)
    fd1 = (W.w(rs + 1e-4) - W.w(rs - 1e-4)) / 2e-4
    assert np.max(np.abs(W.w_prime(rs) - fd1)) <= 1e-6
    fd2 = (W.w_prime(rs + 1e-4) - W.w_prime(rs - 1e-4)) / 2e-4
    assert np.max(np.abs(W.w_second(rs) - fd2)) <= 1e-6


def test_w_prime_odd_under_w4():
    W = fl.quartic()
    rs = np.linspace(-1.0, 1.0, 101)
    assert np.max(np.abs(W.w_prime(-rs) + W.w_prime(rs))) <= 1e-12


def test_sample_count_validation():
    with pytest.raises(ValueError):
        fl.check_assumptions(fl.quartic(), sample_count=2)
