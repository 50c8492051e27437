import math

import numpy as np
import pytest

import fraclayer as fl
from fraclayer.kernels import second_moment, tail_half
from fraclayer.operators import QuadratureOptions, _MODEL_RADIUS
from fraclayer.profiles import Profile, make_constant
from fraclayer.potentials import Potential


def zero_potential():
    return Potential(w=lambda r: 0.0 * np.asarray(r, float),
                     w_prime=lambda r: 0.0 * np.asarray(r, float),
                     w_second=lambda r: 0.0 * np.asarray(r, float))


# ---------------------------------------------------------------------------
# naive direct-summation oracles, mirroring the documented quadrature rules
# with plain loops (reduction-order independent)


def _uext(P, idx):
    if idx < 0:
        return P.boundary[0]
    if idx > P.values.size - 1:
        return P.boundary[1]
    return P.values[idx]


def _model_correction(K, P, j0):
    h = P.spacing
    n = P.values.size - 1
    jz = min(max(round(_MODEL_RADIUS / h), j0), n // 2)
    if jz <= j0:
        return 0.0
    total = 0.0
    for j in range(j0, jz + 1):
        w = 0.5 if j in (j0, jz) else 1.0
        total += w * h * float(K.evaluate(j * h)) * (j * h) ** 2
    return 0.5 * (second_moment(K, jz * h) - second_moment(K, j0 * h)) - total


def oracle_apply(K, P, k):
    h = P.spacing
    n = P.values.size - 1
    u = P.values
    j0 = 2
    upp = (u[k + 1] - 2.0 * u[k] + u[k - 1]) / h ** 2
    total = (0.5 * second_moment(K, j0 * h) + _model_correction(K, P, j0)) * upp
    for j in range(j0, n + 1):
        w = 0.5 if j in (j0, n) else 1.0
        delta = _uext(P, k + j) + _uext(P, k - j) - 2.0 * u[k]
        total += w * h * float(K.evaluate(j * h)) * delta
    total += (P.boundary[0] + P.boundary[1] - 2.0 * u[k]) * tail_half(K, n * h)
    return total


def _trap_weights(h, count):
    w = [h] * count
    w[0] = w[-1] = h / 2.0
    return w


def oracle_energy(K, W, P, a, b):
    h = P.spacing
    n = P.values.size - 1
    u = P.values
    x = P.nodes
    p, q = P.node_index(a), P.node_index(b)
    wA = _trap_weights(h, q - p + 1)

    interior = 0.0
    for i in range(p, q + 1):
        for j in range(p, q + 1):
            if i == j:
                continue
            interior += wA[i - p] * wA[j - p] * (u[i] - u[j]) ** 2 \
                * float(K.evaluate(abs(x[i] - x[j])))
    for i in range(p, q + 1):
        if i == 0:
            du = (u[1] - u[0]) / h
        elif i == n:
            du = (u[n] - u[n - 1]) / h
        else:
            du = (u[i + 1] - u[i - 1]) / (2 * h)
        interior += wA[i - p] * du ** 2 * second_moment(K, h / 2.0)
    interior *= 0.25

    cross = 0.0
    segments = []
    if p > 0:
        segments.append((0, p))
    if q < n:
        segments.append((q, n))
    for lo, hi in segments:
        wy = _trap_weights(h, hi - lo + 1)
        for i in range(p, q + 1):
            for j in range(lo, hi + 1):
                if i == j:
                    continue
                cross += wA[i - p] * wy[j - lo] * (u[i] - u[j]) ** 2 \
                    * float(K.evaluate(abs(x[i] - x[j])))
    blo, bhi = P.boundary
    for i in range(p, q + 1):
        if (u[i] - bhi) ** 2 > 0.0:
            cross += wA[i - p] * (u[i] - bhi) ** 2 * tail_half(K, (n - i) * h)
        if (u[i] - blo) ** 2 > 0.0:
            cross += wA[i - p] * (u[i] - blo) ** 2 * tail_half(K, i * h)
    cross *= 0.5

    potential = sum(wA[i - p] * float(W.w(u[i])) for i in range(p, q + 1))
    return interior, cross, potential


def oracle_beta(K, W, P, k):
    h = P.spacing
    n = P.values.size - 1
    u = P.values
    x = P.nodes
    wg = _trap_weights(h, n + 1)
    total = 0.0
    for j in range(n + 1):
        if j == k:
            continue
        total += wg[j] * (u[j] - u[k]) ** 2 * float(K.evaluate(abs(x[j] - x[k])))
    du = (u[k + 1] - u[k - 1]) / (2 * h)
    total += du ** 2 * second_moment(K, h / 2.0)
    blo, bhi = P.boundary
    if (u[k] - bhi) ** 2 > 0.0:
        total += (u[k] - bhi) ** 2 * tail_half(K, (n - k) * h)
    if (u[k] - blo) ** 2 > 0.0:
        total += (u[k] - blo) ** 2 * tail_half(K, k * h)
    return 0.25 * total + float(W.w(u[k]))


# ---------------------------------------------------------------------------


@pytest.mark.parametrize("s", [0.25, 0.5, 0.75])
def test_apply_operator_matches_oracle(s):
    K = fl.make_fractional(1, s, 1.3)
    P = fl.make_tanh_init(6.0, 0.25)  # 49 nodes
    for k in (1, 7, 24, 40, 47):
        assert fl.apply_operator(K, P, P.nodes[k]) == pytest.approx(
            oracle_apply(K, P, k), abs=1e-10)


def test_apply_operator_rejects_boundary_nodes():
    K = fl.make_fractional(1, 0.5, 1.0)
    P = fl.make_tanh_init(6.0, 0.25)
    with pytest.raises(ValueError):
        fl.apply_operator(K, P, -6.0)


def test_apply_operator_constant_and_odd():
    K = fl.make_fractional(1, 0.5, 1.0)
    C = make_constant(6.0, 0.25, 0.37)
    assert fl.apply_operator(K, C, 1.0) == 0.0
    P = fl.make_tanh_init(6.0, 0.25)
    assert fl.apply_operator(K, P, 0.0) == pytest.approx(0.0, abs=1e-14)


def test_apply_operator_brute_force_tanh():
    """Fine symmetric principal-value quadrature of the smooth layer."""
    K = fl.make_fractional(1, 0.5, 1.0)
    M, h, x = 50.0, 0.01, 1.0
    n = round(2 * M / h)
    vals = np.tanh(-M + h * np.arange(n + 1))
    vals[0], vals[-1] = -1.0, 1.0
    P = Profile(half_width=M, spacing=h, values=vals)

    step = 1e-4
    zmax = 1e4
    total = 0.0
    chunk = 10 ** 6
    edges = np.arange(0.0, zmax, chunk * step)
    for lo in edges:
        z = lo + step * (np.arange(chunk) + 0.5)
        z = z[z < zmax]
        delta = np.tanh(x + z) + np.tanh(x - z) - 2.0 * np.tanh(x)
        total += float(np.sum(delta * z ** -2.0)) * step
    total += (-2.0 * np.tanh(x)) * (1.0 / zmax)  # constant tail beyond zmax

    assert fl.apply_operator(K, P, x) == pytest.approx(total, abs=1e-4)


def test_residual_zero_interior_profile():
    W = fl.quartic()
    K = fl.make_fractional(1, 0.5, 1.0)
    n = round(2 * 6.0 / 0.25)
    vals = np.zeros(n + 1)
    vals[0], vals[-1] = -1.0, 1.0
    P = Profile(half_width=6.0, spacing=0.25, values=vals)
    # defect vanishes at the origin by oddness, not elsewhere
    mid = fl.apply_operator(K, P, 0.0) - float(W.w_prime(0.0))
    assert mid == pytest.approx(0.0, abs=1e-14)
    off = fl.apply_operator(K, P, 2.0) - float(W.w_prime(0.0))
    assert abs(off) > 1e-3
    assert fl.residual(K, W, P) > 1e-3


def test_residual_linear_init_positive():
    W = fl.quartic()
    K = fl.make_fractional(1, 0.5, 1.0)
    P = fl.make_linear_init(6.0, 0.25)
    assert fl.residual(K, W, P) > 1e-2


def test_energy_constant_zero_profile():
    W = fl.quartic()
    K = fl.make_fractional(1, 0.5, 1.0)
    C = make_constant(6.0, 0.25, 0.0)
    eb = fl.energy(K, W, C, (0.0, 1.0))
    assert eb.interior == 0.0
    assert eb.cross == 0.0
    assert eb.potential == pytest.approx(0.25, rel=1e-14)
    assert eb.total == pytest.approx(0.25, rel=1e-14)


@pytest.mark.parametrize("s", [0.25, 0.5, 0.75])
def test_energy_matches_oracle(s):
    K = fl.make_fractional(1, s, 0.8)
    W = fl.quartic()
    P = fl.make_tanh_init(4.0, 0.25)  # 33 nodes
    for iv in ((-4.0, 4.0), (-2.0, 2.0), (0.0, 3.0)):
        eb = fl.energy(K, W, P, iv)
        oi, oc, op = oracle_energy(K, W, P, *iv)
        assert eb.interior == pytest.approx(oi, abs=1e-10)
        assert eb.cross == pytest.approx(oc, abs=1e-10)
        assert eb.potential == pytest.approx(op, abs=1e-12)


def test_energy_misaligned_interval():
    K = fl.make_fractional(1, 0.5, 1.0)
    P = fl.make_tanh_init(4.0, 0.25)
    with pytest.raises(ValueError):
        fl.energy(K, fl.quartic(), P, (-0.13, 2.0))


def test_energy_monotone_in_interval():
    K = fl.make_fractional(1, 0.5, 1.0)
    W = fl.quartic()
    P = fl.make_tanh_init(6.0, 0.25)
    totals = [fl.energy(K, W, P, (-R, R)).total for R in (1.0, 2.0, 4.0, 6.0)]
    assert all(b >= a for a, b in zip(totals, totals[1:]))


def test_energy_quadratic_scaling():
    K = fl.make_fractional(1, 0.5, 1.0)
    Z = zero_potential()
    n = round(2 * 6.0 / 0.25)
    x = -6.0 + 0.25 * np.arange(n + 1)
    small = 0.4 * np.tanh(x)
    small[0], small[-1] = -0.4 * 1.0, 0.4 * 1.0
    P1 = Profile(half_width=6.0, spacing=0.25, values=small,
                 boundary=(small[0], small[-1]))
    P2 = Profile(half_width=6.0, spacing=0.25, values=2 * small,
                 boundary=(2 * small[0], 2 * small[-1]))
    e1 = fl.energy(K, Z, P1, (-6.0, 6.0))
    e2 = fl.energy(K, Z, P2, (-6.0, 6.0))
    assert e2.interior + e2.cross == pytest.approx(
        4.0 * (e1.interior + e1.cross), rel=1e-13)


def test_energy_linear_init_scaling_bound():
    """Energy of the clipped-linear profile stays below the scaling factor:
    the ratio to psi_s remains within a fixed band of its first value and
    its increments shrink, so a single fitted constant covers all M."""
    W = fl.quartic()
    for s in (0.25, 0.5):
        K = fl.make_fractional(1, s, 1.0)
        ratios = []
        for M in (10.0, 20.0, 40.0):
            P = fl.make_linear_init(M, 0.1)
            ratios.append(fl.energy(K, W, P, (-M, M)).total / fl.psi_s(s, M))
        assert max(ratios) <= 1.25 * ratios[0]
        assert ratios[2] - ratios[1] <= max(ratios[1] - ratios[0], 0.0) + 1e-9


@pytest.mark.parametrize("s", [0.25, 0.5, 0.75])
def test_beta_density_matches_oracle(s):
    K = fl.make_fractional(1, s, 1.1)
    W = fl.quartic()
    P = fl.make_tanh_init(6.0, 0.25)
    for k in (3, 24, 40):
        assert fl.beta_density(K, W, P, P.nodes[k]) == pytest.approx(
            oracle_beta(K, W, P, k), abs=1e-10)


def test_beta_density_constant_at_well():
    K = fl.make_fractional(1, 0.5, 1.0)
    W = fl.quartic()
    C = make_constant(6.0, 0.25, 1.0)
    assert fl.beta_density(K, W, C, 2.0) == 0.0


def test_tail_interaction_matches_oracle():
    K = fl.make_fractional(1, 0.5, 1.0)
    W = zero_potential()
    P = fl.make_tanh_init(4.0, 0.25)
    for R in (1.0, 2.0, 3.0):
        _, oc, _ = oracle_energy(K, W, P, -R, R)
        assert fl.tail_interaction(K, P, R) == pytest.approx(2.0 * oc, abs=1e-10)
    assert fl.tail_interaction(K, make_constant(4.0, 0.25, 1.0), 2.0) == 0.0
    with pytest.raises(ValueError):
        fl.tail_interaction(K, P, 5.0)


def test_translation_covariance():
    K = fl.make_fractional(1, 0.5, 1.0)
    P = fl.make_linear_init(6.0, 0.25)
    vals = np.roll(P.values, 1)
    vals[0] = -1.0
    Q = Profile(half_width=6.0, spacing=0.25, values=vals)
    for k in (8, 12, 14):
        a = fl.apply_operator(K, P, P.nodes[k])
        b = fl.apply_operator(K, Q, Q.nodes[k + 1])
        assert b == pytest.approx(a, abs=1e-12)


def test_interior_maximum_sign():
    K = fl.make_fractional(1, 0.5, 1.0)
    n = round(2 * 6.0 / 0.25)
    x = -6.0 + 0.25 * np.arange(n + 1)
    vals = 0.5 * np.exp(-x ** 2)
    vals[0] = vals[-1] = 0.0
    P = Profile(half_width=6.0, spacing=0.25, values=vals, boundary=(0.0, 0.0))
    assert fl.apply_operator(K, P, 0.0) < 0.0


def test_quadrature_options_validation():
    with pytest.raises(ValueError):
        QuadratureOptions(abs_tol=-1.0)
    K = fl.make_fractional(1, 0.5, 1.0)
    P = fl.make_tanh_init(6.0, 0.25)
    with pytest.raises(ValueError):
        fl.apply_operator(K, P, 1.0, QuadratureOptions(near_field_radius=0.1))
    # a looser near field is allowed
    val = fl.apply_operator(K, P, 1.0, QuadratureOptions(near_field_radius=0.5))
    assert np.isfinite(val)
