"""Interaction kernels for the nonlocal phase-transition energy.

A kernel is a nonnegative, symmetric function on R^dim that is comparable to
the power law |z|^(-dim-2s) at least near the origin.  This module provides
constructors for the families used throughout the library, a structural
hypothesis checker (`validate`), and the analytic tail/moment integrals that
the quadrature engine relies on for far-field and near-field corrections.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
from scipy import integrate

# Quadrature accuracy claims degrade as s approaches 0 or 1: both the
# near-field second moment and the far-field tail integral lose orders.
S_MIN = 0.05
S_MAX = 0.95

_REL_SLACK = 1e-10
_MAX_PANELS = 200

FAMILIES = ("fractional", "truncated", "homogeneous-anisotropic", "perturbed", "custom")


@dataclass(frozen=True, eq=False)
class KernelSpec:
    """An interaction kernel with its structural metadata.

    `evaluate` maps a point z (scalar for dim=1, or an array whose last axis
    has length `dim`) to the kernel value; z = 0 returns +inf.  The stored
    ellipticity constants `lambda_lower`/`lambda_upper` are the bounds the
    kernel is claimed to satisfy against the power law |z|^(-dim-2s) for
    |z| < r0 (and globally when r0 is infinite).  Instances are immutable
    and safe to share between workers.
    """

    dim: int
    s: float
    lambda_lower: float
    lambda_upper: float
    r0: float
    family: str
    evaluate: Callable[..., np.ndarray]
    coefficient: Optional[float] = None
    # Closures for the analytic integrals; None means "integrate numerically".
    _tail_half: Optional[Callable[[float], float]] = None
    _moment2: Optional[Callable[[float], float]] = None

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValueError(f"unknown kernel family {self.family!r}")


def _check_s(s: float) -> float:
    s = float(s)
    if not (0.0 < s < 1.0):
        raise ValueError(f"s must lie in (0, 1), got {s}")
    if not (S_MIN <= s <= S_MAX):
        raise ValueError(
            f"s={s} outside [{S_MIN}, {S_MAX}]; the moment and tail quadratures "
            "degenerate at the endpoints of (0, 1)"
        )
    return s


def _radius(z, dim: int):
    z = np.asarray(z, dtype=float)
    if dim == 1:
        return np.abs(z)
    if z.shape[-1] != dim:
        raise ValueError(f"expected points with last axis of length {dim}")
    return np.sqrt(np.sum(z * z, axis=-1))


def _power_law(r, exponent: float):
    """r**(-exponent) with an +inf sentinel at r = 0."""
    r = np.asarray(r, dtype=float)
    with np.errstate(divide="ignore"):
        out = np.where(r > 0.0, r, 1.0) ** (-exponent)
    out = np.where(r > 0.0, out, np.inf)
    return out if out.ndim else float(out)


def make_fractional(dim: int, s: float, coefficient: float = 1.0) -> KernelSpec:
    """Kernel coefficient * |z|^(-dim-2s), the fractional-Laplacian model."""
    dim = int(dim)
    if dim < 1:
        raise ValueError("dim must be a positive integer")
    s = _check_s(s)
    coefficient = float(coefficient)
    if coefficient <= 0.0:
        raise ValueError("coefficient must be positive")
    expo = dim + 2.0 * s

    def evaluate(z):
        return coefficient * _power_law(_radius(z, dim), expo)

    tail = None
    mom = None
    if dim == 1:
        def tail(a, _c=coefficient, _s=s):
            return _c * a ** (-2.0 * _s) / (2.0 * _s)

        def mom(rho, _c=coefficient, _s=s):
            return _c * rho ** (2.0 - 2.0 * _s) / (1.0 - _s)

    return KernelSpec(
        dim=dim, s=s, lambda_lower=coefficient, lambda_upper=coefficient,
        r0=math.inf, family="fractional", evaluate=evaluate,
        coefficient=coefficient, _tail_half=tail, _moment2=mom,
    )


def make_truncated(dim: int, s: float, r0: float, amplitude=1.0) -> KernelSpec:
    """Kernel amplitude(z) * |z|^(-dim-2s) cut off outside |z| < r0.

    `amplitude` is either a positive constant or a callable of z that is
    bounded and positive on the ball of radius r0.
    """
    dim = int(dim)
    if dim < 1:
        raise ValueError("dim must be a positive integer")
    s = _check_s(s)
    r0 = float(r0)
    if r0 <= 0.0:
        raise ValueError("r0 must be positive")
    expo = dim + 2.0 * s
    const_amp = None if callable(amplitude) else float(amplitude)
    if const_amp is not None and const_amp <= 0.0:
        raise ValueError("amplitude must be positive")

    def evaluate(z):
        r = _radius(z, dim)
        amp = amplitude(z) if const_amp is None else const_amp
        val = np.where(r < r0, amp * _power_law(r, expo), 0.0)
        return val if np.ndim(val) else float(val)

    lam = const_amp if const_amp is not None else _sample_bound(
        lambda r: amplitude(r), r0, lower=True)
    Lam = const_amp if const_amp is not None else _sample_bound(
        lambda r: amplitude(r), r0, lower=False)

    tail = None
    mom = None
    if dim == 1 and const_amp is not None:
        def tail(a, _c=const_amp, _s=s, _r0=r0):
            if a >= _r0:
                return 0.0
            return _c * (a ** (-2.0 * _s) - _r0 ** (-2.0 * _s)) / (2.0 * _s)

        def mom(rho, _c=const_amp, _s=s, _r0=r0):
            return _c * min(rho, _r0) ** (2.0 - 2.0 * _s) / (1.0 - _s)

    return KernelSpec(
        dim=dim, s=s, lambda_lower=lam, lambda_upper=Lam, r0=r0,
        family="truncated", evaluate=evaluate, _tail_half=tail, _moment2=mom,
    )


def _sample_bound(amp, r0, lower):
    rs = np.geomspace(1e-6 * r0, r0 * (1 - 1e-9), 512)
    vals = np.array([float(amp(r)) for r in rs])
    return float(vals.min() if lower else vals.max())


def make_perturbed(s: float, lambda_star: float, sigma: Callable[[float], float],
                   sigma_sup: Optional[float] = None) -> KernelSpec:
    """1-d kernel (lambda_star + sigma(|z|)) * |z|^(-1-2s).

    `sigma` must be nonnegative and bounded with a finite limit at infinity;
    negative samples are rejected here and reported by `validate`.  The upper
    ellipticity constant is lambda_star plus the sampled supremum of sigma
    (with a small headroom factor) unless `sigma_sup` is given explicitly.
    """
    s = _check_s(s)
    lambda_star = float(lambda_star)
    if lambda_star <= 0.0:
        raise ValueError("lambda_star must be positive")
    rs = np.geomspace(1e-6, 1e6, 2048)
    samples = np.array([float(sigma(r)) for r in rs])
    if np.any(samples < 0.0):
        raise ValueError("sigma must be nonnegative")
    if sigma_sup is None:
        peak = float(samples.max())
        sigma_sup = 1.02 * peak if peak > 0.0 else 0.0
    expo = 1.0 + 2.0 * s

    def evaluate(z):
        r = _radius(z, 1)
        sig = np.vectorize(sigma, otypes=[float])(r) if np.ndim(r) else float(sigma(r))
        return (lambda_star + sig) * _power_law(r, expo)

    def tail(a, _s=s):
        base = lambda_star * a ** (-2.0 * _s) / (2.0 * _s)
        extra = _tail_numeric(lambda r: sigma(r) * r ** (-1.0 - 2.0 * _s), a)
        return base + extra

    def mom(rho, _s=s):
        base = lambda_star * rho ** (2.0 - 2.0 * _s) / (1.0 - _s)
        extra = _moment_numeric(lambda r: sigma(r) * r ** (1.0 - 2.0 * _s), rho)
        return base + extra

    return KernelSpec(
        dim=1, s=s, lambda_lower=lambda_star, lambda_upper=lambda_star + sigma_sup,
        r0=math.inf, family="perturbed", evaluate=evaluate,
        _tail_half=tail, _moment2=mom,
    )


def make_homogeneous(dim: int, s: float, angular: Callable[..., float],
                     lambda_lower: Optional[float] = None,
                     lambda_upper: Optional[float] = None) -> KernelSpec:
    """Homogeneous kernel a(z/|z|) * |z|^(-dim-2s) with bounded angular part."""
    dim = int(dim)
    if dim < 1:
        raise ValueError("dim must be a positive integer")
    s = _check_s(s)
    expo = dim + 2.0 * s

    if dim == 1:
        a_plus = float(angular(1.0))
        a_minus = float(angular(-1.0))
        if not math.isclose(a_plus, a_minus, rel_tol=1e-12):
            raise ValueError("angular part must be even for a symmetric kernel")
        frac = make_fractional(1, s, a_plus)
        return KernelSpec(
            dim=1, s=s, lambda_lower=a_plus, lambda_upper=a_plus, r0=math.inf,
            family="homogeneous-anisotropic", evaluate=frac.evaluate,
            coefficient=a_plus, _tail_half=frac._tail_half, _moment2=frac._moment2,
        )

    def evaluate(z):
        z = np.asarray(z, dtype=float)
        r = _radius(z, dim)
        safe = np.where(r > 0.0, r, 1.0)
        theta = z / safe[..., None]
        a = np.apply_along_axis(angular, -1, theta) if z.ndim > 1 else float(angular(theta))
        val = a * _power_law(r, expo)
        return val if np.ndim(val) else float(val)

    if lambda_lower is None or lambda_upper is None:
        rng = np.random.default_rng(0)
        dirs = rng.normal(size=(512, dim))
        dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
        avals = np.array([float(angular(d)) for d in dirs])
        if lambda_lower is None:
            lambda_lower = float(avals.min())
        if lambda_upper is None:
            lambda_upper = float(avals.max())
    if lambda_lower <= 0.0:
        raise ValueError("angular part must be positive")
    return KernelSpec(
        dim=dim, s=s, lambda_lower=float(lambda_lower), lambda_upper=float(lambda_upper),
        r0=math.inf, family="homogeneous-anisotropic", evaluate=evaluate,
    )


def make_custom(dim: int, s: float, evaluate: Callable[..., float],
                lambda_lower: float, lambda_upper: float,
                r0: float = math.inf) -> KernelSpec:
    """Wrap a user-supplied evaluation rule with explicit ellipticity metadata."""
    dim = int(dim)
    if dim < 1:
        raise ValueError("dim must be a positive integer")
    s = _check_s(s)
    if not (0.0 < lambda_lower <= lambda_upper):
        raise ValueError("need 0 < lambda_lower <= lambda_upper")
    if r0 <= 0.0:
        raise ValueError("r0 must be positive")

    def vec_eval(z):
        r = _radius(z, dim)
        if np.ndim(r) == 0:
            return float(evaluate(z)) if float(r) > 0.0 else math.inf
        flat = np.asarray(z, dtype=float).reshape(-1, dim) if dim > 1 else \
            np.asarray(z, dtype=float).reshape(-1)
        vals = np.array([float(evaluate(p)) for p in flat])
        vals = np.where(np.asarray(r).reshape(-1) > 0.0, vals, np.inf)
        return vals.reshape(np.shape(r))

    return KernelSpec(
        dim=dim, s=s, lambda_lower=float(lambda_lower), lambda_upper=float(lambda_upper),
        r0=float(r0), family="custom", evaluate=vec_eval,
    )


# ---------------------------------------------------------------------------
# hypothesis validation


def _sample_points(K: KernelSpec, sample_count: int, seed: int):
    r0 = K.r0 if math.isfinite(K.r0) else 1.0
    lo = 1e-6 * r0
    hi = 1e6
    radii = np.geomspace(lo, hi, max(int(sample_count), 1))
    if K.dim == 1:
        return radii.copy(), radii
    rng = np.random.default_rng(seed)
    dirs = rng.normal(size=(radii.size, K.dim))
    dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
    return dirs * radii[:, None], radii


def validate(K: KernelSpec, sample_count: int = 256, seed: int = 0) -> dict:
    """Probe the kernel hypotheses on a deterministic sample set.

    Returns flags {"K1", "K2", "K2prime", "K2doubleprime"}: symmetry, local
    two-sided power-law comparability (|z| < r0), global comparability, and
    homogeneity of degree -(dim+2s) with bounded angular part.  The checks
    are sampled, so a True flag means "not falsified on the samples".
    """
    if sample_count < 1:
        raise ValueError("sample_count must be >= 1")
    pts, radii = _sample_points(K, sample_count, seed)
    vals = np.atleast_1d(np.asarray(K.evaluate(pts), dtype=float))
    vals_neg = np.atleast_1d(np.asarray(K.evaluate(-pts), dtype=float))

    scale = np.maximum(np.abs(vals), np.abs(vals_neg))
    k1 = bool(np.all(np.abs(vals - vals_neg) <= _REL_SLACK * scale + 1e-300))

    power = radii ** (-(K.dim + 2.0 * K.s))
    lo = K.lambda_lower * power * (1.0 - _REL_SLACK)
    hi = K.lambda_upper * power * (1.0 + _REL_SLACK)
    nonneg = bool(np.all(vals >= 0.0))

    inside = radii < K.r0
    k2 = nonneg and bool(np.all((vals[inside] >= lo[inside]) & (vals[inside] <= hi[inside])))
    k2p = nonneg and bool(np.all((vals >= lo) & (vals <= hi)))

    # Homogeneity: K(cz) * c^(dim+2s) must reproduce K(z) at every sample.
    k2pp = k2p
    if k2pp:
        for c in (2.0, 7.5):
            scaled = np.atleast_1d(np.asarray(K.evaluate(c * pts), dtype=float))
            target = vals * c ** (-(K.dim + 2.0 * K.s))
            ok = np.abs(scaled - target) <= _REL_SLACK * np.abs(target) + 1e-300
            if not bool(np.all(ok)):
                k2pp = False
                break

    return {"K1": k1, "K2": k2, "K2prime": k2p, "K2doubleprime": k2pp}


# ---------------------------------------------------------------------------
# tail and moment integrals (dim = 1)


def _require_1d(K: KernelSpec):
    if K.dim != 1:
        raise ValueError("this operation requires a 1-d kernel")


def _eval_abs(K: KernelSpec, r):
    """Kernel value at |z| = r for a 1-d kernel."""
    return K.evaluate(np.asarray(r, dtype=float))


def _tail_numeric(f, a: float) -> float:
    """Integrate f over (a, inf) with geometric panels of ratio 2.

    Power-law tails lose a constant factor per panel, so the panel series
    converges geometrically; stop once the last panel is relatively tiny.
    """
    total = 0.0
    left = float(a)
    for _ in range(_MAX_PANELS):
        right = 2.0 * left
        piece, _ = integrate.quad(f, left, right, limit=200)
        total += piece
        if abs(piece) < 1e-12 * max(abs(total), 1e-300):
            return total
        left = right
    raise RuntimeError("tail integral did not converge within the panel budget")


def _moment_numeric(f, rho: float) -> float:
    """Integrate f over (0, rho) with panels shrinking geometrically to 0."""
    total = 0.0
    right = float(rho)
    for _ in range(_MAX_PANELS):
        left = right / 2.0
        piece, _ = integrate.quad(f, left, right, limit=200)
        total += piece
        if abs(piece) < 1e-12 * max(abs(total), 1e-300):
            return total
        right = left
    raise RuntimeError("moment integral did not converge within the panel budget")


def tail_half(K: KernelSpec, a: float) -> float:
    """Integral of K over (a, inf) for a 1-d kernel (one side of the tail)."""
    _require_1d(K)
    a = float(a)
    if a <= 0.0:
        raise ValueError("a must be positive")
    if K._tail_half is not None:
        return float(K._tail_half(a))
    if math.isfinite(K.r0):
        if a >= K.r0:
            return 0.0
        val, _ = integrate.quad(lambda r: float(_eval_abs(K, r)), a, K.r0, limit=200)
        return float(val)
    return float(_tail_numeric(lambda r: float(_eval_abs(K, r)), a))


def tail_mass(K: KernelSpec, a: float) -> float:
    """Integral of K over {|z| >= a} (both tails) for a 1-d kernel."""
    return 2.0 * tail_half(K, a)


def second_moment(K: KernelSpec, rho: float) -> float:
    """Integral of z^2 K(z) over {|z| < rho}, the near-field moment."""
    _require_1d(K)
    rho = float(rho)
    if rho <= 0.0:
        raise ValueError("rho must be positive")
    if K._moment2 is not None:
        return float(K._moment2(rho))
    top = min(rho, K.r0) if math.isfinite(K.r0) else rho
    return 2.0 * _moment_numeric(lambda r: r * r * float(_eval_abs(K, r)), top)


# ---------------------------------------------------------------------------
# the rescaled limit kernel at infinity (s = 1/2 only)


@dataclass(frozen=True)
class KernelInfinityEstimate:
    """Extrapolated limit of R^2 K(Rz) plus its integral over (1, inf)."""

    value: float          # limit estimate at the requested z
    g: float              # 2 * integral of the limit kernel over (1, inf)
    convergent: bool      # False when the R-sequence still oscillates
    samples: np.ndarray   # rows (R, R^2 K(Rz)) at the requested z


def _extrapolate_inverse(rs: np.ndarray, vs: np.ndarray) -> float:
    """Limit of a sequence modelled as a + b/R, from its last two entries."""
    r1, r2 = rs[-2], rs[-1]
    v1, v2 = vs[-2], vs[-1]
    return float((r2 * v2 - r1 * v1) / (r2 - r1))


def kernel_infinity(K: KernelSpec, z: float, R_list) -> KernelInfinityEstimate:
    """Estimate the rescaled kernel limit at z > 1 and its tail integral.

    The R^2 prefactor matches s = 1/2, the only order for which the limit
    enters the energy-growth constant; other orders are rejected.
    """
    _require_1d(K)
    if K.s != 0.5:
        raise ValueError("the rescaled limit is defined for s = 1/2 kernels only")
    z = float(z)
    if z <= 1.0:
        raise ValueError("z must exceed 1")
    rs = np.asarray(list(R_list), dtype=float)
    if rs.size < 2 or np.any(np.diff(rs) <= 0.0):
        raise ValueError("R_list must be increasing with at least two entries")

    def rescaled(zz: float) -> np.ndarray:
        return rs ** 2 * np.asarray(K.evaluate(rs * zz), dtype=float)

    vs = rescaled(z)
    osc = abs(vs[-1] - vs[-2]) / max(abs(vs[-1]), 1e-300)
    convergent = bool(osc <= 1e-3)
    value = _extrapolate_inverse(rs, vs)

    def k_inf(w: float) -> float:
        # integrand in the substitution zz = 1/w, dz = dw / w^2
        zz = 1.0 / w
        return _extrapolate_inverse(rs, rescaled(zz)) / w ** 2

    g_half, _ = integrate.quad(k_inf, 1e-12, 1.0, limit=200)
    samples = np.column_stack([rs, vs])
    return KernelInfinityEstimate(value=value, g=2.0 * g_half,
                                  convergent=convergent, samples=samples)
