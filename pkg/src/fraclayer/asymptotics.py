"""Rate fitting and limit extrapolation for the layer's asymptotic laws.

These tools turn the qualitative statements about the layer (power-law
decay of 1 - u and u', energy growth proportional to the scaling factor,
the R * beta(R) limit at s = 1/2) into desk-scale regressions with explicit
windows and residuals.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .kernels import KernelSpec, validate
from .operators import EnergyBreakdown, beta_density, energy
from .potentials import Potential
from .profiles import Profile, center


@dataclass(frozen=True)
class FitReport:
    """Outcome of a rate regression: exponent, prefactor, window, residuals."""

    exponent: float
    constant: float
    window: tuple
    max_rel_residual: float
    samples: np.ndarray  # rows (x, measured, fitted)


def psi_s(s: float, R: float) -> float:
    """Energy scaling factor: R^(1-2s) below 1/2, log R at 1/2, 1 above.

    The branch is genuinely discontinuous in s, so s = 1/2 is detected by
    exact equality on the stored value, never by a tolerance.
    """
    s, R = float(s), float(R)
    if not (0.0 < s < 1.0):
        raise ValueError("s must lie in (0, 1)")
    if R <= 1.0:
        raise ValueError("R must exceed 1")
    if s < 0.5:
        return R ** (1.0 - 2.0 * s)
    if s == 0.5:
        return float(np.log(R))
    return 1.0


def _loglog_fit(x: np.ndarray, y: np.ndarray):
    slope, intercept = np.polyfit(np.log(x), np.log(y), 1)
    fitted = np.exp(intercept) * x ** slope
    return float(slope), float(np.exp(intercept)), fitted


def fit_decay(P: Profile, window, quantity: str = "one-minus-u") -> FitReport:
    """Fit the tail decay exponent of 1 - u or of u' on a log-log window.

    `window` is a pair (x_lo, x_hi) inside (0, M); the measured quantity
    must be strictly positive there, otherwise the profile has saturated to
    1 within rounding and the window should be shrunk toward the origin.
    """
    lo, hi = float(window[0]), float(window[1])
    if not (0.0 < lo < hi < P.half_width):
        raise ValueError("window must satisfy 0 < lo < hi < M")
    x = P.nodes
    mask = (x >= lo) & (x <= hi)
    if np.count_nonzero(mask) < 3:
        raise ValueError("window contains fewer than 3 grid nodes")
    if quantity == "one-minus-u":
        q = 1.0 - P.values[mask]
    elif quantity == "derivative":
        du = np.empty_like(P.values)
        du[1:-1] = (P.values[2:] - P.values[:-2]) / (2.0 * P.spacing)
        du[0] = du[1]
        du[-1] = du[-2]
        q = np.abs(du[mask])
    else:
        raise ValueError("quantity must be 'one-minus-u' or 'derivative'")
    if np.any(q <= 0.0):
        raise ValueError(
            "nonpositive samples in window (profile saturated within rounding); "
            "shrink the window toward the origin"
        )
    xs = x[mask]
    slope, const, fitted = _loglog_fit(xs, q)
    rel = float(np.max(np.abs(fitted / q - 1.0)))
    return FitReport(exponent=slope, constant=const, window=(lo, hi),
                     max_rel_residual=rel, samples=np.column_stack([xs, q, fitted]))


def _align_radii(P: Profile, R_list, upper_frac: float) -> np.ndarray:
    rs = np.asarray([float(R) for R in R_list], dtype=float)
    if rs.size < 2 or np.any(np.diff(rs) <= 0.0):
        raise ValueError("R_list must be increasing with at least two entries")
    if rs[0] <= 0.0 or rs[-1] > upper_frac * P.half_width + 1e-9:
        raise ValueError(f"R_list must lie in (0, {upper_frac:.1f}*M]")
    h = P.spacing
    aligned = np.round(rs / h) * h
    return aligned


def fit_energy_growth(K: KernelSpec, W: Potential, P: Profile, R_list):
    """Energy of [-R, R] against the scaling factor over a ladder of radii.

    Returns (FitReport, g_lower, g_upper).  The bracket estimates are the
    min/max of energy / psi_s over the largest half of the ladder; small-R
    transients would otherwise contaminate what is a limit statement.  The
    regression is log E against log R for s < 1/2 and E against log R at
    s = 1/2 (slope in energy units per e-fold); above 1/2 the energy
    plateaus and the log-log slope is reported as a drift diagnostic.
    """
    rs = _align_radii(P, R_list, 0.9)
    es = np.array([energy(K, W, P, (-R, R)).total for R in rs])
    psis = np.array([psi_s(K.s, R) for R in rs])
    ratios = es / psis
    half = ratios[rs.size // 2:]
    g_lower, g_upper = float(half.min()), float(half.max())

    if K.s == 0.5:
        slope, intercept = np.polyfit(np.log(rs), es, 1)
        fitted = intercept + slope * np.log(rs)
        const = float(intercept)
        slope = float(slope)
    else:
        slope, const, fitted = _loglog_fit(rs, es)
    rel = float(np.max(np.abs(fitted / es - 1.0)))
    report = FitReport(exponent=slope, constant=const,
                       window=(float(rs[0]), float(rs[-1])),
                       max_rel_residual=rel,
                       samples=np.column_stack([rs, es, fitted]))
    return report, g_lower, g_upper


@dataclass(frozen=True)
class LimitEstimate:
    """Scaled density samples R * beta(R) and their extrapolated limit."""

    radii: np.ndarray
    scaled_density: np.ndarray
    limit: float
    slope: float  # coefficient of the 1/R correction in the fitted model


def lambda_star_limit(K: KernelSpec, W: Potential, P: Profile, R_list) -> LimitEstimate:
    """Extrapolate lim R * beta(R) for an s = 1/2 kernel.

    The sequence R * (beta(R) + beta(-R)) / 2 is fitted with a + b/R; the
    proof-side error terms decay at least like 1/R, which fixes the model.
    The profile is centered first so the estimate is translation invariant.
    """
    if K.s != 0.5:
        raise ValueError("the scaled-density limit is specific to s = 1/2")
    Pc = center(P) if (P.values.min() < 0.0 < P.values.max()) else P
    rs = _align_radii(Pc, R_list, 0.8)
    vals = np.empty(rs.size)
    for i, R in enumerate(rs):
        bp = beta_density(K, W, Pc, R)
        bm = beta_density(K, W, Pc, -R)
        vals[i] = R * 0.5 * (bp + bm)
    coeffs = np.polyfit(1.0 / rs, vals, 1)
    return LimitEstimate(radii=rs, scaled_density=vals,
                         limit=float(coeffs[1]), slope=float(coeffs[0]))


def log_lower_bound_check(K: KernelSpec, W: Potential, P: Profile, R_list) -> bool:
    """Check that the energy of [-R, R] grows at least like log R (s = 1/2).

    Requires a kernel satisfying the global two-sided comparability (the
    statement fails for truncated kernels, so the check refuses them).
    True when energy / log R stays positive and does not collapse over the
    largest half of the ladder.
    """
    if K.s != 0.5:
        raise ValueError("the logarithmic lower bound is specific to s = 1/2")
    if not validate(K, 128, seed=0)["K2prime"]:
        raise ValueError("kernel fails the global comparability hypothesis; "
                         "the logarithmic lower bound does not apply")
    rs = _align_radii(P, R_list, 0.9)
    ratios = np.array([
        energy(K, W, P, (-R, R)).total / np.log(R) for R in rs
    ])
    half = ratios[rs.size // 2:]
    if np.any(half <= 1e-12):
        return False
    return bool(half[-1] >= 0.25 * half.max())
