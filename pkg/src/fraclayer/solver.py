"""Layer construction by box-constrained descent on the discrete energy.

The interval problem pins u = -1 left of -M and u = +1 right of +M and
minimizes the discrete energy over interior node values in [-1, 1].  The
interaction part of the objective is the exact quadratic form induced by the
operator stencil, so the scaled gradient *is* the pointwise defect of
L u = W'(u); at convergence the reported Euler-Lagrange residual matches the
projected-gradient norm.  The full-line layer is obtained by continuation in
M with warm starts, then centered so that u(0) = 0.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Optional

import numpy as np

from .kernels import KernelSpec
from .operators import (QuadratureOptions, _operator_all, curvature_bound,
                        operator_affine_parts, residual)
from .potentials import Potential
from .profiles import (Profile, center, eval_extended, make_linear_init,
                       make_tanh_init, zero_crossing)

STEP_RULES = ("fixed", "adaptive-secant")
INITS = ("linear-clip", "tanh", "custom")


@dataclass(frozen=True)
class SolveOptions:
    max_iters: int = 20000
    grad_tol: float = 1e-6
    step_rule: str = "adaptive-secant"
    init: str = "tanh"

    def __post_init__(self):
        if self.max_iters < 1:
            raise ValueError("max_iters must be >= 1")
        if self.grad_tol <= 0.0:
            raise ValueError("grad_tol must be positive")
        if self.step_rule not in STEP_RULES:
            raise ValueError(f"step_rule must be one of {STEP_RULES}")
        if self.init not in INITS:
            raise ValueError(f"init must be one of {INITS}")


@dataclass(frozen=True)
class SolveReport:
    profile: Profile
    iterations: int
    final_gradient_norm: float
    el_residual: float
    monotone: bool
    odd_defect: float
    interior_strict: bool
    converged: bool
    no_transition: bool
    energy_history: tuple = ()
    limit_defect: Optional[tuple] = None


class MaxIterationsError(RuntimeError):
    """Raised when descent stalls; carries the best iterate's report."""

    def __init__(self, message: str, report: SolveReport):
        super().__init__(message)
        self.report = report


def _initial_values(K, W, M, h, opts, warm_start):
    if opts.init == "linear-clip":
        return make_linear_init(M, h).values.copy()
    if opts.init == "tanh":
        return make_tanh_init(M, h).values.copy()
    if warm_start is None:
        raise ValueError("init='custom' requires a warm-start profile")
    return resample(warm_start, M, h).values.copy()


def resample(P: Profile, M: float, h: float) -> Profile:
    """Interpolate a profile onto the grid of [-M, M], constant beyond."""
    n = round(2.0 * float(M) / float(h))
    x = -M + h * np.arange(n + 1)
    vals = np.asarray(eval_extended(P, x), dtype=float)
    vals[0], vals[-1] = P.boundary
    return Profile(half_width=float(M), spacing=float(h), values=vals,
                   boundary=P.boundary)


def _structural_report(K, W, P, iterations, gnorm, converged, history):
    u = P.values
    monotone = bool(np.all(np.diff(u) >= -1e-12))
    odd_defect = float(np.max(np.abs(u + u[::-1])))
    interior_strict = bool(np.all(np.abs(u[1:-1]) < 1.0))
    no_transition = bool(u.max() - u.min() < 0.5)
    return SolveReport(
        profile=P, iterations=iterations, final_gradient_norm=gnorm,
        el_residual=residual(K, W, P), monotone=monotone,
        odd_defect=odd_defect, interior_strict=interior_strict,
        converged=converged, no_transition=no_transition,
        energy_history=tuple(history),
    )


def solve_dirichlet(K: KernelSpec, W: Potential, M: float, h: float,
                    opts: SolveOptions | None = None,
                    warm_start: Profile | None = None) -> SolveReport:
    """Solve the interval problem on [-M, M] by projected descent.

    Monotone Armijo backtracking guarantees the energy is nonincreasing
    across accepted iterations; the secant (two-point) step sets the trial
    length.  Monotonicity and oddness of the result are checked, never
    enforced, so a solver defect shows up in the report rather than being
    masked by a constraint.
    """
    M, h = float(M), float(h)
    if M < 5.0:
        raise ValueError("M must be at least 5")
    if h > M / 20.0:
        raise ValueError("h must be < M/20")
    opts = opts or SolveOptions()
    quad = QuadratureOptions()

    vals = _initial_values(K, W, M, h, opts, warm_start)
    vals[0], vals[-1] = -1.0, 1.0

    def as_profile(v):
        return Profile(half_width=M, spacing=h, values=v, boundary=(-1.0, 1.0))

    P0 = as_profile(vals)
    b = operator_affine_parts(K, P0, quad)

    def objective(v, Lv):
        inner = v[1:-1]
        quad_part = -h * (0.5 * float(np.dot(inner, Lv[1:-1]))
                          + 0.5 * float(np.dot(b[1:-1], inner)))
        pot = h * float(np.sum(np.asarray(W.w(inner), dtype=float)))
        return quad_part + pot

    def defect(v, Lv):
        r = np.asarray(W.w_prime(v), dtype=float) - Lv
        r[0] = r[-1] = 0.0
        return r

    def projected(r, v):
        pg = r.copy()
        at_lo = v <= -1.0
        at_hi = v >= 1.0
        pg[at_lo] = np.minimum(r[at_lo], 0.0)
        pg[at_hi] = np.maximum(r[at_hi], 0.0)
        pg[0] = pg[-1] = 0.0
        return pg

    Lu = _operator_all(K, P0, quad)
    F = objective(vals, Lu)
    if not np.isfinite(F):
        raise ValueError("non-finite energy at initialization")
    r = defect(vals, Lu)

    wmax = float(np.max(np.abs(np.asarray(W.w_second(np.linspace(-1, 1, 41))))))
    t_init = 1.0 / (curvature_bound(K, P0, quad) + wmax + 1e-30)
    t = t_init
    history = [F]
    gnorm = float(np.max(np.abs(projected(r, vals))))
    converged = gnorm <= opts.grad_tol
    iterations = 0

    while not converged and iterations < opts.max_iters:
        iterations += 1
        tt = t if opts.step_rule == "adaptive-secant" else t_init
        while True:
            trial = np.clip(vals - tt * r, -1.0, 1.0)
            trial[0], trial[-1] = -1.0, 1.0
            Ptrial = as_profile(trial)
            Ltrial = _operator_all(K, Ptrial, quad)
            Ftrial = objective(trial, Ltrial)
            decrease = h * float(np.dot(r, trial - vals))
            # Steps no longer than 1/L are descent steps by smoothness even
            # when the decrease is below the energy's fp resolution, which
            # happens on the last stretch toward a tight gradient tolerance.
            if Ftrial <= F + 1e-4 * decrease or tt <= t_init * (1.0 + 1e-12):
                break
            tt = max(0.5 * tt, t_init)
        rtrial = defect(trial, Ltrial)
        if opts.step_rule == "adaptive-secant":
            dv = trial - vals
            dr = rtrial - r
            denom = float(np.dot(dv, dr))
            t = float(np.dot(dv, dv)) / denom if denom > 1e-300 else t_init
            t = min(max(t, 1e-6 * t_init), 1e6 * t_init)
        vals, Lu, F, r = trial, Ltrial, Ftrial, rtrial
        history.append(F)
        gnorm = float(np.max(np.abs(projected(r, vals))))
        converged = gnorm <= opts.grad_tol

    P = as_profile(vals)
    report = _structural_report(K, W, P, iterations, gnorm, converged, history)
    if not converged:
        raise MaxIterationsError("max_iters exceeded", report)
    return report


def solve_layer(K: KernelSpec, W: Potential, M_list, h: float,
                opts: SolveOptions | None = None) -> SolveReport:
    """Layer profile by continuation over increasing half-widths.

    Each level warm-starts from the previous solution resampled onto the
    larger grid; the final profile is centered so the zero crossing sits at
    the origin, and the saturation defects |u(+-0.9 M) -+ 1| are reported.
    """
    Ms = [float(M) for M in M_list]
    if len(Ms) < 2 or any(b <= a for a, b in zip(Ms, Ms[1:])):
        raise ValueError("M_list must be increasing with at least two entries")
    opts = opts or SolveOptions()

    report = solve_dirichlet(K, W, Ms[0], h, opts)
    for M in Ms[1:]:
        report = solve_dirichlet(K, W, M, h, replace(opts, init="custom"),
                                 warm_start=report.profile)

    P = center(report.profile)
    M = P.half_width
    limit_defect = (abs(float(eval_extended(P, 0.9 * M)) - 1.0),
                    abs(float(eval_extended(P, -0.9 * M)) + 1.0))
    final = _structural_report(K, W, P, report.iterations,
                               report.final_gradient_norm, report.converged,
                               report.energy_history)
    return replace(final, limit_defect=limit_defect)


def translation_distance(P1: Profile, P2: Profile) -> float:
    """Smallest sup-norm gap between P1 and any translate of P2.

    Both profiles must cross zero.  The sup runs over P1's nodes in the
    core [-0.9 Mc, 0.9 Mc] of the common domain, which keeps the constant
    extensions of either grid out of the comparison.
    """
    c1 = zero_crossing(P1)
    c2 = zero_crossing(P2)
    mc = 0.9 * min(P1.half_width, P2.half_width)
    xs = P1.nodes
    xs = xs[(xs >= -mc) & (xs <= mc)]
    ref = np.asarray(eval_extended(P1, xs), dtype=float)

    def gap(tau: float) -> float:
        return float(np.max(np.abs(ref - eval_extended(P2, xs - tau))))

    tau0 = c1 - c2
    span = np.linspace(tau0 - 2.0, tau0 + 2.0, 161)
    vals = np.array([gap(t) for t in span])
    i = int(np.argmin(vals))
    lo = span[max(i - 1, 0)]
    hi = span[min(i + 1, span.size - 1)]

    phi = (5.0 ** 0.5 - 1.0) / 2.0
    a, bnd = lo, hi
    x1 = bnd - phi * (bnd - a)
    x2 = a + phi * (bnd - a)
    f1, f2 = gap(x1), gap(x2)
    for _ in range(200):
        if bnd - a < 1e-13:
            break
        if f1 <= f2:
            bnd, x2, f2 = x2, x1, f1
            x1 = bnd - phi * (bnd - a)
            f1 = gap(x1)
        else:
            a, x1, f1 = x1, x2, f2
            x2 = a + phi * (bnd - a)
            f2 = gap(x2)
    return min(f1, f2, vals[i])
