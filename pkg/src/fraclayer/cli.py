"""Command-line surface: solve, analyze, reduce, verify.

Configuration is a flat `key = value` text file with dotted section names
(diff-friendly, no nesting); unknown keys are rejected.  All numeric output
uses 17 significant digits and LF endings so repeated runs with the same
seed are byte-identical regardless of thread count.

Exit codes: 0 success, 1 config/input error, 2 non-convergence,
3 inconclusive statistics.
"""

from __future__ import annotations

import argparse
import math
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import asymptotics, kernels, potentials, profiles, reduction, solver

_KNOWN_KEYS = {
    "kernel.family", "kernel.dim", "kernel.s", "kernel.coefficient",
    "kernel.r0", "kernel.amplitude", "kernel.lambda_star", "kernel.sigma",
    "potential.name",
    "grid.M", "grid.h", "grid.M_list",
    "solver.max_iters", "solver.grad_tol", "solver.step_rule", "solver.init",
    "analysis.R_list", "analysis.decay_window", "analysis.mc_samples",
    "analysis.seed", "analysis.identity_points", "analysis.energy_R",
    "output_dir",
}

_SIGMA_PRESETS = {
    "zero": lambda r: 0.0,
    "exp-decay": lambda r: math.exp(-r),
    "sin2": lambda r: math.sin(r) ** 2,
}


def _fmt(x: float) -> str:
    return f"{float(x):.17g}"


class ConfigError(ValueError):
    pass


def parse_config(path) -> dict:
    """Read `key = value` lines; '#' starts a comment; unknown keys rejected."""
    mapping = {}
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}") from exc
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value'")
        key, value = (part.strip() for part in line.split("=", 1))
        if key not in _KNOWN_KEYS:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        if key in mapping:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        mapping[key] = value
    return mapping


@dataclass
class RunConfig:
    mapping: dict
    seed_override: int | None = None

    def _get(self, key, default=None):
        return self.mapping.get(key, default)

    def floats(self, key, default=None):
        raw = self._get(key)
        if raw is None:
            return default
        try:
            return [float(tok) for tok in raw.replace(",", " ").split()]
        except ValueError as exc:
            raise ConfigError(f"{key}: expected numbers, got {raw!r}") from exc

    def number(self, key, default=None, kind=float):
        raw = self._get(key)
        if raw is None:
            if default is None:
                raise ConfigError(f"missing required key {key!r}")
            return default
        try:
            return kind(float(raw)) if kind is int else kind(raw)
        except ValueError as exc:
            raise ConfigError(f"{key}: expected a number, got {raw!r}") from exc

    def kernel(self) -> kernels.KernelSpec:
        family = self._get("kernel.family", "fractional")
        dim = self.number("kernel.dim", 1, int)
        s = self.number("kernel.s", kind=float)
        try:
            if family == "fractional":
                return kernels.make_fractional(
                    dim, s, self.number("kernel.coefficient", 1.0))
            if family == "truncated":
                return kernels.make_truncated(
                    dim, s, self.number("kernel.r0", kind=float),
                    self.number("kernel.amplitude", 1.0))
            if family == "perturbed":
                preset = self._get("kernel.sigma", "zero")
                if preset not in _SIGMA_PRESETS:
                    raise ConfigError(f"kernel.sigma: unknown preset {preset!r}")
                return kernels.make_perturbed(
                    s, self.number("kernel.lambda_star", 1.0),
                    _SIGMA_PRESETS[preset])
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
        raise ConfigError(f"kernel.family: unsupported family {family!r}")

    def potential(self) -> potentials.Potential:
        name = self._get("potential.name", "quartic")
        if name != "quartic":
            raise ConfigError("only the 'quartic' potential ships built-in; "
                              "custom potentials require the library API")
        return potentials.quartic()

    def solve_options(self) -> solver.SolveOptions:
        try:
            return solver.SolveOptions(
                max_iters=self.number("solver.max_iters", 20000, int),
                grad_tol=self.number("solver.grad_tol", 1e-6),
                step_rule=self._get("solver.step_rule", "adaptive-secant"),
                init=self._get("solver.init", "tanh"),
            )
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc

    def seed(self) -> int:
        if self.seed_override is not None:
            return self.seed_override
        return self.number("analysis.seed", 0, int)


def _write(path: Path, text: str) -> None:
    with open(path, "w", newline="") as fh:
        fh.write(text)


def _report_text(rep: solver.SolveReport, cfg: RunConfig) -> str:
    lines = [
        f"M={_fmt(rep.profile.half_width)}",
        f"h={_fmt(rep.profile.spacing)}",
        f"s={_fmt(cfg.number('kernel.s', kind=float))}",
        f"iterations={rep.iterations}",
        f"converged={str(rep.converged).lower()}",
        f"final_gradient_norm={_fmt(rep.final_gradient_norm)}",
        f"el_residual={_fmt(rep.el_residual)}",
        f"monotone={str(rep.monotone).lower()}",
        f"odd_defect={_fmt(rep.odd_defect)}",
        f"interior_strict={str(rep.interior_strict).lower()}",
        f"no_transition={str(rep.no_transition).lower()}",
    ]
    if rep.limit_defect is not None:
        lines.append(f"limit_defect_pos={_fmt(rep.limit_defect[0])}")
        lines.append(f"limit_defect_neg={_fmt(rep.limit_defect[1])}")
    return "\n".join(lines) + "\n"


def cmd_solve(cfg: RunConfig, out: Path) -> int:
    K = cfg.kernel()
    if K.dim != 1:
        raise ConfigError("solve requires a 1-d kernel")
    W = cfg.potential()
    h = cfg.number("grid.h", kind=float)
    m_list = cfg.floats("grid.M_list")
    opts = cfg.solve_options()
    out.mkdir(parents=True, exist_ok=True)
    try:
        if m_list:
            rep = solver.solve_layer(K, W, m_list, h, opts)
        else:
            rep = solver.solve_dirichlet(K, W, cfg.number("grid.M", kind=float),
                                         h, opts)
    except solver.MaxIterationsError as exc:
        profiles.save_csv(exc.report.profile, out / "profile.csv")
        _write(out / "solve_report.txt", _report_text(exc.report, cfg))
        print("solver did not converge within max_iters", file=sys.stderr)
        return 2
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    profiles.save_csv(rep.profile, out / "profile.csv")
    _write(out / "solve_report.txt", _report_text(rep, cfg))
    return 0


def cmd_analyze(cfg: RunConfig, profile_path: Path, out: Path) -> int:
    K = cfg.kernel()
    if K.dim != 1:
        raise ConfigError("analyze requires a 1-d kernel")
    W = cfg.potential()
    try:
        P = profiles.load_csv(profile_path)
    except (OSError, ValueError) as exc:
        raise ConfigError(f"cannot load profile: {exc}") from exc
    out.mkdir(parents=True, exist_ok=True)

    window = cfg.floats("analysis.decay_window", [10.0, 0.4 * P.half_width])
    lines = []
    for quantity in ("one-minus-u", "derivative"):
        fit = asymptotics.fit_decay(P, window, quantity)
        lines.append(f"# summary: quantity={quantity} exponent={_fmt(fit.exponent)} "
                     f"constant={_fmt(fit.constant)} "
                     f"max_rel_residual={_fmt(fit.max_rel_residual)}")
    rows = ["quantity,x,measured,fitted"]
    for quantity in ("one-minus-u", "derivative"):
        fit = asymptotics.fit_decay(P, window, quantity)
        for x, meas, fitval in fit.samples:
            rows.append(f"{quantity},{_fmt(x)},{_fmt(meas)},{_fmt(fitval)}")
    _write(out / "decay_fit.csv", "\n".join(lines + rows) + "\n")

    default_rs = [float(f) for f in (0.2, 0.3, 0.45, 0.6, 0.75, 0.9)]
    r_list = cfg.floats("analysis.R_list",
                        [f * P.half_width for f in default_rs])
    fit, g_lo, g_hi = asymptotics.fit_energy_growth(K, W, P, r_list)
    rows = [f"# summary: exponent={_fmt(fit.exponent)} g_lower={_fmt(g_lo)} "
            f"g_upper={_fmt(g_hi)}", "R,energy,fitted"]
    rows += [f"{_fmt(r)},{_fmt(e)},{_fmt(f)}" for r, e, f in fit.samples]
    _write(out / "energy_growth.csv", "\n".join(rows) + "\n")

    if K.s == 0.5:
        limit_rs = [r for r in r_list if r <= 0.8 * P.half_width]
        est = asymptotics.lambda_star_limit(K, W, P, limit_rs)
        rows = [f"# summary: limit={_fmt(est.limit)} slope={_fmt(est.slope)}",
                "R,scaled_density"]
        rows += [f"{_fmt(r)},{_fmt(v)}"
                 for r, v in zip(est.radii, est.scaled_density)]
        _write(out / "lambda_limit.csv", "\n".join(rows) + "\n")
    else:
        print("note: lambda* limit defined for s = 1/2 only", file=sys.stderr)
    return 0


def cmd_reduce(cfg: RunConfig, out: Path) -> int:
    K = cfg.kernel()
    if K.dim < 2:
        raise ConfigError("reduce requires a kernel with dim >= 2")
    try:
        res = reduction.reduce_kernel(K, K.dim)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    out.mkdir(parents=True, exist_ok=True)
    lines = [f"varpi={_fmt(res.varpi)}", f"omega={_fmt(res.omega)}"]
    if res.lambda_star is not None:
        lines.append(f"lambda_star={_fmt(res.lambda_star)}")
    _write(out / "reduction.txt", "\n".join(lines) + "\n")

    tmax = 2.0 * res.varpi * K.r0 if math.isfinite(K.r0) else 10.0
    ts = np.linspace(-tmax, tmax, 201)
    ts = ts[ts != 0.0]
    kv = np.asarray(res.reduced_kernel.evaluate(ts), dtype=float)
    rows = ["t,k"] + [f"{_fmt(t)},{_fmt(v)}" for t, v in zip(ts, kv)]
    _write(out / "reduced_kernel.csv", "\n".join(rows) + "\n")
    return 0


def cmd_verify(cfg: RunConfig, profile_path: Path, out: Path) -> int:
    K = cfg.kernel()
    if K.dim < 2:
        raise ConfigError("verify requires a kernel with dim >= 2")
    try:
        P = profiles.load_csv(profile_path)
    except (OSError, ValueError) as exc:
        raise ConfigError(f"cannot load profile: {exc}") from exc
    xs = cfg.floats("analysis.identity_points", [1.0, 2.0, 5.0])
    points = [tuple([0.0] * (K.dim - 1) + [x]) for x in xs]
    mc = cfg.number("analysis.mc_samples", 10 ** 6, int)
    try:
        check = reduction.verify_identity(K, P, points, mc, cfg.seed())
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    out.mkdir(parents=True, exist_ok=True)
    status = "pass" if (check.passed and not check.inconclusive) else \
        ("inconclusive" if check.inconclusive else "fail")
    rows = [f"# summary: status={status} samples_per_point={check.samples_per_point}",
            "x_N,lhs,rhs,defect,standard_error,resolvable"]
    for c in check.checks:
        rows.append(f"{_fmt(c.point[-1])},{_fmt(c.lhs)},{_fmt(c.rhs)},"
                    f"{_fmt(c.defect)},{_fmt(c.standard_error)},"
                    f"{str(c.resolvable).lower()}")
    _write(out / "identity_check.csv", "\n".join(rows) + "\n")
    if check.inconclusive:
        print("identity check inconclusive at this sample budget", file=sys.stderr)
        return 3
    return 0 if check.passed else 1


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="fraclayer",
        description="transition layers for nonlocal Allen-Cahn energies")
    parser.add_argument("command", choices=["solve", "analyze", "reduce", "verify"])
    parser.add_argument("--config", required=True, help="flat key=value config file")
    parser.add_argument("--profile", help="profile CSV (analyze/verify)")
    parser.add_argument("--out", default=".", help="output directory")
    parser.add_argument("--threads", type=int, default=0,
                        help="worker count hint (0 = auto); results are "
                             "byte-identical for any value")
    parser.add_argument("--seed", type=int, default=None,
                        help="override analysis.seed")
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 0 if exc.code in (0, None) else 1

    try:
        cfg = RunConfig(parse_config(args.config), seed_override=args.seed)
        out = Path(args.out)
        if args.command == "solve":
            return cmd_solve(cfg, out)
        if args.command == "reduce":
            return cmd_reduce(cfg, out)
        if args.profile is None:
            raise ConfigError(f"{args.command} requires --profile")
        if args.command == "analyze":
            return cmd_analyze(cfg, Path(args.profile), out)
        return cmd_verify(cfg, Path(args.profile), out)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except solver.MaxIterationsError:
        print("error: solver did not converge", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
