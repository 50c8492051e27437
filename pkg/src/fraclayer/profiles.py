"""Discrete layer profiles on uniform grids with constant extension."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

_GRID_TOL = 1e-9


@dataclass(frozen=True, eq=False)
class Profile:
    """Samples of a candidate layer on the uniform grid of [-M, M].

    Nodes are x_i = -M + i*h for i = 0..round(2M/h); outside [-M, M] the
    function is extended by the constant `boundary` values (the transition
    layer uses (-1, +1)).  Values are clipped to [-1, 1] and immutable.
    """

    half_width: float
    spacing: float
    values: np.ndarray
    boundary: tuple = (-1.0, 1.0)

    def __post_init__(self):
        M, h = float(self.half_width), float(self.spacing)
        if M <= 0.0 or h <= 0.0:
            raise ValueError("half_width and spacing must be positive")
        n = round(2.0 * M / h)
        if abs(2.0 * M / h - n) > _GRID_TOL:
            raise ValueError("2*M must be an integer multiple of h")
        vals = np.asarray(self.values, dtype=float)
        if vals.shape != (n + 1,):
            raise ValueError(f"expected {n + 1} node values, got {vals.shape}")
        if np.max(np.abs(vals)) > 1.0 + 1e-9:
            raise ValueError("profile values must lie in [-1, 1]")
        lo, hi = self.boundary
        if abs(vals[0] - lo) > _GRID_TOL or abs(vals[-1] - hi) > _GRID_TOL:
            raise ValueError("endpoint values must match the boundary pair")
        vals = np.clip(vals, -1.0, 1.0)
        vals[0], vals[-1] = lo, hi
        vals.flags.writeable = False
        object.__setattr__(self, "values", vals)
        object.__setattr__(self, "half_width", M)
        object.__setattr__(self, "spacing", h)
        object.__setattr__(self, "boundary", (float(lo), float(hi)))

    @property
    def nodes(self) -> np.ndarray:
        n = self.values.size - 1
        return -self.half_width + self.spacing * np.arange(n + 1)

    def node_index(self, x: float) -> int:
        """Index of the grid node at x; raises if x is not on the grid."""
        idx = (float(x) + self.half_width) / self.spacing
        k = round(idx)
        if abs(idx - k) > 1e-6 or not (0 <= k <= self.values.size - 1):
            raise ValueError(f"x={x} is not a grid node")
        return int(k)


def make_linear_init(M: float, h: float) -> Profile:
    """Clipped-linear initial profile: -1 below -1, x on (-1, 1], +1 above."""
    M, h = float(M), float(h)
    if M <= 0.0 or h <= 0.0:
        raise ValueError("M and h must be positive")
    if h >= M:
        raise ValueError("h must be smaller than M")
    if M <= 1.0:
        raise ValueError("need M > 1 so the clipped region reaches the wells")
    n = round(2.0 * M / h)
    x = -M + h * np.arange(n + 1)
    return Profile(half_width=M, spacing=h, values=np.clip(x, -1.0, 1.0))


def make_tanh_init(M: float, h: float) -> Profile:
    """Hyperbolic-tangent initial profile, already odd with the right limits."""
    M, h = float(M), float(h)
    if M <= 1.0 or h <= 0.0 or h >= M:
        raise ValueError("need M > 1 and 0 < h < M")
    n = round(2.0 * M / h)
    x = -M + h * np.arange(n + 1)
    vals = np.tanh(x)
    vals[0], vals[-1] = -1.0, 1.0
    return Profile(half_width=M, spacing=h, values=vals)


def make_constant(M: float, h: float, c: float) -> Profile:
    """Constant profile with matching constant extension (for diagnostics)."""
    n = round(2.0 * float(M) / float(h))
    vals = np.full(n + 1, float(c))
    return Profile(half_width=M, spacing=h, values=vals, boundary=(c, c))


def eval_extended(P: Profile, x) -> np.ndarray:
    """Evaluate the profile at x: linear between nodes, constant outside."""
    lo, hi = P.boundary
    out = np.interp(x, P.nodes, P.values, left=lo, right=hi)
    return out if np.ndim(x) else float(out)


def zero_crossing(P: Profile) -> float:
    """Location where the linear interpolant crosses zero.

    Requires a sign change (min < 0 < max); the first upward crossing wins.
    """
    v = P.values
    if not (v.min() < 0.0 < v.max()):
        raise ValueError("profile has no sign change")
    idx = np.where((v[:-1] < 0.0) & (v[1:] >= 0.0))[0]
    if idx.size == 0:
        idx = np.where(np.sign(v[:-1]) != np.sign(v[1:]))[0]
    i = int(idx[0])
    x = P.nodes
    if v[i + 1] == v[i]:
        return float(x[i])
    return float(x[i] - v[i] * (x[i + 1] - x[i]) / (v[i + 1] - v[i]))


def center(P: Profile) -> Profile:
    """Translate the profile so its zero crossing sits at x = 0.

    The shifted profile is resampled onto the same grid by interpolation and
    its endpoints are re-pinned to the boundary values.
    """
    shift = zero_crossing(P)
    vals = eval_extended(P, P.nodes + shift)
    vals = np.array(vals, dtype=float)
    vals[0], vals[-1] = P.boundary
    return Profile(half_width=P.half_width, spacing=P.spacing,
                   values=vals, boundary=P.boundary)


def save_csv(P: Profile, path) -> None:
    """Write the profile as `x,u` rows, 17 significant digits, LF endings."""
    lines = ["x,u"]
    for x, u in zip(P.nodes, P.values):
        lines.append(f"{x:.17g},{u:.17g}")
    with open(path, "w", newline="") as fh:
        fh.write("\n".join(lines) + "\n")


def load_csv(path) -> Profile:
    """Read a profile written by `save_csv`, validating the grid layout."""
    with open(path) as fh:
        header = fh.readline().strip()
        if header != "x,u":
            raise ValueError(f"unexpected profile header {header!r}")
        rows = [line.strip().split(",") for line in fh if line.strip()]
    if len(rows) < 3:
        raise ValueError("profile file has too few rows")
    x = np.array([float(r[0]) for r in rows])
    u = np.array([float(r[1]) for r in rows])
    if np.any(np.diff(x) <= 0.0):
        raise ValueError("profile x column must be strictly increasing")
    h = x[1] - x[0]
    if np.max(np.abs(np.diff(x) - h)) > 1e-9 * max(h, 1.0):
        raise ValueError("profile grid must be uniform")
    M = -x[0]
    if abs(x[-1] - M) > 1e-9 * max(M, 1.0):
        raise ValueError("profile grid must be symmetric about 0")
    return Profile(half_width=M, spacing=h, values=u,
                   boundary=(float(u[0]), float(u[-1])))
