"""Double-well potentials with wells pinned at -1 and +1."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

_EQ_TOL = 1e-10


@dataclass(frozen=True)
class Potential:
    """A smooth double-well potential W with its first two derivatives.

    Defined on all of R: solver iterates are projected to [-1, 1], but
    quadrature may probe slightly outside before projection.
    """

    w: Callable
    w_prime: Callable
    w_second: Callable
    wells: tuple = (-1.0, 1.0)


def quartic() -> Potential:
    """The standard quartic well W(r) = (1 - r^2)^2 / 4."""

    def w(r):
        r = np.asarray(r, dtype=float)
        out = (1.0 - r * r) ** 2 / 4.0
        return out if out.ndim else float(out)

    def w_prime(r):
        r = np.asarray(r, dtype=float)
        out = r ** 3 - r
        return out if out.ndim else float(out)

    def w_second(r):
        r = np.asarray(r, dtype=float)
        out = 3.0 * r * r - 1.0
        return out if out.ndim else float(out)

    return Potential(w=w, w_prime=w_prime, w_second=w_second)


def zero() -> Potential:
    """The identically-zero potential (interaction-only energies)."""

    def z(r):
        r = np.asarray(r, dtype=float)
        out = np.zeros_like(r)
        return out if out.ndim else 0.0

    return Potential(w=z, w_prime=z, w_second=z)


def check_assumptions(P: Potential, sample_count: int = 101) -> dict:
    """Check the double-well hypotheses on a uniform sample of [-1, 1].

    W1: W > 0 strictly inside (-1, 1); W2: W and W' vanish at the wells;
    W3: W'' positive at the wells; W4: W even on [-1, 1].  Equalities are
    tested to 1e-10.  Report-only; nothing is raised.
    """
    if sample_count < 3:
        raise ValueError("sample_count must be >= 3")
    rs = np.linspace(-1.0, 1.0, int(sample_count))
    inner = rs[(rs > -1.0) & (rs < 1.0)]

    w1 = bool(np.all(np.asarray(P.w(inner)) > 0.0))
    w2 = all(
        abs(float(P.w(r))) <= _EQ_TOL and abs(float(P.w_prime(r))) <= _EQ_TOL
        for r in P.wells
    )
    w3 = all(float(P.w_second(r)) > 0.0 for r in P.wells)
    w4 = bool(np.max(np.abs(np.asarray(P.w(rs)) - np.asarray(P.w(-rs)))) <= _EQ_TOL)
    return {"W1": w1, "W2": w2, "W3": w3, "W4": w4}
