import numpy as np
import pytest

import fraclayer as fl


@pytest.fixture(scope="session")
def quartic():
    return fl.quartic()


@pytest.fixture(scope="session")
def layer_cache():
    """Session-wide cache of solved layers keyed by configuration."""
    cache = {}

    def get(kind="fractional", s=0.5, lam=1.0, M=50.0, h=0.05, r0=1.0,
            init="tanh", continuation=True):
        key = (kind, s, lam, M, h, r0, init, continuation)
        if key not in cache:
            W = fl.quartic()
            if kind == "fractional":
                K = fl.make_fractional(1, s, lam)
            elif kind == "truncated":
                K = fl.make_truncated(1, s, r0, lam)
            elif kind == "reduced":
                K = fl.reduce_kernel(fl.make_fractional(2, s, lam), 2).reduced_kernel
            else:
                raise ValueError(kind)
            opts = fl.SolveOptions(init=init)
            if continuation and M > 25:
                ladder = [25.0]
                while ladder[-1] < M:
                    ladder.append(min(2 * ladder[-1], M))
                rep = fl.solve_layer(K, W, ladder, h, opts)
            else:
                rep = fl.solve_dirichlet(K, W, M, h, opts)
            cache[key] = (K, rep)
        return cache[key]

    return get
