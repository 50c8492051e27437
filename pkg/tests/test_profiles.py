import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import fraclayer as fl
from fraclayer.profiles import Profile, make_constant


def test_linear_init_values():
    P = fl.make_linear_init(5.0, 1.0)
    assert fl.eval_extended(P, 0.0) == 0.0
    assert fl.eval_extended(P, -3.0) == -1.0
    P = fl.make_linear_init(5.0, 0.5)
    assert fl.eval_extended(P, 0.5) == pytest.approx(0.5)


def test_linear_init_validation():
    with pytest.raises(ValueError):
        fl.make_linear_init(-5.0, 0.5)
    with pytest.raises(ValueError):
        fl.make_linear_init(5.0, -0.5)
    with pytest.raises(ValueError):
        fl.make_linear_init(5.0, 6.0)


def test_eval_extended():
    P = fl.make_linear_init(5.0, 0.5)
    assert fl.eval_extended(P, 15.0) == 1.0
    assert fl.eval_extended(P, -15.0) == -1.0
    # node identity and midpoint average
    k = 7
    x = P.nodes[k]
    assert fl.eval_extended(P, x) == P.values[k]
    mid = 0.5 * (P.nodes[k] + P.nodes[k + 1])
    assert fl.eval_extended(P, mid) == pytest.approx(
        0.5 * (P.values[k] + P.values[k + 1]))


def test_center_odd_unchanged():
    P = fl.make_tanh_init(5.0, 0.25)
    C = fl.center(P)
    assert np.max(np.abs(C.values - P.values)) <= 1e-12


def test_center_undoes_shift():
    P = fl.make_tanh_init(8.0, 0.25)
    vals = np.clip(fl.eval_extended(P, P.nodes - 0.25), -1, 1)
    vals[0], vals[-1] = -1.0, 1.0
    shifted = Profile(half_width=8.0, spacing=0.25, values=vals)
    C = fl.center(shifted)
    assert abs(fl.zero_crossing(C)) <= 1e-9
    # idempotent
    C2 = fl.center(C)
    assert np.max(np.abs(C2.values - C.values)) <= 1e-9


def test_center_requires_sign_change():
    C = make_constant(5.0, 0.5, 0.5)
    with pytest.raises(ValueError, match="sign change"):
        fl.center(C)


@settings(max_examples=40, deadline=None)
@given(st.floats(-7.0, 7.0), st.floats(-7.0, 7.0))
def test_eval_extended_lipschitz(x, y):
    P = fl.make_tanh_init(5.0, 0.25)
    lip = np.max(np.abs(np.diff(P.values))) / P.spacing
    assert abs(fl.eval_extended(P, x) - fl.eval_extended(P, y)) \
        <= lip * abs(x - y) + 1e-12


def test_csv_round_trip(tmp_path):
    P = fl.make_tanh_init(5.0, 0.25)
    path = tmp_path / "profile.csv"
    fl.save_csv(P, path)
    Q = fl.load_csv(path)
    assert Q.half_width == P.half_width
    assert Q.spacing == P.spacing
    assert np.array_equal(Q.values, P.values)
    # byte-exact re-save
    path2 = tmp_path / "again.csv"
    fl.save_csv(Q, path2)
    assert path.read_bytes() == path2.read_bytes()


def test_loader_validation(tmp_path):
    bad = tmp_path / "bad.csv"
    bad.write_text("x,u\n0,0\n-1,0.5\n1,1\n")
    with pytest.raises(ValueError):
        fl.load_csv(bad)
    empty = tmp_path / "empty.csv"
    empty.write_text("")
    with pytest.raises(ValueError):
        fl.load_csv(empty)


def test_profile_invariants():
    with pytest.raises(ValueError):
        Profile(half_width=5.0, spacing=0.5, values=np.zeros(11))  # wrong ends
    with pytest.raises(ValueError):
        Profile(half_width=5.0, spacing=0.5, values=np.zeros(7))  # wrong length
    vals = np.linspace(-1, 1, 21)
    vals[3] = 1.5
    with pytest.raises(ValueError):
        Profile(half_width=5.0, spacing=0.5, values=vals)
