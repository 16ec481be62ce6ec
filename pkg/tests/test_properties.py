import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from bregfix import core, mappings as mp
from bregfix.core import Box

BUILTINS = [core.quartic(), core.section6_quadratic(), core.squared_norm(),
            core.separable_polynomial([0, 0.5, 1.0, 0, 0.25])]
inside = st.floats(-1.9, 1.9, allow_nan=False)
pair = st.tuples(inside, inside)
fn = st.sampled_from(BUILTINS)


@given(fn, inside)
def test_distance_to_self_is_zero(bf, x):
    assert core.bregman_distance(bf, x, x) == 0.0


@given(fn, pair)
def test_distance_nonnegative(bf, xy):
    assert core.bregman_distance(bf, *xy) >= -1e-12


@given(fn, st.tuples(inside, inside, inside))
def test_three_point_identity(bf, xyz):
    assert abs(core.three_point_residual(bf, *xyz)) <= 1e-10


@given(fn, pair)
def test_two_point_identity(bf, xy):
    assert abs(core.two_point_residual(bf, *xy)) <= 1e-10


@given(fn, pair, st.floats(0.1, 10.0))
def test_scaling(bf, xy, c):
    d = core.bregman_distance(bf, *xy)
    assert core.bregman_distance(bf.scaled(c), *xy) == pytest.approx(c * d, rel=1e-12, abs=1e-13)


@given(st.floats(-3, 3), st.floats(-1, 0), st.floats(0, 1))
def test_projection_idempotent(x, lo, hi):
    c = Box.cube(lo, hi)
    bf = core.quartic(domain=Box.cube(-3, 3))
    p = core.bregman_project(bf, c, x)
    assert np.array_equal(core.bregman_project(bf, c, p), p)
    assert c.contains(p)


@settings(max_examples=25, deadline=None)
@given(st.floats(-5, 5))
def test_numeric_conjugate_matches_closed_form(xs):
    for bf in (core.quartic(), core.section6_quadratic()):
        got = core.conjugate_numeric(bf, [xs], Box.cube(-10, 10))
        assert got == pytest.approx(float(bf.conj(np.array([xs]))), abs=1e-6)


@given(fn, inside, st.floats(-5, 5))
def test_fenchel_young(bf, x, xs):
    if bf.conj is None:
        return
    assert core.fenchel_young_gap(bf, x, xs) >= -1e-10


@given(fn, inside)
def test_gradient_round_trip(bf, x):
    x = np.array([x])
    assert abs(bf.grad_conj(bf.grad(x))[0] - x[0]) <= 1e-10


@given(st.tuples(st.floats(0, 0.9), st.floats(0, 0.9)), st.floats(0, 0.99))
def test_bregman_margin_matches_closed_form(xy, a):
    x, y = xy
    D = lambda u, v: u ** 4 + 3 * v ** 4 - 4 * u * v ** 3
    want = a * D(x * x, y) + a * D(x, y * y) + (1 - 2 * a) * D(x, y) - D(x * x, y * y)
    got, _ = mp.pair_margin("bregman_generalized_alpha", mp.square(), x, y, alpha=a, bf=core.quartic())
    assert got == pytest.approx(want, abs=1e-12)


@given(st.floats(-1, 1), st.floats(-1, 1))
def test_scaling_map_quasi_margin(x, k):
    t = mp.scaling(k * 0.99)
    m, _ = mp.pair_margin("bregman_quasi", t, 0.0, x, bf=core.section6_quadratic())
    assert m >= -1e-12
