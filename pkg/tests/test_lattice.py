import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.stats import binom

from walkbsde.errors import InvalidArgument
from walkbsde.lattice import TimeGrid, binomial_weights, make_grid, walk_marginal


def test_grid_basic_quantities():
    grid = make_grid(1.0, 4)
    assert grid.h == 0.25
    assert grid.sqrt_h == 0.5
    assert np.allclose(grid.times(), [0, 0.25, 0.5, 0.75, 1.0])


@pytest.mark.parametrize("T, n", [(0.0, 4), (-1.0, 4), (1.0, 0), (1.0, -3), (math.inf, 4)])
def test_grid_rejects_bad_input(T, n):
    with pytest.raises(InvalidArgument):
        TimeGrid(T, n)


def test_index_is_floor_with_snapping():
    grid = make_grid(1.0, 10)
    assert grid.index(0.0) == 0
    assert grid.index(0.35) == 3
    # 0.3 is not representable; 0.3 / 0.1 = 2.9999999999999996
    assert grid.index(0.3) == 3
    assert grid.index(1.0) == 10
    assert grid.is_grid_point(0.7)
    assert not grid.is_grid_point(0.75)


def test_index_outside_horizon():
    grid = make_grid(1.0, 10)
    with pytest.raises(InvalidArgument):
        grid.index(1.5)
    with pytest.raises(InvalidArgument):
        grid.index(-0.1)


def test_nodes_layout():
    grid = make_grid(1.0, 4)
    assert np.allclose(grid.nodes(0), [0.0])
    assert np.allclose(grid.nodes(2, x0=1.0), [0.0, 1.0, 2.0])
    assert grid.node_index(2, 2.0, x0=1.0) == 2
    with pytest.raises(InvalidArgument):
        grid.node_index(2, 0.5, x0=1.0)


def test_min_stable_n():
    # h * 10 <= 1/2 needs n >= 20
    assert make_grid(1.0, 2).min_stable_n(10.0) == 20


@pytest.mark.parametrize("k", [0, 1, 2, 7, 50, 1000, 5000])
def test_binomial_weights_match_scipy(k):
    ref = binom.pmf(np.arange(k + 1), k, 0.5)
    got = binomial_weights(k)
    assert np.allclose(got, ref, rtol=1e-10, atol=1e-300)
    assert abs(got.sum() - 1.0) < 1e-13


@settings(max_examples=40, deadline=None)
@given(st.integers(min_value=0, max_value=3000))
def test_binomial_weights_symmetric_and_normalised(k):
    w = binomial_weights(k)
    assert np.all(w >= 0)
    assert np.allclose(w, w[::-1], rtol=1e-12, atol=0)
    assert abs(w.sum() - 1.0) < 1e-12


@settings(max_examples=40, deadline=None)
@given(st.integers(min_value=1, max_value=512), st.floats(0.1, 5.0),
       st.integers(min_value=0, max_value=100))
def test_walk_marginal_moments(n, T, a):
    grid = make_grid(T, n)
    t = grid.times()[min(a, n)]
    wm = walk_marginal(grid, t, T)
    # mean 0 and variance equal to the elapsed grid time
    assert abs(wm.mean()) < 1e-12 * max(1.0, math.sqrt(T))
    assert math.isclose(wm.variance(), T - t, rel_tol=1e-10, abs_tol=1e-12)


def test_walk_marginal_rejects_reversed_times():
    with pytest.raises(InvalidArgument):
        walk_marginal(make_grid(1.0, 4), 0.5, 0.25)
