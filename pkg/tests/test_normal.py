import numpy as np
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.special import ndtri

from walkbsde.normal import norm_cdf, norm_ppf


def test_matches_scipy_across_range():
    p = np.concatenate([np.geomspace(1e-300, 0.02425, 2000),
                        np.linspace(0.02425, 0.97575, 4001),
                        1 - np.geomspace(1e-16, 0.02425, 2000)])
    ref = ndtri(p)
    got = norm_ppf(p)
    scale = np.maximum(np.abs(ref), 1e-300)
    assert np.max(np.abs(got - ref) / scale) < 1e-14


def test_endpoints_and_invalid():
    out = norm_ppf(np.array([0.0, 1.0, -0.1, 1.1, 0.5]))
    assert out[0] == -np.inf and out[1] == np.inf
    assert np.isnan(out[2]) and np.isnan(out[3])
    assert out[4] == 0.0


def test_known_quantiles():
    # classical two-sided 95% point
    assert abs(norm_ppf(0.975) - 1.959963984540054) < 1e-15


@settings(max_examples=200, deadline=None)
@given(st.floats(min_value=1e-12, max_value=0.5, exclude_max=True))
def test_antisymmetry_and_inverse(p):
    q = 1 - p
    # 1 - q is exact, so both tails see the same probability
    p = 1 - q
    x = norm_ppf(p)
    assert abs(norm_ppf(q) + x) <= 1e-12 * max(1.0, abs(x))
    assert abs(norm_cdf(x) - p) <= 1e-13 * max(p, 1e-3)


@settings(max_examples=100, deadline=None)
@given(st.lists(st.floats(min_value=1e-10, max_value=1 - 1e-10), min_size=2, max_size=20))
def test_monotone(ps):
    ps = np.sort(np.array(ps))
    assert np.all(np.diff(norm_ppf(ps)) >= 0)
