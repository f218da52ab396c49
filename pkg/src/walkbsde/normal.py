"""Standard normal inverse CDF: Acklam's rational approximation plus one Halley step.

The raw approximation has relative error about 1.15e-9; one Halley
correction against ``erf``/``erfc`` brings it to rounding level.  The
central region corrects against ``erf`` in terms of ``p - 1/2`` so that
quantiles close to zero keep their relative accuracy.
"""

from __future__ import annotations

import math

import numpy as np
from scipy.special import erf, erfc

_A = (-3.969683028665376e01, 2.209460984245205e02, -2.759285104469687e02,
      1.383577518672690e02, -3.066479806614716e01, 2.506628277459239e00)
_B = (-5.447609879822406e01, 1.615858368580409e02, -1.556989798598866e02,
      6.680131188771972e01, -1.328068155288572e01)
_C = (-7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e00,
      -2.549732539343734e00, 4.374664141464968e00, 2.938163982698783e00)
_D = (7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e00,
      3.754408661907416e00)

P_LOW = 0.02425
_SQRT2 = math.sqrt(2.0)
_SQRT2PI = math.sqrt(2.0 * math.pi)


def _poly(coef, x):
    out = np.zeros_like(x) + coef[0]
    for c in coef[1:]:
        out = out * x + c
    return out


def _lower_tail(p):
    q = np.sqrt(-2.0 * np.log(p))
    x = _poly(_C, q) / (_poly(_D, q) * q + 1.0)
    e = 0.5 * erfc(-x / _SQRT2) - p
    return x, e


def _central(p):
    q = p - 0.5
    r = q * q
    x = _poly(_A, r) * q / (_poly(_B, r) * r + 1.0)
    e = 0.5 * erf(x / _SQRT2) - q
    return x, e


def norm_ppf(p):
    """Quantile ``Phi^{-1}(p)`` of the standard normal, elementwise.

    ``p`` outside ``[0, 1]`` gives nan; the endpoints give -inf/+inf.
    """
    p = np.asarray(p, dtype=float)
    out = np.full(p.shape, np.nan)
    lo = (p > 0) & (p < P_LOW)
    hi = (p > 1 - P_LOW) & (p < 1)
    mid = (p >= P_LOW) & (p <= 1 - P_LOW)

    for mask, sign, pp, route in ((lo, 1.0, p, _lower_tail),
                                  (hi, -1.0, 1.0 - p, _lower_tail),
                                  (mid, 1.0, p, _central)):
        if not mask.any():
            continue
        x, e = route(pp[mask])
        u = e * _SQRT2PI * np.exp(0.5 * x * x)
        x = x - u / (1.0 + 0.5 * x * u)
        out[mask] = sign * x
    out[p == 0] = -np.inf
    out[p == 1] = np.inf
    return out if out.ndim else float(out)


def norm_cdf(x):
    x = np.asarray(x, dtype=float)
    out = 0.5 * erfc(-x / _SQRT2)
    return out if out.ndim else float(out)
