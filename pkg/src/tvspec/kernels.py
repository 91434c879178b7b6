"""Kernel functions and statistical constants used by the smoothing steps.

Three kernel families appear in the estimator:

* a quadratic localization kernel used for distance weighting in both the
  time and the frequency direction,
* a concave penalty kernel whose support widens by a factor ``rho`` per
  iteration, applied to the homogeneity statistic,
* a linear memory kernel whose support shrinks by ``rho`` per iteration,
  applied to the update statistic.

The cutoff constants are quantiles of the chi-square distribution with one
degree of freedom, computed from the standard normal quantile.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ParameterError

__all__ = [
    "KernelConstants",
    "kernel_quadratic",
    "kernel_penalty",
    "kernel_memory",
    "normal_quantile",
    "chi2_quantile_1df",
    "KAPPA_QUADRATIC",
]

# integral of the squared quadratic kernel: 36 * int_{-1/2}^{1/2} (1/4 - x^2)^2 dx
KAPPA_QUADRATIC = 1.2


def kernel_quadratic(x):
    """Quadratic localization kernel 6*(1/4 - x^2) on [-1/2, 1/2], else 0.

    Integrates to 1; the integral of its square is 1.2.  Accepts scalars or
    arrays.
    """
    x = np.asarray(x, dtype=float)
    out = np.maximum(0.0, 1.5 - 6.0 * x * x)
    return out if out.ndim else float(out)


def kernel_penalty(x, k: int, consts: "KernelConstants"):
    """Concave penalty kernel [1 - (x/(c*rho^k))^2] on [0, c*rho^k].

    ``x`` is the (nonnegative) homogeneity statistic, ``k`` the iteration
    index.  The support widens by ``rho`` per iteration so that regions under
    slow negative-value repair do not face escalating penalization.
    """
    cut = consts.c_pen * consts.rho**k
    x = np.asarray(x, dtype=float)
    r = x / cut
    out = np.where(x <= cut, np.maximum(0.0, 1.0 - r * r), 0.0)
    return out if out.ndim else float(out)


def kernel_memory(x, k: int, consts: "KernelConstants"):
    """Linear memory kernel 1 - x/(c_mem*rho^-k) on [0, c_mem*rho^-k], else 0.

    Slope and support use the same cutoff so the kernel is continuous at the
    boundary.  The support shrinks by ``rho`` per iteration, penalizing late
    disagreement between consecutive updates more severely.
    """
    cut = consts.c_mem * consts.rho ** (-k)
    x = np.asarray(x, dtype=float)
    out = np.maximum(0.0, 1.0 - x / cut)
    return out if out.ndim else float(out)


# Rational approximation of the standard normal quantile (P. Acklam's
# coefficients, absolute error ~1e-9), refined by one Halley step on
# Phi(x) - p expressed through erfc, which brings the error near machine
# precision.  Documented here so random draws and cutoffs are reproducible.
_A = (-3.969683028665376e+01, 2.209460984245205e+02, -2.759285104469687e+02,
      1.383577518672690e+02, -3.066479806614716e+01, 2.506628277459239e+00)
_B = (-5.447609879822406e+01, 1.615858368580409e+02, -1.556989798598866e+02,
      6.680131188771972e+01, -1.328068155288572e+01)
_C = (-7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e+00,
      -2.549732539343734e+00, 4.374664141464968e+00, 2.938163982698783e+00)
_D = (7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e+00,
      3.754408661907416e+00)
_P_LOW = 0.02425


def _acklam(p: np.ndarray) -> np.ndarray:
    x = np.empty_like(p)
    lo = p < _P_LOW
    hi = p > 1.0 - _P_LOW
    mid = ~(lo | hi)

    if np.any(mid):
        q = p[mid] - 0.5
        r = q * q
        num = ((((_A[0] * r + _A[1]) * r + _A[2]) * r + _A[3]) * r + _A[4]) * r + _A[5]
        den = ((((_B[0] * r + _B[1]) * r + _B[2]) * r + _B[3]) * r + _B[4]) * r + 1.0
        x[mid] = q * num / den
    for sel, sign in ((lo, 1.0), (hi, -1.0)):
        if np.any(sel):
            pp = p[sel] if sign > 0 else 1.0 - p[sel]
            q = np.sqrt(-2.0 * np.log(pp))
            num = ((((_C[0] * q + _C[1]) * q + _C[2]) * q + _C[3]) * q + _C[4]) * q + _C[5]
            den = (((_D[0] * q + _D[1]) * q + _D[2]) * q + _D[3]) * q + 1.0
            x[sel] = sign * num / den
    return x


def normal_quantile(p):
    """Standard normal quantile, vectorized, near machine precision."""
    from scipy.special import erfc

    p_arr = np.asarray(p, dtype=float)
    if np.any((p_arr <= 0.0) | (p_arr >= 1.0)):
        raise ParameterError("normal_quantile requires p in (0, 1)")
    scalar = p_arr.ndim == 0
    p_arr = np.atleast_1d(p_arr)

    x = _acklam(p_arr)
    # one Halley refinement step
    err = 0.5 * erfc(-x / math.sqrt(2.0)) - p_arr
    u = err * math.sqrt(2.0 * math.pi) * np.exp(0.5 * x * x)
    x = x - u / (1.0 + 0.5 * x * u)
    return float(x[0]) if scalar else x


def chi2_quantile_1df(p: float) -> float:
    """p-quantile of the chi-square distribution with 1 degree of freedom.

    Computed as the square of the standard normal quantile at (1+p)/2.
    """
    if not 0.0 < p < 1.0:
        raise ParameterError(f"chi2_quantile_1df requires p in (0, 1), got {p!r}")
    z = normal_quantile(0.5 * (1.0 + p))
    return z * z


@dataclass(frozen=True)
class KernelConstants:
    """Constants entering the penalty and memory kernels.

    ``kappa_t`` and ``kappa_f`` are the integrals of the squared localization
    kernels; ``c_pen`` and ``c_mem`` the statistic cutoffs; ``rho`` the slow
    per-iteration drift rate of the two cutoffs (>= 1).
    """

    kappa_t: float = KAPPA_QUADRATIC
    kappa_f: float = KAPPA_QUADRATIC
    c_pen: float = 2.0 * 2.705543454095404   # 2 * chi2_quantile_1df(0.90)
    c_mem: float = 2.0 * 1.3233036969314664  # 2 * chi2_quantile_1df(0.75)
    rho: float = 1.02

    def __post_init__(self):
        if self.c_pen <= 0 or self.c_mem <= 0:
            raise ParameterError("cutoff constants must be positive")
        if self.rho < 1.0:
            raise ParameterError("rho must be >= 1")
