"""Test-bed process generators and their closed-form time-varying spectra.

Three built-in models:

``white_noise_break``
    Gaussian white noise whose standard deviation jumps from ``sigma1`` to
    ``sigma2`` after sample ``t0``.
``tvma2``
    ``X_t = cos(2*pi*t/T) * Z_t - (t/T)^2 * Z_{t-1}`` with standard normal
    innovations.
``break_tvma2``
    ``sigma * Z_t`` up to ``t0``, then the moving-average dynamics above
    shifted in rescaled time by ``shift``.

A fourth kind, ``custom_csv``, tags externally supplied series; it has no
generator and no closed-form truth.

Innovations are reproducible by construction: the raw 64-bit stream of a
PCG64 generator seeded with ``seed`` is mapped to uniforms via
``((word >> 11) + 0.5) * 2^-53`` and to normals through the rational
normal-quantile approximation in :mod:`tvspec.kernels`.  One burn-in
innovation ``Z_0`` is drawn before ``t = 1`` so that lag-1 terms are defined.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import ParameterError, TruthUnavailableError
from .kernels import normal_quantile

__all__ = ["ModelSpec", "TimeSeries", "gaussian_innovations", "generate",
           "true_spectrum", "local_autocovariance", "MODEL_KINDS"]

MODEL_KINDS = ("white_noise_break", "tvma2", "break_tvma2", "custom_csv")

TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class ModelSpec:
    """Model descriptor: kind plus its numeric parameters.

    ``t0`` is the break index in samples (1 <= t0 <= T) and ``T`` the series
    length it refers to; both are required for the break models.  ``shift``
    is the rescaled-time shift of the post-break moving-average dynamics.
    """

    kind: str
    T: Optional[int] = None
    t0: Optional[int] = None
    sigma1: float = 1.0
    sigma2: float = math.sqrt(10.0)
    sigma: float = 1.0
    shift: float = 0.2

    def __post_init__(self):
        if self.kind not in MODEL_KINDS:
            raise ParameterError(f"unknown model kind {self.kind!r}")
        if self.kind in ("white_noise_break", "break_tvma2"):
            if self.T is None or self.t0 is None:
                raise ParameterError(f"{self.kind} requires T and t0")
            if not 1 <= self.t0 <= self.T:
                raise ParameterError(f"t0 must lie in [1, T], got t0={self.t0}, T={self.T}")
        for name in ("sigma1", "sigma2", "sigma"):
            if getattr(self, name) <= 0.0:
                raise ParameterError(f"{name} must be positive")

    @property
    def u_break(self) -> float:
        if self.t0 is None or self.T is None:
            raise ParameterError(f"model {self.kind!r} has no break point")
        return self.t0 / self.T


@dataclass(frozen=True)
class TimeSeries:
    """A finite real sample path with its generator metadata."""

    values: np.ndarray
    T: int
    model_tag: str
    seed: int

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        object.__setattr__(self, "values", values)
        if values.ndim != 1 or values.shape[0] != self.T:
            raise ParameterError(f"series length {values.shape} does not match T={self.T}")
        if not np.all(np.isfinite(values)):
            raise ParameterError("series contains non-finite values")


def gaussian_innovations(seed: int, n: int) -> np.ndarray:
    """n standard normal draws from the documented PCG64 + inverse-CDF scheme."""
    words = np.random.PCG64(seed).random_raw(n)
    u = ((words >> np.uint64(11)).astype(np.float64) + 0.5) * 2.0**-53
    return normal_quantile(u)


def generate(spec: ModelSpec, T: int, seed: int) -> TimeSeries:
    """Draw one sample path of length ``T`` from the model.

    Draws T+1 innovations Z_0..Z_T (Z_0 is burn-in for the lag-1 terms) and
    is deterministic given (spec, T, seed).
    """
    if T < 1:
        raise ParameterError("T must be positive")
    if spec.kind == "custom_csv":
        raise ParameterError("custom_csv series are read from file, not generated")
    if spec.T is not None and spec.T != T:
        raise ParameterError(f"model was specified for T={spec.T}, asked to generate T={T}")

    z = gaussian_innovations(seed, T + 1)  # z[t] = Z_t, t = 0..T
    t = np.arange(1, T + 1)
    u = t / T

    if spec.kind == "white_noise_break":
        scale = np.where(t <= spec.t0, spec.sigma1, spec.sigma2)
        x = scale * z[1:]
    elif spec.kind == "tvma2":
        x = np.cos(TWO_PI * u) * z[1:] - u**2 * z[:T]
    else:  # break_tvma2
        v = u - spec.shift
        x_ma = np.cos(TWO_PI * v) * z[1:] - v**2 * z[:T]
        x = np.where(t <= spec.t0, spec.sigma * z[1:], x_ma)

    return TimeSeries(values=x, T=T, model_tag=spec.kind, seed=seed)


def _ma_density(u, lam):
    """Density of a_t Z_t - b_t Z_{t-1} with a = cos(2*pi*u), b = u^2."""
    a = np.cos(TWO_PI * np.asarray(u, dtype=float))
    b = np.asarray(u, dtype=float) ** 2
    return (a * a - 2.0 * b * a * np.cos(lam) + b * b) / TWO_PI


def true_spectrum(spec: ModelSpec, u, lam):
    """Closed-form time-varying spectral density f(u, lambda).

    Total on u in [0, 1], lambda in [-pi, pi]; even in lambda.  Broadcasts
    over array arguments.
    """
    if spec.kind == "custom_csv":
        raise TruthUnavailableError("custom_csv has no closed-form spectrum")
    u = np.asarray(u, dtype=float)
    lam = np.asarray(lam, dtype=float)

    if spec.kind == "white_noise_break":
        level = np.where(u <= spec.u_break, spec.sigma1**2, spec.sigma2**2) / TWO_PI
        out = np.broadcast_arrays(level, lam)[0].copy()
    elif spec.kind == "tvma2":
        out = _ma_density(u, lam)
    else:  # break_tvma2
        white = spec.sigma**2 / TWO_PI
        out = np.where(u <= spec.u_break, white, _ma_density(u - spec.shift, lam))
    return out if out.ndim else float(out)


def local_autocovariance(spec: ModelSpec, u, k: int):
    """Local autocovariance gamma(u, k) = int f(u, lam) e^{i lam k} dlam.

    Closed form: the moving-average dynamics have gamma(u, 0) = a^2 + b^2,
    gamma(u, +-1) = -a*b with a = cos(2*pi*u), b = u^2, zero beyond lag 1;
    white-noise stretches have gamma(u, 0) = sigma^2 only.
    """
    if spec.kind == "custom_csv":
        raise TruthUnavailableError("custom_csv has no closed-form autocovariance")
    u = np.asarray(u, dtype=float)
    k = int(k)

    def ma_gamma(v):
        a = np.cos(TWO_PI * v)
        b = v**2
        if k == 0:
            return a * a + b * b
        if abs(k) == 1:
            return -a * b
        return np.zeros_like(v)

    if spec.kind == "white_noise_break":
        lvl = np.where(u <= spec.u_break, spec.sigma1**2, spec.sigma2**2)
        out = lvl if k == 0 else np.zeros_like(u)
    elif spec.kind == "tvma2":
        out = ma_gamma(u)
    else:  # break_tvma2
        out = np.where(u <= spec.u_break,
                       spec.sigma**2 if k == 0 else 0.0,
                       ma_gamma(u - spec.shift))
    return out if np.ndim(out) else float(out)
