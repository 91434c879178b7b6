"""Raw (unsmoothed) spectral estimators on the time-frequency grid.

The workhorse is a symmetrized pre-periodogram: for every half-integer time
point tau in {1, 3/2, ..., T} a preliminary lag-k covariance ``C*(tau, k)`` is
formed from the lag-k product centred at tau when the indices line up, and
from the average of the two straddling lag-k products otherwise.  Out-of-range
lags contribute zero.  The value at frequency lambda_j = pi*j/T is the cosine
series of the lag sequence, evaluated with a length-2T FFT of its even
extension.

A classical floor-based variant on integer times and the ordinary periodogram
are provided as oracles: averaging the classical plane over time recovers the
periodogram exactly.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import fft as _fft

from .errors import DataError, ParameterError
from .simulate import TimeSeries

__all__ = ["RawGrid", "RawPlane", "cov_star", "preperiodogram_modified",
           "preperiodogram_classic", "periodogram"]

TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class RawGrid:
    """Half-integer-time by Fourier-frequency grid for a series of length T.

    Time points tau = 1, 1.5, ..., T (2T-1 of them, rescaled u = tau/T) and
    frequencies lambda_j = pi*j/T for j = 0..T.
    """

    T: int

    def __post_init__(self):
        if self.T < 2:
            raise ParameterError("grid requires T >= 2")

    @property
    def n_time(self) -> int:
        return 2 * self.T - 1

    @property
    def n_freq(self) -> int:
        return self.T + 1

    def times(self) -> np.ndarray:
        """tau values (half-integer sample indices)."""
        return 1.0 + 0.5 * np.arange(self.n_time)

    def rescaled_times(self) -> np.ndarray:
        """u = tau/T values."""
        return (2.0 + np.arange(self.n_time)) / (2.0 * self.T)

    def freqs(self) -> np.ndarray:
        """lambda_j values on [0, pi]."""
        return np.pi * np.arange(self.n_freq) / self.T


@dataclass(frozen=True)
class RawPlane:
    """Pre-periodogram values J(tau/T, lambda_j); real, possibly negative."""

    grid: RawGrid
    values: np.ndarray

    def __post_init__(self):
        v = np.ascontiguousarray(self.values, dtype=float)
        object.__setattr__(self, "values", v)
        if v.shape != (self.grid.n_time, self.grid.n_freq):
            raise ParameterError(f"plane shape {v.shape} does not match grid "
                                 f"({self.grid.n_time}, {self.grid.n_freq})")
        if not np.all(np.isfinite(v)):
            raise DataError("raw plane contains non-finite values")


def cov_star(series: TimeSeries, tau: float, k: int) -> float:
    """Preliminary covariance estimate at half-integer time tau and lag k >= 0.

    If tau +- k/2 are integers in [1, T] this is the plain lag-k product;
    otherwise the mean of the two lag-k products straddling tau (midpoints
    tau -+ 1/2).  Any required index outside [1, T] makes the value 0.
    """
    T = series.T
    i2 = 2.0 * tau
    if not (i2 == int(i2) and 1.0 <= tau <= T):
        raise ParameterError(f"tau={tau} is not on the half-integer grid [1, {T}]")
    if not 0 <= k <= T - 1:
        raise ParameterError(f"lag k={k} outside [0, {T - 1}]")
    x = series.values
    i = int(i2) - 2          # 0-based grid index, tau = 1 + i/2
    m, p = i - k, i + k
    if m % 2 == 0:           # tau -+ k/2 are integers
        if m >= 0 and p <= 2 * T - 2:
            return float(x[m // 2] * x[p // 2])
        return 0.0
    if m >= 1 and p <= 2 * T - 3:
        return 0.5 * float(x[(m - 1) // 2] * x[(p - 1) // 2]
                           + x[(m + 1) // 2] * x[(p + 1) // 2])
    return 0.0


def _lag_matrix_modified(x: np.ndarray) -> np.ndarray:
    """C*(tau, k) for all grid times (rows) and lags k = 0..T-1 (columns)."""
    T = x.shape[0]
    n_time = 2 * T - 1
    lags = np.zeros((n_time, T))
    for k in range(T):
        prod = x[:T - k] * x[k:]                      # lag-k products, midpoints k/2..
        # rows with matching parity: direct product
        lags[k::2, k][:T - k] = prod
        # rows in between: average of the two neighbours
        if T - k >= 2:
            lags[k + 1::2, k][:T - k - 1] = 0.5 * (prod[:-1] + prod[1:])
    return lags


def _cosine_transform(lags: np.ndarray, T: int) -> np.ndarray:
    """Evaluate sum_{k=-(T-1)}^{T-1} c_|k| e^{-ik lambda_j} at lambda_j = pi j/T.

    Uses a length-2T FFT of the even extension of the lag sequence; the
    result is real by symmetry and the imaginary residue is checked before
    being discarded.
    """
    n_rows = lags.shape[0]
    buf = np.zeros((n_rows, 2 * T))
    buf[:, :T] = lags
    buf[:, T + 1:] = lags[:, :0:-1]
    spec = _fft.rfft(buf, axis=1)
    re, im = spec.real, spec.imag
    scale = np.max(np.abs(re))
    if scale > 0 and np.max(np.abs(im)) > 1e-9 * scale:
        raise DataError("pre-periodogram symmetry violated (imaginary residue)")
    return np.ascontiguousarray(re)


def preperiodogram_modified(series: TimeSeries) -> RawPlane:
    """Symmetrized pre-periodogram on the half-integer-time grid."""
    T = series.T
    if T < 8:
        raise ParameterError("pre-periodogram requires T >= 8")
    if not np.all(np.isfinite(series.values)):
        raise DataError("series contains non-finite values")
    lags = _lag_matrix_modified(series.values)
    values = _cosine_transform(lags, T) / TWO_PI
    return RawPlane(grid=RawGrid(T), values=values)


def _lag_matrix_classic(x: np.ndarray) -> np.ndarray:
    """Floor-based lag products P(t, k) on integer times, k = 0..T-1."""
    T = x.shape[0]
    lags = np.zeros((T, T))
    for m in range(T):
        k = 2 * m
        if k < T:
            prod = x[:T - k] * x[k:]                  # X_{t-m} X_{t+m}
            lags[m:T - m, k] = prod
        k = 2 * m + 1
        if k < T:
            prod = x[:T - 1 - 2 * m] * x[2 * m + 1:]  # X_{t-m} X_{t+m+1}
            lags[m:T - 1 - m, k] = prod
    return lags


def preperiodogram_classic(series: TimeSeries) -> np.ndarray:
    """Classical pre-periodogram on integer times t = 1..T (test oracle).

    Returns a (T, T+1) array over frequencies lambda_j = pi*j/T.  Averaging
    the rows recovers the ordinary periodogram exactly.
    """
    T = series.T
    if T < 8:
        raise ParameterError("pre-periodogram requires T >= 8")
    if not np.all(np.isfinite(series.values)):
        raise DataError("series contains non-finite values")
    lags = _lag_matrix_classic(series.values)
    return _cosine_transform(lags, T) / TWO_PI


def periodogram(series: TimeSeries) -> np.ndarray:
    """Ordinary periodogram I(lambda_j) = |sum_t X_t e^{-i lambda_j t}|^2/(2 pi T)."""
    T = series.T
    if T < 2:
        raise ParameterError("periodogram requires T >= 2")
    if not np.all(np.isfinite(series.values)):
        raise DataError("series contains non-finite values")
    buf = np.zeros(2 * T)
    buf[1:T + 1] = series.values
    dft = _fft.rfft(buf)
    return (dft.real**2 + dft.imag**2) / (TWO_PI * T)
