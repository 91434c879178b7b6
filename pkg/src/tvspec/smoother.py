"""Nonadaptive kernel smoothing of the raw plane.

The smoothed value at (u, lambda) is the normalized sum of quadratic-kernel
products over all raw grid points.  Frequency distances are measured on the
even-periodic extension of the plane (reflect at 0 and pi, period 2*pi) so the
frequency window always carries full kernel mass; the time window is clipped
at the series boundaries and the normalization constant shrinks accordingly.

Because the weights do not depend on the data, the double sum factorizes and
is evaluated as two one-dimensional convolutions (zero-filled in time,
circular on the even extension in frequency), both via FFT.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy import fft as _fft

from .errors import BandwidthTooSmallError, ParameterError
from .kernels import kernel_quadratic
from .preperiodogram import RawGrid, RawPlane

__all__ = ["EstimationGrid", "Plane", "smooth_nonadaptive", "weight_sum",
           "weight_sum_plane"]

TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class EstimationGrid:
    """Subset of the raw grid on which estimates are formed.

    ``d_t`` and ``d_f`` are decimation factors; 1 keeps the full raw grid.
    ``map_time``/``map_freq`` send a raw index to its nearest grid index.
    """

    raw: RawGrid
    d_t: int = 1
    d_f: int = 1
    t_idx: np.ndarray = field(init=False, repr=False)
    f_idx: np.ndarray = field(init=False, repr=False)
    map_time: np.ndarray = field(init=False, repr=False)
    map_freq: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        if self.d_t < 1 or self.d_f < 1:
            raise ParameterError("decimation factors must be >= 1")
        t_idx = np.arange(0, self.raw.n_time, self.d_t, dtype=np.int64)
        f_idx = np.arange(0, self.raw.n_freq, self.d_f, dtype=np.int64)
        map_t = np.clip(np.rint(np.arange(self.raw.n_time) / self.d_t),
                        0, len(t_idx) - 1).astype(np.int64)
        map_f = np.clip(np.rint(np.arange(self.raw.n_freq) / self.d_f),
                        0, len(f_idx) - 1).astype(np.int64)
        object.__setattr__(self, "t_idx", t_idx)
        object.__setattr__(self, "f_idx", f_idx)
        object.__setattr__(self, "map_time", map_t)
        object.__setattr__(self, "map_freq", map_f)

    @property
    def T(self) -> int:
        return self.raw.T

    @property
    def shape(self) -> tuple:
        return (len(self.t_idx), len(self.f_idx))

    def rescaled_times(self) -> np.ndarray:
        return (2.0 + self.t_idx) / (2.0 * self.T)

    def freqs(self) -> np.ndarray:
        return np.pi * self.f_idx / self.T

    def nearest_point(self, u: float, lam: float) -> tuple:
        """Grid indices of the grid point closest to (u, lambda)."""
        gi = int(np.argmin(np.abs(self.rescaled_times() - u)))
        gj = int(np.argmin(np.abs(self.freqs() - lam)))
        return gi, gj

    def interior_mask(self, margin_u: float, margin_lam: float) -> np.ndarray:
        """Boolean mask of points at least the margins away from every edge."""
        u = self.rescaled_times()
        lam = self.freqs()
        ok_t = (u >= u[0] + margin_u) & (u <= u[-1] - margin_u)
        ok_f = (lam >= margin_lam) & (lam <= math.pi - margin_lam)
        return ok_t[:, None] & ok_f[None, :]


@dataclass(frozen=True)
class Plane:
    """Estimates f(u_i, lambda_j) on an estimation grid."""

    grid: EstimationGrid
    values: np.ndarray
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        v = np.ascontiguousarray(self.values, dtype=float)
        object.__setattr__(self, "values", v)
        if v.shape != self.grid.shape:
            raise ParameterError(f"plane shape {v.shape} does not match grid {self.grid.shape}")
        if not np.all(np.isfinite(v)):
            raise ParameterError("plane contains non-finite values")


def _check_bandwidths(b_t: float, b_f: float):
    if not 0.0 < b_t <= 1.0:
        raise ParameterError(f"time bandwidth must lie in (0, 1], got {b_t}")
    if not 0.0 < b_f <= TWO_PI:
        raise ParameterError(f"frequency bandwidth must lie in (0, 2*pi], got {b_f}")


def _time_taps(T: int, b_t: float) -> np.ndarray:
    """Kernel taps over raw half-integer time offsets d = -M..M."""
    m = min(int(math.floor(b_t * T)), 2 * T - 2)
    d = np.arange(-m, m + 1)
    taps = kernel_quadratic(d / (2.0 * T * b_t))
    if taps.sum() <= 0.0:
        raise BandwidthTooSmallError(f"empty time window for b_t={b_t}")
    return taps


def _freq_taps(T: int, b_f: float) -> np.ndarray:
    """Kernel taps over frequency-bin offsets d = -M..M."""
    m = min(int(math.floor(0.5 * b_f * T / math.pi)), T)
    d = np.arange(-m, m + 1)
    taps = kernel_quadratic(d * math.pi / (T * b_f))
    if taps.sum() <= 0.0:
        raise BandwidthTooSmallError(f"empty frequency window for b_f={b_f}")
    return taps


def _correlate_time(values: np.ndarray, taps: np.ndarray) -> np.ndarray:
    """out[i] = sum_d taps[d] * values[i+d] along axis 0, zero-filled."""
    n = values.shape[0]
    m = (len(taps) - 1) // 2
    length = _fft.next_fast_len(n + 2 * m)
    buf = np.zeros((length,) + values.shape[1:])
    buf[:n] = values
    ker = np.zeros(length)
    ker[:m + 1] = taps[m:]
    if m:
        ker[-m:] = taps[:m]
    spec = _fft.rfft(buf, axis=0) * np.conj(_fft.rfft(ker))[(slice(None),) + (None,) * (values.ndim - 1)]
    return _fft.irfft(spec, n=length, axis=0)[:n]


def _correlate_freq_even(values: np.ndarray, taps: np.ndarray, T: int) -> np.ndarray:
    """out[., j] = sum_d taps[d] * ext[., j+d] on the even-periodic extension."""
    ext = np.concatenate([values, values[:, T - 1:0:-1]], axis=1)  # period 2T
    m = (len(taps) - 1) // 2
    ker = np.zeros(2 * T)
    for d in range(-m, m + 1):
        ker[d % (2 * T)] += taps[d + m]
    spec = _fft.rfft(ext, axis=1) * np.conj(_fft.rfft(ker))[None, :]
    return _fft.irfft(spec, n=2 * T, axis=1)[:, :T + 1]


def _time_window_sums(taps: np.ndarray, n_time: int, at_idx: np.ndarray) -> np.ndarray:
    """Clipped tap sums sum_{d: 0 <= i+d < n_time} taps[d] at raw rows ``at_idx``."""
    m = (len(taps) - 1) // 2
    csum = np.concatenate([[0.0], np.cumsum(taps)])
    lo = np.clip(-at_idx, -m, m + 1) + m          # first tap offset >= -i
    hi = np.clip(n_time - 1 - at_idx, -m - 1, m) + m + 1
    return csum[np.maximum(hi, lo)] - csum[lo]


def smooth_nonadaptive(raw: RawPlane, b_t: float, b_f: float,
                       grid: Optional[EstimationGrid] = None) -> Plane:
    """Kernel-smoothed plane with global bandwidths (b_t rescaled, b_f radians).

    The result at each point is a convex combination of raw values, so it is
    bounded by the raw extremes and reproduces constants exactly.
    """
    _check_bandwidths(b_t, b_f)
    if grid is None:
        grid = EstimationGrid(raw.grid)
    T = raw.grid.T
    kt = _time_taps(T, b_t)
    kf = _freq_taps(T, b_f)
    num = _correlate_time(_correlate_freq_even(raw.values, kf, T), kt)
    s_t = _time_window_sums(kt, raw.grid.n_time, np.arange(raw.grid.n_time))
    values = num / (s_t[:, None] * kf.sum())
    values = values[grid.t_idx][:, grid.f_idx]
    return Plane(grid=grid, values=values,
                 meta={"estimator": "nonadaptive", "b_t": b_t, "b_f": b_f})


def weight_sum(raw_grid: RawGrid, b_t: float, b_f: float, u: float,
               lam: float = 0.0) -> float:
    """Sum of unnormalized kernel products over the raw window at (u, lambda).

    No 1/b prefactors; this is the canonical weight-count convention used by
    the adaptive iteration.  The frequency factor is bandwidth-full for every
    lambda because of the even-periodic extension.
    """
    _check_bandwidths(b_t, b_f)
    if not 0.0 <= lam <= math.pi + 1e-12:
        raise ParameterError(f"lambda must lie in [0, pi], got {lam}")
    T = raw_grid.T
    # raw rows s with |u - u_s| <= b_t/2, u_s = (2+s)/(2T)
    s_lo = max(0, int(math.ceil((u - 0.5 * b_t) * 2 * T - 2)))
    s_hi = min(raw_grid.n_time - 1, int(math.floor((u + 0.5 * b_t) * 2 * T - 2)))
    if s_hi < s_lo:
        raise BandwidthTooSmallError(f"empty time window at u={u} for b_t={b_t}")
    u_s = (2.0 + np.arange(s_lo, s_hi + 1)) / (2.0 * T)
    s_t = kernel_quadratic((u - u_s) / b_t).sum()
    s_f = _freq_taps(T, b_f).sum()
    total = float(s_t * s_f)
    if total <= 0.0:
        raise BandwidthTooSmallError(f"empty window at u={u} for b_t={b_t}")
    return total


def weight_sum_plane(grid: EstimationGrid, b_t: float, b_f: float) -> np.ndarray:
    """weight_sum evaluated at every estimation grid point."""
    _check_bandwidths(b_t, b_f)
    T = grid.T
    kt = _time_taps(T, b_t)
    s_t = _time_window_sums(kt, grid.raw.n_time, grid.t_idx)
    s_f = _freq_taps(T, b_f).sum()
    return np.ascontiguousarray(np.broadcast_to((s_t * s_f)[:, None], grid.shape))
