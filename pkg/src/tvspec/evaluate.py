"""Quantitative evaluation: error reports, oracle bandwidths, break location.

The truth argument of the error routines is either a ``ModelSpec`` with a
closed-form spectrum or a precomputed plane of truth values on the same grid.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np

from .errors import ParameterError
from .preperiodogram import RawPlane
from .simulate import ModelSpec, local_autocovariance, true_spectrum
from .smoother import EstimationGrid, Plane, smooth_nonadaptive

__all__ = ["ErrorReport", "BreakDetection", "truth_plane", "squared_error",
           "optimal_global_bandwidth", "default_bandwidth_grid",
           "freq_average", "detect_break", "wigner_ville_truncated"]

TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class ErrorReport:
    mse: float
    se_quantiles: Tuple[float, float, float, float, float]  # Q0, Q25, Q50, Q75, Q100
    n_points: int


@dataclass(frozen=True)
class BreakDetection:
    u_hat: float
    confident: bool
    stat_max: float


def truth_plane(spec: ModelSpec, grid: EstimationGrid) -> np.ndarray:
    """Closed-form density evaluated on the estimation grid."""
    u = grid.rescaled_times()
    lam = grid.freqs()
    return true_spectrum(spec, u[:, None], lam[None, :])


def _truth_values(truth, grid: EstimationGrid) -> np.ndarray:
    if isinstance(truth, ModelSpec):
        return truth_plane(truth, grid)
    if isinstance(truth, Plane):
        if truth.grid.shape != grid.shape:
            raise ParameterError("truth plane grid does not match estimate grid")
        return truth.values
    arr = np.asarray(truth, dtype=float)
    if arr.shape != grid.shape:
        raise ParameterError(f"truth shape {arr.shape} does not match grid {grid.shape}")
    return arr


def squared_error(est: Plane, truth, margin_u: float = 0.0,
                  margin_lam: float = 0.0):
    """Pointwise squared error against the truth, with summary statistics.

    Optional margins exclude a boundary strip (in rescaled time / radians)
    where window clipping biases every estimator.  Returns (report, se_plane);
    the plane always covers the full grid, the report only the kept points.
    """
    tv = _truth_values(truth, est.grid)
    se = (est.values - tv) ** 2
    if margin_u > 0.0 or margin_lam > 0.0:
        mask = est.grid.interior_mask(margin_u, margin_lam)
        if not mask.any():
            raise ParameterError("margins exclude every grid point")
        kept = se[mask]
    else:
        kept = se.ravel()
    q = np.quantile(kept, [0.0, 0.25, 0.5, 0.75, 1.0])
    report = ErrorReport(mse=float(kept.mean()), se_quantiles=tuple(map(float, q)),
                         n_points=int(kept.size))
    return report, se


def default_bandwidth_grid(n: int = 9) -> List[Tuple[float, float]]:
    """Candidate (b_t, b_f) pairs: 0.05 * 1.25^m fractions in both directions."""
    fracs = [min(0.05 * 1.25**m, 1.0) for m in range(n)]
    return [(bt, min(TWO_PI, TWO_PI * bf)) for bt in fracs for bf in fracs]


def optimal_global_bandwidth(raw: RawPlane, truth,
                             candidates: Optional[Sequence[Tuple[float, float]]] = None,
                             grid: Optional[EstimationGrid] = None,
                             margin_u: float = 0.0, margin_lam: float = 0.0):
    """Exhaustive oracle search for the global bandwidth pair minimizing MSE.

    Only available in simulation, where the truth is known; ties break toward
    the larger window b_t*b_f.  Returns (b_t, b_f, plane, report).
    """
    if candidates is None:
        candidates = default_bandwidth_grid()
    if not candidates:
        raise ParameterError("candidate bandwidth grid is empty")
    if grid is None:
        grid = EstimationGrid(raw.grid)
    best = None
    for b_t, b_f in candidates:
        plane = smooth_nonadaptive(raw, b_t, b_f, grid)
        report, _ = squared_error(plane, truth, margin_u, margin_lam)
        key = (report.mse, -b_t * b_f)
        if best is None or key < best[0]:
            best = (key, b_t, b_f, plane, report)
    return best[1], best[2], best[3], best[4]


def freq_average(est: Plane) -> np.ndarray:
    """Arithmetic mean over the frequency axis, one value per time point."""
    return est.values.mean(axis=1)


def detect_break(u: np.ndarray, curve: np.ndarray,
                 window_frac: float = 0.05) -> BreakDetection:
    """Locate the largest jump of a curve by a sliding two-sided mean contrast.

    The window holds ``window_frac`` of the curve points on each side; the
    reported location is the boundary between the two windows with maximal
    absolute mean difference.  Confidence is flagged low when the maximal
    contrast does not exceed three curve standard deviations.
    """
    u = np.asarray(u, dtype=float)
    curve = np.asarray(curve, dtype=float)
    n = curve.size
    if n < 8:
        raise ParameterError("detect_break requires at least 8 points")
    w = max(2, int(round(window_frac * n)))
    csum = np.concatenate([[0.0], np.cumsum(curve)])
    # boundary between index i-1 and i, for i in [w, n-w]
    i = np.arange(w, n - w + 1)
    left = (csum[i] - csum[i - w]) / w
    right = (csum[i + w] - csum[i]) / w
    stat = np.abs(right - left)
    best = int(np.argmax(stat))
    u_hat = 0.5 * (u[i[best] - 1] + u[i[best]])
    stat_max = float(stat[best])
    confident = stat_max > 3.0 * float(curve.std())
    return BreakDetection(u_hat=u_hat, confident=confident, stat_max=stat_max)


def wigner_ville_truncated(spec: ModelSpec, u, lam, k_max: int):
    """Lag-truncated covariance Fourier sum (1/2pi) sum_{|k|<=K} gamma(u,k)e^{-ik lam}.

    Exact for the built-in moving-average models once ``k_max`` covers their
    lag support.
    """
    if k_max < 0:
        raise ParameterError("k_max must be >= 0")
    u = np.asarray(u, dtype=float)
    lam = np.asarray(lam, dtype=float)
    out = np.asarray(local_autocovariance(spec, u, 0) * np.ones_like(lam), dtype=float)
    for k in range(1, k_max + 1):
        out = out + 2.0 * local_autocovariance(spec, u, k) * np.cos(k * lam)
    out = out / TWO_PI
    return out if out.ndim else float(out)
