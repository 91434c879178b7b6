"""NumPy reference implementation of the penalized weight accumulation.

Same contract as the compiled extension ``tvspec._accel``: for every
estimation grid point, accumulate quadratic-kernel localization weights over
its raw-plane window, damped by the concave penalty kernel applied to the
homogeneity statistic, and return the weighted raw average together with the
weight sum.

This path is the correctness reference; it loops over grid points in Python
and is one to two orders of magnitude slower than the extension.
"""
from __future__ import annotations

import math

import numpy as np

__all__ = ["penalty_accumulate", "IS_COMPILED"]

IS_COMPILED = False


def penalty_accumulate(J, F_raw, f_center, fac, bt, bf, inv_cut,
                       t_idx, f_idx, T, num_threads=1):
    """Penalized weight accumulation over the raw plane.

    Parameters
    ----------
    J : (2T-1, T+1) raw plane.
    F_raw : previous estimates gathered at raw resolution (same shape as J).
    f_center, fac, bt, bf : per-grid-point arrays — previous estimate,
        statistic prefactor (penalty_scale * N_prev / (2 pi kt kf T bar_f^2)),
        and search bandwidths (rescaled time / radians).
    inv_cut : reciprocal of the penalty kernel cutoff at this iteration.
    t_idx, f_idx : raw indices of the grid rows / columns.
    T : series length.
    num_threads : ignored (single-threaded reference).

    Returns
    -------
    (f_tilde, n_tilde) : weighted averages and weight sums; points whose
    window collected zero weight get f_tilde = 0 and n_tilde = 0.
    """
    J = np.asarray(J)
    F_raw = np.asarray(F_raw)
    n_gt, n_gf = f_center.shape
    n_rt = J.shape[0]
    du = 1.0 / (2.0 * T)
    dlam = math.pi / T

    # fold table: extended frequency index e in [-T, 2T] -> stored index
    e = np.arange(-T, 2 * T + 1)
    fold = np.where(e < 0, -e, np.where(e > T, 2 * T - e, e))

    f_out = np.zeros((n_gt, n_gf))
    n_out = np.zeros((n_gt, n_gf))

    for gi in range(n_gt):
        rt = int(t_idx[gi])
        for gj in range(n_gf):
            jp = int(f_idx[gj])
            bt_p = bt[gi, gj]
            bf_p = bf[gi, gj]
            span_t = bt_p * T  # half-support in raw rows
            s_lo = max(0, int(math.ceil(rt - span_t)))
            s_hi = min(n_rt - 1, int(math.floor(rt + span_t)))
            dm = min(T, int(math.floor(0.5 * bf_p / dlam)))

            xt = (rt - np.arange(s_lo, s_hi + 1)) * (du / bt_p)
            kt = np.maximum(0.0, 1.5 - 6.0 * xt * xt)
            d = np.arange(-dm, dm + 1)
            xf = d * (dlam / bf_p)
            kf = np.maximum(0.0, 1.5 - 6.0 * xf * xf)
            cols = fold[jp + d + T]

            Jw = J[s_lo:s_hi + 1].take(cols, axis=1)
            Fw = F_raw[s_lo:s_hi + 1].take(cols, axis=1)
            diff = f_center[gi, gj] - Fw
            z = (fac[gi, gj] * diff * diff) * inv_cut
            w = kt[:, None] * (kf[None, :] * np.maximum(0.0, 1.0 - z * z))
            n = w.sum()
            n_out[gi, gj] = n
            if n > 0.0:
                f_out[gi, gj] = (w * Jw).sum() / n
    return f_out, n_out
