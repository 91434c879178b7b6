# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled weight-accumulation core (OpenMP over grid points).

Contract documented in tvspec._accel_py.  Every grid point accumulates its
window sequentially in a fixed scan order, so results are bit-identical for
any thread count; threads only partition the set of points.
"""
import numpy as np

cimport numpy as cnp
from cython.parallel cimport prange
from libc.math cimport ceil, floor, M_PI

cnp.import_array()

IS_COMPILED = True


cdef inline void _accumulate_point(const double[:, ::1] J, const double[:, ::1] F,
                                   double fp, double facp, double btp, double bfp,
                                   double inv_cut, Py_ssize_t rt, Py_ssize_t jp,
                                   Py_ssize_t n_rt, Py_ssize_t T,
                                   double du, double dlam,
                                   double* out_f, double* out_n) noexcept nogil:
    cdef double span_t = btp * T
    cdef Py_ssize_t s_lo = <Py_ssize_t>ceil(rt - span_t)
    cdef Py_ssize_t s_hi = <Py_ssize_t>floor(rt + span_t)
    cdef Py_ssize_t dm = <Py_ssize_t>floor(0.5 * bfp / dlam)
    cdef double ct = du / btp
    cdef double cf = dlam / bfp
    cdef double acc_w = 0.0, acc_wj = 0.0
    cdef double xt, kt, x, kf, diff, z, w
    cdef Py_ssize_t s, e, m, m_hi, e_lo, e_hi

    if s_lo < 0:
        s_lo = 0
    if s_hi > n_rt - 1:
        s_hi = n_rt - 1
    if dm > T:
        dm = T
    e_lo = jp - dm
    e_hi = jp + dm

    for s in range(s_lo, s_hi + 1):
        xt = (rt - s) * ct
        kt = 1.5 - 6.0 * xt * xt
        if kt <= 0.0:
            continue
        # reflected tail below lambda = 0: e = -m, stored index m
        if e_lo < 0:
            m_hi = -e_lo
            for m in range(1, m_hi + 1):
                x = (jp + m) * cf
                kf = 1.5 - 6.0 * x * x
                if kf < 0.0:
                    kf = 0.0
                diff = fp - F[s, m]
                z = (facp * diff * diff) * inv_cut
                w = 1.0 - z * z
                if w < 0.0:
                    w = 0.0
                w = w * kt * kf
                acc_w += w
                acc_wj += w * J[s, m]
        # direct segment
        for e in range(max(e_lo, 0), min(e_hi, T) + 1):
            x = (e - jp) * cf
            kf = 1.5 - 6.0 * x * x
            if kf < 0.0:
                kf = 0.0
            diff = fp - F[s, e]
            z = (facp * diff * diff) * inv_cut
            w = 1.0 - z * z
            if w < 0.0:
                w = 0.0
            w = w * kt * kf
            acc_w += w
            acc_wj += w * J[s, e]
        # reflected tail above lambda = pi: e = T + m, stored index T - m
        if e_hi > T:
            m_hi = e_hi - T
            for m in range(1, m_hi + 1):
                x = (T + m - jp) * cf
                kf = 1.5 - 6.0 * x * x
                if kf < 0.0:
                    kf = 0.0
                diff = fp - F[s, T - m]
                z = (facp * diff * diff) * inv_cut
                w = 1.0 - z * z
                if w < 0.0:
                    w = 0.0
                w = w * kt * kf
                acc_w += w
                acc_wj += w * J[s, T - m]

    out_n[0] = acc_w
    out_f[0] = acc_wj / acc_w if acc_w > 0.0 else 0.0


def penalty_accumulate(const double[:, ::1] J, const double[:, ::1] F_raw,
                       const double[:, ::1] f_center, const double[:, ::1] fac,
                       const double[:, ::1] bt, const double[:, ::1] bf,
                       double inv_cut,
                       const long long[::1] t_idx, const long long[::1] f_idx,
                       int T, int num_threads):
    """Penalized weight accumulation; see tvspec._accel_py.penalty_accumulate."""
    cdef Py_ssize_t n_gt = f_center.shape[0]
    cdef Py_ssize_t n_gf = f_center.shape[1]
    cdef Py_ssize_t n_rt = J.shape[0]
    f_out = np.zeros((n_gt, n_gf))
    n_out = np.zeros((n_gt, n_gf))
    cdef double[:, ::1] fo = f_out
    cdef double[:, ::1] no = n_out
    cdef double du = 1.0 / (2.0 * T)
    cdef double dlam = M_PI / T
    cdef Py_ssize_t gi, gj
    cdef int nt = num_threads if num_threads > 0 else 1

    for gi in prange(n_gt, nogil=True, schedule="dynamic", chunksize=1,
                     num_threads=nt):
        for gj in range(n_gf):
            _accumulate_point(J, F_raw, f_center[gi, gj], fac[gi, gj],
                              bt[gi, gj], bf[gi, gj], inv_cut,
                              t_idx[gi], f_idx[gj], n_rt, T, du, dlam,
                              &fo[gi, gj], &no[gi, gj])
    return f_out, n_out
