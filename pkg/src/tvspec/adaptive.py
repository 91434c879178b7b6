"""Iteratively grown, data-adaptive smoothing of the raw plane.

Each iteration widens every grid point's search window (by ``gamma_t`` /
``gamma_f`` relative to its current effective bandwidth), then runs two steps:

* **penalty step** — re-smooths the raw plane with localization weights
  damped by a concave kernel of the homogeneity statistic, which compares the
  previous estimate at the point with the previous estimate at each raw
  location, normalized by a local energy level;
* **memory step** — blends the new auxiliary estimate with the previous one
  through a coefficient ``theta`` driven by the same kind of statistic, which
  guards against error accumulation and repairs negative values caused by
  cross-interference in the raw plane.

Iteration stops when the average weight-sum growth stalls, when growth
disperses across the plane after the bias guard engages, or at the hard cap.
"""
from __future__ import annotations

import math
import time
from dataclasses import dataclass, field, replace
from typing import List, Optional

import numpy as np

from . import backend as _backend
from .errors import HistoryUnavailableError, ParameterError
from .kernels import KernelConstants, chi2_quantile_1df, kernel_memory, kernel_quadratic
from .preperiodogram import RawPlane
from .smoother import EstimationGrid, Plane, smooth_nonadaptive, weight_sum_plane

__all__ = [
    "EstimatorConfig", "AdaptiveState", "IterationDiagnostics", "RunResult",
    "ReconstructedKernel", "effective_bandwidth", "denominator_bar_f",
    "penalty_statistic", "memory_statistic", "penalty_step", "memory_step",
    "stopping_check", "run_adaptive", "reconstruct_kernel",
]

TWO_PI = 2.0 * math.pi

# Floor used when a denominator box contains only exact zeros.
EPS_DENOMINATOR = 1e-12

# The raw grid carries 2T time points per unit of rescaled time and 2T
# frequencies per 2*pi, i.e. four times the point count of the single-sample
# convention the chi-square cutoffs are calibrated against.  The default
# statistic scale compensates, so that under homogeneity the penalty
# statistic stays well below the cutoff and windows keep growing.
DEFAULT_PENALTY_SCALE = 0.25


@dataclass(frozen=True)
class EstimatorConfig:
    """Tuning parameters of the adaptive iteration.

    ``None`` for the denominator bandwidths or cutoffs resolves to the
    initial bandwidths and to twice the 0.90 / 0.75 chi-square quantiles.
    """

    b_t0: float = 0.12
    b_f0: float = TWO_PI * 0.12
    gamma_t: float = 1.2
    gamma_f: float = 1.2
    rho: float = 1.02
    eta: float = 0.25
    q: float = 0.15
    b_star_t0: Optional[float] = None
    b_star_f0: Optional[float] = None
    b_sstar_t0: Optional[float] = None
    b_sstar_f0: Optional[float] = None
    c_pen: Optional[float] = None
    c_mem: Optional[float] = None
    penalty_scale: float = DEFAULT_PENALTY_SCALE
    k_hard: int = 25
    bias_exponent: float = -1.0 / 6.0
    d_t: int = 1
    d_f: int = 1
    keep_history: bool = True

    def __post_init__(self):
        if not 0.0 < self.b_t0 <= 1.0:
            raise ParameterError("b_t0 must lie in (0, 1]")
        if not 0.0 < self.b_f0 <= TWO_PI:
            raise ParameterError("b_f0 must lie in (0, 2*pi]")
        if self.gamma_t < 1.0 or self.gamma_f < 1.0:
            raise ParameterError("growth rates must be >= 1")
        if self.rho < 1.0:
            raise ParameterError("rho must be >= 1")
        if not 0.0 <= self.eta < 1.0:
            raise ParameterError("eta must lie in [0, 1)")
        if not 0.0 < self.q < 1.0:
            raise ParameterError("q must lie in (0, 1)")
        if self.penalty_scale < 0.0:
            raise ParameterError("penalty_scale must be >= 0")
        if self.k_hard < 1:
            raise ParameterError("k_hard must be >= 1")
        if self.d_t < 1 or self.d_f < 1:
            raise ParameterError("decimation factors must be >= 1")

    def resolved(self) -> "EstimatorConfig":
        """Fill None fields with their defaults."""
        return replace(
            self,
            b_star_t0=self.b_t0 if self.b_star_t0 is None else self.b_star_t0,
            b_star_f0=self.b_f0 if self.b_star_f0 is None else self.b_star_f0,
            b_sstar_t0=self.b_t0 if self.b_sstar_t0 is None else self.b_sstar_t0,
            b_sstar_f0=self.b_f0 if self.b_sstar_f0 is None else self.b_sstar_f0,
            c_pen=2.0 * chi2_quantile_1df(0.90) if self.c_pen is None else self.c_pen,
            c_mem=2.0 * chi2_quantile_1df(0.75) if self.c_mem is None else self.c_mem,
        )

    def constants(self) -> KernelConstants:
        cfg = self.resolved()
        return KernelConstants(c_pen=cfg.c_pen, c_mem=cfg.c_mem, rho=cfg.rho)

    def warnings(self, T: int) -> List[str]:
        """Guideline violations worth surfacing (non-fatal)."""
        out = []
        if self.b_t0 * self.b_f0 * T < math.log(T) ** 2:
            out.append(f"initial bandwidths small: b_t0*b_f0*T = "
                       f"{self.b_t0 * self.b_f0 * T:.2f} < log(T)^2 = "
                       f"{math.log(T) ** 2:.2f}")
        prod = self.gamma_t * self.gamma_f
        if not 1.2 <= prod <= 1.5:
            out.append(f"gamma_t*gamma_f = {prod:.3f} outside the recommended [1.2, 1.5]")
        if not 1.01 <= self.rho <= 1.03:
            out.append(f"rho = {self.rho} outside the recommended [1.01, 1.03]")
        if self.eta > 0.25:
            out.append(f"eta = {self.eta} above the recommended maximum 0.25")
        if not 0.10 <= self.q <= 0.20:
            out.append(f"q = {self.q} outside the recommended [0.10, 0.20]")
        return out


@dataclass
class AdaptiveState:
    """Per-grid-point state after one completed iteration."""

    f_hat: np.ndarray      # current effective estimate
    N_hat: np.ndarray      # effective weight sum
    N_tilde: np.ndarray    # weight sum of the last auxiliary estimate
    b_eff: np.ndarray      # effective bandwidth derived from N_hat
    theta: np.ndarray      # last memory coefficient
    neg: np.ndarray        # negative-value full-memory regime flag


@dataclass(frozen=True)
class IterationDiagnostics:
    k: int
    mean_growth: float
    growth_q25: float
    growth_q75: float
    b_eff_min: float
    b_eff_q25: float
    b_eff_median: float
    b_eff_q75: float
    b_eff_max: float
    count_negative: int
    count_full_memory: int
    search_bt_median: float
    search_bf_median: float
    b_star_t: float
    b_star_f: float
    b_sstar_t: float
    b_sstar_f: float
    elapsed: float
    stop_reason: str = "none"


@dataclass(frozen=True)
class RunResult:
    """Final plane plus everything needed to replay the weight recursion."""

    final: Plane
    history: Optional[List[AdaptiveState]]
    diagnostics: List[IterationDiagnostics]
    config: EstimatorConfig
    grid: EstimationGrid

    @property
    def k_max(self) -> int:
        return self.diagnostics[-1].k

    @property
    def stop_reason(self) -> str:
        return self.diagnostics[-1].stop_reason


@dataclass(frozen=True)
class ReconstructedKernel:
    """Replayed smoothing kernel of one grid point."""

    weights: np.ndarray    # (2T-1, T+1) over the raw grid
    penalty: np.ndarray    # last-iteration penalty statistic, NaN outside window
    grid_point: tuple
    u: float
    lam: float

    @property
    def total(self) -> float:
        return float(self.weights.sum())


def effective_bandwidth(n_weights, T: int):
    """Effective bandwidth sqrt(N)/(2T).

    Calibrated to the weight-count of this grid: an unpenalized kernel with
    bandwidth fractions (b_t, b_f/2pi) collects N ~ 4*T^2*b_t*(b_f/2pi)
    weights, so b_eff is their geometric mean.
    """
    return np.sqrt(n_weights) / (2.0 * T)


def _box_sums(A: np.ndarray, ht: int, hf: int):
    """Clipped sliding-box sums of A with half-widths (ht, hf) in grid steps."""
    n0, n1 = A.shape
    P = np.zeros((n0 + 1, n1 + 1))
    P[1:, 1:] = A.cumsum(axis=0).cumsum(axis=1)
    lo0 = np.maximum(np.arange(n0) - ht, 0)
    hi0 = np.minimum(np.arange(n0) + ht + 1, n0)
    lo1 = np.maximum(np.arange(n1) - hf, 0)
    hi1 = np.minimum(np.arange(n1) + hf + 1, n1)
    S = (P[np.ix_(hi0, hi1)] - P[np.ix_(lo0, hi1)]
         - P[np.ix_(hi0, lo1)] + P[np.ix_(lo0, lo1)])
    counts = (hi0 - lo0)[:, None] * (hi1 - lo1)[None, :]
    return S, counts


def denominator_bar_f(values: np.ndarray, grid: EstimationGrid,
                      half_u: float, half_lam: float) -> np.ndarray:
    """Local energy level: box mean of |f| plus root mean squared deviation.

    The box is {|s/T - u| <= half_u, |lambda_j - lambda| <= half_lam},
    clipped at the plane edges.  Deviations of the signed estimates are taken
    about the absolute mean.  Strictly positive: exact-zero boxes return the
    floor 1e-12.
    """
    T = grid.T
    ht = int(math.floor(half_u * 2.0 * T / grid.d_t + 1e-9))
    hf = int(math.floor(half_lam * T / (math.pi * grid.d_f) + 1e-9))
    # center on the global mean to make the variance box numerically stable
    c0 = float(values.mean())
    F0 = values - c0
    s_abs, cnt = _box_sums(np.abs(values), ht, hf)
    s_sig, _ = _box_sums(F0, ht, hf)
    s_sq, _ = _box_sums(F0 * F0, ht, hf)
    m_abs = s_abs / cnt
    m0 = m_abs - c0
    var = s_sq / cnt - 2.0 * m0 * (s_sig / cnt) + m0 * m0
    bar = m_abs + np.sqrt(np.maximum(var, 0.0))
    return np.where(bar > 0.0, bar, EPS_DENOMINATOR)


def penalty_statistic(f_p1, f_p2, n_tilde_p1, bar_f_p1, T: int,
                      consts: KernelConstants, penalty_scale: float = 1.0):
    """Homogeneity statistic between two grid points (asymmetric in p1, p2)."""
    r = (np.asarray(f_p1) - np.asarray(f_p2)) / np.asarray(bar_f_p1)
    return penalty_scale * np.asarray(n_tilde_p1) / (TWO_PI * consts.kappa_t * consts.kappa_f * T) * r * r


def memory_statistic(f_tilde, f_prev, n_hat_candidate, bar_f, T: int,
                     consts: KernelConstants, penalty_scale: float = 1.0):
    """Update statistic between the auxiliary and the previous estimate."""
    r = (np.asarray(f_tilde) - np.asarray(f_prev)) / np.asarray(bar_f)
    return penalty_scale * np.asarray(n_hat_candidate) / (TWO_PI * consts.kappa_t * consts.kappa_f * T) * r * r


def _search_bandwidths(state: AdaptiveState, config: EstimatorConfig):
    """Per-point window bandwidths for the next penalty step."""
    g_t = np.where(state.neg, config.rho, config.gamma_t)
    g_f = np.where(state.neg, config.rho, config.gamma_f)
    bt = np.minimum(1.0, state.b_eff * g_t)
    bf = np.minimum(TWO_PI, TWO_PI * state.b_eff * g_f)
    return np.ascontiguousarray(bt), np.ascontiguousarray(bf)


def _denominator_halfwidths(b_eff: np.ndarray, q_init: float,
                            config: EstimatorConfig, T: int):
    """Shrink the statistic boxes at the rate the effective bandwidths grow."""
    ratio = float(np.quantile(b_eff, config.q)) / q_init
    floor_u = 3.0 / (2.0 * T)
    floor_lam = 3.0 * math.pi / T
    return (max(config.b_star_t0 / ratio, floor_u),
            max(config.b_star_f0 / ratio, floor_lam),
            max(config.b_sstar_t0 / ratio, floor_u),
            max(config.b_sstar_f0 / ratio, floor_lam))


def penalty_step(state: AdaptiveState, raw: RawPlane, grid: EstimationGrid,
                 config: EstimatorConfig, k: int, q_init: float,
                 n_threads: int = 1, accel=None):
    """One auxiliary re-smoothing pass: returns (f_tilde, N_tilde, info).

    ``info`` carries the search bandwidths and denominator half-widths used,
    needed for diagnostics and kernel reconstruction.
    """
    accel = accel if accel is not None else _backend.get_backend()
    consts = config.constants()
    T = grid.T
    bs_t, bs_f, bss_t, bss_f = _denominator_halfwidths(state.b_eff, q_init, config, T)
    barf = denominator_bar_f(state.f_hat, grid, bs_t, bs_f)
    bt, bf = _search_bandwidths(state, config)
    fac = np.ascontiguousarray(
        config.penalty_scale * state.N_tilde
        / (TWO_PI * consts.kappa_t * consts.kappa_f * T) / (barf * barf))
    inv_cut = 1.0 / (consts.c_pen * consts.rho**k)
    F_raw = np.ascontiguousarray(state.f_hat[grid.map_time][:, grid.map_freq])
    f_til, n_til = accel.penalty_accumulate(
        raw.values, F_raw, np.ascontiguousarray(state.f_hat), fac, bt, bf,
        inv_cut, grid.t_idx, grid.f_idx, T, n_threads)
    # total separation: carry the previous state forward
    empty = n_til <= 0.0
    if empty.any():
        f_til[empty] = state.f_hat[empty]
        n_til[empty] = state.N_hat[empty]
    info = {"bt": bt, "bf": bf, "b_star_t": bs_t, "b_star_f": bs_f,
            "b_sstar_t": bss_t, "b_sstar_f": bss_f}
    return f_til, n_til, info


def memory_step(f_tilde: np.ndarray, n_tilde: np.ndarray, state: AdaptiveState,
                grid: EstimationGrid, config: EstimatorConfig, k: int,
                bss_t: float, bss_f: float) -> AdaptiveState:
    """Blend the auxiliary estimate with the previous state.

    theta = 1 - (1-eta) * K_mem(statistic), computed with the candidate
    weight sum at theta = eta (single pass, no fixed point).  Auxiliary
    updates that are negative and below the previous estimate force full
    memory and flag the point; flags clear once the estimate is nonnegative.
    """
    consts = config.constants()
    T = grid.T
    barf = denominator_bar_f(state.f_hat, grid, bss_t, bss_f)
    n_cand = (1.0 - config.eta) * n_tilde + config.eta * state.N_hat
    stat = memory_statistic(f_tilde, state.f_hat, n_cand, barf, T, consts,
                            config.penalty_scale)
    theta = 1.0 - (1.0 - config.eta) * kernel_memory(stat, k, consts)
    trigger = (f_tilde < 0.0) & (f_tilde < state.f_hat)
    theta = np.where(trigger, 1.0, theta)

    carry = theta >= 1.0
    n_new = (1.0 - theta) * n_tilde + theta * state.N_hat
    f_new = ((1.0 - theta) * n_tilde * f_tilde
             + theta * state.N_hat * state.f_hat) / n_new
    # full memory carries the previous state over exactly
    n_new[carry] = state.N_hat[carry]
    f_new[carry] = state.f_hat[carry]

    neg = np.where(trigger, True, state.neg) & (f_new < 0.0)
    return AdaptiveState(f_hat=f_new, N_hat=n_new, N_tilde=n_tilde,
                         b_eff=effective_bandwidth(n_new, T),
                         theta=theta, neg=neg)


def stopping_check(diagnostics: List[IterationDiagnostics],
                   b_eff: np.ndarray, config: EstimatorConfig, T: int) -> Optional[str]:
    """Reason to stop after the latest completed iteration, or None.

    Two rules: stop when the mean weight-sum growth falls to
    (gamma_t*gamma_f)^(1/4), or, once the bias guard is armed (typical
    effective bandwidth at least T^bias_exponent), when the interquartile
    spread of the growth exceeds 10% of the nominal rate.  The guard is
    armed on the median effective bandwidth: under separation the plane
    always contains fully penalized points (plane edges, region borders)
    whose bandwidths shrink, so a minimum would never arm even though the
    growing majority of the plane is entering the bias-dominated regime.
    """
    if not diagnostics:
        raise ParameterError("stopping_check requires at least one completed iteration")
    d = diagnostics[-1]
    if d.mean_growth <= (config.gamma_t * config.gamma_f) ** 0.25:
        return "growth_stall"
    if (float(np.median(b_eff)) >= T**config.bias_exponent
            and d.growth_q75 - d.growth_q25 > 0.1 * config.gamma_t * config.gamma_f):
        return "bias_dispersion"
    return None


def _snapshot(state: AdaptiveState) -> AdaptiveState:
    return AdaptiveState(f_hat=state.f_hat.copy(), N_hat=state.N_hat.copy(),
                         N_tilde=state.N_tilde.copy(), b_eff=state.b_eff.copy(),
                         theta=state.theta.copy(), neg=state.neg.copy())


def run_adaptive(raw: RawPlane, config: EstimatorConfig,
                 n_threads: Optional[int] = None, backend: Optional[str] = None) -> RunResult:
    """Full adaptive estimation: initialization, iteration, stopping.

    Deterministic for fixed (raw, config) whatever the worker count: grid
    points are independent and each accumulates in a fixed scan order.
    """
    config = config.resolved()
    accel = _backend.get_backend(backend)
    if n_threads is None:
        n_threads = _backend.num_threads()
    grid = EstimationGrid(raw.grid, config.d_t, config.d_f)
    T = grid.T

    init = smooth_nonadaptive(raw, config.b_t0, config.b_f0, grid)
    n_in = weight_sum_plane(grid, config.b_t0, config.b_f0)
    state = AdaptiveState(f_hat=init.values.copy(), N_hat=n_in.copy(),
                          N_tilde=n_in.copy(),
                          b_eff=effective_bandwidth(n_in, T),
                          theta=np.ones(grid.shape), neg=np.zeros(grid.shape, bool))
    q_init = float(np.quantile(state.b_eff, config.q))

    history = [_snapshot(state)] if config.keep_history else None
    diagnostics: List[IterationDiagnostics] = []

    for k in range(config.k_hard):
        t0 = time.perf_counter()
        f_til, n_til, info = penalty_step(state, raw, grid, config, k, q_init,
                                          n_threads=n_threads, accel=accel)
        new_state = memory_step(f_til, n_til, state, grid, config, k,
                                info["b_sstar_t"], info["b_sstar_f"])
        growth = new_state.N_hat / state.N_hat
        g25, g75 = np.quantile(growth, [0.25, 0.75])
        b25, b50, b75 = np.quantile(new_state.b_eff, [0.25, 0.5, 0.75])
        diagnostics.append(IterationDiagnostics(
            k=k,
            mean_growth=float(growth.mean()),
            growth_q25=float(g25), growth_q75=float(g75),
            b_eff_min=float(new_state.b_eff.min()),
            b_eff_q25=float(b25), b_eff_median=float(b50), b_eff_q75=float(b75),
            b_eff_max=float(new_state.b_eff.max()),
            count_negative=int(new_state.neg.sum()),
            count_full_memory=int((new_state.theta >= 1.0).sum()),
            search_bt_median=float(np.median(info["bt"])),
            search_bf_median=float(np.median(info["bf"])),
            b_star_t=info["b_star_t"], b_star_f=info["b_star_f"],
            b_sstar_t=info["b_sstar_t"], b_sstar_f=info["b_sstar_f"],
            elapsed=time.perf_counter() - t0,
        ))
        state = new_state
        if history is not None:
            history.append(_snapshot(state))

        reason = stopping_check(diagnostics, state.b_eff, config, T)
        if reason is None and k == config.k_hard - 1:
            reason = "hard_cap"
        if reason is not None:
            diagnostics[-1] = replace(diagnostics[-1], stop_reason=reason)
            break

    final = Plane(grid=grid, values=state.f_hat.copy(),
                  meta={"estimator": "adaptive", "iterations": diagnostics[-1].k,
                        "stop_reason": diagnostics[-1].stop_reason})
    return RunResult(final=final, history=history, diagnostics=diagnostics,
                     config=config, grid=grid)


def _window_weights(T: int, rt: int, jp: int, b_t: float, b_f: float,
                    F_raw: Optional[np.ndarray], f_p: float, fac: float,
                    inv_cut: float):
    """Raw-plane weight map of one point; optionally penalized.

    Returns (weights, penalty_map); the penalty map is NaN outside the
    window and zero everywhere when ``F_raw`` is None (no penalization).
    """
    n_rt, n_rf = 2 * T - 1, T + 1
    du = 1.0 / (2.0 * T)
    dlam = math.pi / T
    span_t = b_t * T
    s_lo = max(0, int(math.ceil(rt - span_t)))
    s_hi = min(n_rt - 1, int(math.floor(rt + span_t)))
    dm = min(T, int(math.floor(0.5 * b_f / dlam)))
    rows = np.arange(s_lo, s_hi + 1)
    kt = kernel_quadratic((rt - rows) * du / b_t)
    d = np.arange(-dm, dm + 1)
    kf = kernel_quadratic(d * dlam / b_f)
    e = jp + d
    cols = np.where(e < 0, -e, np.where(e > T, 2 * T - e, e))

    weights = np.zeros((n_rt, n_rf))
    penalty = np.full((n_rt, n_rf), np.nan)
    if F_raw is None:
        w = kt[:, None] * kf[None, :]
        p_win = np.zeros_like(w)
    else:
        diff = f_p - F_raw[s_lo:s_hi + 1].take(cols, axis=1)
        p_win = fac * diff * diff
        z = p_win * inv_cut
        w = kt[:, None] * (kf[None, :] * np.maximum(0.0, 1.0 - z * z))
    np.add.at(weights, (rows[:, None], cols[None, :]), w)
    penalty[np.ix_(rows, cols)] = p_win
    return weights, penalty


def reconstruct_kernel(result: RunResult, u: float, lam: float) -> ReconstructedKernel:
    """Replay the weight recursion of the grid point nearest to (u, lambda).

    The sum of the returned weights equals the stored effective weight sum,
    and applying them to the raw plane reproduces the stored final estimate
    (both up to accumulation-order rounding).
    """
    if result.history is None:
        raise HistoryUnavailableError("run was performed with keep_history=False")
    config = result.config
    consts = config.constants()
    grid = result.grid
    T = grid.T
    gi, gj = grid.nearest_point(u, lam)
    rt = int(grid.t_idx[gi])
    jp = int(grid.f_idx[gj])

    weights, penalty = _window_weights(T, rt, jp, config.b_t0, config.b_f0,
                                       None, 0.0, 0.0, 0.0)
    for k, diag in enumerate(result.diagnostics):
        prev = result.history[k]
        b_eff_p = float(prev.b_eff[gi, gj])
        g_t = config.rho if prev.neg[gi, gj] else config.gamma_t
        g_f = config.rho if prev.neg[gi, gj] else config.gamma_f
        b_t = min(1.0, b_eff_p * g_t)
        b_f = min(TWO_PI, TWO_PI * b_eff_p * g_f)
        barf = denominator_bar_f(prev.f_hat, grid, diag.b_star_t, diag.b_star_f)[gi, gj]
        fac = (config.penalty_scale * float(prev.N_tilde[gi, gj])
               / (TWO_PI * consts.kappa_t * consts.kappa_f * T) / (barf * barf))
        inv_cut = 1.0 / (consts.c_pen * consts.rho**k)
        F_raw = prev.f_hat[grid.map_time][:, grid.map_freq]
        w_til, penalty = _window_weights(T, rt, jp, b_t, b_f, F_raw,
                                         float(prev.f_hat[gi, gj]), fac, inv_cut)
        if w_til.sum() <= 0.0:
            w_til = weights  # total separation fell back to the previous weights
        th = float(result.history[k + 1].theta[gi, gj])
        if th < 1.0:
            weights = (1.0 - th) * w_til + th * weights
    return ReconstructedKernel(weights=weights, penalty=penalty,
                               grid_point=(gi, gj),
                               u=float(grid.rescaled_times()[gi]),
                               lam=float(grid.freqs()[gj]))
