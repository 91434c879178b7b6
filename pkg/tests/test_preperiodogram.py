import math

import numpy as np
import pytest

from tvspec.errors import DataError, ParameterError
from tvspec.preperiodogram import (RawGrid, cov_star, periodogram,
                                   preperiodogram_classic,
                                   preperiodogram_modified)
from tvspec.simulate import ModelSpec, gaussian_innovations, generate

from conftest import make_series, random_series

TWO_PI = 2 * math.pi


def brute_cov_star(x: np.ndarray, tau: float, k: int) -> float:
    """Independent restatement of the preliminary covariance rule."""
    T = len(x)

    def at(t):
        return x[int(t) - 1] if 1 <= t <= T and float(t).is_integer() else None

    lo, hi = tau - k / 2.0, tau + k / 2.0
    if float(lo).is_integer() and float(hi).is_integer():
        a, b = at(lo), at(hi)
        return a * b if a is not None and b is not None else 0.0
    vals = []
    for a, b in (((tau - (k + 1) / 2), (tau + (k - 1) / 2)),
                 ((tau - (k - 1) / 2), (tau + (k + 1) / 2))):
        va, vb = at(a), at(b)
        if va is None or vb is None:
            return 0.0
        vals.append(va * vb)
    return 0.5 * sum(vals)


def brute_modified_plane(x: np.ndarray) -> np.ndarray:
    T = len(x)
    out = np.zeros((2 * T - 1, T + 1))
    for i in range(2 * T - 1):
        tau = 1 + i / 2.0
        for j in range(T + 1):
            lam = math.pi * j / T
            acc = brute_cov_star(x, tau, 0)
            for k in range(1, T):
                acc += 2.0 * brute_cov_star(x, tau, k) * math.cos(k * lam)
            out[i, j] = acc / TWO_PI
    return out


class TestCovStar:
    def test_aligned_product(self):
        s = make_series([1.0, 2.0, 3.0, 4.0])
        assert cov_star(s, 2, 2) == 3.0

    def test_aligned_half_integer(self):
        s = make_series([1.0, 2.0, 3.0, 4.0])
        assert cov_star(s, 2.5, 1) == 6.0

    def test_neighbor_average(self):
        s = make_series([1.0, 2.0, 3.0, 4.0])
        assert cov_star(s, 2, 1) == 4.0

    def test_out_of_range_is_zero(self):
        s = make_series([1.0, 2.0, 3.0, 4.0])
        assert cov_star(s, 1, 3) == 0.0   # aligned but would need X_{-0.5}
        assert cov_star(s, 1.5, 2) == 0.0

    def test_off_grid_tau(self):
        s = make_series([1.0, 2.0, 3.0, 4.0])
        with pytest.raises(ParameterError):
            cov_star(s, 2.25, 1)
        with pytest.raises(ParameterError):
            cov_star(s, 5.0, 0)

    def test_matches_brute_rule(self):
        s = random_series(12, seed=3)
        for i in range(2 * 12 - 1):
            tau = 1 + i / 2.0
            for k in range(0, 12):
                assert cov_star(s, tau, k) == pytest.approx(
                    brute_cov_star(s.values, tau, k), rel=1e-15, abs=1e-15)


class TestModifiedPrePeriodogram:
    def test_zero_series(self):
        s = make_series(np.zeros(16))
        assert np.all(preperiodogram_modified(s).values == 0.0)

    def test_constant_series_lag_count(self):
        T, c = 16, 1.3
        s = make_series(np.full(T, c))
        plane = preperiodogram_modified(s)
        for i in (0, 5, 2 * T - 2):
            tau = 1 + i / 2.0
            n_lags = sum(brute_cov_star(np.full(T, 1.0), tau, k) != 0
                         for k in range(T)) * 2 - (1 if brute_cov_star(
                             np.full(T, 1.0), tau, 0) != 0 else 0)
            assert plane.values[i, 0] * TWO_PI == pytest.approx(c * c * n_lags,
                                                                rel=1e-12)

    def test_matches_brute_sum(self):
        s = random_series(16, seed=11)
        plane = preperiodogram_modified(s)
        brute = brute_modified_plane(s.values)
        assert np.allclose(plane.values, brute, rtol=1e-9, atol=1e-12)

    def test_row_inverse_recovers_lags(self):
        # inverting a row of the plane must give back the lag sequence
        T = 32
        s = random_series(T, seed=5)
        plane = preperiodogram_modified(s)
        for i in (0, 11, 40):
            lags = np.array([brute_cov_star(s.values, 1 + i / 2.0, k)
                             for k in range(T)])
            full = np.fft.irfft(plane.values[i] * TWO_PI, n=2 * T)
            assert np.allclose(full[:T], lags, atol=1e-9)

    def test_requires_min_length(self):
        with pytest.raises(ParameterError):
            preperiodogram_modified(make_series(np.ones(4)))

    def test_nonfinite_rejected(self):
        s = make_series(np.ones(16))
        s.values[3] = np.inf
        with pytest.raises(DataError):
            preperiodogram_modified(s)

    def test_grid_shape(self):
        plane = preperiodogram_modified(random_series(24, seed=0))
        assert plane.values.shape == (47, 25)
        assert plane.grid.times()[0] == 1.0
        assert plane.grid.times()[-1] == 24.0
        assert plane.grid.freqs()[-1] == pytest.approx(math.pi)

    def test_mc_unbiased_for_stationary_ma1(self):
        # mean over replications approaches (1/2pi)(1.25 + cos lam)
        T, reps = 128, 150
        probes = [(64, 16), (128, 64), (190, 96)]
        acc = np.zeros(len(probes))
        sq = np.zeros(len(probes))
        for r in range(reps):
            z = gaussian_innovations(50_000 + r, T + 1)
            x = z[1:] + 0.5 * z[:T]
            plane = preperiodogram_modified(make_series(x))
            for p, (i, j) in enumerate(probes):
                v = plane.values[i, j]
                acc[p] += v
                sq[p] += v * v
        mean = acc / reps
        se = np.sqrt((sq / reps - mean**2) / reps)
        lam = np.array([math.pi * j / T for _, j in probes])
        truth = (1.25 + np.cos(lam)) / TWO_PI
        assert np.sum(np.abs(mean - truth) <= 3 * se) >= 2


class TestClassicAndPeriodogram:
    def test_zero_series(self):
        s = make_series(np.zeros(16))
        assert np.all(preperiodogram_classic(s) == 0.0)
        assert np.all(periodogram(s) == 0.0)

    def test_averaging_identity(self):
        for seed, T in ((0, 64), (1, 61), (2, 32)):
            s = random_series(T, seed=seed)
            avg = preperiodogram_classic(s).mean(axis=0)
            pg = periodogram(s)
            scale = np.max(np.abs(pg))
            assert np.max(np.abs(avg - pg)) <= 1e-10 * scale

    def test_single_spike(self):
        T = 16
        x = np.zeros(T)
        x[0] = 1.0
        plane = preperiodogram_classic(make_series(x))
        assert np.allclose(plane[0], 1.0 / TWO_PI, rtol=1e-12)

    def test_periodogram_concentrates_at_tone(self):
        T = 256
        j0 = T // 2
        t = np.arange(1, T + 1)
        x = np.cos(math.pi * j0 * t / T)
        pg = periodogram(make_series(x))
        others = np.delete(pg, j0)
        assert pg[j0] >= 100 * np.median(others)

    def test_wigner_ville_truncation_matches_truth(self):
        from tvspec.evaluate import wigner_ville_truncated
        from tvspec.simulate import true_spectrum
        spec = ModelSpec(kind="tvma2")
        for u in (0.25, 0.5, 0.75):
            for lam in (0.3, 1.5, 3.0):
                wv = wigner_ville_truncated(spec, u, lam, 8)
                assert abs(wv - true_spectrum(spec, u, lam)) < 1e-6
