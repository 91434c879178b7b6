import math

import numpy as np
import pytest

from tvspec.preperiodogram import RawGrid, RawPlane
from tvspec.simulate import TimeSeries


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def make_series(values) -> TimeSeries:
    values = np.asarray(values, dtype=float)
    return TimeSeries(values=values, T=len(values), model_tag="custom_csv", seed=0)


def random_series(T: int, seed: int) -> TimeSeries:
    values = np.random.default_rng(seed).standard_normal(T)
    return TimeSeries(values=values, T=T, model_tag="custom_csv", seed=seed)


def synthetic_plane(T: int, seed: int = 0, positive: bool = False) -> RawPlane:
    """Raw-plane stand-in for tests that do not need a real pre-periodogram."""
    g = np.random.default_rng(seed)
    values = g.standard_normal((2 * T - 1, T + 1))
    if positive:
        values = np.abs(values) + 1.0
    return RawPlane(grid=RawGrid(T), values=values)


def brute_smooth_point(raw: RawPlane, b_t: float, b_f: float, u: float,
                       lam: float):
    """Direct double-sum oracle for the nonadaptive estimator at one point.

    Time window clipped; frequency enumerated on the even-periodic extension.
    Returns (weighted average, weight sum).
    """
    T = raw.grid.T
    du = 1.0 / (2 * T)
    dlam = math.pi / T

    def kq(x):
        return 6.0 * (0.25 - x * x) if abs(x) <= 0.5 else 0.0

    num = den = 0.0
    jp = int(round(lam / dlam))
    dm = int(math.floor(0.5 * b_f / dlam))
    for s in range(2 * T - 1):
        kt = kq((u - (2 + s) * du) / b_t)
        if kt == 0.0:
            continue
        for d in range(-dm, dm + 1):
            e = jp + d
            jj = -e if e < 0 else (2 * T - e if e > T else e)
            kf = kq(d * dlam / b_f)
            w = kt * kf
            num += w * raw.values[s, jj]
            den += w
    return num / den, den
