from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, strategies as st

from torsk.trend import (
    CycleBaseline,
    TrivialBaseline,
    average_cycle,
    cycle_on_grid,
    cycle_predict,
    decompose,
    dct_resample,
    fit_poly_trend,
    image_cycle_predict,
    image_decompose,
    poly_eval,
    reconstruct,
    trivial_predict,
)


def _signal(n, period, coeffs=(0.3, -1.2, 2.0), amp=(1.0, 0.4)):
    t = np.arange(n)
    tau = t / (n - 1)
    trend = np.polynomial.polynomial.polyval(tau, coeffs)
    cyc = amp[0] * np.sin(2 * np.pi * t / period) + amp[1] * np.cos(4 * np.pi * t / period)
    return trend + cyc


def test_poly_fit_cases(rng):
    np.testing.assert_allclose(fit_poly_trend(np.full(20, 3.5), 1), [3.5, 0.0], atol=1e-10)
    tau = np.arange(30) / 29
    np.testing.assert_allclose(fit_poly_trend(1 - 2 * tau + 0.5 * tau**2, 2), [1, -2, 0.5], atol=1e-8)
    f = 2 + 3 * tau + rng.normal(scale=0.1, size=30)
    V = np.vander(tau, 2, increasing=True)
    oracle = np.linalg.solve(V.T @ V, V.T @ f)
    np.testing.assert_allclose(fit_poly_trend(f, 1), oracle, atol=1e-10)
    np.testing.assert_allclose(poly_eval(oracle, np.arange(30), 30), V @ oracle, atol=1e-14)


def test_dct_resample_cases():
    f = np.random.default_rng(0).normal(size=40)
    np.testing.assert_allclose(dct_resample(f, 40), f, atol=1e-10)
    np.testing.assert_allclose(dct_resample(np.full(17, 2.0), 29), 2.0, atol=1e-12)
    k, n, N = 7, 100, 150
    mode = np.cos(np.pi * k * (2 * np.arange(n) + 1) / (2 * n))
    analytic = np.cos(np.pi * k * (2 * np.arange(N) + 1) / (2 * N))
    np.testing.assert_allclose(dct_resample(mode, N), analytic, atol=1e-8)


def test_average_cycle_cases(rng):
    p = rng.normal(size=6)
    np.testing.assert_allclose(average_cycle(np.tile(p, 4), 6), p, atol=1e-12)
    np.testing.assert_array_equal(average_cycle([1, 2, 3, 4, 3, 4, 5, 6], 4), [2, 3, 4, 5])
    f = rng.normal(size=37)
    oracle = [np.mean([f[c * 5 + i] for c in range(7)]) for i in range(5)]
    np.testing.assert_allclose(average_cycle(f, 5), oracle, atol=1e-14)


def test_pure_trend_leaves_nothing():
    t = np.arange(200) / 199
    m = decompose(1.0 + 0.5 * t - t**2, 20)
    assert np.abs(m.mean_cycle).max() < 1e-10
    assert np.abs(m.detrended).max() < 1e-10


def test_trend_plus_sinusoid_residual():
    m = decompose(_signal(500, 25), 25)
    assert np.abs(m.detrended).max() < 1e-8
    assert abs(m.mean_cycle.mean()) < 1e-10


def test_resample_factor_gives_integer_cycle():
    # 365-day year on 3-day steps is 365/3 samples; a_C = 3/5 rescales to 5-day steps
    m = decompose(_signal(400, 365 / 3), Fraction(365, 3), resample_factor=Fraction(3, 5))
    assert m.cycle_len == 73
    assert m.resampled_len == 240
    with pytest.raises(ValueError):
        decompose(np.zeros(400), Fraction(365, 3), resample_factor=Fraction(1, 2))


def test_default_resample_factor_is_denominator():
    m = decompose(_signal(300, 12.5), "25/2")
    assert m.resample_factor == 2 and m.cycle_len == 25


def test_constant_series():
    m = decompose(np.full(120, 4.2), 10)
    np.testing.assert_allclose(reconstruct(m), 4.2, atol=1e-12)
    np.testing.assert_allclose(cycle_predict(m, 119, 15), 4.2, atol=1e-12)


def test_round_trip_integer_cycle(rng):
    f = _signal(600, 30) + rng.normal(scale=0.3, size=600)
    assert np.abs(reconstruct(decompose(f, 30)) - f).max() <= 1e-8


def test_round_trip_resampled(rng):
    f = _signal(400, 365 / 3) + rng.normal(scale=0.2, size=400)
    m = decompose(f, Fraction(365, 3), resample_factor=Fraction(3, 5))
    assert np.abs(reconstruct(m) - f).max() <= 1e-3


@given(st.integers(0, 2**31), st.integers(5, 40), st.integers(0, 3))
def test_round_trip_property(seed, period, d):
    f = np.random.default_rng(seed).normal(size=6 * period)
    m = decompose(f, period, d=d)
    assert np.abs(reconstruct(m) - f).max() <= 1e-8
    full = (m.original_len // m.cycle_len) * m.cycle_len
    assert abs(cycle_on_grid(m)[:full].mean()) <= 1e-10


@given(st.integers(0, 2**31), st.integers(0, 399))
def test_cycle_predict_exact_any_t0(seed, t0):
    r = np.random.default_rng(seed)
    coeffs = r.normal(size=3)
    period = 20
    p = r.normal(size=period)
    t = np.arange(600)
    full = np.polynomial.polynomial.polyval(t / 399, coeffs) + p[t % period]
    m = decompose(full[:400], period)
    pred = cycle_predict(m, t0, 100)
    np.testing.assert_allclose(pred, full[t0 + 1:t0 + 101], atol=1e-8)


def test_cycle_predict_validation():
    m = decompose(_signal(100, 10), 10)
    with pytest.raises(ValueError):
        cycle_predict(m, 100, 5)
    assert cycle_predict(m, 99, 0).shape == (0,)


def test_image_seasonal_brightness():
    t = np.arange(240)
    movie = (1.0 + 0.5 * np.sin(2 * np.pi * t / 24))[:, None, None] * np.ones((1, 6, 6))
    model = image_decompose(movie, 6, 24)
    amps = np.array([[np.abs(model.model(i, j).mean_cycle).max() for j in range(6)] for i in range(6)])
    assert amps[0, 0] > 1.0
    amps[0, 0] = 0
    assert amps.max() < 1e-10


def test_image_periodic_movie_prediction(rng):
    period, n = 16, 160
    base = rng.normal(size=(period, 5, 5))
    t = np.arange(n + 40)
    movie = base[t % period] + (0.01 * t)[:, None, None]
    model = image_decompose(movie[:n], 5, period, d=1)
    pred = image_cycle_predict(model, n - 1, 40)
    np.testing.assert_allclose(pred, movie[n:], atol=1e-6)


def test_trivial():
    np.testing.assert_array_equal(trivial_predict(2.0, 3), [2.0, 2.0, 2.0])
    frame = np.arange(4.0).reshape(2, 2)
    assert trivial_predict(frame, 3).shape == (3, 2, 2)
    series = np.full(50, 1.5)
    b = TrivialBaseline().fit(series)
    assert np.all(b.predict(10) == series[:10])


def test_cycle_baseline_estimator(rng):
    f = _signal(400, 20)
    est = CycleBaseline(cycle_length=20, degree=2).fit(f[:300])
    np.testing.assert_allclose(est.predict(100), f[300:], atol=1e-8)
    assert est.get_params()["cycle_length"] == 20
    frames = rng.normal(size=(60, 4, 4))
    img = CycleBaseline(cycle_length=10, dct_block=2).fit(frames)
    assert img.predict(5).shape == (5, 4, 4)


def test_cycle_baseline_weak_on_mackey_glass():
    from torsk.datasets import MackeyGlassParams, mackey_glass

    x = mackey_glass(MackeyGlassParams(), 2600, seed=0, discard=500)
    pred = CycleBaseline(cycle_length=50).fit(x[:2300]).predict(300)
    assert np.sqrt(np.mean((pred - x[2300:]) ** 2)) > 0.05
