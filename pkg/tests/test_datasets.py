import numpy as np
import pytest
from hypothesis import given, strategies as st

from torsk.datasets import (
    AnomalySpec,
    BlobParams,
    MackeyGlassParams,
    blob_centers,
    blob_frames,
    chaotic_blob,
    gamma_schedule,
    lissajous_blob,
    mackey_glass,
    normalize_driver,
)


def test_equilibrium_x0_one():
    x = mackey_glass(MackeyGlassParams(x0=1.0), 300)
    np.testing.assert_allclose(x, 1.0, rtol=0, atol=1e-12)


@given(st.floats(0.15, 0.3), st.floats(0.05, 0.12), st.sampled_from([4.0, 6.0, 10.0]))
def test_equilibrium_property(beta, gamma, n):
    if beta / gamma <= 1.05:
        return
    x0 = (beta / gamma - 1.0) ** (1.0 / n)
    x = mackey_glass(MackeyGlassParams(beta=beta, gamma=gamma, n_exponent=n, x0=x0), 60)
    assert np.abs(x - x0).max() <= 1e-12


def test_gamma_trace():
    g = gamma_schedule(MackeyGlassParams(), 2000, [AnomalySpec(1000, 50, 0.13)])
    assert np.all(g[1000:1050] == 0.13)
    assert np.all(g[:1000] == 0.1) and np.all(g[1050:] == 0.1)


def test_determinism_and_seed():
    p = MackeyGlassParams()
    a = mackey_glass(p, 800, seed=3)
    b = mackey_glass(p, 800, seed=3)
    assert a.tobytes() == b.tobytes()
    assert not np.array_equal(a, mackey_glass(p, 800, seed=4))


def test_discard_shifts_window():
    p = MackeyGlassParams()
    full = mackey_glass(p, 1300, seed=1)
    np.testing.assert_array_equal(mackey_glass(p, 800, seed=1, discard=500), full[500:])


def _oracle_rk4(beta, gamma, n, tau, dt, x0, steps, sub=1):
    """Independent RK4 delay integrator working on the fine grid dt/sub.

    The delayed value at half steps uses linear interpolation between stored
    fine-grid points, exactly like any fixed-step scheme on that grid.
    """
    h = dt / sub
    d = int(round(tau / h))
    hist = [x0] * (d + 1)
    f = lambda x, xd: beta * xd / (1 + xd ** n) - gamma * x
    out = [x0]
    for k in range((steps - 1) * sub):
        x = hist[-1]
        d0, d1 = hist[-1 - d], hist[-d]
        dm = 0.5 * (d0 + d1)
        k1 = f(x, d0)
        k2 = f(x + h / 2 * k1, dm)
        k3 = f(x + h / 2 * k2, dm)
        k4 = f(x + h * k3, d1)
        hist.append(x + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4))
        if (k + 1) % sub == 0:
            out.append(hist[-1])
    return np.array(out)


def test_matches_independent_integrator_same_step():
    x = mackey_glass(MackeyGlassParams(), 500)
    ref = _oracle_rk4(0.2, 0.1, 10.0, 17.0, 1.0, 1.2, 500)
    assert np.abs(x - ref).max() <= 1e-12


def test_refinement_converges():
    # dt=1 against dt/10 is limited by the interpolated delay, not rounding;
    # check the error decreases with refinement instead of a fixed 1e-6
    coarse = mackey_glass(MackeyGlassParams(dt=1.0), 300)
    fine = _oracle_rk4(0.2, 0.1, 10.0, 17.0, 1.0, 1.2, 300, sub=8)
    finer = _oracle_rk4(0.2, 0.1, 10.0, 17.0, 1.0, 1.2, 300, sub=16)
    e_coarse = np.abs(coarse - finer).max()
    e_fine = np.abs(fine - finer).max()
    assert e_fine < e_coarse / 20


def test_param_validation():
    with pytest.raises(ValueError):
        MackeyGlassParams(tau=17.0, dt=0.3)
    with pytest.raises(ValueError):
        MackeyGlassParams(gamma=0.0)
    with pytest.raises(ValueError):
        AnomalySpec(-1, 5)
    with pytest.raises(ValueError):
        AnomalySpec(0, 0)
    with pytest.raises(ValueError):
        BlobParams(grid=(7, 30))


def test_lissajous_constant_curve():
    frames = lissajous_blob(BlobParams(alpha=0.0, beta_freq=0.0), 5)
    assert np.all(frames == frames[0])
    r, c = np.unravel_index(frames[0].argmax(), frames[0].shape)
    # sin(0) = 0 maps to the column centre, cos(0) = 1 to the last row inside the margin
    assert (r, c) == (27, 14) or (r, c) == (27, 15)


def test_unit_peak_and_range():
    frames = lissajous_blob(BlobParams(), 400)
    np.testing.assert_allclose(frames.max(axis=(1, 2)), 1.0, atol=1e-12)
    assert frames.min() >= 0.0


def test_peak_within_one_pixel_of_centre():
    rng = np.random.default_rng(0)
    xs, ys = rng.uniform(-1, 1, 50), rng.uniform(-1, 1, 50)
    grid = (30, 24)
    frames = blob_frames(xs, ys, grid, 3.0)
    centres = blob_centers(xs, ys, grid)
    rows, cols = np.arange(grid[0]), np.arange(grid[1])
    for f, (cy, cx) in zip(frames, centres):
        # brute-force argmax of the analytic Gaussian over the grid
        analytic = np.exp(-((rows[:, None] - cy) ** 2 + (cols[None, :] - cx) ** 2) / 18.0)
        a = np.unravel_index(analytic.argmax(), grid)
        b = np.unravel_index(f.argmax(), grid)
        assert a == b
        assert abs(b[0] - cy) <= 1 and abs(b[1] - cx) <= 1


def test_chaotic_blob_equilibrium_driver():
    mg = MackeyGlassParams(x0=1.0)
    frames = chaotic_blob(mg, BlobParams(), 200)
    cols = frames.max(axis=1).argmax(axis=1)
    assert np.all(cols == cols[0])
    rows = frames.max(axis=2).argmax(axis=1)
    assert len(set(rows)) > 5


def test_chaotic_blob_driver_composes():
    mg, blob = MackeyGlassParams(), BlobParams()
    anomalies = [AnomalySpec(700, 50), AnomalySpec(900, 50)]
    frames = chaotic_blob(mg, blob, 1200, anomalies, seed=2, norm_steps=1000, discard=100)
    x = normalize_driver(mackey_glass(mg, 1200, anomalies, seed=2, discard=100), 1000)
    t = np.arange(1200) * blob.dt
    np.testing.assert_array_equal(frames, blob_frames(x, np.cos(t), blob.grid, blob.blob_sigma))


def test_chaotic_blob_bounded():
    frames = chaotic_blob(MackeyGlassParams(), BlobParams(), 2000, seed=0)
    assert np.all(np.isfinite(frames))
    assert frames.min() >= 0.0 and frames.max() <= 1.0
