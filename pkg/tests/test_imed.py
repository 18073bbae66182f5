import numpy as np
import pytest
import scipy.linalg
from hypothesis import given, strategies as st

from torsk.imed import GKernel, g_inv_sqrt_apply, g_sqrt_apply, gaussian_factor, imed_distance


def _dense_G(m, n, sigma):
    # G over row-major pixel coordinates, built pixel pair by pixel pair
    coords = [(i, j) for i in range(m) for j in range(n)]
    G = np.empty((m * n, m * n))
    for a, (i, j) in enumerate(coords):
        for b, (k, l) in enumerate(coords):
            d2 = (i - k) ** 2 + (j - l) ** 2
            G[a, b] = np.exp(-d2 / (2 * sigma**2)) / (2 * np.pi * sigma**2)
    return G


def _dense_sqrtm(G):
    lam, V = np.linalg.eigh(G)
    return (V * np.sqrt(lam)) @ V.T


def test_one_pixel_kernel():
    k = GKernel((1, 1), 0.8)
    np.testing.assert_allclose(k.eigenvalues(), [1 / (2 * np.pi * 0.64)], rtol=1e-14)


def test_interior_row_sums_equal():
    g = gaussian_factor(40, 1.5)
    sums = g.sum(axis=1)[10:30]
    np.testing.assert_allclose(sums, sums[0], rtol=1e-12)


def test_eigenvalues_match_dense():
    k = GKernel((4, 3), 1.0)
    dense = np.sort(np.linalg.eigvalsh(_dense_G(4, 3, 1.0)))
    np.testing.assert_allclose(np.sort(k.eigenvalues()), dense, atol=1e-10)


SHAPES = [(m, n) for m in range(1, 9) for n in range(1, 9)]


@pytest.mark.parametrize("shape", SHAPES)
def test_kronecker_equals_dense(shape):
    m, n = shape
    r = np.random.default_rng(m * 10 + n)
    sigma = 1.0
    k = GKernel(shape, sigma)
    G = _dense_G(m, n, sigma)
    R = _dense_sqrtm(G)
    f = r.normal(size=shape)
    v = f.ravel()
    def rel(a, b):
        return np.linalg.norm(a - b) / np.linalg.norm(b)
    assert rel(k.apply(f).ravel(), G @ v) <= 1e-10
    assert rel(k.sqrt_apply(f).ravel(), R @ v) <= 1e-10
    assert rel(k.inv_sqrt_apply(f).ravel(), np.linalg.solve(R, v)) <= 1e-8


def test_sqrt_twice_is_G(rng):
    k = GKernel((5, 7), 1.3)
    f = rng.normal(size=(5, 7))
    np.testing.assert_allclose(k.sqrt_apply(k.sqrt_apply(f)), k.gx @ f @ k.gy.T, atol=1e-10)


def test_sqrtm_against_scipy():
    k = GKernel((4, 3), 1.0)
    R = np.real(scipy.linalg.sqrtm(_dense_G(4, 3, 1.0)))
    f = np.arange(12.0).reshape(4, 3)
    np.testing.assert_allclose(g_sqrt_apply(k, f).ravel(), R @ f.ravel(), atol=1e-10)


def test_zero_and_inverse(rng):
    k = GKernel((6, 6), 1.0)
    assert not np.any(k.sqrt_apply(np.zeros((6, 6))))
    assert not np.any(g_inv_sqrt_apply(k, np.zeros((6, 6))))
    f = rng.normal(size=(6, 6))
    np.testing.assert_allclose(g_inv_sqrt_apply(k, g_sqrt_apply(k, f)), f, atol=1e-8)


def test_single_pixel_difference():
    sigma = 1.2
    k = GKernel((5, 5), sigma)
    a = np.zeros((5, 5))
    b = a.copy()
    b[2, 3] = 1.0
    assert abs(imed_distance(a, b, k) - np.sqrt(1 / (2 * np.pi * sigma**2))) <= 1e-12
    assert imed_distance(a, a, k) == 0.0


def test_distance_dense_oracle(rng):
    k = GKernel((5, 5), 1.0)
    G = _dense_G(5, 5, 1.0)
    a, b = rng.normal(size=(2, 5, 5))
    z = (a - b).ravel()
    assert abs(imed_distance(a, b, k) - np.sqrt(z @ G @ z)) <= 1e-10


@given(st.integers(0, 2**31))
def test_metric_axioms(seed):
    r = np.random.default_rng(seed)
    k = GKernel((4, 5), 1.0)
    a, b, c = r.normal(size=(3, 4, 5))
    dab, dba = imed_distance(a, b, k), imed_distance(b, a, k)
    assert dab >= 0
    assert abs(dab - dba) <= 1e-12
    assert imed_distance(a, a, k) <= 1e-12
    assert dab <= imed_distance(a, c, k) + imed_distance(c, b, k) + 1e-10


@given(st.integers(0, 2**31))
def test_norm_identity(seed):
    r = np.random.default_rng(seed)
    k = GKernel((4, 4), 0.9)
    z = r.normal(size=(4, 4))
    zg = np.sum(z * k.apply(z))
    s = k.sqrt_apply(z)
    assert abs(zg - np.sum(s * s)) <= 1e-10 * max(1.0, zg)


def test_stack_distance(rng):
    k = GKernel((3, 4), 1.0)
    A, B = rng.normal(size=(2, 6, 3, 4))
    d = k.distance(A, B)
    assert d.shape == (6,)
    for t in range(6):
        assert abs(d[t] - imed_distance(A[t], B[t], k)) < 1e-14


def test_validation():
    with pytest.raises(ValueError):
        GKernel((3, 3), 0.0)
    with pytest.raises(ValueError):
        imed_distance(np.zeros((3, 3)), np.zeros((3, 4)), GKernel((3, 3)))
