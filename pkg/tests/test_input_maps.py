import numpy as np
import pytest
import scipy.fft
from hypothesis import given, strategies as st

from torsk.input_maps import (
    SPATIAL_TABLE,
    InputMapSpec,
    InputPipeline,
    MapKind,
    convolve,
    dct2_features,
    gaussian_kernel,
    gradient_features,
    random_kernel,
    random_projection,
    resample_pixels,
    table_specs,
)


def test_resample_identity_and_constant(rng):
    f = rng.normal(size=(6, 5))
    np.testing.assert_array_equal(resample_pixels(f, (6, 5)), f.ravel())
    np.testing.assert_allclose(resample_pixels(np.full((9, 7), 2.5), (4, 3)), 2.5, atol=1e-14)


def test_resample_block_average():
    f = np.arange(16.0).reshape(4, 4)
    oracle = f.reshape(2, 2, 2, 2).mean(axis=(1, 3)).ravel()
    np.testing.assert_allclose(resample_pixels(f, (2, 2)), oracle, atol=1e-14)


def test_gaussian_kernel_cases():
    np.testing.assert_array_equal(gaussian_kernel(1), [[1.0]])
    np.testing.assert_allclose(gaussian_kernel(3, sigma=1e6), np.full((3, 3), 1 / 9), atol=1e-12)
    k = gaussian_kernel(5, sigma=1.0)
    np.testing.assert_allclose(k, np.rot90(k), atol=1e-15)
    assert abs(k.sum() - 1.0) <= 1e-12


def test_convolve_identity_and_impulse():
    f = np.arange(12.0).reshape(3, 4)
    np.testing.assert_array_equal(convolve(f, [[1.0]]), f.ravel())
    delta = np.zeros((7, 7))
    delta[3, 3] = 1.0
    k = gaussian_kernel(3, 1.0)
    out = convolve(delta, k).reshape(5, 5)
    np.testing.assert_allclose(out[1:4, 1:4], k[::-1, ::-1], atol=1e-15)
    assert out[0].sum() == 0 and out[:, 4].sum() == 0


def test_convolve_brute_force(rng):
    f = rng.normal(size=(6, 6))
    k = rng.normal(size=(3, 3))
    oracle = np.zeros((4, 4))
    for i in range(4):
        for j in range(4):
            for a in range(3):
                for b in range(3):
                    oracle[i, j] += f[i + a, j + b] * k[2 - a, 2 - b]
    np.testing.assert_allclose(convolve(f, k), oracle.ravel(), atol=1e-12)


def test_random_kernel_normalized():
    k = random_kernel((4, 5), seed=1)
    assert k.shape == (4, 5) and abs(k.sum() - 1) < 1e-12 and k.min() >= 0
    np.testing.assert_array_equal(k, random_kernel((4, 5), seed=1))


def test_dct_cases(rng):
    c = dct2_features(np.full((4, 6), 3.0), (4, 6))
    assert abs(c[0] - 3.0 * np.sqrt(24)) < 1e-12
    np.testing.assert_allclose(c[1:], 0.0, atol=1e-12)
    assert not np.any(dct2_features(np.zeros((5, 5)), (3, 3)))
    f = rng.normal(size=(8, 8))
    coeffs = dct2_features(f, (8, 8)).reshape(8, 8)
    np.testing.assert_allclose(scipy.fft.idctn(coeffs, norm="ortho"), f, atol=1e-10)


def test_dct_matches_matrix_oracle(rng):
    f = rng.normal(size=(5, 7))

    def basis(n):
        k, i = np.meshgrid(np.arange(n), np.arange(n), indexing="ij")
        B = np.cos(np.pi * (2 * i + 1) * k / (2 * n)) * np.sqrt(2 / n)
        B[0] /= np.sqrt(2)
        return B

    oracle = basis(5) @ f @ basis(7).T
    np.testing.assert_allclose(dct2_features(f, (3, 4)), oracle[:3, :4].ravel(), atol=1e-12)


def test_gradient_cases(rng):
    assert not np.any(gradient_features(np.full((4, 4), 2.0), 1))
    ramp = np.tile(0.7 * np.arange(6.0), (3, 1))
    np.testing.assert_allclose(gradient_features(ramp, axis=1), 0.7, atol=1e-14)
    f = rng.normal(size=(5, 5))
    oracle = np.empty_like(f)
    oracle[1:-1] = (f[2:] - f[:-2]) / 2
    oracle[0] = f[1] - f[0]
    oracle[-1] = f[-1] - f[-2]
    np.testing.assert_allclose(gradient_features(f, 0), oracle.ravel(), atol=1e-12)


def test_random_projection(rng):
    assert not np.any(random_projection(np.zeros((3, 3)), 4, 0))
    u, v = rng.normal(size=(2, 4, 4))
    np.testing.assert_array_equal(random_projection(u, 6, 5), random_projection(u, 6, 5))
    lhs = random_projection(2.0 * u - 0.5 * v, 6, 5)
    rhs = 2.0 * random_projection(u, 6, 5) - 0.5 * random_projection(v, 6, 5)
    np.testing.assert_allclose(lhs, rhs, atol=1e-12)


def test_spatial_table_dimension():
    p = InputPipeline(table_specs(), input_shape=(30, 30)).fit()
    expected = 900 + 26**2 + 21**2 + 16**2 + 26**2 + 21**2 + 11**2 + 2 * 225 + 2 * 900
    assert p.output_dim_ == expected == 5761
    assert [s.stop - s.start for s in p.block_slices()][0] == 900
    assert [b.spec.axis for b in p.blocks_ if b.spec.kind is MapKind.GRADIENT] == [0, 1]
    assert len(SPATIAL_TABLE) == 11


def test_single_pixels_map(rng):
    f = rng.normal(size=(4, 5))
    p = InputPipeline([InputMapSpec("Pixels", (4, 5))]).fit(f)
    np.testing.assert_array_equal(p.transform(f), f.ravel())


mixed_specs = [
    InputMapSpec("Pixels", (3, 3), 3.0),
    InputMapSpec("GaussianConv", (3, 3), 2.0),
    InputMapSpec("RandomConv", (2, 2), 1.0, seed=4),
    InputMapSpec("DCT", (4, 4), 1.0),
    InputMapSpec("Gradient", (6, 6)),
    InputMapSpec("Gradient", (6, 6)),
    InputMapSpec("RandomMatrix", 7, 0.5, seed=2),
]


@given(st.integers(0, 2**31), st.floats(-3, 3), st.floats(-3, 3))
def test_pipeline_linear(seed, a, b):
    r = np.random.default_rng(seed)
    u, v = r.normal(size=(2, 6, 6))
    p = InputPipeline(mixed_specs, input_shape=(6, 6)).fit()
    lhs = p.transform(a * u + b * v)
    rhs = a * p.transform(u) + b * p.transform(v)
    np.testing.assert_allclose(lhs, rhs, atol=1e-10)


@given(st.integers(0, len(mixed_specs) - 1), st.sampled_from([0.5, 2.0, 4.0]))
def test_scaling_one_block(i, c):
    f = np.random.default_rng(i).normal(size=(6, 6))
    scaled = list(mixed_specs)
    scaled[i] = InputMapSpec(**{**mixed_specs[i].__dict__, "scale": mixed_specs[i].scale * c})
    base = InputPipeline(mixed_specs, input_shape=(6, 6)).fit()
    new = InputPipeline(scaled, input_shape=(6, 6)).fit()
    sl = base.block_slices()
    x, y = base.transform(f), new.transform(f)
    np.testing.assert_array_equal(y[sl[i]], c * x[sl[i]])
    rest = np.ones(x.size, bool)
    rest[sl[i]] = False
    np.testing.assert_array_equal(y[rest], x[rest])


def test_doubling_all_scales(rng):
    f = rng.normal(size=(6, 6))
    doubled = [InputMapSpec(**{**s.__dict__, "scale": 2 * s.scale}) for s in mixed_specs]
    a = InputPipeline(mixed_specs, input_shape=(6, 6)).fit().transform(f)
    b = InputPipeline(doubled, input_shape=(6, 6)).fit().transform(f)
    np.testing.assert_array_equal(b, 2 * a)


def test_stack_matches_frames(rng):
    X = rng.normal(size=(4, 6, 6))
    p = InputPipeline(mixed_specs).fit(X)
    out = p.transform(X)
    assert out.shape == (4, p.output_dim_)
    for t in range(4):
        np.testing.assert_allclose(out[t], p.transform(X[t]), atol=1e-13)


def test_invalid_specs():
    with pytest.raises(ValueError):
        InputMapSpec("Pixels", (2, 2), scale=0.0)
    with pytest.raises(ValueError):
        InputMapSpec("Sobel")
    with pytest.raises(ValueError):
        InputPipeline([InputMapSpec("DCT", (7, 7))], input_shape=(6, 6)).fit()
    with pytest.raises(ValueError):
        InputPipeline([InputMapSpec("GaussianConv", (9, 2))], input_shape=(6, 6)).fit()
    p = InputPipeline([InputMapSpec("Pixels", (2, 2))], input_shape=(4, 4)).fit()
    with pytest.raises(ValueError):
        p.transform(np.zeros((3, 3)))
