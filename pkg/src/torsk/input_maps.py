"""Spatially aware input maps.

Every map is linear in the input frame.  An :class:`InputPipeline` applies an
ordered list of maps, multiplies each flattened output by its scale and
concatenates the blocks; the concatenation length fixes the reservoir size.

All functions accept a single ``(M, N)`` frame or a ``(T, M, N)`` stack and
return ``(D,)`` or ``(T, D)`` respectively.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np
import scipy.fft
from numpy.lib.stride_tricks import sliding_window_view
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.exceptions import NotFittedError

from ._validation import as_pair


class MapKind(str, enum.Enum):
    PIXELS = "Pixels"
    GAUSSIAN_CONV = "GaussianConv"
    RANDOM_CONV = "RandomConv"
    DCT = "DCT"
    GRADIENT = "Gradient"
    RANDOM_MATRIX = "RandomMatrix"

    @classmethod
    def parse(cls, value) -> "MapKind":
        if isinstance(value, cls):
            return value
        key = str(value).replace("_", "").replace(" ", "").replace(".", "").lower()
        aliases = {
            "pixels": cls.PIXELS,
            "gaussianconv": cls.GAUSSIAN_CONV,
            "gaussconv": cls.GAUSSIAN_CONV,
            "randomconv": cls.RANDOM_CONV,
            "dct": cls.DCT,
            "gradient": cls.GRADIENT,
            "randommatrix": cls.RANDOM_MATRIX,
            "randomweights": cls.RANDOM_MATRIX,
        }
        try:
            return aliases[key]
        except KeyError:
            raise ValueError(f"unknown input map kind {value!r}") from None


@dataclass(frozen=True)
class InputMapSpec:
    """One input map entry.

    ``size`` is the output size for Pixels/DCT, the kernel size for the
    convolutions, the output length (int or pair, flattened) for
    RandomMatrix, and is ignored for Gradient.  ``axis`` selects the
    derivative direction of a Gradient map; when None the pipeline assigns
    axes 0, 1, 0, ... to successive Gradient entries.
    """

    kind: MapKind
    size: tuple[int, int] | int = (1, 1)
    scale: float = 1.0
    gaussian_sigma: float | None = None
    seed: int | None = None
    axis: int | None = None

    def __post_init__(self):
        object.__setattr__(self, "kind", MapKind.parse(self.kind))
        if not isinstance(self.size, int):
            object.__setattr__(self, "size", as_pair(self.size))
        if not self.scale > 0:
            raise ValueError(f"scale must be positive, got {self.scale}")
        if self.gaussian_sigma is not None and not self.gaussian_sigma > 0:
            raise ValueError("gaussian_sigma must be positive")
        if self.axis not in (None, 0, 1):
            raise ValueError(f"gradient axis must be 0 or 1, got {self.axis}")

    @property
    def pair(self) -> tuple[int, int]:
        return as_pair(self.size)


# --- individual maps -------------------------------------------------------


def _stack(frame) -> tuple[np.ndarray, bool]:
    a = np.asarray(frame, dtype=np.float64)
    if a.ndim == 2:
        return a[None], True
    if a.ndim == 3:
        return a, False
    raise ValueError(f"expected a (M, N) frame or (T, M, N) stack, got shape {a.shape}")


def _unstack(out: np.ndarray, single: bool) -> np.ndarray:
    out = out.reshape(out.shape[0], -1)
    return out[0] if single else out


def _interp_matrix(n_in: int, n_out: int) -> np.ndarray:
    # pixel-centre aligned linear interpolation weights, shape (n_out, n_in)
    pos = (np.arange(n_out) + 0.5) * (n_in / n_out) - 0.5
    pos = np.clip(pos, 0.0, n_in - 1)
    lo = np.floor(pos).astype(int)
    hi = np.minimum(lo + 1, n_in - 1)
    w = pos - lo
    R = np.zeros((n_out, n_in))
    R[np.arange(n_out), lo] += 1.0 - w
    R[np.arange(n_out), hi] += w
    return R


def resample_pixels(frame, out: tuple[int, int]) -> np.ndarray:
    """Bilinear downsampling to ``out`` with pixel-centre alignment, flattened."""
    f, single = _stack(frame)
    m, n = as_pair(out)
    M, N = f.shape[1:]
    if m > M or n > N:
        raise ValueError(f"resample_pixels cannot upsample {(M, N)} to {(m, n)}")
    if (m, n) == (M, N):
        return _unstack(f.copy(), single)
    Ry, Rx = _interp_matrix(M, m), _interp_matrix(N, n)
    return _unstack(np.einsum("im,tmn,jn->tij", Ry, f, Rx), single)


def gaussian_kernel(size, sigma: float | None = None) -> np.ndarray:
    """Discrete 2D Gaussian on a ``size`` grid, normalized to unit sum.

    ``sigma`` defaults to a quarter of the mean kernel side.
    """
    kr, kc = as_pair(size)
    if kr < 1 or kc < 1:
        raise ValueError("kernel size must be >= 1")
    if sigma is None:
        sigma = (kr + kc) / 8.0
    r = np.arange(kr) - (kr - 1) / 2.0
    c = np.arange(kc) - (kc - 1) / 2.0
    k = np.exp(-(r[:, None] ** 2 + c[None, :] ** 2) / (2.0 * sigma**2))
    return k / k.sum()


def random_kernel(size, seed: int | None) -> np.ndarray:
    """Kernel with i.i.d. U(0, 1) entries normalized to unit sum."""
    k = np.random.default_rng(seed).uniform(0.0, 1.0, as_pair(size))
    return k / k.sum()


def convolve(frame, kernel) -> np.ndarray:
    """Valid-mode 2D convolution (kernel flipped), output ``(M-k+1, N-l+1)`` flattened."""
    f, single = _stack(frame)
    kern = np.asarray(kernel, dtype=np.float64)
    kr, kc = kern.shape
    M, N = f.shape[1:]
    if kr > M or kc > N:
        raise ValueError(f"kernel {kern.shape} larger than frame {(M, N)}")
    windows = sliding_window_view(f, (kr, kc), axis=(1, 2))
    out = np.tensordot(windows, kern[::-1, ::-1], axes=([3, 4], [0, 1]))
    return _unstack(out, single)


def dct2_features(frame, out) -> np.ndarray:
    """Top-left ``out`` block of the orthonormal type-II 2D DCT, flattened."""
    f, single = _stack(frame)
    kr, kc = as_pair(out)
    M, N = f.shape[1:]
    if kr > M or kc > N:
        raise ValueError(f"DCT block {(kr, kc)} exceeds frame {(M, N)}")
    coeffs = scipy.fft.dctn(f, type=2, norm="ortho", axes=(1, 2))
    return _unstack(coeffs[:, :kr, :kc], single)


def gradient_features(frame, axis: int = 0) -> np.ndarray:
    """Central differences along ``axis`` (one-sided at the borders), flattened."""
    f, single = _stack(frame)
    if f.shape[1 + axis] < 2:
        raise ValueError("gradient needs at least 2 pixels along the derivative axis")
    return _unstack(np.gradient(f, axis=1 + axis), single)


def random_matrix(in_dim: int, out_dim: int, seed: int | None) -> np.ndarray:
    return np.random.default_rng(seed).uniform(-1.0, 1.0, (out_dim, in_dim))


def random_projection(frame, out_dim: int, seed: int | None) -> np.ndarray:
    """Dense U(-1, 1) matrix drawn from ``seed`` applied to the flattened frame."""
    f, single = _stack(frame)
    if out_dim < 1:
        raise ValueError("out_dim must be >= 1")
    W = random_matrix(f[0].size, out_dim, seed)
    return _unstack(f.reshape(f.shape[0], -1) @ W.T, single)


# --- pipeline --------------------------------------------------------------


@dataclass
class _Block:
    spec: InputMapSpec
    shape: tuple[int, ...]
    operator: np.ndarray | None = field(default=None, repr=False)

    @property
    def size(self) -> int:
        return int(np.prod(self.shape))


def _out_dim(spec: InputMapSpec) -> int:
    if isinstance(spec.size, int):
        return spec.size
    return spec.size[0] * spec.size[1]


class InputPipeline(TransformerMixin, BaseEstimator):
    """Concatenation of scaled input maps.

    Parameters
    ----------
    specs : sequence of InputMapSpec or dict
        Maps in output order.  Dicts are passed to ``InputMapSpec``.
    input_shape : (M, N), optional
        Frame shape.  When omitted it is taken from the data in :meth:`fit`.

    Attributes
    ----------
    input_shape_ : (M, N)
    output_dim_ : int
        Length of the concatenated feature vector.
    blocks_ : list
        Per-map output shapes and precomputed operators (kernels, matrices).
    """

    def __init__(self, specs: Sequence = (), input_shape: tuple[int, int] | None = None):
        self.specs = specs
        self.input_shape = input_shape

    def fit(self, X=None, y=None):
        if self.input_shape is not None:
            shape = as_pair(self.input_shape)
        elif X is not None:
            a = np.asarray(X)
            if a.ndim not in (2, 3):
                raise ValueError(f"expected frames of shape (M, N) or (T, M, N), got {a.shape}")
            shape = a.shape[-2:]
        else:
            raise ValueError("InputPipeline.fit needs X or input_shape")
        specs = [s if isinstance(s, InputMapSpec) else InputMapSpec(**s) for s in self.specs]
        if not specs:
            raise ValueError("an input pipeline needs at least one map")
        M, N = shape
        blocks = []
        next_axis = 0
        for spec in specs:
            kind = spec.kind
            if kind is MapKind.PIXELS:
                m, n = spec.pair
                if m > M or n > N:
                    raise ValueError(f"Pixels size {(m, n)} exceeds input {(M, N)}")
                blocks.append(_Block(spec, (m, n)))
            elif kind in (MapKind.GAUSSIAN_CONV, MapKind.RANDOM_CONV):
                kr, kc = spec.pair
                if kr > M or kc > N:
                    raise ValueError(f"kernel size {(kr, kc)} exceeds input {(M, N)}")
                if kind is MapKind.GAUSSIAN_CONV:
                    kern = gaussian_kernel((kr, kc), spec.gaussian_sigma)
                else:
                    kern = random_kernel((kr, kc), spec.seed)
                blocks.append(_Block(spec, (M - kr + 1, N - kc + 1), kern))
            elif kind is MapKind.DCT:
                kr, kc = spec.pair
                if kr > M or kc > N:
                    raise ValueError(f"DCT size {(kr, kc)} exceeds input {(M, N)}")
                blocks.append(_Block(spec, (kr, kc)))
            elif kind is MapKind.GRADIENT:
                axis = spec.axis
                if axis is None:
                    axis, next_axis = next_axis, 1 - next_axis
                    spec = replace(spec, axis=axis)
                if (M, N)[axis] < 2:
                    raise ValueError("Gradient needs at least 2 pixels along its axis")
                blocks.append(_Block(spec, (M, N)))
            elif kind is MapKind.RANDOM_MATRIX:
                out = _out_dim(spec)
                blocks.append(_Block(spec, (out,), random_matrix(M * N, out, spec.seed)))
        self.input_shape_ = (M, N)
        self.blocks_ = blocks
        self.output_dim_ = sum(b.size for b in blocks)
        return self

    def _check_fitted(self):
        if not hasattr(self, "blocks_"):
            raise NotFittedError("InputPipeline is not fitted")

    def transform(self, X) -> np.ndarray:
        """Map a frame ``(M, N)`` to ``(D,)`` or a stack ``(T, M, N)`` to ``(T, D)``."""
        self._check_fitted()
        f, single = _stack(X)
        if f.shape[1:] != self.input_shape_:
            raise ValueError(f"frame shape {f.shape[1:]} does not match pipeline input {self.input_shape_}")
        parts = [self._apply_block(b, f) * b.spec.scale for b in self.blocks_]
        out = np.concatenate(parts, axis=1)
        return out[0] if single else out

    def _apply_block(self, block: _Block, f: np.ndarray) -> np.ndarray:
        spec = block.spec
        kind = spec.kind
        if kind is MapKind.PIXELS:
            return resample_pixels(f, block.shape)
        if kind in (MapKind.GAUSSIAN_CONV, MapKind.RANDOM_CONV):
            return convolve(f, block.operator)
        if kind is MapKind.DCT:
            return dct2_features(f, block.shape)
        if kind is MapKind.GRADIENT:
            return gradient_features(f, spec.axis)
        return f.reshape(f.shape[0], -1) @ block.operator.T

    def block_slices(self) -> list[slice]:
        """Positions of the per-map blocks inside the output vector."""
        self._check_fitted()
        out, start = [], 0
        for b in self.blocks_:
            out.append(slice(start, start + b.size))
            start += b.size
        return out


def apply_pipeline(p: InputPipeline, frame) -> np.ndarray:
    return p.transform(frame)


#: The eleven-map table used for the 30x30 image benchmarks.
SPATIAL_TABLE = (
    ("Pixels", (30, 30), 3.0),
    ("GaussianConv", (5, 5), 2.0),
    ("GaussianConv", (10, 10), 1.5),
    ("GaussianConv", (15, 15), 1.0),
    ("RandomConv", (5, 5), 1.0),
    ("RandomConv", (10, 10), 1.0),
    ("RandomConv", (20, 20), 1.0),
    ("DCT", (15, 15), 1.0),
    ("DCT", (15, 15), 1.0),
    ("Gradient", (30, 30), 1.0),
    ("Gradient", (30, 30), 1.0),
)


def table_specs(table=SPATIAL_TABLE, seed: int = 0) -> list[InputMapSpec]:
    """Build specs from ``(kind, size, scale)`` rows; random maps get seeds ``seed, seed+1, ...``."""
    specs = []
    for i, (kind, size, scale) in enumerate(table):
        specs.append(InputMapSpec(kind, size, scale, seed=seed + i))
    return specs
