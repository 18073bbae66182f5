"""IMage Euclidean Distance with a separable Gaussian coordinate kernel.

For an ``M x N`` image flattened row-major, the kernel matrix factors as
``G = Gx kron Gy`` with ``Gx[i, j] = g(i - j | sigma^2)`` over rows and ``Gy``
likewise over columns, where ``g`` is the 1D normal density.  Any function
of ``G`` that goes through its eigendecomposition therefore acts on a frame
``F`` as ``f(Gx) @ F @ f(Gy).T``; nothing of size ``MN x MN`` is formed.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

EIGEN_FLOOR = 1e-14
INVERSE_WARN = 1e-12


class ImedConditioningWarning(RuntimeWarning):
    pass


def gaussian_factor(length: int, sigma: float) -> np.ndarray:
    """1D factor ``g(x_i - x_j | sigma^2)`` on ``length`` unit-spaced coordinates."""
    x = np.arange(length, dtype=np.float64)
    d2 = (x[:, None] - x[None, :]) ** 2
    return np.exp(-d2 / (2.0 * sigma**2)) / np.sqrt(2.0 * np.pi * sigma**2)


@dataclass(frozen=True)
class _AxisFactor:
    matrix: np.ndarray
    eigvals: np.ndarray
    eigvecs: np.ndarray
    sqrt: np.ndarray = field(repr=False)
    inv_sqrt: np.ndarray = field(repr=False)


def _factor(length: int, sigma: float) -> _AxisFactor:
    g = gaussian_factor(length, sigma)
    lam, vecs = np.linalg.eigh(g)
    if lam.min() < -1e-8 * lam.max():
        raise np.linalg.LinAlgError(
            f"Gaussian factor of size {length} with sigma={sigma} is numerically indefinite"
        )
    if lam.min() < EIGEN_FLOOR:
        warnings.warn(
            f"IMED eigenvalues below {EIGEN_FLOOR:g} floored (size {length}, sigma={sigma})",
            ImedConditioningWarning,
            stacklevel=3,
        )
    lam_c = np.maximum(lam, EIGEN_FLOOR)
    if lam_c.min() < INVERSE_WARN:
        warnings.warn(
            f"inverse IMED transform amplifies by up to {1 / np.sqrt(lam_c.min()):.3g}",
            ImedConditioningWarning,
            stacklevel=3,
        )
    sqrt = (vecs * np.sqrt(lam_c)) @ vecs.T
    inv_sqrt = (vecs / np.sqrt(lam_c)) @ vecs.T
    return _AxisFactor(g, lam, vecs, sqrt, inv_sqrt)


class GKernel:
    """Separable IMED kernel for frames of a fixed shape.

    Attributes
    ----------
    sigma : float
        Width of the coordinate Gaussian in pixels.
    shape : (M, N)
    gx, gy : ndarray
        The ``M x M`` row factor and ``N x N`` column factor.
    eigvals_x, eigvals_y : ndarray
        Their eigenvalues; the eigenvalues of ``G`` are all products
        ``eigvals_x[i] * eigvals_y[j]``.
    """

    def __init__(self, shape: tuple[int, int], sigma: float = 1.0):
        if not sigma > 0:
            raise ValueError(f"sigma must be positive, got {sigma}")
        m, n = int(shape[0]), int(shape[1])
        if m < 1 or n < 1:
            raise ValueError(f"invalid frame shape {shape}")
        self.sigma = float(sigma)
        self.shape = (m, n)
        self._x = _factor(m, self.sigma)
        self._y = _factor(n, self.sigma) if n != m else self._x

    gx = property(lambda self: self._x.matrix)
    gy = property(lambda self: self._y.matrix)
    eigvals_x = property(lambda self: self._x.eigvals)
    eigvals_y = property(lambda self: self._y.eigvals)
    eigvecs_x = property(lambda self: self._x.eigvecs)
    eigvecs_y = property(lambda self: self._y.eigvecs)

    def eigenvalues(self) -> np.ndarray:
        """All ``M*N`` eigenvalues of ``G`` in Kronecker order."""
        return np.outer(self._x.eigvals, self._y.eigvals).ravel()

    def _check(self, frames) -> np.ndarray:
        a = np.asarray(frames, dtype=np.float64)
        if a.shape[-2:] != self.shape:
            raise ValueError(f"frame shape {a.shape[-2:]} does not match kernel shape {self.shape}")
        return a

    def _apply(self, ax: np.ndarray, ay: np.ndarray, frames) -> np.ndarray:
        a = self._check(frames)
        return ax @ a @ ay.T

    def apply(self, frames) -> np.ndarray:
        """``G`` applied to one frame or a ``(T, M, N)`` stack."""
        return self._apply(self._x.matrix, self._y.matrix, frames)

    def sqrt_apply(self, frames) -> np.ndarray:
        return self._apply(self._x.sqrt, self._y.sqrt, frames)

    def inv_sqrt_apply(self, frames) -> np.ndarray:
        return self._apply(self._x.inv_sqrt, self._y.inv_sqrt, frames)

    def distance(self, a, b) -> np.ndarray:
        """IMED between frames (or stacks of frames) ``a`` and ``b``."""
        diff = self._check(a) - self._check(b)
        z = self.sqrt_apply(diff)
        return np.sqrt(np.sum(z * z, axis=(-2, -1)))

    def __repr__(self):
        return f"GKernel(shape={self.shape}, sigma={self.sigma})"


def build_gkernel(shape: tuple[int, int], sigma: float = 1.0) -> GKernel:
    return GKernel(shape, sigma)


def g_sqrt_apply(k: GKernel, frame) -> np.ndarray:
    return k.sqrt_apply(frame)


def g_inv_sqrt_apply(k: GKernel, frame) -> np.ndarray:
    return k.inv_sqrt_apply(frame)


def imed_distance(a, b, k: GKernel) -> float:
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise ValueError(f"shape mismatch: {a.shape} vs {b.shape}")
    return float(k.distance(a, b))
