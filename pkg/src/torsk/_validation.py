"""Input validation helpers shared by the estimators and functional APIs."""
from __future__ import annotations

import numbers

import numpy as np


def check_finite(a: np.ndarray, name: str = "input") -> np.ndarray:
    if not np.all(np.isfinite(a)):
        raise ValueError(f"{name} contains non-finite values")
    return a


def check_series(u, name: str = "series") -> np.ndarray:
    """Return ``u`` as a finite 1D float64 array."""
    a = np.asarray(u, dtype=np.float64)
    if a.ndim != 1:
        raise ValueError(f"{name} must be 1D, got shape {a.shape}")
    if a.size == 0:
        raise ValueError(f"{name} is empty")
    return check_finite(a, name)


def check_frames(X, name: str = "frames") -> np.ndarray:
    """Return ``X`` as a finite float64 ``(T, M, N)`` array.

    A 1D series of length T is promoted to ``(T, 1, 1)`` so scalar series run
    through the same image machinery.
    """
    a = np.asarray(X, dtype=np.float64)
    if a.ndim == 1:
        a = a[:, None, None]
    if a.ndim != 3:
        raise ValueError(f"{name} must have shape (T,) or (T, M, N), got {a.shape}")
    if min(a.shape) < 1:
        raise ValueError(f"{name} has an empty axis: {a.shape}")
    return check_finite(a, name)


def check_frame(u, shape: tuple[int, int] | None = None, name: str = "frame") -> np.ndarray:
    a = np.asarray(u, dtype=np.float64)
    if a.ndim == 0:
        a = a.reshape(1, 1)
    if a.ndim != 2:
        raise ValueError(f"{name} must be 2D, got shape {a.shape}")
    if shape is not None and a.shape != tuple(shape):
        raise ValueError(f"{name} has shape {a.shape}, expected {tuple(shape)}")
    return a


def check_positive_int(value, name: str, minimum: int = 1) -> int:
    if isinstance(value, bool) or not isinstance(value, numbers.Integral):
        raise TypeError(f"{name} must be an integer, got {value!r}")
    if value < minimum:
        raise ValueError(f"{name} must be >= {minimum}, got {value}")
    return int(value)


def as_pair(size) -> tuple[int, int]:
    """Normalize an int or a length-2 sequence to an ``(rows, cols)`` pair."""
    if isinstance(size, numbers.Integral):
        return int(size), int(size)
    rows, cols = size
    return int(rows), int(cols)
