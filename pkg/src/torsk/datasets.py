"""Synthetic chaotic benchmarks: Mackey-Glass series and moving Gaussian blobs."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from ._validation import check_positive_int

#: Magnitude of the seeded perturbation of the constant initial history.
SEED_OFFSET = 1e-6
#: Distance in pixels kept between the mapped blob path and the grid border.
BLOB_MARGIN = 2.0


@dataclass(frozen=True)
class MackeyGlassParams:
    """Constants of dx/dt = beta * x_tau / (1 + x_tau**n) - gamma * x."""

    beta: float = 0.2
    gamma: float = 0.1
    n_exponent: float = 10.0
    tau: float = 17.0
    dt: float = 1.0
    x0: float = 1.2

    def __post_init__(self):
        if self.gamma <= 0:
            raise ValueError(f"gamma must be positive, got {self.gamma}")
        if self.n_exponent <= 0 or self.tau <= 0 or self.dt <= 0:
            raise ValueError("n_exponent, tau and dt must be positive")
        ratio = self.tau / self.dt
        if abs(ratio - round(ratio)) > 1e-9 or round(ratio) < 1:
            raise ValueError(f"tau/dt must be a positive integer, got {ratio}")

    @property
    def delay_steps(self) -> int:
        return int(round(self.tau / self.dt))


@dataclass(frozen=True)
class AnomalySpec:
    """Replace gamma by ``gamma_anomalous`` on steps ``[start_step, start_step + length_steps)``."""

    start_step: int
    length_steps: int
    gamma_anomalous: float = 0.13

    def __post_init__(self):
        if self.start_step < 0:
            raise ValueError(f"start_step must be >= 0, got {self.start_step}")
        if self.length_steps <= 0:
            raise ValueError(f"length_steps must be > 0, got {self.length_steps}")

    @property
    def stop_step(self) -> int:
        return self.start_step + self.length_steps


@dataclass(frozen=True)
class BlobParams:
    grid: tuple[int, int] = (30, 30)
    blob_sigma: float = 3.0
    alpha: float = 0.3
    beta_freq: float = 1.0
    dt: float = 0.5

    def __post_init__(self):
        m, n = self.grid
        if m < 8 or n < 8:
            raise ValueError(f"grid must be at least 8x8, got {self.grid}")
        if self.blob_sigma <= 0:
            raise ValueError("blob_sigma must be positive")
        if self.dt <= 0:
            raise ValueError("dt must be positive")


def gamma_schedule(params: MackeyGlassParams, steps: int, anomalies: Sequence[AnomalySpec] = ()) -> np.ndarray:
    """Per-step gamma used when integrating from step k to k+1."""
    gamma = np.full(steps, float(params.gamma))
    for a in anomalies:
        gamma[a.start_step:min(a.stop_step, steps)] = a.gamma_anomalous
    return gamma


def mackey_glass(
    params: MackeyGlassParams,
    steps: int,
    anomalies: Sequence[AnomalySpec] = (),
    seed: int | None = None,
    discard: int = 0,
) -> np.ndarray:
    """Integrate the Mackey-Glass delay equation with fixed-step RK4.

    The history before t=0 is the constant ``x0``.  Half-step delayed values
    are linearly interpolated from the stored grid.  When ``seed`` is given,
    ``x0`` is offset by ``SEED_OFFSET * U(-1, 1)`` drawn from that seed;
    ``seed=None`` integrates the unperturbed history.

    ``discard`` leading steps are integrated and dropped; anomaly windows are
    indexed relative to the returned series.

    Returns the ``steps`` values x_0, ..., x_{steps-1}.
    """
    check_positive_int(steps, "steps")
    delay = params.delay_steps
    if steps <= delay:
        raise ValueError(f"steps ({steps}) must exceed the delay length ({delay})")
    total = discard + steps
    shifted = [AnomalySpec(a.start_step + discard, a.length_steps, a.gamma_anomalous) for a in anomalies]
    gamma = gamma_schedule(params, total, shifted)

    x0 = float(params.x0)
    if seed is not None:
        x0 += SEED_OFFSET * np.random.default_rng(seed).uniform(-1.0, 1.0)

    beta, n, dt = params.beta, params.n_exponent, params.dt

    def rhs(x, xd, g):
        return beta * xd / (1.0 + xd ** n) - g * x

    # x[k] is stored at buf[k + delay]; the first `delay` slots hold the history
    buf = np.empty(total + delay)
    buf[: delay + 1] = x0
    for k in range(total - 1):
        i = k + delay
        xk = buf[i]
        d0 = buf[i - delay]
        d1 = buf[i - delay + 1]
        dh = 0.5 * (d0 + d1)
        g = gamma[k]
        k1 = rhs(xk, d0, g)
        k2 = rhs(xk + 0.5 * dt * k1, dh, g)
        k3 = rhs(xk + 0.5 * dt * k2, dh, g)
        k4 = rhs(xk + dt * k3, d1, g)
        buf[i + 1] = xk + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    return buf[delay + discard:].copy()


def _map_to_grid(coord, length: int) -> np.ndarray:
    lo, hi = BLOB_MARGIN, length - 1 - BLOB_MARGIN
    return lo + (np.asarray(coord) + 1.0) * 0.5 * (hi - lo)


def blob_frames(x_coord, y_coord, grid: tuple[int, int], blob_sigma: float) -> np.ndarray:
    """Render unit-peak Gaussian blobs centred at coordinates in [-1, 1]^2.

    ``x_coord`` moves the blob along the column axis and ``y_coord`` along the
    row axis.
    """
    m, n = grid
    cx = _map_to_grid(x_coord, n)
    cy = _map_to_grid(y_coord, m)
    rows = np.arange(m, dtype=np.float64)
    cols = np.arange(n, dtype=np.float64)
    gy = np.exp(-((rows[None, :] - cy[:, None]) ** 2) / (2.0 * blob_sigma**2))
    gx = np.exp(-((cols[None, :] - cx[:, None]) ** 2) / (2.0 * blob_sigma**2))
    frames = gy[:, :, None] * gx[:, None, :]
    return frames / frames.max(axis=(1, 2), keepdims=True)


def blob_centers(x_coord, y_coord, grid: tuple[int, int]) -> np.ndarray:
    """Grid ``(row, col)`` positions of the blob centres, shape ``(T, 2)``."""
    return np.stack([_map_to_grid(y_coord, grid[0]), _map_to_grid(x_coord, grid[1])], axis=1)


def lissajous_blob(params: BlobParams, steps: int) -> np.ndarray:
    """Blob moving along x = sin(alpha t), y = cos(beta t) with t = k * dt."""
    check_positive_int(steps, "steps")
    t = np.arange(steps) * params.dt
    return blob_frames(np.sin(params.alpha * t), np.cos(params.beta_freq * t), params.grid, params.blob_sigma)


def normalize_driver(series: np.ndarray, norm_steps: int | None = None) -> np.ndarray:
    """Min-max rescale ``series`` to [-1, 1] using its first ``norm_steps`` values."""
    ref = series if norm_steps is None else series[:norm_steps]
    lo, hi = ref.min(), ref.max()
    if hi - lo <= 0:
        return np.zeros_like(series)
    return 2.0 * (series - lo) / (hi - lo) - 1.0


def chaotic_blob(
    mg: MackeyGlassParams,
    blob: BlobParams,
    steps: int,
    anomalies: Sequence[AnomalySpec] = (),
    seed: int | None = None,
    norm_steps: int | None = None,
    discard: int = 0,
) -> np.ndarray:
    """Blob whose column position follows a Mackey-Glass series.

    The row position is cos(beta_freq * k * dt) as in :func:`lissajous_blob`.
    The driver is min-max normalized over its first ``norm_steps`` values (the
    training portion; all values when None).
    """
    driver = mackey_glass(mg, steps, anomalies, seed=seed, discard=discard)
    x = normalize_driver(driver, norm_steps)
    t = np.arange(steps) * blob.dt
    return blob_frames(x, np.cos(blob.beta_freq * t), blob.grid, blob.blob_sigma)
