"""Polynomial trend and mean-cycle decomposition, plus simple baseline predictors.

A series ``f`` of length ``n`` is split as ``f = p + c + f~`` with a degree-d
polynomial ``p`` fitted over normalized time ``tau = t / (n - 1)``, a mean
cycle ``c`` and the residual ``f~``.  Non-integer cycle lengths are handled by
resampling onto a finer or coarser grid of ``N = a_C n`` points where the cycle
spans the integer ``L_C = a_C l_C`` samples.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np
import scipy.fft
from sklearn.base import BaseEstimator
from sklearn.exceptions import NotFittedError

from ._validation import check_frames, check_positive_int, check_series

MAX_BACKFIT = 200
BACKFIT_TOL = 1e-14


def _as_fraction(value) -> Fraction:
    if isinstance(value, Fraction):
        return value
    if isinstance(value, str):
        return Fraction(value.strip())
    if isinstance(value, float):
        return Fraction(value).limit_denominator(10**6)
    return Fraction(value)


def _normalized_time(t, n: int) -> np.ndarray:
    return np.asarray(t, dtype=np.float64) / max(n - 1, 1)


def fit_poly_trend(f, d: int) -> np.ndarray:
    """Least-squares coefficients ``b_0 .. b_d`` over ``tau = t / (n - 1)``."""
    f = check_series(f, "f")
    if d < 0:
        raise ValueError(f"degree must be >= 0, got {d}")
    n = f.size
    if n <= d + 1:
        raise ValueError(f"need more than d + 1 = {d + 1} samples, got {n}")
    V = np.polynomial.polynomial.polyvander(_normalized_time(np.arange(n), n), d)
    coeffs, *_ = np.linalg.lstsq(V, f, rcond=None)
    return coeffs


def poly_eval(coeffs, t, n: int) -> np.ndarray:
    """Evaluate a trend fitted on ``n`` samples at (possibly extrapolated) steps ``t``."""
    return np.polynomial.polynomial.polyval(_normalized_time(t, n), coeffs)


def dct_resample(f, new_len: int) -> np.ndarray:
    """Smoothly resample ``f`` to ``new_len`` points through its orthonormal DCT-II.

    Coefficients are zero-padded or truncated and scaled by
    ``sqrt(new_len / n)``, which keeps constants constant.
    """
    f = check_series(f, "f")
    check_positive_int(new_len, "new_len")
    n = f.size
    if new_len == n:
        return f.copy()
    c = scipy.fft.dct(f, type=2, norm="ortho")
    out = np.zeros(new_len)
    k = min(n, new_len)
    out[:k] = c[:k]
    return scipy.fft.idct(out * np.sqrt(new_len / n), type=2, norm="ortho")


def average_cycle(series, L_C: int) -> np.ndarray:
    """Mean over the full cycles of ``series``; a trailing partial cycle is ignored."""
    series = check_series(series, "series")
    check_positive_int(L_C, "L_C")
    n_c = series.size // L_C
    if n_c < 1:
        raise ValueError(f"series of length {series.size} holds no full cycle of length {L_C}")
    return series[: n_c * L_C].reshape(n_c, L_C).mean(axis=0)


def _cycle_at(cycle: np.ndarray, pos) -> np.ndarray:
    """Periodic linear interpolation of ``cycle`` at fractional grid positions."""
    pos = np.asarray(pos, dtype=np.float64)
    L = cycle.size
    base = np.floor(pos)
    frac = pos - base
    i0 = base.astype(np.int64) % L
    return (1.0 - frac) * cycle[i0] + frac * cycle[(i0 + 1) % L]


@dataclass(frozen=True)
class TrendModel:
    """Decomposition ``f = p + c + detrended`` of a training series.

    Attributes
    ----------
    detrended : ndarray (n,)
        Residual with trend and cycle removed, on the original grid.
    poly_coeffs : ndarray (d + 1,)
        Trend coefficients in normalized time.
    mean_cycle : ndarray (L_C,)
        Mean cycle on the resampled grid.
    cycle_len : int
        ``L_C``.
    resample_factor : Fraction
        ``a_C``.
    original_len : int
        ``n``.
    """

    detrended: np.ndarray
    poly_coeffs: np.ndarray
    mean_cycle: np.ndarray
    cycle_len: int
    resample_factor: Fraction
    original_len: int

    @property
    def resampled_len(self) -> int:
        return _resampled_len(self.original_len, self.resample_factor)

    @property
    def degree(self) -> int:
        return self.poly_coeffs.size - 1

    def trend(self, t) -> np.ndarray:
        return poly_eval(self.poly_coeffs, t, self.original_len)

    def cycle_position(self, t) -> np.ndarray:
        """Resampled-grid index of original step ``t`` (fractional in general)."""
        n, N = self.original_len, self.resampled_len
        return (np.asarray(t, dtype=np.float64) + 0.5) * (N / n) - 0.5

    def cycle(self, t) -> np.ndarray:
        """Mean cycle evaluated at original steps ``t``."""
        if self.resampled_len == self.original_len:
            return self.mean_cycle[np.asarray(t, dtype=np.int64) % self.cycle_len]
        return _cycle_at(self.mean_cycle, self.cycle_position(t))


def _resampled_len(n: int, a_c: Fraction) -> int:
    return max(1, int(round(n * a_c)))


def _tiled(cycle: np.ndarray, N: int) -> np.ndarray:
    return cycle[np.arange(N) % cycle.size]


def decompose(f, cycle_len, d: int = 2, resample_factor=None) -> TrendModel:
    """Split ``f`` into polynomial trend, mean cycle and residual.

    ``cycle_len`` (``l_C``) may be rational, e.g. ``Fraction(365, 3)`` or
    ``"365/3"``.  ``resample_factor`` (``a_C``) must make ``a_C * l_C`` an
    integer; it defaults to the denominator of ``l_C``.  The resampled grid
    has ``N = round(a_C n)`` points.

    The trend is fitted first, the cycle is then averaged from the detrended
    series, and the two fits are alternated until they stop changing
    (backfitting).  The first pass is the plain sequential recipe; iterating
    removes the part of the cycle that leaks into the polynomial fit, so a
    signal that is exactly trend plus cycle leaves a zero residual.  The mean
    cycle is kept at zero mean, so constants live in the trend.
    """
    f = check_series(f, "f")
    n = f.size
    l_c = _as_fraction(cycle_len)
    a_c = Fraction(l_c.denominator) if resample_factor is None else _as_fraction(resample_factor)
    if a_c <= 0:
        raise ValueError(f"resample factor must be positive, got {a_c}")
    L = a_c * l_c
    if L.denominator != 1:
        raise ValueError(f"a_C * l_C = {L} is not an integer")
    L_C = int(L)
    if L_C < 2:
        raise ValueError(f"cycle length on the resampled grid must be >= 2, got {L_C}")
    N = _resampled_len(n, a_c)
    if N < 2 * L_C:
        raise ValueError(f"series covers fewer than 2 full cycles ({N} resampled steps, cycle {L_C})")

    same_grid = N == n
    t = np.arange(n)
    cycle_orig = np.zeros(n)
    coeffs = fit_poly_trend(f, d)
    C = np.zeros(L_C)
    scale = max(np.abs(f).max(), 1.0)
    for _ in range(MAX_BACKFIT):
        coeffs = fit_poly_trend(f - cycle_orig, d)
        g = f - poly_eval(coeffs, t, n)
        G = g if same_grid else dct_resample(g, N)
        C_new = average_cycle(G, L_C)
        C_new -= C_new.mean()
        tiled = _tiled(C_new, N)
        new_orig = tiled if same_grid else dct_resample(tiled, n)
        change = np.abs(C_new - C).max()
        C, cycle_orig = C_new, new_orig
        if change <= BACKFIT_TOL * scale:
            break

    coeffs = fit_poly_trend(f - cycle_orig, d)
    resid = f - poly_eval(coeffs, t, n) - cycle_orig
    return TrendModel(resid, coeffs, C, L_C, a_c, n)


def cycle_on_grid(m: TrendModel) -> np.ndarray:
    """The tiled mean cycle resampled onto the original ``n`` steps."""
    tiled = _tiled(m.mean_cycle, m.resampled_len)
    return tiled if m.resampled_len == m.original_len else dct_resample(tiled, m.original_len)


def reconstruct(m: TrendModel) -> np.ndarray:
    """Invert :func:`decompose`.

    The residual is stored on the original grid, so only the cycle passes
    through the resampling and the round trip is exact up to rounding even
    when the resampled grid is coarser than the original one.
    """
    return m.detrended + cycle_on_grid(m) + m.trend(np.arange(m.original_len))


def cycle_predict(m: TrendModel, t0: int, steps: int) -> np.ndarray:
    """Continue trend and cycle from step ``t0`` with the residual frozen at ``t0``.

    Returns the predictions for steps ``t0 + 1 .. t0 + steps``.
    """
    if not 0 <= t0 < m.original_len:
        raise ValueError(f"t0={t0} outside the model timeline [0, {m.original_len})")
    if steps < 0:
        raise ValueError("steps must be >= 0")
    t = np.arange(t0 + 1, t0 + 1 + steps)
    return m.detrended[t0] + m.trend(t) + m.cycle(t)


# --- images ---------------------------------------------------------------


@dataclass(frozen=True)
class ImageTrendModel:
    """Per-DCT-component trend models for the top-left ``k x k`` block.

    ``coefficients`` holds the 2D-DCT of every training frame; components
    outside the block are predicted by holding their value at ``t0``.
    """

    models: tuple
    dct_block: int
    frame_shape: tuple
    coefficients: np.ndarray

    def model(self, i: int, j: int) -> TrendModel:
        return self.models[i][j]


def image_decompose(series, k: int, cycle_len, d: int = 2, resample_factor=None) -> ImageTrendModel:
    frames = check_frames(series)
    _, M, N = frames.shape
    if not 1 <= k <= min(M, N):
        raise ValueError(f"dct block {k} must lie in [1, {min(M, N)}]")
    coeffs = scipy.fft.dctn(frames, type=2, norm="ortho", axes=(1, 2))
    models = tuple(
        tuple(decompose(coeffs[:, i, j], cycle_len, d, resample_factor) for j in range(k)) for i in range(k)
    )
    return ImageTrendModel(models, k, (M, N), coeffs)


def image_cycle_predict(model: ImageTrendModel, t0: int, steps: int) -> np.ndarray:
    k = model.dct_block
    pred = np.repeat(model.coefficients[t0][None], steps, axis=0)
    for i in range(k):
        for j in range(k):
            pred[:, i, j] = cycle_predict(model.models[i][j], t0, steps)
    return scipy.fft.idctn(pred, type=2, norm="ortho", axes=(1, 2))


def trivial_predict(last_train_frame, steps: int) -> np.ndarray:
    """Repeat the last training frame ``steps`` times."""
    if steps < 0:
        raise ValueError("steps must be >= 0")
    frame = np.asarray(last_train_frame, dtype=np.float64)
    return np.repeat(frame[None], steps, axis=0)


# --- estimators -----------------------------------------------------------


class TrivialBaseline(BaseEstimator):
    """Predicts the last training value for every future step."""

    def fit(self, X, y=None):
        X = np.asarray(X, dtype=np.float64)
        if X.shape[0] < 1:
            raise ValueError("need at least one frame")
        self.last_ = X[-1].copy()
        return self

    def predict(self, n_steps: int) -> np.ndarray:
        if not hasattr(self, "last_"):
            raise NotFittedError("TrivialBaseline is not fitted")
        return trivial_predict(self.last_, n_steps)


class CycleBaseline(BaseEstimator):
    """Trend-plus-cycle continuation from the end of the training data.

    Scalar series are decomposed directly; image series component-wise in
    the 2D-DCT domain over the top-left ``dct_block`` block (the whole frame
    when None).
    """

    def __init__(self, cycle_length=100, degree: int = 2, resample_factor=None, dct_block: int | None = None):
        self.cycle_length = cycle_length
        self.degree = degree
        self.resample_factor = resample_factor
        self.dct_block = dct_block

    def fit(self, X, y=None):
        X = np.asarray(X, dtype=np.float64)
        self.n_train_ = X.shape[0]
        if X.ndim == 1:
            self.model_ = decompose(X, self.cycle_length, self.degree, self.resample_factor)
        else:
            frames = check_frames(X)
            k = self.dct_block or min(frames.shape[1:])
            self.model_ = image_decompose(frames, k, self.cycle_length, self.degree, self.resample_factor)
        return self

    def predict(self, n_steps: int) -> np.ndarray:
        if not hasattr(self, "model_"):
            raise NotFittedError("CycleBaseline is not fitted")
        t0 = self.n_train_ - 1
        if isinstance(self.model_, TrendModel):
            return cycle_predict(self.model_, t0, n_steps)
        return image_cycle_predict(self.model_, t0, n_steps)
