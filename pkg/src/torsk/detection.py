"""Prediction-error anomaly detection with sliding-window retraining."""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view
from scipy.special import erf
from sklearn.base import BaseEstimator

from ._validation import check_frames
from .esn import SpatialESN
from .imed import GKernel
from .input_maps import InputPipeline
from .reservoir import PredictionDivergedError, ReservoirConfig, init_reservoir
from .training import SolverSpec

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class WindowPlan:
    l_trans: int = 200
    l_train: int = 2000
    l_pred: int = 25
    stride: int | None = None

    def __post_init__(self):
        if self.stride is None:
            object.__setattr__(self, "stride", self.l_pred)
        for name in ("l_trans", "l_train", "l_pred", "stride"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be positive, got {getattr(self, name)}")

    @property
    def span(self) -> int:
        return self.l_trans + self.l_train + self.l_pred

    def starts(self, length: int) -> range:
        """Start indices of all windows that fit into ``length`` frames."""
        if length < self.span:
            return range(0)
        count = (length - self.span) // self.stride + 1
        return range(0, count * self.stride, self.stride)


@dataclass(frozen=True)
class NormalityConfig:
    m: int = 100
    n_small: int = 5
    threshold: float = 1e-3

    def __post_init__(self):
        if self.m < 1 or self.n_small < 1:
            raise ValueError("window sizes must be positive")
        if not self.n_small < self.m / 2:
            raise ValueError(f"n_small ({self.n_small}) must be below m/2 ({self.m / 2})")
        if not 0 < self.threshold < 1:
            raise ValueError(f"threshold must lie in (0, 1), got {self.threshold}")


@dataclass
class DetectionResult:
    """Output of :func:`sliding_detect`.

    ``errors`` and ``predictions`` hold NaN at steps no window predicted.
    ``scores`` is 1 wherever no full history/local window was available.
    """

    errors: np.ndarray
    scores: np.ndarray
    flags: np.ndarray
    window_log: list = field(default_factory=list)
    predictions: np.ndarray | None = None
    pixel_scores: np.ndarray | None = None
    count_map: np.ndarray | None = None

    @property
    def covered(self) -> np.ndarray:
        return ~np.isnan(self.errors)

    @property
    def flagged_steps(self) -> np.ndarray:
        return np.flatnonzero(self.flags)


# --- errors and scores -----------------------------------------------------


def error_sequence(pred, truth, metric: str = "euclidean", sigma: float = 1.0, kernel: GKernel | None = None) -> np.ndarray:
    """Per-step distance between predicted and true frames.

    ``metric`` is ``"euclidean"`` (the flat 2-norm; the absolute error for
    scalar series) or ``"imed"``.
    """
    p = check_frames(pred, "pred")
    d = check_frames(truth, "truth")
    if p.shape != d.shape:
        raise ValueError(f"shape mismatch: {p.shape} vs {d.shape}")
    metric = metric.lower()
    if metric == "euclidean":
        return np.sqrt(np.sum((p - d) ** 2, axis=(1, 2)))
    if metric == "imed":
        k = kernel if kernel is not None else GKernel(p.shape[1:], sigma)
        return k.distance(p, d)
    raise ValueError(f"unknown metric {metric!r}")


def normality_score(E, m: int = 100, n_small: int = 5) -> np.ndarray:
    """Normality score of an error sequence (time along axis 0).

    For each step t with the history ``E[t-m .. t]`` and the local window
    ``E[t+1 .. t+n_small]`` available, with ``mu_m, sigma_m`` the mean and
    (population) standard deviation of the history and ``mu_n`` the local
    mean::

        score = 1 - erf(max(0, mu_n - mu_m) / (sqrt(2) * sigma_m))

    A zero ``sigma_m`` gives 1 when ``mu_n <= mu_m`` and 0 otherwise.  Steps
    without full windows score 1.
    """
    E = np.asarray(E, dtype=np.float64)
    T = E.shape[0]
    scores = np.ones_like(E)
    lo, hi = m, T - n_small
    if hi <= lo:
        return scores
    hist = sliding_window_view(E, m + 1, axis=0)[: hi - lo]
    local = sliding_window_view(E[m + 1:], n_small, axis=0)[: hi - lo]
    mu_m = hist.mean(axis=-1)
    sd_m = hist.std(axis=-1)
    mu_n = local.mean(axis=-1)
    excess = np.maximum(0.0, mu_n - mu_m)
    with np.errstate(divide="ignore", invalid="ignore"):
        z = excess / (math.sqrt(2.0) * sd_m)
    s = 1.0 - erf(z)
    degenerate = sd_m == 0
    s = np.where(degenerate, np.where(mu_n <= mu_m, 1.0, 0.0), s)
    scores[lo:hi] = s
    return scores


def threshold_flags(scores, threshold: float = 1e-3) -> np.ndarray:
    return np.asarray(scores) < threshold


def pixel_normality(pred, truth, cfg: NormalityConfig = NormalityConfig()) -> np.ndarray:
    """Per-pixel normality scores from absolute errors, shape ``(T, M, N)``."""
    p = check_frames(pred, "pred")
    d = check_frames(truth, "truth")
    if p.shape != d.shape:
        raise ValueError(f"shape mismatch: {p.shape} vs {d.shape}")
    return normality_score(np.abs(p - d), cfg.m, cfg.n_small)


def anomaly_count_map(pixel_flags) -> np.ndarray:
    return np.asarray(pixel_flags, dtype=bool).sum(axis=0).astype(np.int64)


def _compact_scores(errors: np.ndarray, cfg: NormalityConfig) -> np.ndarray:
    # score only the covered steps, as one contiguous sequence
    covered = ~np.isnan(errors.reshape(errors.shape[0], -1)[:, 0])
    scores = np.ones_like(errors)
    if covered.any():
        scores[covered] = normality_score(errors[covered], cfg.m, cfg.n_small)
    return scores


# --- sliding windows -------------------------------------------------------


def sliding_detect(
    series,
    reservoir_cfg: ReservoirConfig,
    pipeline,
    solver: SolverSpec = SolverSpec(),
    plan: WindowPlan = WindowPlan(),
    metric: str = "euclidean",
    norm_cfg: NormalityConfig = NormalityConfig(),
    imed_sigma: float = 1.0,
    imed_loss: bool = False,
    pixel_scores: bool | None = None,
    progress=None,
) -> DetectionResult:
    """Online ESN detection over a scalar or image series.

    Every window trains the readout on ``l_trans + l_train`` frames (the first
    ``l_trans`` states are transients) and free-runs ``l_pred`` frames right
    after them; prediction errors, their normality scores and the threshold
    flags are assembled over the timeline.  The reservoir itself is drawn
    once and shared by all windows.  Steps predicted by several windows (when
    ``stride < l_pred``) get the mean of their errors.

    A diverging prediction holds its last finite frame for the rest of its
    window; the window is marked in ``window_log``.

    ``pipeline`` is an :class:`InputPipeline` or a list of map specs.
    ``pixel_scores`` (default: on for image series) adds per-pixel scores
    and the anomaly count map.
    """
    frames = check_frames(series)
    T, M, N = frames.shape
    if T < plan.span:
        raise ValueError(f"series of length {T} is shorter than one window ({plan.span})")
    if not isinstance(pipeline, InputPipeline):
        pipeline = InputPipeline(pipeline)
    pipeline = InputPipeline(pipeline.specs, input_shape=(M, N)).fit()
    reservoir = init_reservoir(reservoir_cfg, pipeline)
    contributions = pipeline.transform(frames)
    kernel = GKernel((M, N), imed_sigma) if (metric.lower() == "imed" or imed_loss) else None

    esn = SpatialESN(
        input_maps=pipeline.specs,
        spectral_radius=reservoir_cfg.spectral_radius,
        sparsity=reservoir_cfg.sparsity,
        bias_scale=reservoir_cfg.bias_scale,
        l_trans=plan.l_trans,
        solver=solver.method.value,
        beta=solver.beta,
        rcond=solver.svd_rcond,
        imed_sigma=imed_sigma if imed_loss else None,
        random_state=reservoir_cfg.seed,
    )
    L = plan.l_trans + plan.l_train
    err_sum = np.zeros(T)
    pred_sum = np.zeros((T, M, N))
    count = np.zeros(T, dtype=np.int64)
    window_log = []
    starts = plan.starts(T)
    for i, s in enumerate(starts):
        esn.fit(frames[s:s + L], reservoir=reservoir, contributions=contributions[s:s + L])
        diverged = False
        try:
            pred = esn.predict(plan.l_pred)
        except PredictionDivergedError as err:
            diverged = True
            last = err.frames[-1] if err.step > 0 else frames[s + L - 1]
            pred = np.empty((plan.l_pred, M, N))
            pred[: err.step] = err.frames
            pred[err.step:] = last
            log.warning("window %d: prediction diverged at step %d", i, err.step)
        pred = check_frames(pred)
        p0, p1 = s + L, s + L + plan.l_pred
        e = error_sequence(pred, frames[p0:p1], metric, kernel=kernel)
        err_sum[p0:p1] += e
        pred_sum[p0:p1] += pred
        count[p0:p1] += 1
        window_log.append({"window": i, "train_start": s, "train_end": s + L, "pred_start": p0,
                           "pred_end": p1, "diverged": diverged})
        if progress is not None:
            progress(i + 1, len(starts))

    covered = count > 0
    errors = np.full(T, np.nan)
    errors[covered] = err_sum[covered] / count[covered]
    predictions = np.full((T, M, N), np.nan)
    predictions[covered] = pred_sum[covered] / count[covered, None, None]
    scores = _compact_scores(errors, norm_cfg)
    result = DetectionResult(errors, scores, threshold_flags(scores, norm_cfg.threshold), window_log, predictions)

    if pixel_scores is None:
        pixel_scores = M * N > 1
    if pixel_scores:
        pix = np.ones((T, M, N))
        pix[covered] = pixel_normality(predictions[covered], frames[covered], norm_cfg)
        result.pixel_scores = pix
        result.count_map = anomaly_count_map(threshold_flags(pix, norm_cfg.threshold))
    if frames.shape[1:] == (1, 1) and np.ndim(series) == 1:
        result.predictions = predictions[:, 0, 0]
    return result


def baseline_detect(series, predictor, plan: WindowPlan = WindowPlan(), metric: str = "euclidean",
                    norm_cfg: NormalityConfig = NormalityConfig(), imed_sigma: float = 1.0) -> DetectionResult:
    """Sliding-window detection with any ``fit(X) / predict(steps)`` predictor.

    Each window fits ``predictor`` on its ``l_trans + l_train`` frames, so the
    error timeline lines up with :func:`sliding_detect`.
    """
    frames = check_frames(series)
    T, M, N = frames.shape
    L = plan.l_trans + plan.l_train
    kernel = GKernel((M, N), imed_sigma) if metric.lower() == "imed" else None
    errors = np.full(T, np.nan)
    predictions = np.full((T, M, N), np.nan)
    window_log = []
    for i, s in enumerate(plan.starts(T)):
        predictor.fit(series[s:s + L])
        pred = check_frames(predictor.predict(plan.l_pred))
        p0, p1 = s + L, s + L + plan.l_pred
        errors[p0:p1] = error_sequence(pred, frames[p0:p1], metric, kernel=kernel)
        predictions[p0:p1] = pred
        window_log.append({"window": i, "train_start": s, "train_end": s + L, "pred_start": p0,
                           "pred_end": p1, "diverged": False})
    scores = _compact_scores(errors, norm_cfg)
    return DetectionResult(errors, scores, threshold_flags(scores, norm_cfg.threshold), window_log, predictions)


class ESNAnomalyDetector(BaseEstimator):
    """Estimator wrapper around :func:`sliding_detect`.

    ``fit`` runs the full online detection over ``X`` and stores the
    :class:`DetectionResult` as ``result_``; ``fit_predict`` returns the
    boolean flags and ``score_samples`` the normality scores.
    """

    def __init__(
        self,
        input_maps: Sequence | None = None,
        spectral_radius: float = 1.5,
        sparsity: float = 0.9,
        bias_scale: float = 1.0,
        solver: str = "Tikhonov",
        beta: float = 1e-2,
        l_trans: int = 200,
        l_train: int = 2000,
        l_pred: int = 25,
        stride: int | None = None,
        metric: str = "euclidean",
        imed_sigma: float = 1.0,
        m: int = 100,
        n_small: int = 5,
        threshold: float = 1e-3,
        random_state: int = 0,
    ):
        self.input_maps = input_maps
        self.spectral_radius = spectral_radius
        self.sparsity = sparsity
        self.bias_scale = bias_scale
        self.solver = solver
        self.beta = beta
        self.l_trans = l_trans
        self.l_train = l_train
        self.l_pred = l_pred
        self.stride = stride
        self.metric = metric
        self.imed_sigma = imed_sigma
        self.m = m
        self.n_small = n_small
        self.threshold = threshold
        self.random_state = random_state

    def fit(self, X, y=None):
        frames = check_frames(X)
        specs = self.input_maps
        if specs is None:
            from .esn import default_input_maps

            specs = default_input_maps(frames.shape[1:], seed=self.random_state)
        self.result_ = sliding_detect(
            X,
            ReservoirConfig(self.spectral_radius, self.sparsity, self.bias_scale, self.random_state),
            specs,
            SolverSpec(self.solver, self.beta),
            WindowPlan(self.l_trans, self.l_train, self.l_pred, self.stride),
            self.metric,
            NormalityConfig(self.m, self.n_small, self.threshold),
            imed_sigma=self.imed_sigma,
        )
        return self

    def fit_predict(self, X, y=None) -> np.ndarray:
        return self.fit(X).result_.flags

    def score_samples(self, X=None) -> np.ndarray:
        return self.result_.scores
