"""Scikit-learn style echo state network estimator."""
from __future__ import annotations

from typing import Sequence

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.exceptions import NotFittedError

from ._validation import check_frames, check_positive_int
from .imed import GKernel
from .input_maps import InputMapSpec, InputPipeline
from .reservoir import Reservoir, ReservoirConfig, concat_states, drive, init_reservoir, predict
from .training import DEFAULT_BETA, DEFAULT_RCOND, SolverSpec, train_output


def default_input_maps(frame_shape: tuple[int, int], hidden_size: int = 1000, scale: float = 1.0, seed: int = 0):
    """A single random input matrix, the classic ESN input layer."""
    return [InputMapSpec("RandomMatrix", hidden_size, scale, seed=seed)]


class SpatialESN(BaseEstimator):
    """Echo state network with spatial input maps and a one-shot linear readout.

    ``fit`` drives the reservoir from a zero state over the training frames,
    discards ``l_trans`` transient states, and trains the readout to map the
    concatenated state after frame ``t`` to frame ``t + 1``.  ``predict`` then
    free-runs from the end of the training sequence.

    Parameters
    ----------
    input_maps : sequence of InputMapSpec or dict, optional
        Defaults to one 1000-unit random input matrix.
    spectral_radius, sparsity, bias_scale : float
        Reservoir construction, see :class:`~torsk.reservoir.ReservoirConfig`.
    l_trans : int
        Number of initial states discarded before training.
    solver : {"Tikhonov", "Lstsq", "SvdStable"}
    beta : float
        Tikhonov regularization strength.
    rcond : float
        Relative singular value cutoff of the SVD solver.
    imed_sigma : float, optional
        If set, the readout is trained under the IMED loss with this sigma.
    random_state : int
        Seed for the reservoir and the random input maps' defaults.

    Attributes
    ----------
    reservoir_ : Reservoir
    w_out_ : ndarray of shape (frame_size, state_size)
    state_ : ndarray
        Hidden state after the last training frame.
    last_input_ : ndarray
        The last training frame.
    """

    def __init__(
        self,
        input_maps: Sequence | None = None,
        spectral_radius: float = 1.5,
        sparsity: float = 0.9,
        bias_scale: float = 1.0,
        l_trans: int = 200,
        solver: str = "Tikhonov",
        beta: float = DEFAULT_BETA,
        rcond: float = DEFAULT_RCOND,
        imed_sigma: float | None = None,
        random_state: int = 0,
    ):
        self.input_maps = input_maps
        self.spectral_radius = spectral_radius
        self.sparsity = sparsity
        self.bias_scale = bias_scale
        self.l_trans = l_trans
        self.solver = solver
        self.beta = beta
        self.rcond = rcond
        self.imed_sigma = imed_sigma
        self.random_state = random_state

    def build(self, frame_shape: tuple[int, int]) -> Reservoir:
        """Construct the pipeline and reservoir for frames of ``frame_shape``."""
        specs = self.input_maps
        if specs is None:
            specs = default_input_maps(frame_shape, seed=self.random_state)
        pipeline = InputPipeline(specs, input_shape=frame_shape).fit()
        cfg = ReservoirConfig(self.spectral_radius, self.sparsity, self.bias_scale, self.random_state)
        return init_reservoir(cfg, pipeline)

    @property
    def solver_spec(self) -> SolverSpec:
        return SolverSpec(self.solver, self.beta, self.rcond)

    def fit(self, X, y=None, reservoir: Reservoir | None = None, contributions: np.ndarray | None = None):
        """Train on the frame sequence ``X`` (``(T,)`` or ``(T, M, N)``).

        A prebuilt ``reservoir`` (with matching frame shape) is reused instead
        of drawing a new one, which is how the sliding-window detector
        retrains on every window.  ``contributions`` may hold precomputed
        input-map outputs for ``X``.
        """
        frames = check_frames(X)
        self.series_input_ = np.ndim(X) == 1
        check_positive_int(self.l_trans, "l_trans", minimum=0)
        T = frames.shape[0]
        if T < self.l_trans + 2:
            raise ValueError(f"need at least l_trans + 2 = {self.l_trans + 2} frames, got {T}")
        if reservoir is None:
            reservoir = self.build(frames.shape[1:])
        elif reservoir.frame_shape != frames.shape[1:]:
            raise ValueError(f"reservoir expects frames {reservoir.frame_shape}, got {frames.shape[1:]}")
        self.reservoir_ = reservoir
        if contributions is None:
            contributions = reservoir.pipeline.transform(frames)
        hidden = drive(reservoir, contributions)
        # state after frame t is paired with frame t + 1
        lt = self.l_trans
        states = concat_states(hidden[lt:-1], frames[lt:-1])
        labels = frames[lt + 1:].reshape(T - lt - 1, -1)
        self.imed_ = GKernel(frames.shape[1:], self.imed_sigma) if self.imed_sigma else None
        self.w_out_ = train_output(states, labels, self.solver_spec, self.imed_)
        self.state_ = hidden[-1]
        self.last_input_ = frames[-1]
        self.n_train_samples_ = states.shape[0]
        return self

    def _check_fitted(self):
        if not hasattr(self, "w_out_"):
            raise NotFittedError("SpatialESN is not fitted")

    def predict(self, n_steps: int, on_diverge: str = "raise") -> np.ndarray:
        """Free-run ``n_steps`` frames past the end of the training data."""
        self._check_fitted()
        out = predict(self.reservoir_, self.w_out_, self.state_, self.last_input_, n_steps, on_diverge)
        if self.series_input_:
            return out.reshape(n_steps)
        return out

    def score(self, X_future, y=None) -> float:
        """Negative mean squared error of a free-run over ``len(X_future)`` frames."""
        truth = check_frames(X_future)
        pred = check_frames(self.predict(truth.shape[0]))
        return -float(np.mean((pred - truth) ** 2))
