"""Reservoir construction and dynamics.

The hidden state evolves as ``x' = tanh(W_h x + Win(u) + b_h)`` where
``Win`` is an :class:`~torsk.input_maps.InputPipeline`.  The readout sees the
concatenated state ``[x; u; 1]``; the constant entry carries the output bias.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse
import scipy.sparse.linalg

from ._validation import check_frames
from .input_maps import InputPipeline

DIVERGENCE_LIMIT = 1e6


class PredictionDivergedError(RuntimeError):
    """Free-running prediction produced a non-finite or exploding frame."""

    def __init__(self, step: int, frames: np.ndarray):
        super().__init__(f"prediction diverged at step {step}")
        self.step = step
        self.frames = frames


@dataclass(frozen=True)
class ReservoirConfig:
    spectral_radius: float = 1.5
    sparsity: float = 0.9
    bias_scale: float = 1.0
    seed: int = 0

    def __post_init__(self):
        if not self.spectral_radius > 0:
            raise ValueError(f"spectral_radius must be positive, got {self.spectral_radius}")
        if not 0 <= self.sparsity < 1:
            raise ValueError(f"sparsity must lie in [0, 1), got {self.sparsity}")


def spectral_radius(m) -> float:
    """Largest eigenvalue modulus of a square (sparse or dense) matrix.

    Small matrices use a dense eigensolver.  Larger ones use implicitly
    restarted Arnoldi from a constant start vector, requesting six eigenvalues
    because random matrices crowd their spectrum near the edge and a single
    requested eigenvalue can lock onto the wrong one.
    """
    n = m.shape[0]
    if m.shape != (n, n):
        raise ValueError(f"matrix must be square, got {m.shape}")
    if n <= 64:
        dense = m.toarray() if scipy.sparse.issparse(m) else np.asarray(m)
        return float(np.abs(np.linalg.eigvals(dense)).max())
    op = m.tocsr() if scipy.sparse.issparse(m) else np.asarray(m)
    vals = scipy.sparse.linalg.eigs(
        op, k=6, which="LM", v0=np.ones(n), tol=1e-12, ncv=min(n - 1, 80), return_eigenvectors=False
    )
    return float(np.abs(vals).max())


def scale_spectral_radius(m, rho: float):
    """Return ``m * rho / spectral_radius(m)``."""
    current = spectral_radius(m)
    if not current > 0:
        raise ValueError("matrix has zero spectral radius (nilpotent or zero)")
    return m * (rho / current)


class Reservoir:
    """Fixed recurrent weights, input pipeline and bias.

    Attributes
    ----------
    w_h : scipy.sparse.csr_matrix
    pipeline : InputPipeline
    b_h : ndarray
    config : ReservoirConfig
    """

    def __init__(self, w_h, pipeline: InputPipeline, b_h: np.ndarray, config: ReservoirConfig):
        w_h = scipy.sparse.csr_matrix(w_h, dtype=np.float64)
        n = pipeline.output_dim_
        if w_h.shape != (n, n) or b_h.shape != (n,):
            raise ValueError(f"reservoir weights {w_h.shape} / bias {b_h.shape} do not match pipeline dim {n}")
        w_h.data.setflags(write=False)
        b_h = np.array(b_h, dtype=np.float64)
        b_h.setflags(write=False)
        self.w_h = w_h
        self.pipeline = pipeline
        self.b_h = b_h
        self.config = config

    @property
    def hidden_size(self) -> int:
        return self.w_h.shape[0]

    @property
    def frame_shape(self) -> tuple[int, int]:
        return self.pipeline.input_shape_

    @property
    def input_size(self) -> int:
        m, n = self.frame_shape
        return m * n

    @property
    def state_size(self) -> int:
        """Length of the concatenated state ``[x; u; 1]``."""
        return self.hidden_size + self.input_size + 1

    def __repr__(self):
        return f"Reservoir(hidden_size={self.hidden_size}, frame_shape={self.frame_shape}, config={self.config})"


def init_reservoir(cfg: ReservoirConfig, pipeline: InputPipeline) -> Reservoir:
    """Draw a reservoir sized by ``pipeline.output_dim_``.

    Exactly ``round((1 - sparsity) * n^2)`` entries of ``W_h`` are nonzero,
    drawn U(-1, 1) at seeded random positions, and the matrix is rescaled to
    ``cfg.spectral_radius``.  ``b_h`` is ``bias_scale * U(-1, 1)``.
    """
    if not hasattr(pipeline, "output_dim_"):
        raise ValueError("pipeline must be fitted before building a reservoir")
    n = pipeline.output_dim_
    rng = np.random.default_rng(cfg.seed)
    density = 1.0 - cfg.sparsity
    w = scipy.sparse.random(
        n, n, density=density, format="csr", rng=rng, data_rvs=lambda k: rng.uniform(-1.0, 1.0, k)
    )
    if w.nnz == 0:
        raise ValueError(f"sparsity {cfg.sparsity} leaves no nonzero weights in a {n}x{n} reservoir")
    w = scale_spectral_radius(w, cfg.spectral_radius)
    b_h = cfg.bias_scale * rng.uniform(-1.0, 1.0, n)
    return Reservoir(w, pipeline, b_h, cfg)


def step(r: Reservoir, x: np.ndarray, u) -> np.ndarray:
    """One state update with frame ``u``."""
    u = np.asarray(u, dtype=np.float64)
    if u.ndim == 0:
        u = u.reshape(1, 1)
    return np.tanh(r.w_h @ x + r.pipeline.transform(u) + r.b_h)


def drive(r: Reservoir, contributions: np.ndarray, x0: np.ndarray | None = None) -> np.ndarray:
    """Hidden states after each of a sequence of precomputed input contributions.

    ``contributions[t]`` is ``Win(u_t)``; row ``t`` of the result is the state
    after consuming ``u_t``.
    """
    T = contributions.shape[0]
    out = np.empty((T, r.hidden_size))
    x = np.zeros(r.hidden_size) if x0 is None else np.asarray(x0, dtype=np.float64)
    w_h, b_h = r.w_h, r.b_h
    for t in range(T):
        x = np.tanh(w_h @ x + contributions[t] + b_h)
        out[t] = x
    return out


def concat_states(hidden: np.ndarray, frames: np.ndarray) -> np.ndarray:
    """Rows ``[x_t; u_t; 1]`` from hidden states and their input frames."""
    T = hidden.shape[0]
    return np.hstack([hidden, frames.reshape(T, -1), np.ones((T, 1))])


def harvest(r: Reservoir, inputs, l_trans: int, contributions: np.ndarray | None = None):
    """Run from ``x = 0`` over ``inputs`` and drop the first ``l_trans`` states.

    Returns ``(states, aligned_inputs)``: row ``t`` of ``states`` is
    ``[x; u; 1]`` after consuming ``aligned_inputs[t]``.
    ``contributions`` may pass precomputed ``Win(u_t)`` rows for ``inputs``.
    """
    frames = check_frames(inputs)
    if frames.shape[1:] != r.frame_shape:
        raise ValueError(f"frames {frames.shape[1:]} do not match reservoir input {r.frame_shape}")
    T = frames.shape[0]
    if l_trans < 0 or T <= l_trans:
        raise ValueError(f"series of length {T} is too short for l_trans={l_trans}")
    if contributions is None:
        contributions = r.pipeline.transform(frames)
    hidden = drive(r, contributions)
    aligned = frames[l_trans:]
    return concat_states(hidden[l_trans:], aligned), aligned


def predict(r: Reservoir, w_out: np.ndarray, x: np.ndarray, u_last, steps: int, on_diverge: str = "raise") -> np.ndarray:
    """Free-running prediction of ``steps`` frames.

    ``x`` must be the hidden state after consuming ``u_last``.  Each output
    ``y = w_out @ [x; u; 1]`` is fed back as the next input.  When a frame is
    non-finite or exceeds ``DIVERGENCE_LIMIT`` in magnitude, ``on_diverge``
    decides: ``"raise"`` raises :class:`PredictionDivergedError`, ``"hold"``
    repeats the last finite frame for the remaining steps.
    """
    if steps < 0:
        raise ValueError("steps must be >= 0")
    shape = r.frame_shape
    out = np.empty((steps,) + shape)
    u = np.asarray(u_last, dtype=np.float64).reshape(shape)
    x = np.asarray(x, dtype=np.float64)
    w_x = w_out[:, : r.hidden_size]
    w_u = w_out[:, r.hidden_size: r.hidden_size + r.input_size]
    w_b = w_out[:, -1]
    for k in range(steps):
        if k > 0:
            x = step(r, x, u)
        y = w_x @ x + w_u @ u.ravel() + w_b
        if not np.all(np.isfinite(y)) or np.abs(y).max() > DIVERGENCE_LIMIT:
            if on_diverge == "hold":
                out[k:] = u
                return out
            raise PredictionDivergedError(k, out[:k].copy())
        u = y.reshape(shape)
        out[k] = u
    return out
