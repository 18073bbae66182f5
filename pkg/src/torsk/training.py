"""One-shot optimization of the linear output layer.

All solvers take sample-major arrays: ``X`` is ``(n_samples, n_features)``
(the concatenated states, one per row) and ``D`` is ``(n_samples, n_out)``
(the labels).  They return ``W`` of shape ``(n_out, n_features)`` so that
``X @ W.T`` approximates ``D``.  This is the transpose of the column-major
system ``W X ~ D``.

None of the solvers forms ``X^T X``; every route factorizes the rectangular
(or augmented rectangular) matrix directly.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np
import scipy.linalg

DEFAULT_BETA = 1e-2
DEFAULT_RCOND = float(np.sqrt(np.finfo(np.float64).eps))


class SolverMethod(str, enum.Enum):
    LSTSQ = "Lstsq"
    TIKHONOV = "Tikhonov"
    SVD_STABLE = "SvdStable"

    @classmethod
    def parse(cls, value) -> "SolverMethod":
        if isinstance(value, cls):
            return value
        key = str(value).replace("_", "").replace("-", "").lower()
        for m in cls:
            if m.value.lower() == key:
                return m
        raise ValueError(f"unknown solver method {value!r}")


@dataclass(frozen=True)
class SolverSpec:
    method: SolverMethod = SolverMethod.TIKHONOV
    beta: float = DEFAULT_BETA
    svd_rcond: float = DEFAULT_RCOND

    def __post_init__(self):
        object.__setattr__(self, "method", SolverMethod.parse(self.method))
        if self.beta < 0:
            raise ValueError(f"beta must be >= 0, got {self.beta}")
        if not 0 < self.svd_rcond < 1:
            raise ValueError(f"svd_rcond must lie in (0, 1), got {self.svd_rcond}")


def _prepare(X, D):
    X = np.asarray(X, dtype=np.float64)
    D = np.asarray(D, dtype=np.float64)
    vector = D.ndim == 1
    if vector:
        D = D[:, None]
    if X.ndim != 2 or D.ndim != 2 or X.shape[0] != D.shape[0]:
        raise ValueError(f"misaligned system: X {X.shape}, D {D.shape}")
    if X.shape[0] < 1:
        raise ValueError("need at least one sample")
    return X, D, vector


def _finish(Wt: np.ndarray, vector: bool) -> np.ndarray:
    # a transposed view; image readouts are large enough that a copy matters
    W = Wt.T
    if not np.all(np.isfinite(W)):
        raise FloatingPointError("solver produced non-finite output weights")
    return W[0] if vector else W


def solve_lstsq(X, D) -> np.ndarray:
    """Minimize ||X W^T - D||_F with a pivoted QR (complete orthogonal) factorization.

    Rank-deficient systems get the minimum-norm solution.
    """
    X, D, vector = _prepare(X, D)
    if not np.any(X):
        raise ValueError("state matrix is all zero")
    Wt, *_ = scipy.linalg.lstsq(X, D, lapack_driver="gelsy", check_finite=False)
    return _finish(Wt, vector)


def solve_tikhonov(X, D, beta: float = DEFAULT_BETA) -> np.ndarray:
    """Minimize ||X W^T - D||^2 + beta^2 ||W||^2 through the augmented system.

    When there are at least as many samples as features the stacked matrix
    ``[X; beta I]`` is QR-factorized.  With more features than samples, ``X^T``
    is first reduced to its ``R`` factor (``X^T = Q R``) so the augmented
    system is only ``2 n_samples x n_samples``; the optimum lies in the range
    of ``Q`` because any orthogonal component only adds to the penalty.
    """
    if beta < 0:
        raise ValueError(f"beta must be >= 0, got {beta}")
    if beta == 0:
        return solve_lstsq(X, D)
    X, D, vector = _prepare(X, D)
    S, F = X.shape
    if F <= S:
        Wt = _augmented_solve(X, D, beta)
    else:
        Q, R = scipy.linalg.qr(X.T, mode="economic", check_finite=False)
        Z = _augmented_solve(R.T, D, beta)
        Wt = Q @ Z
    return _finish(Wt, vector)


def _augmented_solve(A: np.ndarray, B: np.ndarray, beta: float) -> np.ndarray:
    S, F = A.shape
    aug = np.empty((S + F, F))
    aug[:S] = A
    aug[S:] = 0.0
    aug[S + np.arange(F), np.arange(F)] = beta
    Q, R = scipy.linalg.qr(aug, mode="economic", check_finite=False, overwrite_a=True)
    rhs = Q[:S].T @ B
    return scipy.linalg.solve_triangular(R, rhs, check_finite=False)


def solve_svd_stable(X, D, rcond: float = DEFAULT_RCOND) -> np.ndarray:
    """Pseudo-inverse solution restricted to singular values above ``rcond * s_max``.

    The default cutoff sqrt(eps) bounds the condition number of the retained
    subspace by 1/sqrt(eps), so at most half of the working digits are lost.
    """
    if not 0 < rcond < 1:
        raise ValueError(f"rcond must lie in (0, 1), got {rcond}")
    X, D, vector = _prepare(X, D)
    U, s, Vt = scipy.linalg.svd(X, full_matrices=False, check_finite=False, lapack_driver="gesdd")
    if s.size == 0 or s[0] == 0:
        return _finish(np.zeros((X.shape[1], D.shape[1])), vector)
    keep = s > rcond * s[0]
    Wt = Vt[keep].T @ ((U[:, keep].T @ D) / s[keep, None])
    return _finish(Wt, vector)


def solve(X, D, spec: SolverSpec) -> np.ndarray:
    if spec.method is SolverMethod.LSTSQ:
        return solve_lstsq(X, D)
    if spec.method is SolverMethod.TIKHONOV:
        return solve_tikhonov(X, D, spec.beta)
    return solve_svd_stable(X, D, spec.svd_rcond)


def train_output(states, labels, spec: SolverSpec = SolverSpec(), imed=None) -> np.ndarray:
    """Fit output weights mapping ``states`` to ``labels``.

    ``labels`` has one flattened frame per row.  With an IMED kernel the
    labels are transformed by G^(1/2), the system is solved in that space and
    the weights are mapped back with G^(-1/2).
    """
    labels = np.asarray(labels, dtype=np.float64)
    if imed is None:
        return solve(states, labels, spec)
    shape = imed.shape
    frames = labels.reshape((labels.shape[0],) + shape)
    transformed = imed.sqrt_apply(frames).reshape(labels.shape[0], -1)
    W_g = solve(states, transformed, spec)
    # columns of W_g are flattened frames in G^(1/2)-space
    cols = W_g.T.reshape((W_g.shape[1],) + shape)
    return np.ascontiguousarray(imed.inv_sqrt_apply(cols).reshape(W_g.shape[1], -1).T)

