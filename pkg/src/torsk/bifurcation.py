"""Dynamics of the single-unit tanh network ``x_{t+1} = tanh(w x_t + b)``.

With one hidden unit the recurrent weight and bias are scalars, so fixed
points, their stability and period-2 cycles can be found exhaustively by
root finding on ``(-1, 1)``, where tanh confines all trajectories.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

GRID_POINTS = 10_000
EDGE = 1e-12
XTOL = 1e-15
SAME_ROOT = 1e-9


class Stability(str, enum.Enum):
    STABLE = "Stable"
    UNSTABLE = "Unstable"


@dataclass(frozen=True)
class FixedPoint:
    x_star: float
    stability: Stability

    @property
    def stable(self) -> bool:
        return self.stability is Stability.STABLE


def unit_map(w: float, b: float, x):
    return np.tanh(w * np.asarray(x, dtype=np.float64) + b)


def iterate_map(w: float, b: float, x0: float, steps: int) -> np.ndarray:
    """Trajectory ``x_0 .. x_steps`` of the unit map."""
    if steps < 0:
        raise ValueError("steps must be >= 0")
    out = np.empty(steps + 1)
    out[0] = x = float(x0)
    for k in range(1, steps + 1):
        x = float(np.tanh(w * x + b))
        out[k] = x
    return out


def _roots(fn, grid_points: int = GRID_POINTS) -> list[float]:
    grid = np.linspace(-1.0 + EDGE, 1.0 - EDGE, grid_points)
    vals = fn(grid)
    roots = [float(x) for x in grid[vals == 0.0]]
    sign = np.sign(vals)
    for i in np.flatnonzero(sign[:-1] * sign[1:] < 0):
        roots.append(brentq(fn, grid[i], grid[i + 1], xtol=XTOL, rtol=4 * np.finfo(float).eps))
    roots.sort()
    unique: list[float] = []
    for r in roots:
        if not unique or r - unique[-1] > SAME_ROOT:
            unique.append(r)
    return unique


def derivative(w: float, b: float, x: float) -> float:
    """Slope ``w (1 - tanh^2(w x + b))`` of the unit map at ``x``."""
    return float(w * (1.0 - np.tanh(w * x + b) ** 2))


def classify(w: float, b: float, x: float) -> Stability:
    """Stable iff the slope magnitude is strictly below one; tangency counts as unstable."""
    return Stability.STABLE if abs(derivative(w, b, x)) < 1.0 else Stability.UNSTABLE


def fixed_points(w: float, b: float) -> list[FixedPoint]:
    """All solutions of ``x = tanh(w x + b)``, in increasing order.

    Roots are bracketed by sign changes on a grid of ``GRID_POINTS`` points
    and refined with Brent's method.  Tangential roots without a sign change
    (exactly at a bifurcation) can be missed.
    """
    roots = _roots(lambda x: np.tanh(w * x + b) - x)
    return [FixedPoint(r, classify(w, b, r)) for r in roots]


def period2_cycles(w: float, b: float) -> list[tuple[float, float]]:
    """Period-2 orbits ``(x_1, x_2)`` with ``x_1 < x_2``.

    These are the roots of the twice-iterated map ``tanh(w tanh(w x + b) + b) - x``
    that are not fixed points of the map itself; each orbit contributes two
    roots, which are paired up.
    """
    fixed = [p.x_star for p in fixed_points(w, b)]
    roots = _roots(lambda x: np.tanh(w * np.tanh(w * x + b) + b) - x)
    candidates = [r for r in roots if all(abs(r - f) > SAME_ROOT for f in fixed)]
    cycles: list[tuple[float, float]] = []
    used: set[int] = set()
    for i, x1 in enumerate(candidates):
        if i in used:
            continue
        x2 = float(np.tanh(w * x1 + b))
        j = min(range(len(candidates)), key=lambda k: abs(candidates[k] - x2))
        used.update((i, j))
        cycles.append((min(x1, x2), max(x1, x2)))
    return cycles


def cobweb_trace(w: float, b: float, x0: float, steps: int) -> np.ndarray:
    """Cobweb diagram vertices as an array of ``(x, y)`` rows.

    Each step adds the vertical segment ``(x_t, x_t) -> (x_t, x_{t+1})`` and
    the horizontal segment to ``(x_{t+1}, x_{t+1})``, giving ``2 steps + 1``
    points.
    """
    if steps < 1:
        raise ValueError("steps must be >= 1")
    traj = iterate_map(w, b, x0, steps)
    pts = np.empty((2 * steps + 1, 2))
    pts[0] = traj[0], traj[0]
    for t in range(steps):
        pts[2 * t + 1] = traj[t], traj[t + 1]
        pts[2 * t + 2] = traj[t + 1], traj[t + 1]
    return pts
