"""Discrete Caputo-derivative machinery.

The L1 scheme approximates the memory integral with piecewise-linear
interpolation of the history on a uniform time grid:

    D^a y(t_k) ~= dt^-a / Gamma(2-a) * sum_{j=0}^{k-1} b_j (y_{k-j} - y_{k-j-1}),
    b_j = (j+1)^(1-a) - j^(1-a).

It is exact for histories linear in t and O(dt^(2-a)) accurate for smooth
ones. The full history is stored (no kernel compression), which costs
O(N_t * N_x) memory; see the config reference. Only uniform time grids are
supported; a graded mesh for the t = 0 layer is a known extension point.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np


class ShapeMismatch(ValueError):
    """History snapshots disagree in shape."""


class QuadratureFailure(RuntimeError):
    """The oracle quadrature could not meet its tolerance."""


class SolverFailure(RuntimeError):
    """An implicit solve callback reported failure."""


@dataclass(frozen=True)
class L1Weights:
    """L1 convolution weights ``b_j = (j+1)^(1-alpha) - j^(1-alpha)``."""

    alpha: float
    dt: float
    b: np.ndarray

    @classmethod
    def build(cls, alpha: float, dt: float, n: int) -> "L1Weights":
        if not 0.0 < alpha < 1.0:
            raise ValueError(f"alpha must be in (0,1), got {alpha}")
        if dt <= 0.0:
            raise ValueError("dt must be positive")
        j = np.arange(n, dtype=float)
        b = (j + 1.0) ** (1.0 - alpha) - j ** (1.0 - alpha)
        return cls(alpha=alpha, dt=dt, b=b)


class FracHistory:
    """Append-only time history of one field, backing the memory integral.

    Single writer; snapshots are copied on append so later in-place edits of
    the live field cannot corrupt the record.
    """

    def __init__(self, y0: np.ndarray, t0: float, dt: float):
        if dt <= 0.0:
            raise ValueError("dt must be positive")
        self.t0 = float(t0)
        self.dt = float(dt)
        self._snapshots = [np.array(y0, dtype=float, copy=True)]

    @property
    def shape(self):
        return self._snapshots[0].shape

    @property
    def snapshots(self):
        return self._snapshots

    def __len__(self):
        return len(self._snapshots)

    @property
    def steps_completed(self) -> int:
        return len(self._snapshots) - 1

    @property
    def t_last(self) -> float:
        return self.t0 + self.steps_completed * self.dt

    def append(self, y: np.ndarray) -> None:
        y = np.asarray(y, dtype=float)
        if y.shape != self.shape:
            raise ShapeMismatch(f"snapshot shape {y.shape} != history shape {self.shape}")
        self._snapshots.append(y.copy())

    def stacked(self) -> np.ndarray:
        return np.stack(self._snapshots, axis=0)


def l1_caputo(history: FracHistory, alpha: float) -> np.ndarray:
    """L1 evaluation of the Caputo derivative at the last history level."""
    k = history.steps_completed
    if k < 1:
        raise ValueError("need at least 2 snapshots to difference")
    w = L1Weights.build(alpha, history.dt, k)
    snaps = history.stacked()                       # (k+1, ...)
    diffs = snaps[1:] - snaps[:-1]                  # (k, ...), diffs[m] = y_{m+1}-y_m
    # b_j multiplies y_{k-j} - y_{k-j-1} = diffs[k-1-j]
    weights = w.b[::-1]
    acc = np.tensordot(weights, diffs, axes=(0, 0))
    return history.dt ** (-alpha) / math.gamma(2.0 - alpha) * acc


def memory_term(history: FracHistory, alpha: float) -> np.ndarray:
    """The lagged part of the L1 sum: ``sum_{j>=1} b_j (y_{k-j} - y_{k-j-1})``
    where ``k`` is the index of the level about to be computed."""
    k = len(history)  # index of the new level
    if k < 2:
        return np.zeros(history.shape)
    w = L1Weights.build(alpha, history.dt, k)
    snaps = history.stacked()
    diffs = snaps[1:] - snaps[:-1]                  # diffs[m] = y_{m+1} - y_m, m <= k-2
    # j = 1..k-1 pairs with diffs[k-1-j] = diffs[k-2], ..., diffs[0]
    weights = w.b[1:][::-1]
    return np.tensordot(weights, diffs, axes=(0, 0))


def implicit_l1_step(history: FracHistory, alpha: float,
                     explicit_rhs: np.ndarray, implicit_operator) -> np.ndarray:
    """Advance ``D^a y = L y + explicit_rhs`` one L1 step.

    ``implicit_operator(rhs)`` must solve ``(I - Gamma(2-a) dt^a L) y = rhs``
    for the diffusion operator L; everything else is folded into the right
    side. The new level is appended to the history and returned.
    """
    mu = math.gamma(2.0 - alpha) * history.dt ** alpha
    y_prev = history.snapshots[-1]
    rhs = y_prev - memory_term(history, alpha) + mu * np.asarray(explicit_rhs, dtype=float)
    y_new = implicit_operator(rhs)
    if y_new is None or not np.all(np.isfinite(np.asarray(y_new))):
        raise SolverFailure("implicit operator returned a non-finite solution")
    history.append(y_new)
    return history.snapshots[-1]


def caputo_quadrature_oracle(y, alpha: float, t: float, tol: float = 1e-9) -> float:
    """Adaptive quadrature of the Caputo integral; test oracle only.

    (1/Gamma(1-a)) int_0^t (t-s)^-a y'(s) ds with y' by central differences
    of step ~tol**(1/3) (the optimal balance for second-order differences).
    """
    from scipy.integrate import quad

    if not 0.0 < alpha < 1.0:
        raise ValueError(f"alpha must be in (0,1), got {alpha}")
    if t <= 0.0:
        raise ValueError("t must be positive")
    h = max(tol, 1e-12) ** (1.0 / 3.0) * max(t, 1.0) * 1e-2

    def dy(s):
        if s < h:
            return (y(s + h) - y(s)) / h
        return (y(s + h) - y(s - h)) / (2.0 * h)

    val, err = quad(dy, 0.0, t, weight="alg", wvar=(0.0, -alpha), limit=400)
    if not math.isfinite(val) or err > max(50.0 * tol, 1e-7) * max(1.0, abs(val)):
        raise QuadratureFailure(f"quadrature error estimate {err:.2e} too large")
    return val / math.gamma(1.0 - alpha)
