"""Discontinuity-aware Runge-Kutta integration over a segmented time axis.

The time axis is cut at every point where the right-hand side may be
non-smooth or where the solution receives an impulse.  Each segment is
integrated on its own, evaluating the field with one-sided limits at the
segment ends, so every step sees a smooth problem.

Backward solves follow the convention ``d/ds y(t_i - s) = field(t_i - s, y)``:
the solution is propagated from the horizon towards 0 and grows by
``+h * field`` per unit of backward time.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

__all__ = [
    "SolverConfig",
    "Segmentation",
    "GridSolution",
    "SolverError",
    "integrate_backward",
    "integrate_forward",
]

METHODS = ("euler", "rk2", "rk4", "dopri54")


class SolverError(RuntimeError):
    """Numerical failure: step-size underflow or non-finite field values."""


@dataclass(frozen=True)
class SolverConfig:
    method: str = "rk4"
    h: float = 1e-3
    rtol: float = 1e-8
    atol: float = 1e-10
    h_max: float = math.inf

    def __post_init__(self):
        if self.method not in METHODS:
            raise ValueError(f"unknown method {self.method!r}; expected one of {METHODS}")
        if not self.h > 0:
            raise ValueError("step h must be positive")
        if not (self.rtol > 0 and self.atol > 0):
            raise ValueError("tolerances must be positive")
        if not self.h_max > 0:
            raise ValueError("h_max must be positive")

    @property
    def adaptive(self) -> bool:
        return self.method == "dopri54"


@dataclass(frozen=True)
class Segmentation:
    """Boundary points ``t_0 < ... < t_n`` and fixed-step substep counts."""

    points: np.ndarray
    h: float

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float)
        if pts.ndim != 1 or len(pts) < 2:
            raise ValueError("segmentation needs at least two points")
        if np.any(np.diff(pts) <= 0):
            raise ValueError("segmentation points must be strictly increasing")
        object.__setattr__(self, "points", pts)

    @classmethod
    def build(cls, start: float, stop: float, interior: Sequence[float] = (), h: float = 1e-3) -> "Segmentation":
        inner = np.asarray(interior, dtype=float)
        inner = inner[(inner > start) & (inner < stop)]
        pts = np.unique(np.concatenate([[start], inner, [stop]]))
        return cls(pts, h)

    @property
    def n_segments(self) -> int:
        return len(self.points) - 1

    def substeps(self, i: int):
        """``(N_i, h_i)``: ``N_i = ceil(len_i / h)`` equal substeps tiling segment ``i``."""
        length = self.points[i + 1] - self.points[i]
        n = max(1, int(math.ceil(length / self.h - 1e-9)))
        return n, length / n


@dataclass
class GridSolution:
    """Solution values on the solver grid, stored in ascending time order.

    At a boundary where an impulse was applied, the stored value is the
    post-impulse (left-continuous) one; the pre-impulse right limits are
    kept in ``right_limits``.
    """

    times: np.ndarray
    values: np.ndarray
    right_limits: dict = field(default_factory=dict)
    n_steps: int = 0
    n_rejected: int = 0
    n_evals: int = 0
    dense: Optional[list] = None

    def at(self, t: float) -> np.ndarray:
        """Value at a grid time (nearest stored point)."""
        i = int(np.argmin(np.abs(self.times - t)))
        return self.values[i]

    def __call__(self, t: float) -> np.ndarray:
        """Dense-output evaluation (adaptive solves with ``dense=True``)."""
        if self.dense is None:
            raise ValueError("solution has no dense output; solve with dense=True")
        for lo, hi, fn in self.dense:
            if lo <= t <= hi:
                return fn(t)
        raise ValueError(f"t={t} outside the solved range")


# Butcher tableaux (c, A, b) for the explicit fixed-step methods
_TABLEAUX = {
    "euler": (np.array([0.0]), [[]], np.array([1.0])),
    # explicit midpoint rule
    "rk2": (np.array([0.0, 0.5]), [[], [0.5]], np.array([0.0, 1.0])),
    "rk4": (
        np.array([0.0, 0.5, 0.5, 1.0]),
        [[], [0.5], [0.0, 0.5], [0.0, 0.0, 1.0]],
        np.array([1.0, 2.0, 2.0, 1.0]) / 6.0,
    ),
}

# Dormand-Prince 5(4)
_DP_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0])
_DP_A = [
    [],
    [1 / 5],
    [3 / 40, 9 / 40],
    [44 / 45, -56 / 15, 32 / 9],
    [19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729],
    [9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656],
    [35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84],
]
_DP_B = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0])
_DP_E = _DP_B - np.array([5179 / 57600, 0.0, 7571 / 16695, 393 / 640, -92097 / 339200, 187 / 2100, 1 / 40])
# continuous extension (theta, theta^2, theta^3, theta^4) per stage
_DP_P = np.array(
    [
        [1, -8048581381 / 2820520608, 8663915743 / 2820520608, -12715105075 / 11282082432],
        [0, 0, 0, 0],
        [0, 131558114200 / 32700410799, -68118460800 / 10900136933, 87487479700 / 32700410799],
        [0, -1754552775 / 470086768, 14199869525 / 1410260304, -10690763975 / 1880347072],
        [0, 127303824393 / 49829197408, -318862633887 / 49829197408, 701980252875 / 199316789632],
        [0, -282668133 / 205662961, 2019193451 / 616988883, -1453857185 / 822651844],
        [0, 40617522 / 29380423, -110615467 / 29380423, 69997945 / 29380423],
    ]
)


def _check_finite(F, t):
    if not np.all(np.isfinite(F)):
        raise SolverError(f"non-finite field value at t={t!r}")
    return F


class _Integrator:
    def __init__(self, field_fn, config: SolverConfig, record: bool, dense: bool):
        self.field = field_fn
        self.config = config
        self.record = record
        self.dense = dense
        self.times = []
        self.values = []
        self.dense_pieces = [] if dense else None
        self.n_steps = 0
        self.n_rejected = 0
        self.n_evals = 0

    def f(self, t, y, side):
        self.n_evals += 1
        return _check_finite(np.asarray(self.field(t, y, side), dtype=float), t)

    def push(self, t, y):
        if self.record:
            self.times.append(t)
            self.values.append(np.array(y, copy=True))

    # A segment runs from t0 to t1 (either direction); tau = |t - t0|.
    def segment(self, y, t0, t1, n_fixed=None):
        direction = 1.0 if t1 > t0 else -1.0
        start_side = "right" if direction > 0 else "left"
        end_side = "left" if direction > 0 else "right"
        if self.config.adaptive:
            return self._adaptive(y, t0, t1, direction, start_side, end_side)
        return self._fixed(y, t0, t1, n_fixed, direction, start_side, end_side)

    def _fixed(self, y, t0, t1, n, direction, start_side, end_side):
        c, A, b = _TABLEAUX[self.config.method]
        length = abs(t1 - t0)
        h = length / n
        for k in range(n):
            ts = t0 + direction * k * h
            te = t1 if k == n - 1 else t0 + direction * (k + 1) * h
            K = []
            for i, ci in enumerate(c):
                yi = y
                for j, aij in enumerate(A[i]):
                    if aij:
                        yi = yi + (h * aij) * K[j]
                if ci == 0.0:
                    t = ts
                    side = start_side if k == 0 else None
                elif ci == 1.0:
                    t = te
                    side = end_side if k == n - 1 else None
                else:
                    t = ts + direction * ci * h
                    side = None
                K.append(self.f(t, yi, side))
            incr = None
            for bi, Ki in zip(b, K):
                if bi:
                    incr = bi * Ki if incr is None else incr + bi * Ki
            y = y + h * incr
            self.n_steps += 1
            self.push(te, y)
        return y

    def _adaptive(self, y, t0, t1, direction, start_side, end_side):
        cfg = self.config
        length = abs(t1 - t0)
        h_cap = min(cfg.h_max, length)
        tau = 0.0
        K0 = self.f(t0, y, start_side)
        h = min(h_cap, self._initial_step(y, K0, t0, direction, length, end_side))
        min_step = 1e-14 * length
        while tau < length:
            last = tau + h >= length * (1 - 1e-13)
            if last:
                h = length - tau
            t = t0 + direction * tau
            K = [K0]
            for i in range(1, 7):
                yi = y
                for j, aij in enumerate(_DP_A[i]):
                    if aij:
                        yi = yi + (h * aij) * K[j]
                if i == 6:
                    ynew = yi
                ti = t1 if (last and _DP_C[i] == 1.0) else t + direction * _DP_C[i] * h
                side = end_side if (last and _DP_C[i] == 1.0) else None
                K.append(self.f(ti, yi, side))
            err_vec = h * sum(e * k for e, k in zip(_DP_E, K) if e)
            scale = cfg.atol + cfg.rtol * np.maximum(np.abs(y), np.abs(ynew))
            err = float(np.sqrt(np.mean((err_vec / scale) ** 2))) if np.size(y) else 0.0
            if err <= 1.0:
                if self.dense:
                    self.dense_pieces.append(_dense_piece(t, direction, h, y, K))
                tau = length if last else tau + h
                y = ynew
                K0 = K[6]
                self.n_steps += 1
                self.push(t1 if last else t0 + direction * tau, y)
                factor = 5.0 if err == 0 else min(5.0, max(0.2, 0.9 * err ** -0.2))
            else:
                self.n_rejected += 1
                factor = min(1.0, max(0.2, 0.9 * err ** -0.2))
            h = min(h * factor, h_cap)
            if h < min_step and tau < length:
                raise SolverError(f"step size underflow at t={t0 + direction * tau!r}")
        return y

    def _initial_step(self, y, f0, t0, direction, length, end_side):
        # Hairer-Norsett-Wanner starting step heuristic
        cfg = self.config
        scale = cfg.atol + cfg.rtol * np.abs(y)
        d0 = float(np.sqrt(np.mean((y / scale) ** 2))) if np.size(y) else 0.0
        d1 = float(np.sqrt(np.mean((f0 / scale) ** 2))) if np.size(y) else 0.0
        h0 = 1e-6 if (d0 < 1e-5 or d1 < 1e-5) else 0.01 * d0 / d1
        h0 = min(h0, length)
        y1 = y + h0 * f0
        f1 = self.f(t0 + direction * h0, y1, end_side if h0 >= length else None)
        d2 = float(np.sqrt(np.mean(((f1 - f0) / scale) ** 2))) / h0 if np.size(y) else 0.0
        if max(d1, d2) <= 1e-15:
            h1 = max(1e-6, h0 * 1e-3)
        else:
            h1 = (0.01 / max(d1, d2)) ** 0.2
        return min(100 * h0, h1, length)


def _dense_piece(t, direction, h, y, K):
    Q = np.tensordot(_DP_P.T, np.stack(K), axes=(1, 0))  # (4, ...)
    lo, hi = (t, t + direction * h) if direction > 0 else (t + direction * h, t)

    def fn(s, Q=Q, y=np.array(y, copy=True)):
        theta = abs(s - t) / h
        powers = np.array([theta, theta**2, theta**3, theta**4])
        return y + h * np.tensordot(powers, Q, axes=(0, 0))

    return lo, hi, fn


def integrate_backward(
    field_fn: Callable,
    terminal,
    segmentation: Segmentation,
    jumps: Optional[Callable] = None,
    config: SolverConfig = SolverConfig(),
    record: bool = True,
    dense: bool = False,
) -> GridSolution:
    """Integrate from the last segmentation point back to the first.

    ``field_fn(t, y, side)`` gets the forward time and ``side`` in
    {"left", "right", None}: "left" asks for the left limit at a segment's
    right end, "right" for the right limit at its left end.
    ``jumps(t_i, y_plus)`` is applied once at every interior boundary after
    the segment to its right has been integrated.
    """
    y = np.array(terminal, dtype=float)
    it = _Integrator(field_fn, config, record, dense)
    pts = segmentation.points
    it.push(pts[-1], y)
    right_limits = {}
    for i in range(segmentation.n_segments - 1, -1, -1):
        n, _ = segmentation.substeps(i)
        y = it.segment(y, pts[i + 1], pts[i], n)
        if i > 0 and jumps is not None:
            right_limits[float(pts[i])] = np.array(y, copy=True)
            y = np.asarray(jumps(pts[i], y), dtype=float)
            if record:
                it.values[-1] = np.array(y, copy=True)
    order = slice(None, None, -1)
    times = np.asarray(it.times[order]) if record else np.array([pts[0]])
    values = np.asarray(it.values[order]) if record else y[None, ...]
    return GridSolution(times, values, right_limits, it.n_steps, it.n_rejected, it.n_evals, it.dense_pieces)


def integrate_forward(
    field_fn: Callable,
    initial,
    segmentation: Segmentation,
    config: SolverConfig = SolverConfig(),
    record: bool = True,
    record_boundaries_only: bool = False,
) -> GridSolution:
    """Integrate ``dy/dt = field(t, y, side)`` from the first segmentation point to the last."""
    y = np.array(initial, dtype=float)
    it = _Integrator(field_fn, config, record and not record_boundaries_only, False)
    pts = segmentation.points
    bt, bv = [pts[0]], [np.array(y, copy=True)]
    it.push(pts[0], y)
    for i in range(segmentation.n_segments):
        n, _ = segmentation.substeps(i)
        y = it.segment(y, pts[i], pts[i + 1], n)
        bt.append(pts[i + 1])
        bv.append(np.array(y, copy=True))
    if record_boundaries_only:
        times, values = np.asarray(bt), np.asarray(bv)
    elif record:
        times, values = np.asarray(it.times), np.asarray(it.values)
    else:
        times, values = np.array([pts[-1]]), y[None, ...]
    return GridSolution(times, values, {}, it.n_steps, it.n_rejected, it.n_evals)
