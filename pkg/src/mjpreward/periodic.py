"""Long-run constants of periodic models: reward per period and asymptotic variance.

For a model whose rates and rewards repeat with period 1,
``(R(t) - alpha t) / sqrt(t)`` is asymptotically normal with variance
``sigma2``.  Both constants come from one-period computations:

1. ``P(t, 1)`` on a uniform grid (matrix backward equation),
2. the stationary law ``pi0`` of ``P(0, 1)``,
3. ``m`` on [0, 1] giving ``alpha = pi0 m(0)`` and ``r* = m(0)``,
4. ``k`` solving ``(P(0,1) - I) k = -(r* - alpha e)`` with ``pi0 k = 0``,
5. ``rho(t) = m(t) - alpha (1 - t) + P(t, 1) k`` and
   ``chi(t) = int_t^1 P(t, u) xi(u) du`` by one more backward solve,
6. ``sigma2 = pi0 chi(0)``.

Models with another period are rescaled to period 1 first; the constants
are then per period of the original model.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import linalg, special

from .core import ModelSpec
from .odesolve import Segmentation, SolverConfig, SolverError, integrate_backward

__all__ = ["PeriodicError", "PeriodicConstants", "solve_periodic", "periodic_clt_approx"]


class PeriodicError(ValueError):
    """The model is not periodic, or the one-period chain is degenerate."""


@dataclass(frozen=True)
class PeriodicConstants:
    pi0: np.ndarray
    alpha: float
    k: np.ndarray
    sigma2: float
    grid: np.ndarray
    rho: np.ndarray = field(repr=False)
    m: np.ndarray = field(repr=False)
    chi: np.ndarray = field(repr=False)
    P: np.ndarray = field(repr=False)  # P(t, 1) on the grid
    period: float = 1.0
    seam_residual: float = 0.0
    fredholm_residual: float = 0.0
    poisson_residual: float = 0.0

    @property
    def P01(self) -> np.ndarray:
        return self.P[0]

    @property
    def r_star(self) -> np.ndarray:
        return self.m[0]

    def to_json(self) -> dict:
        return {
            "alpha": self.alpha,
            "sigma2": self.sigma2,
            "period": self.period,
            "pi0": [float(v) for v in self.pi0],
            "k": [float(v) for v in self.k],
            "seam_residual": self.seam_residual,
            "fredholm_residual": self.fredholm_residual,
        }


def _grid_indices(times: np.ndarray, grid: np.ndarray) -> np.ndarray:
    idx = np.searchsorted(times, grid)
    idx = np.clip(idx, 0, len(times) - 1)
    # step back where the previous point is closer
    prev = np.clip(idx - 1, 0, len(times) - 1)
    idx = np.where(np.abs(times[prev] - grid) < np.abs(times[idx] - grid), prev, idx)
    if np.max(np.abs(times[idx] - grid)) > 1e-12:
        raise RuntimeError("grid point missing from the solver output")
    return idx


def _stationary(P: np.ndarray) -> np.ndarray:
    d = len(P)
    if d == 1:
        return np.ones(1)
    u, s, vh = linalg.svd((P - np.eye(d)).T)
    if s[-2] < 1e-10:
        raise PeriodicError("stationary law of P(0,1) is not unique")
    pi = vh[-1]
    pi = pi / pi.sum()
    pi = np.clip(pi, 0.0, None)
    return pi / pi.sum()


def solve_periodic(model: ModelSpec, config: SolverConfig = SolverConfig("rk4", h=1e-3), grid_n: int = 1024) -> PeriodicConstants:
    """Compute ``pi0``, ``alpha``, ``k``, ``rho`` and ``sigma2`` for a periodic model."""
    if not model.period:
        raise PeriodicError(f"model {model.name!r} does not declare a period")
    period = float(model.period)
    if period != 1.0:
        model = model.rescaled(period)
    if grid_n < 1:
        raise ValueError("grid_n must be positive")
    d = model.d
    ev = model.evaluator
    sched = model.rewards.schedule.times(0.0, 1.0)
    if len(sched) and sched[-1] >= 1.0 - 1e-12:
        raise PeriodicError("scheduled times must lie strictly inside one period")
    grid = np.linspace(0.0, 1.0, grid_n + 1)
    interior = np.concatenate([model.segment_points(0.0, 1.0), grid])
    seg = Segmentation.build(0.0, 1.0, interior, config.h)

    def is_sched(t):
        return len(sched) > 0 and np.min(np.abs(sched - t)) <= 1e-12

    # (1) P(t, 1)
    def p_field(t, P, side):
        return ev.apply_generator(ev.edge_rates(t, side), P)

    psol = integrate_backward(p_field, np.eye(d), seg, None, config)
    P = psol.values[_grid_indices(psol.times, grid)]
    P01 = P[0]

    # (2) stationary law
    pi0 = _stationary(P01)

    # (3) one-period mean
    def m_field(t, m, side):
        q = ev.edge_rates(t, side)
        return ev.effective_rate(t, side, q) + ev.apply_generator(q, m)

    def m_jump(t, m):
        return m + ev.scheduled_moments(t)[0] if is_sched(t) else m

    msol = integrate_backward(m_field, np.zeros(d), seg, m_jump, config, record=False)
    r_star = msol.values[0]
    alpha = float(pi0 @ r_star)
    centred = r_star - alpha
    fredholm = abs(float(pi0 @ centred))

    # (4) Poisson equation, pinned by pi0 k = 0
    A = np.vstack([P01 - np.eye(d), pi0[None, :]])
    b = np.concatenate([-centred, [0.0]])
    k, *_ = linalg.lstsq(A, b)
    poisson_res = float(np.max(np.abs((P01 - np.eye(d)) @ k + centred)))
    if poisson_res > 1e-8:
        raise SolverError(f"Poisson equation residual {poisson_res:.3g} exceeds 1e-8")

    # (5) joint solve of m, w = P(t,1) k and chi
    def joint_field(t, y, side):
        m, w, chi = y[:d], y[d : 2 * d], y[2 * d :]
        q = ev.edge_rates(t, side)
        rho = m - alpha * (1.0 - t) + w
        xi = np.zeros(d)
        if ev.n_edges:
            c = rho[ev.dst] - rho[ev.src]
            g1, g2 = ev.jump_moments(t, side)
            xi = np.bincount(ev.src, weights=q * (g2 + 2.0 * c * g1 + c * c), minlength=d)
        if ev.has_external:
            _, k2 = ev.external_moments(t, side)
            xi = xi + ev.beta(t, side) * k2
        return np.concatenate(
            [
                ev.effective_rate(t, side, q) + ev.apply_generator(q, m),
                ev.apply_generator(q, w),
                xi + ev.apply_generator(q, chi),
            ]
        )

    def joint_jump(t, y):
        if not is_sched(t):
            return y
        h1, h2 = ev.scheduled_moments(t)
        out = np.array(y, copy=True)
        out[:d] += h1
        # the martingale jumps by H - h here, adding Var H
        out[2 * d :] += h2 - h1 * h1
        return out

    jsol = integrate_backward(joint_field, np.concatenate([np.zeros(d), k, np.zeros(d)]), seg, joint_jump, config)
    vals = jsol.values[_grid_indices(jsol.times, grid)]
    m_grid = vals[:, :d]
    w_grid = vals[:, d : 2 * d]
    chi_grid = vals[:, 2 * d :]
    rho = m_grid - alpha * (1.0 - grid)[:, None] + w_grid
    sigma2 = float(pi0 @ chi_grid[0])
    seam = float(np.max(np.abs(r_star - alpha + P01 @ k - k)))
    return PeriodicConstants(
        pi0=pi0,
        alpha=alpha,
        k=k,
        sigma2=sigma2,
        grid=grid * period,
        rho=rho,
        m=m_grid,
        chi=chi_grid,
        P=P,
        period=period,
        seam_residual=seam,
        fredholm_residual=fredholm,
        poisson_residual=poisson_res,
    )


def periodic_clt_approx(constants: PeriodicConstants, t: float, z) -> float:
    """``Phi((z - alpha t) / (sigma sqrt(t)))`` with ``t`` counted in periods of the original model."""
    if not constants.sigma2 > 0:
        raise ValueError("sigma2 must be positive")
    if not t > 0:
        raise ValueError("t must be positive")
    n = t / constants.period
    return special.ndtr((np.asarray(z, dtype=float) - constants.alpha * n) / math.sqrt(constants.sigma2 * n))[()]
