"""Mean and variance of the cumulative reward via backward ODE systems.

For a horizon ``t`` the stacked state ``y = (m, v, V)`` holds

* ``m(s, x)``: expected reward still to be earned over (s, t] from state x,
* ``v(s, x)``: the corresponding second moment,
* ``V(s) = mu v(s) - (mu m(s))^2``, integrated directly to avoid the
  cancellation of the difference formula.

It is integrated from ``y(t) = 0`` back to ``s = 0`` with impulses at the
scheduled reward times; ``E R(t) = mu m(0)`` and ``Var R(t) = V(0)``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .core import ModelSpec
from .odesolve import GridSolution, Segmentation, SolverConfig, integrate_backward

__all__ = ["MomentSolution", "effective_rate", "phi", "solve_moments", "solve_mean"]


@dataclass(frozen=True)
class MomentSolution:
    horizon: float
    start: float
    times: np.ndarray
    m: np.ndarray  # (n, d)
    v: np.ndarray  # (n, d)
    V: np.ndarray  # (n,)
    mu: np.ndarray
    n_steps: int = 0

    @property
    def mean(self) -> float:
        return float(self.mu @ self.m[0])

    @property
    def variance(self) -> float:
        return float(self.V[0])

    @property
    def second_moment(self) -> float:
        return float(self.mu @ self.v[0])

    def variance_by_difference(self) -> float:
        """``mu v(0) - (mu m(0))^2``, the cancellation-prone route."""
        return self.second_moment - self.mean**2

    def to_rows(self):
        """Rows ``s, m_0..m_{d-1}, v_0..v_{d-1}, V`` in ascending time."""
        return np.column_stack([self.times, self.m, self.v, self.V])


def effective_rate(model: ModelSpec, t: float, x: Optional[int] = None, side=None):
    """Reward rate plus expected lump accrual rate from jumps and external events."""
    out = model.evaluator.effective_rate(t, side)
    return out if x is None else float(out[x])


def phi(model: ModelSpec, t: float, m_vec, side=None) -> np.ndarray:
    """Source term of the second-moment equation given the current ``m``."""
    ev = model.evaluator
    m_vec = np.asarray(m_vec, dtype=float)
    q = ev.edge_rates(t, side)
    return _phi(ev, t, side, q, m_vec)


def _phi(ev, t, side, q, m):
    out = 2.0 * ev.reward_rate(t, side) * m
    if ev.has_jump_rewards:
        g1, g2 = ev.jump_moments(t, side)
        out = out + np.bincount(ev.src, weights=q * (g2 + 2.0 * m[ev.dst] * g1), minlength=ev.d)
    if ev.has_external:
        k1, k2 = ev.external_moments(t, side)
        out = out + ev.beta(t, side) * (k2 + 2.0 * m * k1)
    return out


def _stacked_field(model: ModelSpec, mu: np.ndarray):
    ev = model.evaluator
    d = model.d

    def field(t, y, side):
        m = y[:d]
        v = y[d : 2 * d]
        q = ev.edge_rates(t, side)
        rt = ev.effective_rate(t, side, q)
        Qm = ev.apply_generator(q, m)
        Qv = ev.apply_generator(q, v)
        ph = _phi(ev, t, side, q, m)
        dm = rt + Qm
        dv = ph + Qv
        dV = mu @ ph + mu @ Qv - 2.0 * (mu @ m) * (mu @ rt + mu @ Qm)
        return np.concatenate([dm, dv, [dV]])

    return field


def _is_scheduled(times: np.ndarray, t: float) -> bool:
    if len(times) == 0:
        return False
    return bool(np.min(np.abs(times - t)) <= 1e-12 * max(1.0, abs(t)))


def _stacked_jump(model: ModelSpec, mu: np.ndarray, times: np.ndarray):
    ev = model.evaluator
    d = model.d

    def jump(t, y):
        if not _is_scheduled(times, t):
            return y
        h1, h2 = ev.scheduled_moments(t)
        if not np.any(h1) and not np.any(h2):
            return y
        m_plus = y[:d]
        ht = h2 + 2.0 * m_plus * h1
        out = np.array(y, copy=True)
        out[:d] += h1
        out[d : 2 * d] += ht
        mh = mu @ h1
        # V = mu v - (mu m)^2 evaluated on both sides of the impulse
        out[2 * d] += mu @ ht - mh * mh - 2.0 * mh * (mu @ m_plus)
        return out

    return jump


def solve_moments(
    model: ModelSpec,
    horizon: float,
    config: SolverConfig = SolverConfig(),
    start: float = 0.0,
    mu=None,
    aware: bool = True,
    record: bool = True,
    extra_points=(),
) -> MomentSolution:
    """Solve the stacked (m, v, V) system backward over [start, horizon].

    ``mu`` defaults to the model's initial law.  With ``aware=False`` the
    declared breakpoints are not used as segment boundaries (scheduled
    times still are); this is only useful to show what happens without
    discontinuity handling.
    """
    if not horizon > start:
        raise ValueError("horizon must exceed start")
    d = model.d
    mu = model.mu if mu is None else np.asarray(mu, dtype=float)
    interior = np.concatenate([model.segment_points(start, horizon, aware), np.asarray(extra_points, dtype=float)])
    seg = Segmentation.build(start, horizon, interior, config.h)
    # a reward scheduled exactly at the horizon still counts in R(horizon)
    sched = model.rewards.schedule.times(start, horizon)
    jump = _stacked_jump(model, mu, sched)
    terminal = jump(horizon, np.zeros(2 * d + 1))
    sol: GridSolution = integrate_backward(_stacked_field(model, mu), terminal, seg, jump, config, record=record)
    vals = np.atleast_2d(sol.values)
    return MomentSolution(
        horizon=float(horizon),
        start=float(start),
        times=np.asarray(sol.times, dtype=float),
        m=vals[:, :d],
        v=vals[:, d : 2 * d],
        V=vals[:, 2 * d],
        mu=mu,
        n_steps=sol.n_steps,
    )


def solve_mean(model: ModelSpec, horizon: float, config: SolverConfig = SolverConfig(), start: float = 0.0, aware: bool = True, extra_points=()):
    """Only the ``m`` block: returns ``(times, m)`` with ``m`` of shape (n, d)."""
    ev = model.evaluator

    def field(t, m, side):
        q = ev.edge_rates(t, side)
        return ev.effective_rate(t, side, q) + ev.apply_generator(q, m)

    sched = model.rewards.schedule.times(start, horizon)

    def jump(t, m):
        if not _is_scheduled(sched, t):
            return m
        h1, _ = ev.scheduled_moments(t)
        return m + h1

    interior = np.concatenate([model.segment_points(start, horizon, aware), np.asarray(extra_points, dtype=float)])
    seg = Segmentation.build(start, horizon, interior, config.h)
    terminal = jump(horizon, np.zeros(model.d))
    sol = integrate_backward(field, terminal, seg, jump, config)
    return sol.times, np.atleast_2d(sol.values)
