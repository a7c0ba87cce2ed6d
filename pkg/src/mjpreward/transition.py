"""Transition matrices of time-inhomogeneous chains and related closed forms."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import integrate, stats

from .core import ModelSpec
from .exprlang import TimeFunction
from .odesolve import Segmentation, SolverConfig, integrate_forward

__all__ = [
    "TransitionMatrix",
    "transition_matrix",
    "transition_matrices",
    "two_state_closed_form",
    "prendiville_closed_form",
    "mixing_profile",
]


@dataclass(frozen=True)
class TransitionMatrix:
    s: float
    t: float
    entries: np.ndarray

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.entries, dtype=dtype)


def _clean(P: np.ndarray) -> np.ndarray:
    # round-off can leave entries a hair outside [0, 1]
    return np.clip(P, 0.0, 1.0)


def _forward_field(model: ModelSpec):
    ev = model.evaluator

    def field(t, P, side):
        return P @ ev.generator(t, side)

    return field


def transition_matrices(model: ModelSpec, s: float, times, config: SolverConfig = SolverConfig()) -> list:
    """``P(s, t)`` for every ``t`` in ``times`` from a single forward solve.

    Solves ``dP/du = P Q(u)`` from ``P(s, s) = I``.  The requested times are
    added to the segmentation, so each one is hit exactly.
    """
    times = np.asarray(times, dtype=float)
    if np.any(times < s):
        raise ValueError("all times must be >= s")
    stop = float(times.max()) if len(times) else s
    out = {}
    if stop > s:
        interior = np.concatenate([model.segment_points(s, stop), times])
        seg = Segmentation.build(s, stop, interior, config.h)
        sol = integrate_forward(_forward_field(model), np.eye(model.d), seg, config, record_boundaries_only=True)
        for tb, P in zip(sol.times, sol.values):
            out[float(tb)] = P
    result = []
    for t in times:
        if t == s:
            P = np.eye(model.d)
        else:
            P = out[float(_nearest(list(out), t))]
        result.append(TransitionMatrix(s, float(t), _clean(P)))
    return result


def _nearest(keys, t):
    keys = np.asarray(keys)
    return keys[np.argmin(np.abs(keys - t))]


def transition_matrix(model: ModelSpec, s: float, t: float, config: SolverConfig = SolverConfig()) -> TransitionMatrix:
    """Numerical ``P(s, t)`` via the Kolmogorov forward equation."""
    if not 0 <= s <= t:
        raise ValueError("need 0 <= s <= t")
    return transition_matrices(model, s, [t], config)[0]


def _points(fn: TimeFunction, s: float, t: float):
    pts = fn.declared_points(s, t)
    return list(pts) if len(pts) else None


def two_state_closed_form(lam, mu, s: float, t: float, quad_tol: float = 1e-12) -> TransitionMatrix:
    """Transition matrix of the two-state chain with rates ``lam`` (0->1) and ``mu`` (1->0).

    With ``A(s, u) = int_s^u (lam + mu)`` and
    ``I = int_s^t exp(-A(u, t)) lam(u) du`` the occupancy probabilities of
    state 1 at time ``t`` are ``I`` (from 0) and ``exp(-A(s, t)) + I``
    (from 1).  Both integrals use adaptive quadrature to ``quad_tol``.
    """
    lam = TimeFunction.coerce(lam)
    mu = TimeFunction.coerce(mu)
    if not 0 <= s <= t:
        raise ValueError("need 0 <= s <= t")
    if t == s:
        return TransitionMatrix(s, t, np.eye(2))
    pts_outer = sorted(set((_points(lam, s, t) or []) + (_points(mu, s, t) or []))) or None

    def total(u):
        return float(lam(u)) + float(mu(u))

    def cum(a, b):
        if b <= a:
            return 0.0
        inner = [p for p in (pts_outer or []) if a < p < b] or None
        val, _ = integrate.quad(total, a, b, points=inner, epsabs=quad_tol, epsrel=quad_tol, limit=200)
        return val

    A_st = cum(s, t)

    def integrand(u):
        return np.exp(-cum(u, t)) * float(lam(u))

    inner, _ = integrate.quad(integrand, s, t, points=pts_outer, epsabs=quad_tol, epsrel=quad_tol, limit=200)
    p01 = inner
    p11 = np.exp(-A_st) + inner
    P = np.array([[1.0 - p01, p01], [1.0 - p11, p11]])
    return TransitionMatrix(s, t, _clean(P))


def prendiville_closed_form(d: int, lam, mu, s: float, t: float, x: int, quad_tol: float = 1e-12) -> np.ndarray:
    """Row ``x`` of ``P(s, t)`` for ``d - 1`` independent two-state switches.

    ``X(t)`` counts switches in state 1, so the row is the law of
    ``Binom(d-1-x, p01) + Binom(x, p11)``.
    """
    if not 0 <= x <= d - 1:
        raise ValueError("x must lie in 0..d-1")
    P2 = two_state_closed_form(lam, mu, s, t, quad_tol).entries
    p01, p11 = P2[0, 1], P2[1, 1]
    a = stats.binom.pmf(np.arange(d - x), d - 1 - x, p01)
    b = stats.binom.pmf(np.arange(x + 1), x, p11)
    return np.convolve(a, b)


def mixing_profile(model: ModelSpec, s: float, u_max: float, step: float, config: SolverConfig = SolverConfig()):
    """Largest total-variation distance between rows of ``P(s, s+u)`` for ``u = step, 2*step, ..., u_max``.

    Distances are the plain sum of absolute differences (no factor 1/2).
    Returns ``(u, tv)`` arrays.
    """
    if not step > 0 or u_max < step:
        raise ValueError("need step > 0 and u_max >= step")
    n = int(np.floor(u_max / step + 1e-9))
    us = step * np.arange(1, n + 1)
    mats = transition_matrices(model, s, s + us, config)
    tv = np.array([_max_row_tv(m.entries) for m in mats])
    return us, tv


def _max_row_tv(P: np.ndarray) -> float:
    diff = np.abs(P[:, None, :] - P[None, :, :]).sum(axis=2)
    return float(diff.max())
