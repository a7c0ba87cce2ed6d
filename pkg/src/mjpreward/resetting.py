"""Reward statistics for chains that are independently re-initialised at integer times.

When the state is redrawn from a fresh law ``mu_n`` at every integer ``n``,
the per-period increments ``R(i) - R(i-1)`` are independent, so the mean
and variance of ``R(n)`` are plain sums of one-period quantities.
"""

from __future__ import annotations

import logging
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .core import InitialDistribution, ModelSpec
from .moments import solve_moments
from .odesolve import SolverConfig

__all__ = ["ResetSpec", "ResetResult", "solve_resetting"]

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class ResetSpec:
    """Reset laws ``mu_0, mu_1, ...`` (the last one is reused) over ``n_periods`` periods."""

    laws: tuple
    n_periods: int

    def __post_init__(self):
        laws = tuple(np.asarray(p, dtype=float) for p in self.laws)
        if not laws:
            raise ValueError("need at least one reset law")
        for p in laws:
            if np.any(p < 0) or abs(p.sum() - 1.0) > 1e-12:
                raise ValueError("reset laws must be pmfs")
        if self.n_periods < 1:
            raise ValueError("n_periods must be positive")
        object.__setattr__(self, "laws", laws)

    @classmethod
    def constant(cls, law, n_periods: int, d: int = None) -> "ResetSpec":
        if isinstance(law, InitialDistribution):
            law = law.vector(d)
        return cls((law,), n_periods)

    def law(self, n: int) -> np.ndarray:
        """Law used on period ``n + 1`` (the reset at time ``n``)."""
        return self.laws[min(n, len(self.laws) - 1)]

    def all_laws(self):
        return [self.law(n) for n in range(self.n_periods)]


@dataclass(frozen=True)
class ResetResult:
    mean_delta: np.ndarray
    var_delta: np.ndarray

    @property
    def mean_cum(self) -> np.ndarray:
        return np.cumsum(self.mean_delta)

    @property
    def var_cum(self) -> np.ndarray:
        return np.cumsum(self.var_delta)

    @property
    def mean(self) -> float:
        return float(self.mean_cum[-1])

    @property
    def variance(self) -> float:
        return float(self.var_cum[-1])

    def rows(self):
        """``(period, E_delta, Var_delta, E_cum, Var_cum)`` per period."""
        return [
            (i + 1, float(a), float(b), float(c), float(e))
            for i, (a, b, c, e) in enumerate(zip(self.mean_delta, self.var_delta, self.mean_cum, self.var_cum))
        ]


def _one_period(args):
    model, i, mu, config = args
    sol = solve_moments(model, float(i), config, start=float(i - 1), mu=mu, record=False)
    return sol.mean, sol.variance


def solve_resetting(model: ModelSpec, reset: ResetSpec, config: SolverConfig = SolverConfig(), workers: int = 1) -> ResetResult:
    """Per-period and cumulative mean and variance under resetting."""
    n = reset.n_periods
    for p in reset.laws:
        if p.shape != (model.d,):
            raise ValueError(f"reset laws must have length {model.d}")
    sched = model.rewards.schedule.times(0.0, float(n))
    if np.any(np.abs(sched - np.rint(sched)) <= 1e-12):
        raise ValueError("scheduled reward times must not be integers when resetting")
    jobs = [(model, i, reset.law(i - 1), config) for i in range(1, n + 1)]
    if workers > 1 and n > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            out = list(pool.map(_one_period, jobs))
    else:
        out = [_one_period(j) for j in jobs]
    mean = np.array([o[0] for o in out])
    var = np.array([o[1] for o in out])
    small = np.flatnonzero(var < 1e-10)
    if len(small):
        warnings.warn(
            f"per-period variance below 1e-10 in period(s) {[int(i) + 1 for i in small]}; the normal approximation may not apply",
            RuntimeWarning,
            stacklevel=2,
        )
    return ResetResult(mean, var)
