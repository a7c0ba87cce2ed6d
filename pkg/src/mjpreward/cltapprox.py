"""Normal approximation of R(t) and coverage studies against simulation."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy import special

from .core import ModelSpec
from .moments import solve_moments
from .odesolve import SolverConfig
from .sim import sample_stats, simulate_rewards

__all__ = ["normal_quantile", "normal_approx_cdf", "CoverageRow", "CoverageTable", "coverage_study"]


def normal_quantile(mean: float, var: float, p: float) -> float:
    """``mean + sqrt(var) * Phi^{-1}(p)``."""
    if not 0.0 < p < 1.0:
        raise ValueError("p must lie in (0, 1)")
    if not var > 0:
        raise ValueError("variance must be positive")
    return float(mean + math.sqrt(var) * special.ndtri(p))


def normal_approx_cdf(mean: float, var: float, z) -> float:
    """``Phi((z - mean) / sqrt(var))``."""
    if not var > 0:
        raise ValueError("variance must be positive")
    return special.ndtr((np.asarray(z, dtype=float) - mean) / math.sqrt(var))[()]


@dataclass(frozen=True)
class CoverageRow:
    t: float
    p: float
    quantile: float
    coverage: float
    ci_halfwidth: float


@dataclass(frozen=True)
class CoverageTable:
    rows: tuple
    n_paths: int
    seed: int
    config: SolverConfig
    moments: dict = field(default_factory=dict)  # t -> (mean, variance)

    def row(self, t: float, p: float) -> CoverageRow:
        for r in self.rows:
            if r.t == t and r.p == p:
                return r
        raise KeyError((t, p))

    def format(self) -> str:
        """Plain-text table, one line per (t, p)."""
        lines = [f"{'t':>8} {'p':>6} {'quantile':>16} {'coverage':>9} {'+/-':>7}"]
        for r in self.rows:
            lines.append(f"{r.t:>8g} {r.p:>6g} {r.quantile:>16.6f} {r.coverage:>9.4f} {r.ci_halfwidth:>7.4f}")
        return "\n".join(lines)


def coverage_study(
    model: ModelSpec,
    times: Sequence[float],
    levels: Sequence[float],
    n_paths: int,
    seed: int = 0,
    workers: int = 1,
    config: SolverConfig = SolverConfig("dopri54", rtol=1e-10, atol=1e-12),
) -> CoverageTable:
    """Empirical coverage of normal-approximation quantiles.

    For each horizon ``t`` the exact mean and variance of R(t) give the
    normal quantiles at every level; one simulated ensemble of ``n_paths``
    paths per ``t`` then gives the fraction of R(t) at or below each.
    """
    levels = [float(p) for p in levels]
    if not levels:
        raise ValueError("need at least one level")
    if any(not 0 < p < 1 for p in levels):
        raise ValueError("levels must lie in (0, 1)")
    if any(t <= 0 for t in times):
        raise ValueError("times must be positive")
    rows = []
    mom = {}
    for t in times:
        sol = solve_moments(model, float(t), config, record=False)
        mean, var = sol.mean, sol.variance
        mom[float(t)] = (mean, var)
        qs = [normal_quantile(mean, var, p) for p in levels]
        comps = simulate_rewards(model, float(t), n_paths, seed, workers)
        st = sample_stats(comps.sum(axis=1), qs)
        for p, q, F, hw in zip(levels, qs, st.ecdf, st.ecdf_halfwidth):
            rows.append(CoverageRow(float(t), p, q, F, hw))
    return CoverageTable(tuple(rows), n_paths, seed, config, mom)
