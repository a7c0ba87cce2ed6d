"""Model and reward data types, lump-sum laws, and assumption checks."""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from functools import cached_property
from typing import Optional, Sequence

import numpy as np
from scipy import special
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components

from .exprlang import ExprError, TimeFunction, expand_periodic

__all__ = [
    "Deterministic",
    "BetaComponent",
    "BetaSum",
    "beta_law",
    "lump_mean",
    "lump_second_moment",
    "lump_shifted_second_moment",
    "RateEntry",
    "ScheduleSpec",
    "InitialDistribution",
    "BreakpointSet",
    "SimBounds",
    "ExternalSpec",
    "RewardSpec",
    "ModelSpec",
    "ModelEvaluator",
    "Check",
    "ValidationReport",
    "validate_model",
    "ModelError",
]


class ModelError(ValueError):
    """Structurally malformed model."""


# --------------------------------------------------------------------------
# Lump-sum reward laws


@dataclass(frozen=True)
class Deterministic:
    """Point mass at ``value(t, x)``."""

    value: TimeFunction

    def __post_init__(self):
        object.__setattr__(self, "value", TimeFunction.coerce(self.value))

    n_uniforms = 0

    def mean(self, t, x=0.0, side=None):
        return _broadcast(self.value(t, x, side), t, x)

    def second_moment(self, t, x=0.0, side=None):
        v = self.mean(t, x, side)
        return v * v

    def variance(self, t, x=0.0, side=None):
        return np.zeros_like(self.mean(t, x, side)) if np.ndim(t) or np.ndim(x) else 0.0

    def sample(self, t, x, u):
        """Draw using a (n, n_uniforms) array of uniforms (ignored here)."""
        return _broadcast(self.value(t, x), t, x)

    def support_bounds(self, t, x=0.0):
        v = self.mean(t, x)
        return v, v

    @property
    def depends_on_time(self) -> bool:
        return self.value.depends_on_time


@dataclass(frozen=True)
class BetaComponent:
    """``scale(t, x) * Z`` with ``Z ~ Beta(alpha, beta)``."""

    alpha: float
    beta: float
    scale: TimeFunction

    def __post_init__(self):
        object.__setattr__(self, "scale", TimeFunction.coerce(self.scale))
        if not (self.alpha > 0 and self.beta > 0):
            raise ModelError("Beta parameters must be positive")

    @property
    def z_mean(self) -> float:
        return self.alpha / (self.alpha + self.beta)

    @property
    def z_var(self) -> float:
        a, b = self.alpha, self.beta
        return a * b / ((a + b) ** 2 * (a + b + 1.0))


@dataclass(frozen=True)
class BetaSum:
    """``shift(t, x) + sum_j scale_j(t, x) * Z_j`` with independent Beta ``Z_j``."""

    shift: TimeFunction
    components: tuple

    def __post_init__(self):
        object.__setattr__(self, "shift", TimeFunction.coerce(self.shift))
        object.__setattr__(self, "components", tuple(self.components))
        if not self.components:
            raise ModelError("BetaSum needs at least one component")

    @property
    def n_uniforms(self) -> int:
        return len(self.components)

    def mean(self, t, x=0.0, side=None):
        out = _broadcast(self.shift(t, x, side), t, x)
        for c in self.components:
            out = out + c.scale(t, x, side) * c.z_mean
        return out

    def variance(self, t, x=0.0, side=None):
        out = 0.0
        for c in self.components:
            s = c.scale(t, x, side)
            out = out + s * s * c.z_var
        return _broadcast(out, t, x)

    def second_moment(self, t, x=0.0, side=None):
        m = self.mean(t, x, side)
        return self.variance(t, x, side) + m * m

    @property
    def depends_on_time(self) -> bool:
        return self.shift.depends_on_time or any(c.scale.depends_on_time for c in self.components)

    def sample(self, t, x, u):
        u = np.asarray(u, dtype=float)
        out = np.array(_broadcast(self.shift(t, x), t, x), dtype=float)
        for j, c in enumerate(self.components):
            z = special.betaincinv(c.alpha, c.beta, u[..., j])
            out = out + c.scale(t, x) * z
        return out

    def support_bounds(self, t, x=0.0):
        lo = _broadcast(self.shift(t, x), t, x)
        hi = lo
        for c in self.components:
            s = c.scale(t, x)
            lo = lo + np.minimum(s, 0.0)
            hi = hi + np.maximum(s, 0.0)
        return lo, hi


def beta_law(alpha: float, beta: float, scale=1.0, shift=0.0) -> BetaSum:
    """``shift + scale * Beta(alpha, beta)``."""
    return BetaSum(shift, (BetaComponent(alpha, beta, scale),))


def _broadcast(value, t, x):
    if np.ndim(t) or np.ndim(x):
        return np.broadcast_to(np.asarray(value, dtype=float), np.broadcast(t, x).shape).astype(float)
    return float(value)


def lump_mean(dist, t: float, x: float = 0.0) -> float:
    """First moment of a lump-sum law at time ``t`` (analytic)."""
    return dist.mean(t, x)


def lump_second_moment(dist, t: float, x: float = 0.0) -> float:
    return dist.second_moment(t, x)


def lump_shifted_second_moment(dist, t: float, c, x: float = 0.0):
    """``E (Z + c)^2`` for ``Z`` drawn from ``dist`` at time ``t``."""
    m1 = dist.mean(t, x)
    m2 = dist.second_moment(t, x)
    return m2 + 2.0 * c * m1 + c * c


# --------------------------------------------------------------------------
# Model pieces


@dataclass(frozen=True)
class RateEntry:
    source: int
    target: int
    rate: TimeFunction

    def __post_init__(self):
        object.__setattr__(self, "rate", TimeFunction.coerce(self.rate))


@dataclass(frozen=True)
class ScheduleSpec:
    """Deterministic reward times: ``start, start+step, ...`` or an explicit list."""

    kind: str = "explicit"
    start: float = 0.0
    step: float = 0.0
    points: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "points", tuple(float(p) for p in self.points))
        if self.kind == "arithmetic":
            if not (self.start > 0 and self.step > 0):
                raise ModelError("arithmetic schedule needs start > 0 and step > 0")
        elif self.kind == "explicit":
            pass
        else:
            raise ModelError(f"unknown schedule kind {self.kind!r}")

    @classmethod
    def arithmetic(cls, start: float, step: float) -> "ScheduleSpec":
        return cls("arithmetic", float(start), float(step))

    @classmethod
    def explicit(cls, points: Sequence[float]) -> "ScheduleSpec":
        return cls("explicit", points=tuple(points))

    @property
    def is_empty(self) -> bool:
        return self.kind == "explicit" and not self.points

    def times(self, start: float, stop: float) -> np.ndarray:
        """Scheduled times ``t_i`` with ``start < t_i <= stop``."""
        if self.kind == "arithmetic":
            k0 = max(0, math.floor((start - self.start) / self.step))
            out = []
            k = k0
            while True:
                v = self.start + k * self.step
                if v > stop + 1e-12 * max(1.0, abs(stop)):
                    break
                if v > start:
                    out.append(min(v, stop) if abs(v - stop) <= 1e-12 * max(1.0, abs(stop)) else v)
                k += 1
            return np.asarray(out, dtype=float)
        p = np.asarray(self.points, dtype=float)
        return p[(p > start) & (p <= stop)]

    def min_gap(self) -> float:
        if self.kind == "arithmetic":
            return self.step
        p = np.asarray(self.points, dtype=float)
        if len(p) == 0:
            return math.inf
        # the sequence starts from t_0 = 0
        return float(np.min(np.diff(np.concatenate([[0.0], p]))))

    def rescaled(self, scale: float) -> "ScheduleSpec":
        if self.kind == "arithmetic":
            return ScheduleSpec.arithmetic(self.start / scale, self.step / scale)
        return ScheduleSpec.explicit([p / scale for p in self.points])


@dataclass(frozen=True)
class InitialDistribution:
    kind: str = "point"
    state: int = 0
    probs: tuple = ()
    ratio: float = 0.0

    @classmethod
    def point(cls, state: int) -> "InitialDistribution":
        return cls("point", state=int(state))

    @classmethod
    def pmf(cls, probs: Sequence[float]) -> "InitialDistribution":
        return cls("pmf", probs=tuple(float(p) for p in probs))

    @classmethod
    def truncated_geometric(cls, ratio: float) -> "InitialDistribution":
        return cls("truncated_geometric", ratio=float(ratio))

    def vector(self, d: int) -> np.ndarray:
        if self.kind == "point":
            if not 0 <= self.state < d:
                raise ModelError(f"initial state {self.state} outside 0..{d - 1}")
            mu = np.zeros(d)
            mu[self.state] = 1.0
            return mu
        if self.kind == "pmf":
            mu = np.asarray(self.probs, dtype=float)
            if mu.shape != (d,):
                raise ModelError(f"initial pmf must have length {d}")
            if np.any(mu < 0) or abs(mu.sum() - 1.0) > 1e-12:
                raise ModelError("initial pmf must be non-negative and sum to 1")
            return mu
        if self.kind == "truncated_geometric":
            if self.ratio <= 0:
                raise ModelError("truncated geometric ratio must be positive")
            w = self.ratio ** np.arange(d, dtype=float)
            return w / w.sum()
        raise ModelError(f"unknown initial distribution kind {self.kind!r}")


@dataclass(frozen=True)
class BreakpointSet:
    """Declared non-smooth points: absolute ``points`` plus ``per_period`` points repeated every ``period``."""

    points: tuple = ()
    period: Optional[float] = None
    per_period: tuple = ()

    def __post_init__(self):
        pts = tuple(sorted(set(float(p) for p in self.points)))
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "per_period", tuple(sorted(set(float(p) for p in self.per_period))))
        if self.period is not None and self.period <= 0:
            raise ModelError("breakpoint period must be positive")

    def expand(self, start: float, stop: float) -> np.ndarray:
        """Sorted, distinct breakpoints strictly inside (start, stop)."""
        pts = [p for p in self.points if start < p < stop]
        if self.period:
            pts.extend(expand_periodic(self.per_period, self.period, start, stop))
        return _dedupe(np.asarray(pts, dtype=float))

    def merged(self, extra: Sequence[float]) -> "BreakpointSet":
        return replace(self, points=tuple(self.points) + tuple(float(e) for e in extra))

    def rescaled(self, scale: float) -> "BreakpointSet":
        return BreakpointSet(
            tuple(p / scale for p in self.points),
            self.period / scale if self.period else None,
            tuple(p / scale for p in self.per_period),
        )


def _dedupe(pts: np.ndarray, rel: float = 1e-12) -> np.ndarray:
    if len(pts) == 0:
        return pts
    pts = np.sort(pts)
    keep = np.ones(len(pts), dtype=bool)
    keep[1:] = np.diff(pts) > rel * np.maximum(1.0, np.abs(pts[1:]))
    return pts[keep]


@dataclass(frozen=True)
class SimBounds:
    lambda_bar: tuple
    beta_bar: tuple

    def __post_init__(self):
        object.__setattr__(self, "lambda_bar", tuple(float(v) for v in self.lambda_bar))
        object.__setattr__(self, "beta_bar", tuple(float(v) for v in self.beta_bar))


@dataclass(frozen=True)
class ExternalSpec:
    """State-modulated Poisson rewards: per-state intensity and lump law."""

    intensity: tuple  # per-state TimeFunction
    laws: tuple  # per-state lump law

    def __post_init__(self):
        object.__setattr__(self, "intensity", tuple(TimeFunction.coerce(f) for f in self.intensity))
        object.__setattr__(self, "laws", tuple(self.laws))


@dataclass(frozen=True)
class RewardSpec:
    rate: tuple  # per-state TimeFunction
    jump: dict = field(default_factory=dict)  # (from, to) -> law
    schedule: ScheduleSpec = field(default_factory=ScheduleSpec)
    scheduled_laws: tuple = ()  # per-state law
    external: Optional[ExternalSpec] = None

    def __post_init__(self):
        object.__setattr__(self, "rate", tuple(TimeFunction.coerce(f) for f in self.rate))

    def __hash__(self):
        return id(self)


@dataclass(frozen=True, eq=False)
class ModelSpec:
    """A finite-state Markov jump process with time-varying rates and rewards."""

    d: int
    rates: tuple
    rewards: RewardSpec
    initial: InitialDistribution = field(default_factory=InitialDistribution)
    breakpoints: BreakpointSet = field(default_factory=BreakpointSet)
    bounds: Optional[SimBounds] = None
    period: Optional[float] = None
    name: str = "model"

    def __post_init__(self):
        object.__setattr__(self, "rates", tuple(self.rates))
        if self.d < 1:
            raise ModelError("state count must be positive")
        seen = set()
        for e in self.rates:
            if not (0 <= e.source < self.d and 0 <= e.target < self.d):
                raise ModelError(f"rate entry {e.source}->{e.target} outside 0..{self.d - 1}")
            if e.source == e.target:
                raise ModelError(f"rate entry {e.source}->{e.target} is a self-loop")
            if (e.source, e.target) in seen:
                raise ModelError(f"duplicate rate entry {e.source}->{e.target}")
            seen.add((e.source, e.target))
        rw = self.rewards
        if len(rw.rate) != self.d:
            raise ModelError("rate reward needs one function per state")
        for key in rw.jump:
            if key not in seen:
                raise ModelError(f"jump reward on {key} which has no rate entry")
        if not rw.schedule.is_empty and len(rw.scheduled_laws) != self.d:
            raise ModelError("scheduled rewards need one law per state")
        if rw.external is not None:
            if len(rw.external.intensity) != self.d or len(rw.external.laws) != self.d:
                raise ModelError("external rewards need one intensity and one law per state")
        if self.bounds is not None:
            if len(self.bounds.lambda_bar) != self.d or len(self.bounds.beta_bar) != self.d:
                raise ModelError("simulation bounds need one value per state")
        self.initial.vector(self.d)

    def __getstate__(self):
        state = dict(self.__dict__)
        state.pop("evaluator", None)
        return state

    def __setstate__(self, state):
        self.__dict__.update(state)

    @cached_property
    def evaluator(self) -> "ModelEvaluator":
        return ModelEvaluator(self)

    @property
    def mu(self) -> np.ndarray:
        return self.initial.vector(self.d)

    def segment_points(self, start: float, stop: float, aware: bool = True) -> np.ndarray:
        """Interior points of (start, stop) where the ODE fields may be non-smooth or jump.

        Scheduled times are always included; declared breakpoints only when
        ``aware`` is true.
        """
        pts = [self.rewards.schedule.times(start, stop)]
        if aware:
            pts.append(self.breakpoints.expand(start, stop))
        pts = np.concatenate(pts) if pts else np.empty(0)
        pts = pts[(pts > start) & (pts < stop)]
        return _dedupe(pts)

    def with_initial(self, initial: InitialDistribution) -> "ModelSpec":
        return replace(self, initial=initial)

    def rescaled(self, scale: float) -> "ModelSpec":
        """Time-rescaled model ``t -> scale*t``: rates and reward rates multiplied by ``scale``."""
        if scale == 1.0:
            return self

        def fn(f):
            g = f.rescaled(scale)
            return TimeFunction(f"{_fmt(scale)}*({g.text})", g.breakpoints, g.period, g.per_period)

        def law(lw):
            if isinstance(lw, Deterministic):
                return Deterministic(lw.value.rescaled(scale))
            return BetaSum(
                lw.shift.rescaled(scale),
                tuple(BetaComponent(c.alpha, c.beta, c.scale.rescaled(scale)) for c in lw.components),
            )

        rw = self.rewards
        ext = None
        if rw.external is not None:
            ext = ExternalSpec(
                tuple(fn(f) for f in rw.external.intensity), tuple(law(lw) for lw in rw.external.laws)
            )
        rewards = RewardSpec(
            rate=tuple(fn(f) for f in rw.rate),
            jump={k: law(v) for k, v in rw.jump.items()},
            schedule=rw.schedule.rescaled(scale),
            scheduled_laws=tuple(law(lw) for lw in rw.scheduled_laws),
            external=ext,
        )
        bounds = None
        if self.bounds is not None:
            bounds = SimBounds(
                tuple(v * scale for v in self.bounds.lambda_bar), tuple(v * scale for v in self.bounds.beta_bar)
            )
        return ModelSpec(
            d=self.d,
            rates=tuple(RateEntry(e.source, e.target, fn(e.rate)) for e in self.rates),
            rewards=rewards,
            initial=self.initial,
            breakpoints=self.breakpoints.rescaled(scale),
            bounds=bounds,
            period=self.period / scale if self.period else None,
            name=self.name,
        )


def _fmt(v: float) -> str:
    return repr(float(v))


# --------------------------------------------------------------------------
# Vectorised evaluation of model quantities


class _Family:
    """Entries sharing one expression, evaluated in a single vectorised call."""

    __slots__ = ("fn", "index", "xs", "cache")

    def __init__(self, fn, index, xs):
        self.fn = fn
        self.index = np.asarray(index, dtype=np.intp)
        self.xs = np.asarray(xs, dtype=float)
        # moments of laws that do not depend on t are computed once
        self.cache = None


def _families(fns, xs):
    groups = {}
    for i, (f, x) in enumerate(zip(fns, xs)):
        groups.setdefault(f, ([], []))
        groups[f][0].append(i)
        groups[f][1].append(x)
    return [_Family(f, idx, x) for f, (idx, x) in groups.items()]


def _eval_families(families, n, t, side):
    out = np.empty(n)
    for fam in families:
        out[fam.index] = fam.fn(t, fam.xs, side)
    return out


class ModelEvaluator:
    """Evaluates rates, rewards and lump moments of a model at a time point.

    Entries with identical expressions are grouped so each group costs one
    vectorised evaluation.
    """

    def __init__(self, model: ModelSpec):
        self.model = model
        d = model.d
        self.d = d
        self.src = np.array([e.source for e in model.rates], dtype=np.intp)
        self.dst = np.array([e.target for e in model.rates], dtype=np.intp)
        self.n_edges = len(model.rates)
        self._rate_fams = _families([e.rate for e in model.rates], self.src.astype(float))
        states = np.arange(d, dtype=float)
        rw = model.rewards
        self._r_fams = _families(list(rw.rate), states)
        # jump laws per edge
        edge_laws = [rw.jump.get((e.source, e.target)) for e in model.rates]
        self.has_jump_rewards = any(lw is not None for lw in edge_laws)
        self._jump_fams = _law_families(edge_laws, self.src.astype(float))
        self.has_external = rw.external is not None
        if self.has_external:
            self._beta_fams = _families(list(rw.external.intensity), states)
            self._ext_fams = _law_families(list(rw.external.laws), states)
        self.has_schedule = not rw.schedule.is_empty
        if self.has_schedule:
            self._sched_fams = _law_families(list(rw.scheduled_laws), states)

    # rates -------------------------------------------------------------
    def edge_rates(self, t, side=None) -> np.ndarray:
        return _eval_families(self._rate_fams, self.n_edges, t, side)

    def exit_rates(self, t, side=None) -> np.ndarray:
        return np.bincount(self.src, weights=self.edge_rates(t, side), minlength=self.d)

    def generator(self, t, side=None) -> np.ndarray:
        q = self.edge_rates(t, side)
        Q = np.zeros((self.d, self.d))
        Q[self.src, self.dst] = q
        Q[np.diag_indices(self.d)] = -np.bincount(self.src, weights=q, minlength=self.d)
        return Q

    def apply_generator(self, q: np.ndarray, y: np.ndarray) -> np.ndarray:
        """``Q y`` for edge rates ``q`` (``y`` a vector or a matrix with d rows)."""
        diff = y[self.dst] - y[self.src]
        if diff.ndim == 1:
            return np.bincount(self.src, weights=q * diff, minlength=self.d)
        out = np.zeros((self.d,) + diff.shape[1:])
        np.add.at(out, self.src, q[:, None] * diff)
        return out

    # rewards -----------------------------------------------------------
    def reward_rate(self, t, side=None) -> np.ndarray:
        return _eval_families(self._r_fams, self.d, t, side)

    def beta(self, t, side=None) -> np.ndarray:
        if not self.has_external:
            return np.zeros(self.d)
        return _eval_families(self._beta_fams, self.d, t, side)

    def jump_moments(self, t, side=None):
        """(M1, M2) per edge of the jump lump laws (zeros where none)."""
        return _law_moments(self._jump_fams, self.n_edges, t, side)

    def external_moments(self, t, side=None):
        if not self.has_external:
            z = np.zeros(self.d)
            return z, z
        return _law_moments(self._ext_fams, self.d, t, side)

    def scheduled_moments(self, t):
        if not self.has_schedule:
            z = np.zeros(self.d)
            return z, z
        return _law_moments(self._sched_fams, self.d, t, None)

    def effective_rate(self, t, side=None, q=None) -> np.ndarray:
        """``r + gamma_1 + gamma_2``: reward rate including expected lump accrual."""
        if q is None:
            q = self.edge_rates(t, side)
        out = self.reward_rate(t, side)
        if self.has_jump_rewards:
            m1, _ = self.jump_moments(t, side)
            out = out + np.bincount(self.src, weights=q * m1, minlength=self.d)
        if self.has_external:
            k1, _ = self.external_moments(t, side)
            out = out + self.beta(t, side) * k1
        return out


def _law_families(laws, xs):
    groups = {}
    for i, (lw, x) in enumerate(zip(laws, xs)):
        if lw is None:
            continue
        groups.setdefault(lw, ([], []))
        groups[lw][0].append(i)
        groups[lw][1].append(x)
    return [_Family(lw, idx, x) for lw, (idx, x) in groups.items()]


def _law_moments(families, n, t, side):
    m1 = np.zeros(n)
    m2 = np.zeros(n)
    for fam in families:
        if fam.cache is not None:
            a, b = fam.cache
        else:
            a = fam.fn.mean(t, fam.xs, side)
            b = fam.fn.second_moment(t, fam.xs, side)
            if not fam.fn.depends_on_time:
                fam.cache = (a, b)
        m1[fam.index] = a
        m2[fam.index] = b
    return m1, m2


# --------------------------------------------------------------------------
# Validation


@dataclass(frozen=True)
class Check:
    name: str
    passed: bool
    message: str = ""
    advisory: bool = False


@dataclass(frozen=True)
class ValidationReport:
    checks: tuple

    @property
    def valid(self) -> bool:
        return all(c.passed for c in self.checks if not c.advisory)

    def failed(self):
        return [c for c in self.checks if not c.passed and not c.advisory]

    def __str__(self) -> str:
        lines = []
        for c in self.checks:
            status = "PASS" if c.passed else ("WARN" if c.advisory else "FAIL")
            lines.append(f"{status:4s} {c.name}: {c.message}".rstrip())
        lines.append("model is " + ("valid" if self.valid else "INVALID"))
        return "\n".join(lines)


def default_validation_horizon(model: ModelSpec) -> float:
    span = model.period or 1.0
    last = max(model.breakpoints.points, default=0.0)
    return max(10.0, last + 2.0 * span)


def _probe_grid(model: ModelSpec, probe_points: int, horizon: float):
    n = max(2, int(math.ceil(probe_points * horizon)) + 1)
    grid = np.linspace(0.0, horizon, n)
    bps = np.concatenate([model.breakpoints.expand(0.0, horizon), model.rewards.schedule.times(0.0, horizon)])
    # probe both one-sided limits at declared points
    probes = [(grid, None)]
    if len(bps):
        probes += [(bps, "left"), (bps, "right")]
    return probes


def validate_model(model: ModelSpec, probe_points: int = 64, horizon: Optional[float] = None) -> ValidationReport:
    """Check irreducibility, rate/reward bounds and schedule spacing.

    Bounds are verified on a grid of ``probe_points`` per unit time over
    [0, horizon] plus both one-sided limits at every declared breakpoint, so
    a pass is necessary but not sufficient for the infimum/supremum
    conditions to hold for all t.
    """
    if horizon is None:
        horizon = default_validation_horizon(model)
    checks = []
    d = model.d
    ev = model.evaluator
    probes = _probe_grid(model, probe_points, horizon)

    # A2: irreducibility of the (time independent) sparsity graph
    if d == 1:
        checks.append(Check("A2 irreducible", True, "single state (vacuous)"))
    else:
        g = csr_matrix((np.ones(ev.n_edges), (ev.src, ev.dst)), shape=(d, d))
        ncomp, _ = connected_components(g, directed=True, connection="strong")
        checks.append(
            Check(
                "A2 irreducible",
                ncomp == 1,
                "rate graph strongly connected" if ncomp == 1 else f"rate graph has {ncomp} strongly connected components",
            )
        )

    # A3: rates bounded away from 0 and infinity on the support
    checks.append(_grid_check("A3 rate bounds", probes, lambda t, s: ev.edge_rates(t, s), _edge_label(model), lo=0.0, strict=True))

    # A4: reward rates, intensities and lump supports
    checks.append(_grid_check("A4 reward rate", probes, lambda t, s: ev.reward_rate(t, s), _state_label, lo=0.0))
    if ev.has_external:
        checks.append(_grid_check("A4 external intensity", probes, lambda t, s: ev.beta(t, s), _state_label, lo=0.0))
    checks.append(_lump_check(model, probes))
    checks.append(_accrual_check(model, probes))

    # A5: scheduled times separated
    gap = model.rewards.schedule.min_gap()
    checks.append(Check("A5 schedule spacing", gap > 0, f"min gap {gap:g}" if math.isfinite(gap) else "no scheduled rewards"))

    if model.bounds is not None:
        lb = np.asarray(model.bounds.lambda_bar)
        bb = np.asarray(model.bounds.beta_bar)
        checks.append(
            _grid_check("simulation bound lambda_bar", probes, lambda t, s: lb - ev.exit_rates(t, s), _state_label, lo=0.0)
        )
        if ev.has_external:
            checks.append(_grid_check("simulation bound beta_bar", probes, lambda t, s: bb - ev.beta(t, s), _state_label, lo=0.0))
    return ValidationReport(tuple(checks))


def _state_label(i):
    return f"state {i}"


def _edge_label(model):
    def label(i):
        e = model.rates[i]
        return f"rate {e.source}->{e.target}"

    return label


def _grid_check(name, probes, fn, label, lo=None, strict=False) -> Check:
    worst = None
    for ts, side in probes:
        for t in ts:
            try:
                vals = np.asarray(fn(float(t), side), dtype=float)
            except ExprError as exc:
                return Check(name, False, f"evaluation failed at t={t:g}: {exc}")
            if vals.size == 0:
                continue
            if not np.all(np.isfinite(vals)):
                i = int(np.flatnonzero(~np.isfinite(vals))[0])
                return Check(name, False, f"{label(i)} not finite at t={t:g}")
            if lo is not None:
                bad = vals <= lo if strict else vals < lo - 1e-12
                if np.any(bad):
                    i = int(np.flatnonzero(bad)[0])
                    return Check(name, False, f"{label(i)} = {vals[i]:g} at t={t:g}")
            m = float(vals.min())
            worst = m if worst is None else min(worst, m)
    msg = "ok" if worst is None else f"min over probes {worst:g}"
    return Check(name, True, msg)


def _lump_check(model: ModelSpec, probes) -> Check:
    rw = model.rewards
    laws = [(f"jump {k[0]}->{k[1]}", lw, k[0]) for k, lw in rw.jump.items()]
    if not rw.schedule.is_empty:
        laws += [(f"scheduled state {x}", lw, x) for x, lw in enumerate(rw.scheduled_laws)]
    if rw.external is not None:
        laws += [(f"external state {x}", lw, x) for x, lw in enumerate(rw.external.laws)]
    for label, lw, x in laws:
        for ts, _ in probes:
            try:
                lo, hi = lw.support_bounds(ts, float(x))
            except ExprError as exc:
                return Check("A4 lump support", False, f"{label}: {exc}")
            lo = np.asarray(lo)
            hi = np.asarray(hi)
            if np.any(~np.isfinite(hi)) or np.any(~np.isfinite(lo)):
                return Check("A4 lump support", False, f"{label}: unbounded support")
            if np.any(lo < -1e-12):
                return Check("A4 lump support", False, f"{label}: support reaches below 0")
    return Check("A4 lump support", True, f"{len(laws)} laws supported on bounded subsets of [0, inf)")


def _accrual_check(model: ModelSpec, probes) -> Check:
    ev = model.evaluator
    worst = np.full(model.d, np.inf)
    try:
        for ts, side in probes:
            for t in ts:
                worst = np.minimum(worst, ev.effective_rate(float(t), side))
    except ExprError as exc:
        return Check("A4 positive accrual", False, str(exc), advisory=True)
    ok = bool(np.all(worst > 0))
    msg = "ok" if ok else f"state {int(np.argmin(worst))} accrues no reward (r + gamma = 0); add a deterministic drift to satisfy"
    return Check("A4 positive accrual", ok, msg, advisory=True)
