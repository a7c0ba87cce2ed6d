"""Built-in example models.

The three queueing/switching examples plus a few small models that have
closed-form answers and are handy for testing.
"""

from __future__ import annotations

import math

import numpy as np
from scipy import stats

from .core import (
    BetaComponent,
    BetaSum,
    BreakpointSet,
    Deterministic,
    ExternalSpec,
    InitialDistribution,
    ModelSpec,
    RateEntry,
    RewardSpec,
    ScheduleSpec,
    SimBounds,
)
from .exprlang import TimeFunction

__all__ = [
    "PRENDIVILLE_UP",
    "PRENDIVILLE_DOWN",
    "prendiville_example",
    "mm1k_example",
    "multiserver_example",
    "two_state_model",
    "symmetric_two_state",
    "periodic_two_state",
    "poisson_model",
    "BUILTINS",
    "builtin",
]

# per-switch rates of the Prendiville ensemble
PRENDIVILLE_UP = "2 + 0.5*sin(2*pi*t)"
PRENDIVILLE_DOWN = "3 - 2*exp(-t/4)"


def _birth_death(d, up, down):
    rates = []
    for x in range(d - 1):
        rates.append(RateEntry(x, x + 1, up))
        rates.append(RateEntry(x + 1, x, down))
    return rates


def prendiville_example(n_switches: int = 10) -> ModelSpec:
    """Ensemble of ``n_switches`` independent two-state switches; state = number switched on."""
    d = n_switches + 1
    n = n_switches
    up = TimeFunction(f"({n} - x)*({PRENDIVILLE_UP})")
    down = TimeFunction(f"x*({PRENDIVILLE_DOWN})")
    sawtooth = TimeFunction("x*(7*t - floor(7*t)) + 0.1", period=1.0, per_period=tuple(k / 7 for k in range(7)))
    rates = _birth_death(d, up, down)
    jump = {}
    for x in range(d - 1):
        jump[(x, x + 1)] = Deterministic(1.0)
        jump[(x + 1, x)] = Deterministic(5.0)
    beta = TimeFunction("0.25*(2 + sin(2*pi*t))")
    laws = []
    for x in range(d):
        comps = [BetaComponent(2.0, 5.0, 3.0)] * x + [BetaComponent(2.0, 5.0, 6.0)] * (n - x)
        laws.append(BetaSum(2.0, tuple(comps)))
    rewards = RewardSpec(
        rate=(sawtooth,) * d,
        jump=jump,
        schedule=ScheduleSpec.arithmetic(5.0, 5.0),
        scheduled_laws=tuple(Deterministic("x") for _ in range(d)),
        external=ExternalSpec((beta,) * d, tuple(laws)),
    )
    # sup of exit rate: (n-x)*2.5 + x*3
    lam_bar = tuple(2.5 * (n - x) + 3.0 * x for x in range(d))
    return ModelSpec(
        d=d,
        rates=rates,
        rewards=rewards,
        initial=InitialDistribution.point(0),
        breakpoints=BreakpointSet(period=1.0, per_period=tuple(k / 7 for k in range(7))),
        bounds=SimBounds(lam_bar, (0.75,) * d),
        name="prendiville",
    )


MM1K_ARRIVAL = "12 + 10*sin(pi*t)"
MM1K_SERVICE = "25 + 10*sin(pi/3*(t - 1/4))"


def mm1k_example(capacity: int = 30) -> ModelSpec:
    """Single-server queue with sinusoidal arrival and service rates and finite capacity."""
    d = capacity + 1
    lam0 = 12.0
    mu0 = 25.0 + 10.0 * math.sin(-math.pi / 12.0)
    rewards = RewardSpec(rate=(TimeFunction("x + 1"),) * d)
    lam_bar = tuple(22.0 * (x < capacity) + 35.0 * (x > 0) for x in range(d))
    return ModelSpec(
        d=d,
        rates=_birth_death(d, MM1K_ARRIVAL, MM1K_SERVICE),
        rewards=rewards,
        initial=InitialDistribution.truncated_geometric(lam0 / mu0),
        bounds=SimBounds(lam_bar, (0.0,) * d),
        period=6.0,
        name="mm1k",
    )


MULTISERVER_ARRIVAL = "35 + 10*cos(2*pi/3*t) + 10*cos(4*pi/3*(t + 3/8)) + min(t, 36)"
# shift index k = floor(t) mod 3 selects 30, 20, 25 servers
_SHIFT = "(floor(t) - 3*floor(floor(t)/3))"
MULTISERVER_SERVERS = f"(30 - 17.5*{_SHIFT} + 7.5*{_SHIFT}^2)"
MULTISERVER_SERVICE = "(4 - (t - floor(t))/3)"


def multiserver_stationary(capacity: int = 80, servers: int = 30, lam: float = 45.0, mu: float = 4.0) -> np.ndarray:
    """Stationary law of the M/M/c/K queue used as the initial distribution."""
    x = np.arange(capacity + 1)
    death = mu * np.minimum(x, servers).astype(float)
    logp = np.zeros(capacity + 1)
    logp[1:] = np.cumsum(np.log(lam) - np.log(death[1:]))
    p = np.exp(logp - logp.max())
    return p / p.sum()


def multiserver_example(capacity: int = 80) -> ModelSpec:
    """Multi-server queue with shift-dependent staffing and fatigue-degraded service."""
    d = capacity + 1
    up = TimeFunction(MULTISERVER_ARRIVAL)
    down = TimeFunction(f"min(x, {MULTISERVER_SERVERS})*{MULTISERVER_SERVICE}")
    rates = _birth_death(d, up, down)
    rewards = RewardSpec(rate=(TimeFunction("x + 1"),) * d)
    lam_bar = tuple(91.0 * (x < capacity) + 4.0 * min(x, 30) for x in range(d))
    return ModelSpec(
        d=d,
        rates=rates,
        rewards=rewards,
        initial=InitialDistribution.pmf(multiserver_stationary(capacity)),
        breakpoints=BreakpointSet(points=(36.0,), period=1.0, per_period=(0.0,)),
        bounds=SimBounds(lam_bar, (0.0,) * d),
        name="multiserver",
    )


def two_state_model(lam, mu, r0=1.0, r1=0.0, initial=0, period=None, name="two_state") -> ModelSpec:
    """Two-state chain with rates ``lam`` (0->1) and ``mu`` (1->0) and reward rates ``(r0, r1)``."""
    lam = TimeFunction.coerce(lam)
    mu = TimeFunction.coerce(mu)
    init = InitialDistribution.point(initial) if isinstance(initial, (int, np.integer)) else InitialDistribution.pmf(initial)
    bounds = None
    if lam.is_constant and mu.is_constant:
        bounds = SimBounds((float(lam(0.0)), float(mu(0.0))), (0.0, 0.0))
    return ModelSpec(
        d=2,
        rates=(RateEntry(0, 1, lam), RateEntry(1, 0, mu)),
        rewards=RewardSpec(rate=(TimeFunction.coerce(r0), TimeFunction.coerce(r1))),
        initial=init,
        bounds=bounds,
        period=period,
        name=name,
    )


def symmetric_two_state(initial=0) -> ModelSpec:
    """Rates 1 in both directions, reward rate 1 in state 0 only."""
    m = two_state_model(1.0, 1.0, initial=initial, period=1.0, name="symmetric_two_state")
    return m


def periodic_two_state() -> ModelSpec:
    """``lam(t) = 2 + sin(2 pi t)``, ``mu = 3``, reward rate 1 in state 0."""
    m = two_state_model("2 + sin(2*pi*t)", 3.0, period=1.0, name="periodic_two_state")
    from dataclasses import replace

    return replace(m, bounds=SimBounds((3.0, 3.0), (0.0, 0.0)))


def poisson_model(beta: float = 2.0, lump: float = 1.0) -> ModelSpec:
    """One state, no transitions, external rewards of size ``lump`` at rate ``beta``."""
    rewards = RewardSpec(
        rate=(TimeFunction.constant(0.0),),
        external=ExternalSpec((TimeFunction.constant(beta),), (Deterministic(lump),)),
    )
    return ModelSpec(
        d=1,
        rates=(),
        rewards=rewards,
        bounds=SimBounds((0.0,), (beta,)),
        period=1.0,
        name="poisson",
    )


BUILTINS = {
    "prendiville": prendiville_example,
    "mm1k": mm1k_example,
    "multiserver": multiserver_example,
    "symmetric_two_state": symmetric_two_state,
    "periodic_two_state": periodic_two_state,
    "poisson": poisson_model,
}


def builtin(name: str, **params) -> ModelSpec:
    try:
        factory = BUILTINS[name]
    except KeyError:
        raise KeyError(f"unknown builtin model {name!r}; choose from {sorted(BUILTINS)}") from None
    return factory(**params)
