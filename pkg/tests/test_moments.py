import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import linalg, stats

from mjpreward.core import (
    BetaComponent,
    BetaSum,
    Deterministic,
    ExternalSpec,
    ModelSpec,
    RateEntry,
    RewardSpec,
    ScheduleSpec,
    beta_law,
)
from mjpreward.models import (
    PRENDIVILLE_DOWN,
    PRENDIVILLE_UP,
    poisson_model,
    prendiville_example,
    symmetric_two_state,
    two_state_model,
)
from mjpreward.moments import effective_rate, solve_mean, solve_moments
from mjpreward.odesolve import SolverConfig

TIGHT = SolverConfig("dopri54", rtol=1e-11, atol=1e-13)


def _expm_moments(Q, r, t):
    """First and second moments of int_0^t r(X) by Van Loan block exponentials."""
    d = len(Q)
    A = np.zeros((2 * d + 1, 2 * d + 1))
    A[:d, :d] = Q
    A[:d, d : 2 * d] = np.diag(r)
    A[d : 2 * d, d : 2 * d] = Q
    A[d : 2 * d, 2 * d] = r
    E = linalg.expm(A * t)
    m = E[d : 2 * d, 2 * d]
    v = 2.0 * E[:d, 2 * d]
    return m, v


# ---------------------------------------------------------------- oracles


def test_symmetric_two_state_mean():
    # E R(1) = int_0^1 (1 + e^{-2u}) / 2 du
    sol = solve_moments(symmetric_two_state(), 1.0, TIGHT)
    assert sol.mean == pytest.approx(0.5 + (1 - math.exp(-2)) / 4, abs=1e-12)
    assert f"{sol.mean:.6f}" == "0.716166"


@pytest.mark.parametrize("t", [0.5, 2.0, 7.0])
def test_constant_chain_matches_van_loan(t):
    rng = np.random.default_rng(11)
    d = 3
    rates = [RateEntry(i, j, float(rng.uniform(0.2, 3))) for i in range(d) for j in range(d) if i != j]
    r = rng.uniform(0, 2, d)
    model = ModelSpec(d=d, rates=rates, rewards=RewardSpec(rate=tuple(float(v) for v in r)))
    m_ref, v_ref = _expm_moments(model.evaluator.generator(0.0), r, t)
    sol = solve_moments(model, t, TIGHT)
    np.testing.assert_allclose(sol.m[0], m_ref, rtol=1e-9)
    np.testing.assert_allclose(sol.v[0], v_ref, rtol=1e-9)
    mu = model.mu
    assert sol.variance == pytest.approx(mu @ v_ref - (mu @ m_ref) ** 2, rel=1e-8)


def test_poisson_external_rewards():
    sol = solve_moments(poisson_model(), 4.0, TIGHT)
    assert sol.mean == pytest.approx(8.0, abs=1e-9)
    assert sol.variance == pytest.approx(8.0, abs=1e-9)


def test_compound_poisson_with_beta_lumps():
    # Var of compound Poisson is beta * t * E K^2
    law = BetaSum(2.0, (BetaComponent(2, 5, 3.0), BetaComponent(2, 5, 6.0)))
    model = ModelSpec(d=1, rates=(), rewards=RewardSpec(rate=(0.0,), external=ExternalSpec((1.5,), (law,))))
    sol = solve_moments(model, 3.0, TIGHT)
    assert sol.mean == pytest.approx(4.5 * law.mean(0.0), rel=1e-10)
    assert sol.variance == pytest.approx(4.5 * law.second_moment(0.0), rel=1e-10)


@pytest.mark.parametrize("horizon, n_lumps", [(0.9, 2), (1.0, 3), (1.2, 3)])
def test_scheduled_lumps_only(horizon, n_lumps):
    # lumps at 0.25, 0.5, ... are independent Beta draws; one at the horizon counts
    law = beta_law(2.0, 3.0, scale=4.0, shift=1.0)
    model = ModelSpec(
        d=1,
        rates=(),
        rewards=RewardSpec(rate=(0.0,), schedule=ScheduleSpec.explicit([0.25, 0.5, 1.0]), scheduled_laws=(law,)),
    )
    ref = stats.beta(2.0, 3.0, loc=1.0, scale=4.0)
    sol = solve_moments(model, horizon, TIGHT)
    assert sol.mean == pytest.approx(n_lumps * ref.mean(), rel=1e-12)
    assert sol.variance == pytest.approx(n_lumps * ref.var(), rel=1e-12)


def test_ensemble_equals_sum_of_independent_switches():
    # ten independent switches with reward 1 while on
    n = 10
    single = two_state_model(PRENDIVILLE_UP, PRENDIVILLE_DOWN, r0=0.0, r1=1.0)
    rates = []
    for x in range(n):
        rates.append(RateEntry(x, x + 1, f"({n} - x)*({PRENDIVILLE_UP})"))
        rates.append(RateEntry(x + 1, x, f"x*({PRENDIVILLE_DOWN})"))
    ens = ModelSpec(d=n + 1, rates=rates, rewards=RewardSpec(rate=("x",) * (n + 1)))
    a = solve_moments(single, 3.0, TIGHT)
    b = solve_moments(ens, 3.0, TIGHT)
    assert b.mean == pytest.approx(n * a.mean, rel=1e-9)
    assert b.variance == pytest.approx(n * a.variance, rel=1e-8)


def test_two_state_jump_counts():
    # jump reward 1 on 0->1 counts up-crossings: E = int_0^t lam P(X_u = 0) du
    model = two_state_model(2.0, 3.0, r0=0.0, r1=0.0)
    model = ModelSpec(d=2, rates=model.rates, rewards=RewardSpec(rate=(0.0, 0.0), jump={(0, 1): Deterministic(1.0)}))
    t = 1.5
    # P(X_u = 0) = 3/5 + 2/5 e^{-5u}
    exact = 2.0 * (0.6 * t + 0.4 * (1 - math.exp(-5 * t)) / 5)
    assert solve_moments(model, t, TIGHT).mean == pytest.approx(exact, rel=1e-10)


# ---------------------------------------------------------------- behaviour


def test_prendiville_reference_values():
    sol = solve_moments(prendiville_example(), 1.0, TIGHT, record=False)
    assert sol.mean == pytest.approx(50.0748246, abs=1e-6)


def test_stable_variance_matches_difference_route():
    sol = solve_moments(prendiville_example(), 6.0, TIGHT)
    assert sol.variance == pytest.approx(sol.variance_by_difference(), rel=1e-8)


def test_solve_mean_matches_stacked_solve():
    model = prendiville_example()
    _, m = solve_mean(model, 6.0, TIGHT)
    sol = solve_moments(model, 6.0, TIGHT)
    np.testing.assert_allclose(m[0], sol.m[0], rtol=1e-10)


def test_shifted_start_and_custom_law():
    model = prendiville_example()
    mu = np.full(11, 1 / 11)
    sol = solve_moments(model, 3.0, TIGHT, start=1.0, mu=mu)
    assert sol.times[0] == 1.0
    assert sol.mean == pytest.approx(mu @ sol.m[0])


def test_rows_layout():
    sol = solve_moments(symmetric_two_state(), 1.0, SolverConfig("rk4", h=0.1))
    rows = sol.to_rows()
    assert rows.shape == (11, 1 + 2 + 2 + 1)
    assert np.all(np.diff(rows[:, 0]) > 0)
    np.testing.assert_allclose(rows[-1, 1:], 0.0)


def test_zero_reward_model():
    model = two_state_model(1.0, 1.0, r0=0.0, r1=0.0)
    sol = solve_moments(model, 2.0, TIGHT)
    assert sol.mean == 0.0 and sol.variance == 0.0


def test_effective_rate_includes_lumps():
    model = prendiville_example()
    g = effective_rate(model, 0.0)
    ev = model.evaluator
    # state 0: rate reward 0.1, up-jumps at 10*2 with reward 1, external 0.5 * E K
    ek = 2 + 10 * 6 * 2 / 7
    assert g[0] == pytest.approx(0.1 + 20.0 + 0.5 * ek)


def test_horizon_must_exceed_start():
    with pytest.raises(ValueError):
        solve_moments(symmetric_two_state(), 1.0, start=1.0)


@settings(max_examples=25, deadline=None)
@given(
    st.lists(st.floats(0.1, 5), min_size=6, max_size=6),
    st.lists(st.floats(0, 3), min_size=3, max_size=3),
    st.floats(0.1, 4),
)
def test_variance_non_negative_and_consistent(q, r, t):
    rates = [RateEntry(i, j, q[k]) for k, (i, j) in enumerate([(0, 1), (0, 2), (1, 0), (1, 2), (2, 0), (2, 1)])]
    model = ModelSpec(d=3, rates=rates, rewards=RewardSpec(rate=tuple(r)))
    sol = solve_moments(model, t, TIGHT, record=False)
    assert sol.variance >= -1e-12
    assert sol.variance == pytest.approx(sol.variance_by_difference(), abs=1e-8 * max(1.0, sol.second_moment))
    m_ref, _ = _expm_moments(model.evaluator.generator(0.0), np.array(r), t)
    np.testing.assert_allclose(sol.m[0], m_ref, rtol=1e-8, atol=1e-12)
