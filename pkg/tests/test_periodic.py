import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mjpreward.models import mm1k_example, periodic_two_state, poisson_model, prendiville_example, symmetric_two_state, two_state_model
from mjpreward.moments import solve_moments
from mjpreward.odesolve import SolverConfig
from mjpreward.periodic import PeriodicError, periodic_clt_approx, solve_periodic


def _stationary_two_state(lam, mu, r0, r1):
    """alpha and sigma2 of a constant-rate two-state chain."""
    s = lam + mu
    alpha = (mu * r0 + lam * r1) / s
    sigma2 = 2 * lam * mu * (r0 - r1) ** 2 / s**3
    return alpha, sigma2


# ---------------------------------------------------------------- oracles


def test_symmetric_two_state_constants():
    c = solve_periodic(symmetric_two_state())
    assert c.alpha == pytest.approx(0.5, abs=1e-10)
    assert c.sigma2 == pytest.approx(0.25, abs=1e-6)
    np.testing.assert_allclose(c.pi0, [0.5, 0.5], atol=1e-12)


@settings(max_examples=15, deadline=None)
@given(st.floats(0.2, 5), st.floats(0.2, 5), st.floats(0, 3), st.floats(0, 3))
def test_constant_two_state_constants(lam, mu, r0, r1):
    c = solve_periodic(two_state_model(lam, mu, r0, r1, period=1.0), grid_n=64)
    alpha, sigma2 = _stationary_two_state(lam, mu, r0, r1)
    assert c.alpha == pytest.approx(alpha, rel=1e-10, abs=1e-12)
    assert c.sigma2 == pytest.approx(sigma2, rel=1e-6, abs=1e-10)


def test_poisson_constants():
    c = solve_periodic(poisson_model())
    assert c.alpha == pytest.approx(2.0, abs=1e-12)
    assert c.sigma2 == pytest.approx(2.0, abs=1e-9)


def test_periodic_two_state_long_run():
    model = periodic_two_state()
    c = solve_periodic(model)
    tight = SolverConfig("dopri54", rtol=1e-11, atol=1e-13)
    e16 = solve_moments(model, 16.0, tight, record=False).mean
    e32 = solve_moments(model, 32.0, tight, record=False).mean
    assert (e32 - e16) / 16 == pytest.approx(c.alpha, abs=1e-4)
    v = solve_moments(model, 128.0, tight, record=False).variance
    assert v / 128 == pytest.approx(c.sigma2, rel=0.05)


def test_period_other_than_one_is_rescaled():
    # MM1K has period 6; constants are per period of the original model
    model = mm1k_example()
    c = solve_periodic(model, grid_n=256)
    assert c.period == 6.0
    tight = SolverConfig("dopri54", rtol=1e-10, atol=1e-12)
    e = [solve_moments(model, t, tight, record=False).mean for t in (24.0, 48.0)]
    assert (e[1] - e[0]) / 4 == pytest.approx(c.alpha, rel=1e-6)


# ---------------------------------------------------------------- invariants


def test_residuals_and_shapes():
    c = solve_periodic(periodic_two_state(), grid_n=128)
    assert c.seam_residual <= 1e-7
    assert c.fredholm_residual <= 1e-9
    assert c.poisson_residual <= 1e-8
    assert abs(c.pi0 @ c.k) <= 1e-12
    assert c.rho.shape == (129, 2) and c.grid[-1] == 1.0
    # rho(1) = k
    np.testing.assert_allclose(c.rho[-1], c.k, atol=1e-12)


def test_json_keys():
    doc = solve_periodic(symmetric_two_state(), grid_n=16).to_json()
    assert set(doc) == {"alpha", "sigma2", "period", "pi0", "k", "seam_residual", "fredholm_residual"}


def test_clt_approx_is_centred():
    c = solve_periodic(symmetric_two_state(), grid_n=16)
    assert periodic_clt_approx(c, 100.0, 50.0) == pytest.approx(0.5, abs=1e-9)


def test_non_periodic_model_rejected():
    with pytest.raises(PeriodicError):
        solve_periodic(prendiville_example())


def test_non_unique_stationary_law_rejected():
    # with a negligible rate P(0, 1) is the identity
    from mjpreward.core import ModelSpec, RateEntry, RewardSpec

    broken = ModelSpec(d=2, rates=(RateEntry(0, 1, 1e-300),), rewards=RewardSpec(rate=(1.0, 0.0)), period=1.0)
    with pytest.raises(PeriodicError):
        solve_periodic(broken, grid_n=8)
