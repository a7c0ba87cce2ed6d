import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import linalg

from mjpreward.core import ModelSpec, RateEntry, RewardSpec
from mjpreward.models import PRENDIVILLE_DOWN, PRENDIVILLE_UP, prendiville_example, symmetric_two_state, two_state_model
from mjpreward.odesolve import SolverConfig
from mjpreward.transition import (
    mixing_profile,
    prendiville_closed_form,
    transition_matrices,
    transition_matrix,
    two_state_closed_form,
)

TIGHT = SolverConfig("dopri54", rtol=1e-11, atol=1e-13)


# ---------------------------------------------------------------- oracles


def test_symmetric_two_state_at_half_log_two():
    # P(0, t) = (1 +/- e^{-2t}) / 2, so at t = ln2 / 2 the entries are 3/4 and 1/4
    P = transition_matrix(symmetric_two_state(), 0.0, math.log(2) / 2, TIGHT).entries
    np.testing.assert_allclose(P, [[0.75, 0.25], [0.25, 0.75]], atol=1e-12)


def test_constant_rates_match_expm():
    rng = np.random.default_rng(3)
    d = 4
    rates = [RateEntry(i, j, float(rng.uniform(0.5, 2))) for i in range(d) for j in range(d) if i != j]
    model = ModelSpec(d=d, rates=rates, rewards=RewardSpec(rate=(0.0,) * d))
    Q = model.evaluator.generator(0.0)
    P = transition_matrix(model, 0.5, 1.7, TIGHT).entries
    np.testing.assert_allclose(P, linalg.expm(1.2 * Q), atol=1e-11)


@pytest.mark.parametrize("s, t", [(0.0, 0.5), (0.3, 2.1), (1.25, 4.0), (3.0, 3.01)])
def test_two_state_closed_form_matches_ode(s, t):
    lam, mu = PRENDIVILLE_UP, PRENDIVILLE_DOWN
    cf = two_state_closed_form(lam, mu, s, t).entries
    num = transition_matrix(two_state_model(lam, mu), s, t, TIGHT).entries
    np.testing.assert_allclose(cf, num, atol=1e-9)


@pytest.mark.parametrize("x", [0, 4, 10])
def test_prendiville_closed_form_matches_ode(x):
    model = prendiville_example()
    row = prendiville_closed_form(11, PRENDIVILLE_UP, PRENDIVILLE_DOWN, 0.4, 2.3, x)
    num = transition_matrix(model, 0.4, 2.3, TIGHT).entries[x]
    np.testing.assert_allclose(row, num, atol=1e-9)


def test_mixing_symmetric_two_state():
    us, tv = mixing_profile(symmetric_two_state(), 0.0, 2.0, 0.5, TIGHT)
    np.testing.assert_allclose(tv, 2 * np.exp(-2 * us), atol=1e-9)


def test_mixing_single_state_is_zero():
    model = ModelSpec(d=1, rates=(), rewards=RewardSpec(rate=(1.0,)))
    _, tv = mixing_profile(model, 0.0, 1.0, 0.25)
    assert np.all(tv == 0.0)


# ---------------------------------------------------------------- properties


def test_rows_are_probability_vectors():
    mats = transition_matrices(prendiville_example(), 0.0, [0.5, 1.0, 5.0], TIGHT)
    for m in mats:
        np.testing.assert_allclose(m.entries.sum(axis=1), 1.0, atol=1e-10)
        assert np.all(m.entries >= 0)


def test_identity_at_equal_times():
    np.testing.assert_array_equal(transition_matrix(prendiville_example(), 1.0, 1.0).entries, np.eye(11))


def test_mixing_profile_is_non_increasing():
    _, tv = mixing_profile(prendiville_example(), 0.0, 3.0, 0.25, TIGHT)
    assert np.all(np.diff(tv) <= 1e-12)


@settings(max_examples=15, deadline=None)
@given(st.floats(0, 2), st.floats(0.01, 1.5), st.floats(0.01, 1.5))
def test_chapman_kolmogorov(s, a, b):
    model = two_state_model(PRENDIVILLE_UP, PRENDIVILLE_DOWN)
    u, t = s + a, s + a + b
    P_su = transition_matrix(model, s, u, TIGHT).entries
    P_ut = transition_matrix(model, u, t, TIGHT).entries
    P_st = transition_matrix(model, s, t, TIGHT).entries
    np.testing.assert_allclose(P_su @ P_ut, P_st, atol=1e-9)


def test_bad_arguments():
    with pytest.raises(ValueError):
        transition_matrices(symmetric_two_state(), 1.0, [0.5])
    with pytest.raises(ValueError):
        two_state_closed_form(1.0, 1.0, 1.0, 0.5)
    with pytest.raises(ValueError):
        prendiville_closed_form(3, 1.0, 1.0, 0.0, 1.0, 5)
