import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mjpreward.odesolve import Segmentation, SolverConfig, SolverError, integrate_backward, integrate_forward


def growth(t, y, side):
    return y


# ---------------------------------------------------------------- oracles


@pytest.mark.parametrize(
    "config, tol",
    [
        (SolverConfig("rk4", h=1e-3), 1e-12),
        (SolverConfig("dopri54", rtol=1e-11, atol=1e-13), 1e-10),
        (SolverConfig("rk2", h=1e-4), 1e-8),
        (SolverConfig("euler", h=1e-5), 1e-4),
    ],
)
def test_backward_exponential(config, tol):
    # backward convention: y(t - h) = y(t) + h y, so y(0) = e^T y(T)
    sol = integrate_backward(growth, [1.0], Segmentation.build(0.0, 2.0, h=config.h), None, config)
    assert sol.values[0, 0] == pytest.approx(math.exp(2.0), rel=tol)
    assert sol.times[0] == 0.0 and sol.times[-1] == 2.0


@pytest.mark.parametrize("method, order", [("euler", 1), ("rk2", 2), ("rk4", 4)])
def test_empirical_order_on_smooth_problem(method, order):
    def field(t, y, side):
        return np.array([math.cos(t) * y[0]])

    exact = math.exp(math.sin(1.0))
    errs = []
    hs = [2.0**-k for k in range(3, 7)]
    for h in hs:
        sol = integrate_backward(field, [1.0], Segmentation.build(0.0, 1.0, h=h), None, SolverConfig(method, h=h), record=False)
        errs.append(abs(sol.values[0, 0] - exact))
    slope = np.polyfit(np.log(hs), np.log(errs), 1)[0]
    assert slope == pytest.approx(order, abs=0.3)


def test_one_sided_evaluation_integrates_step_exactly():
    # field jumps from 0 to 1 at t = 0.5; with the breakpoint declared every
    # stage sees the correct branch and the integral is exact
    def field(t, y, side):
        on = t > 0.5 or (t == 0.5 and side == "right")
        return np.array([1.0 if on else 0.0])

    seg = Segmentation.build(0.0, 1.0, [0.5], h=0.3)
    sol = integrate_backward(field, [0.0], seg, None, SolverConfig("rk4", h=0.3))
    assert sol.values[0, 0] == pytest.approx(0.5, abs=1e-15)


def test_jumps_applied_once_per_interior_boundary():
    seg = Segmentation.build(0.0, 3.0, [1.0, 2.0], h=0.25)
    sol = integrate_backward(lambda t, y, s: np.zeros(1), [0.0], seg, lambda t, y: y + t, SolverConfig("rk4", h=0.25))
    assert sol.values[0, 0] == pytest.approx(3.0)
    assert sol.right_limits[2.0][0] == 0.0 and sol.right_limits[1.0][0] == 2.0


def test_forward_cosine():
    sol = integrate_forward(lambda t, y, s: np.array([math.cos(t)]), [0.0], Segmentation.build(0.0, 3.0, h=1e-2), SolverConfig("rk4", h=1e-2))
    assert sol.values[-1, 0] == pytest.approx(math.sin(3.0), abs=1e-9)


def test_dense_output_matches_exact():
    sol = integrate_backward(growth, [1.0], Segmentation.build(0.0, 2.0), None, SolverConfig("dopri54", rtol=1e-10, atol=1e-12), dense=True)
    for t in [0.13, 0.77, 1.5]:
        assert sol(t)[0] == pytest.approx(math.exp(2.0 - t), rel=1e-8)


# ---------------------------------------------------------------- behaviour


def test_substeps_tile_segments():
    seg = Segmentation.build(0.0, 1.0, [0.3], h=0.1)
    assert seg.substeps(0) == (3, pytest.approx(0.1))
    n, h = seg.substeps(1)
    assert n == 7 and n * h == pytest.approx(0.7)


def test_fixed_step_count():
    seg = Segmentation.build(0.0, 1.0, [1 / 3], h=0.1)
    sol = integrate_backward(growth, [1.0], seg, None, SolverConfig("rk4", h=0.1))
    assert sol.n_steps == 4 + 7
    assert len(sol.times) == 12


def test_nonfinite_field_raises():
    with pytest.raises(SolverError):
        integrate_backward(lambda t, y, s: np.array([np.nan]), [1.0], Segmentation.build(0.0, 1.0, h=0.1), None, SolverConfig("rk4", h=0.1))


def test_blow_up_raises_for_adaptive():
    with pytest.raises(SolverError):
        integrate_backward(lambda t, y, s: y**2, [1.0], Segmentation.build(0.0, 2.0), None, SolverConfig("dopri54"))


@pytest.mark.parametrize("kwargs", [dict(method="rk3"), dict(h=0.0), dict(rtol=-1.0), dict(h_max=0.0)])
def test_bad_config(kwargs):
    with pytest.raises(ValueError):
        SolverConfig(**kwargs)


@settings(max_examples=30, deadline=None)
@given(st.lists(st.floats(0.01, 0.99), max_size=6), st.floats(1e-3, 0.5))
def test_linear_field_exact_for_any_segmentation(points, h):
    # y' = -1 backward gives y(0) = y(1) + 1 for every method and grid
    seg = Segmentation.build(0.0, 1.0, points, h=h)
    for method in ["euler", "rk2", "rk4", "dopri54"]:
        sol = integrate_backward(lambda t, y, s: np.ones(1), [0.0], seg, None, SolverConfig(method, h=h), record=False)
        assert sol.values[0, 0] == pytest.approx(1.0, abs=1e-12)
