import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mjpreward.cltapprox import coverage_study, normal_approx_cdf, normal_quantile
from mjpreward.models import periodic_two_state, poisson_model


# ---------------------------------------------------------------- oracles


@pytest.mark.parametrize("p, z", [(0.5, 0.0), (0.975, 1.959963984540054), (0.05, -1.6448536269514722)])
def test_standard_normal_quantiles(p, z):
    assert normal_quantile(0.0, 1.0, p) == pytest.approx(z, abs=1e-12)


def test_quantile_scaling():
    assert normal_quantile(10.0, 4.0, 0.975) == pytest.approx(10 + 2 * 1.959963984540054)


@settings(max_examples=100, deadline=None)
@given(st.floats(-1e3, 1e3), st.floats(1e-3, 1e4), st.sampled_from([0.01, 0.05, 0.1, 0.25, 0.5, 0.75, 0.9, 0.95, 0.99]))
def test_cdf_inverts_quantile(m, v, p):
    assert normal_approx_cdf(m, v, normal_quantile(m, v, p)) == pytest.approx(p, abs=1e-9)


@pytest.mark.parametrize("p, var", [(0.0, 1.0), (1.0, 1.0), (0.5, 0.0)])
def test_bad_arguments(p, var):
    with pytest.raises(ValueError):
        normal_quantile(0.0, var, p)


# ---------------------------------------------------------------- coverage


def test_coverage_table_structure_and_monotonicity():
    levels = [0.05, 0.25, 0.5, 0.75, 0.95]
    table = coverage_study(periodic_two_state(), [4.0, 8.0], levels, 2000, seed=3)
    assert len(table.rows) == 10
    for t in (4.0, 8.0):
        cov = [table.row(t, p).coverage for p in levels]
        assert all(a <= b for a, b in zip(cov, cov[1:]))
        for p in levels:
            r = table.row(t, p)
            # binomial CI from the estimate itself
            assert r.ci_halfwidth == pytest.approx(1.96 * np.sqrt(r.coverage * (1 - r.coverage) / 2000))
            assert abs(r.coverage - p) < 0.05
    text = table.format().splitlines()
    assert len(text) == 11


def test_coverage_is_deterministic_across_workers():
    a = coverage_study(poisson_model(), [4.0], [0.1, 0.5, 0.9], 3000, seed=1, workers=1)
    b = coverage_study(poisson_model(), [4.0], [0.1, 0.5, 0.9], 3000, seed=1, workers=2)
    assert a.rows == b.rows


def test_empty_levels_rejected():
    with pytest.raises(ValueError):
        coverage_study(poisson_model(), [4.0], [], 10)
