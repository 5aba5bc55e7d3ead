import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from morreylab.grid import Domain, GridFunction, ball_average, ball_members
from morreylab.polyfit import (PolyBasis, PolyFitError, best_polynomial,
                               residual_monotonicity_check)


def _dom(n=64):
    return Domain(1, n, 2.0, 0.25)


def _edge_ball_3(dom):
    """Clipped edge ball with exactly 3 members {0, 1, 2}."""
    b = ball_members(dom, (0,), 2 * dom.spacing)
    assert b.count == 3
    return b


def test_basis_sizes():
    assert PolyBasis(1, -1).size == 0
    assert PolyBasis(1, 2).size == 3
    assert PolyBasis(2, 2).size == 6         # C(2+2, 2)
    assert PolyBasis(2, 3).size == 10
    with pytest.raises(PolyFitError):
        PolyBasis(1, 4)


@pytest.mark.parametrize("q", [1, 2])
@pytest.mark.parametrize("deg", [0, 1, 2])
def test_exact_representability(q, deg):
    dom = _dom()
    x = dom.axis_coords()
    coeffs = [0.4, -0.9, 0.3][: deg + 1]
    u = GridFunction(dom, sum(c * x ** i for i, c in enumerate(coeffs)) + 0 * x)
    ball = ball_members(dom, (32,), 10 * dom.spacing)
    fit = best_polynomial(u, ball, deg, q)
    assert fit.residual <= 1e-9
    assert fit.converged


def test_degree_minus_one_is_ball_average():
    dom = _dom()
    rng = np.random.default_rng(3)
    u = GridFunction(dom, rng.standard_normal(dom.size))
    ball = ball_members(dom, (20,), 5 * dom.spacing)
    for q in (1, 2):
        fit = best_polynomial(u, ball, -1, q)
        assert fit.residual == ball_average(u, ball, q)
        assert fit.coefficients.size == 0


def test_l1_constant_fit_is_median():
    # values {0, 0, 1}: the L1-optimal constant is the median 0, residual 1/3
    dom = _dom()
    vals = np.zeros(dom.size)
    vals[2] = 1.0
    ball = _edge_ball_3(dom)
    fit = best_polynomial(GridFunction(dom, vals), ball, 0, 1)
    assert abs(fit.coefficients[0]) <= 1e-6
    # residual accuracy is set by the pinned IRLS stopping rule (1e-8 rel)
    assert fit.residual == pytest.approx(1.0 / 3.0, abs=1e-8)


def test_l2_constant_fit_is_mean():
    dom = _dom()
    vals = np.zeros(dom.size)
    vals[2] = 1.0
    ball = _edge_ball_3(dom)
    fit = best_polynomial(GridFunction(dom, vals), ball, 0, 2)
    assert fit.coefficients[0] == pytest.approx(1.0 / 3.0, rel=1e-12)
    assert fit.residual == pytest.approx(math.sqrt(2.0 / 9.0), rel=1e-12)


def test_monotonicity_trivial_degrees():
    dom = _dom()
    rng = np.random.default_rng(5)
    u = GridFunction(dom, rng.standard_normal(dom.size))
    ball = ball_members(dom, (32,), 6 * dom.spacing)
    for q in (1, 2):
        r0 = best_polynomial(u, ball, 0, q).residual
        assert r0 <= ball_average(u, ball, q) + 1e-9


def test_monotonicity_linear_data():
    dom = _dom()
    x = dom.axis_coords()
    u = GridFunction(dom, 2.0 * x - 0.3)
    ball = ball_members(dom, (40,), 8 * dom.spacing)
    r1 = best_polynomial(u, ball, 1, 2).residual
    r0 = best_polynomial(u, ball, 0, 2).residual
    assert r1 <= 1e-10
    assert r1 <= r0


def test_monotonicity_check_random_smooth():
    dom = _dom()
    x = dom.axis_coords()
    u = GridFunction(dom, np.sin(1.3 * x) + 0.3 * x * x)
    ball = ball_members(dom, (30,), 9 * dom.spacing)
    assert residual_monotonicity_check(u, ball, 0, 2, 1)
    assert residual_monotonicity_check(u, ball, -1, 0, 1)
    assert residual_monotonicity_check(u, ball, 1, 2, 2)


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 10_000), deg=st.integers(0, 2),
       q=st.sampled_from([1, 2]))
def test_feasibility_bound_property(seed, deg, q):
    # the zero polynomial is always feasible: residual <= ball average
    dom = Domain(1, 32, 2.0, 0.5)
    rng = np.random.default_rng(seed)
    u = GridFunction(dom, rng.uniform(-2, 2, dom.size))
    ball = ball_members(dom, (16,), 6 * dom.spacing)
    fit = best_polynomial(u, ball, deg, q)
    assert fit.residual <= ball_average(u, ball, q) * (1 + 1e-9) + 1e-12


def test_basis_scale_invariance():
    dom = _dom()
    rng = np.random.default_rng(11)
    u = GridFunction(dom, rng.standard_normal(dom.size))
    ball = ball_members(dom, (32,), 7 * dom.spacing)
    for q in (1, 2):
        r_default = best_polynomial(u, ball, 2, q).residual
        r_scaled = best_polynomial(u, ball, 2, q,
                                   basis_scale=2 * ball.radius).residual
        assert r_scaled == pytest.approx(r_default, rel=1e-9)


def test_q1_below_l1_error_of_q2_fit():
    dom = _dom()
    rng = np.random.default_rng(7)
    u = GridFunction(dom, rng.standard_normal(dom.size))
    ball = ball_members(dom, (32,), 8 * dom.spacing)
    fit2 = best_polynomial(u, ball, 1, 2)
    # L1 error of the least-squares fit, same basis parameterization
    coords = (ball.member_indices[:, 0] - ball.center_index[0]) * dom.spacing / ball.radius
    X = np.column_stack([np.ones_like(coords), coords])
    vals = u.values[ball.member_flat()]
    l1_of_l2 = float(np.mean(np.abs(vals - X @ fit2.coefficients)))
    fit1 = best_polynomial(u, ball, 1, 1)
    scale = float(np.max(np.abs(vals)))
    assert fit1.residual <= l1_of_l2 + 1e-8 * scale


def test_infeasible_ball_raises():
    dom = _dom()
    ball = _edge_ball_3(dom)   # 3 members
    u = GridFunction(dom, np.zeros(dom.size))
    with pytest.raises(PolyFitError):
        best_polynomial(u, ball, 3, 2)  # basis size 4 > 3
