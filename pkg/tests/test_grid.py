import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from morreylab.families import (FamilyError, GaussianBump, SmoothPlateau,
                                bump_cutoff)
from morreylab.grid import (Ball, Domain, GridError, GridFunction,
                            ball_average, ball_members, ball_spans,
                            derivative_field, lp_norm, read_grid, sample,
                            write_grid)


# ---------------------------------------------------------------------------
# domain invariants

def test_domain_rejects_bad_geometry():
    with pytest.raises(GridError):
        Domain(3, 64, 1.0, 0.25)
    with pytest.raises(GridError):
        Domain(1, 15, 1.0, 0.25)       # odd / too small
    with pytest.raises(GridError):
        Domain(1, 64, 1.0, 1.5)        # margin >= L
    with pytest.raises(GridError):
        Domain(1, 64, 1.0, 0.05)       # margin < 4h


def test_spacing_identity():
    dom = Domain(1, 64, 2.0, 0.25)
    assert dom.points_per_axis * dom.spacing == pytest.approx(2 * dom.half_width)


# ---------------------------------------------------------------------------
# sampling

def test_sample_plateau_peak(dom1):
    u = sample(dom1, SmoothPlateau(1, (0.0,), 0.3, 0.2, 1.0))
    center = dom1.index_of(0.0)
    assert u.values[center[0]] == 1.0


def test_sample_zero_family(dom1):
    u = sample(dom1, GaussianBump(1, (0.0,), 0.25, 0.0))
    assert np.all(u.values == 0.0)


def test_sample_gaussian_cutoff_value():
    # center and the probe sit exactly on grid coordinates, so the sampled
    # value must match the closed form A e^{-1/2} cutoff(1/3) exactly
    dom = Domain(1, 256, 2.0, 0.25)
    h = dom.spacing
    center = h / 2.0
    w = 32 * h  # 0.5
    fam = GaussianBump(1, (center,), w, 1.3)
    u = sample(dom, fam)
    probe = dom.index_of(center + w)
    expected = 1.3 * math.exp(-0.5) * bump_cutoff(1.0 / 3.0)
    assert u.values[probe[0]] == pytest.approx(expected, rel=1e-14)


def test_sample_rejects_margin_violation(dom1):
    with pytest.raises(FamilyError, match="margin"):
        sample(dom1, GaussianBump(1, (0.0,), 0.7, 1.0))  # support 2.1 > 1.75


def test_sample_rejects_frequency(dom1):
    from morreylab.families import ModulatedBump
    with pytest.raises(FamilyError, match="frequency"):
        sample(dom1, ModulatedBump(1, (0.0,), 0.3, 1.0, freq=10.0))


# ---------------------------------------------------------------------------
# derivatives

def test_derivative_order0_is_abs(bump1):
    fld = derivative_field(bump1, 0)
    assert np.array_equal(fld.magnitudes, np.abs(bump1.values))


def test_derivative_linear_plateau(dom1, make_synthetic):
    # u(x) = x inside a plateau; central differences are exact on linears
    plateau = SmoothPlateau(1, (0.0,), 0.5, 0.3, 1.0)
    u = make_synthetic(dom1, lambda pts: pts[:, 0] * plateau.evaluate(pts))
    fld = derivative_field(u, 1)
    inner = np.abs(dom1.axis_coords()) < 0.4
    assert np.allclose(fld.magnitudes[inner], 1.0, atol=1e-12)


def test_derivative_second_order_convergence():
    # |D^2 sin - (-sin)| at a fixed interior point decays like h^2
    errs = []
    for n in (128, 256):
        dom = Domain(1, n, 2.0, 0.25)
        cut = SmoothPlateau(1, (0.0,), 0.9, 0.5, 1.0)
        u = GridFunction(dom, np.sin(dom.points()[:, 0]) * cut.evaluate(dom.points()))
        fld = derivative_field(u, 2)
        x0 = dom.index_of(0.3)[0]
        exact = abs(-math.sin(dom.axis_coords()[x0]))
        errs.append(abs(fld.magnitudes[x0] - exact))
    assert errs[1] < errs[0] / 2.5  # second-order: expect ~4x


@pytest.mark.parametrize("order", [1, 2, 3])
def test_stencil_exactness_on_polynomials(order, make_synthetic):
    dom = Domain(1, 64, 2.0, 0.25)
    coeffs = [0.3, -1.2, 0.7, 0.25][: order + 1]

    def poly(pts):
        x = pts[:, 0]
        return sum(c * x ** i for i, c in enumerate(coeffs))

    u = make_synthetic(dom, poly)
    fld = derivative_field(u, order)
    exact = abs(math.factorial(order) * coeffs[order])
    inner = slice(order + 1, dom.points_per_axis - order - 1)
    assert np.allclose(fld.magnitudes[inner], exact, rtol=1e-10)


def test_stencil_exactness_2d_mixed(make_synthetic, dom2):
    u = make_synthetic(dom2, lambda pts: pts[:, 0] * pts[:, 1])
    fld = derivative_field(u, 2)
    # |D^2 u| = sqrt(2!/1!1!) * 1 = sqrt(2) for u = xy
    mags = fld.magnitudes.reshape(dom2.shape)
    inner = mags[3:-3, 3:-3]
    assert np.allclose(inner, math.sqrt(2.0), rtol=1e-10)


def test_derivative_order_limit(bump1):
    with pytest.raises(GridError):
        derivative_field(bump1, 5)


# ---------------------------------------------------------------------------
# balls

def test_ball_members_1d_count(dom1):
    b = ball_members(dom1, (32,), 2 * dom1.spacing)
    assert b.count == 5
    assert np.array_equal(b.member_indices[:, 0], np.arange(30, 35))


def test_ball_members_2d_count(dom2):
    # oracle: enumerate integer offsets with dx^2 + dy^2 <= 4
    expected = sum(1 for dx in range(-2, 3) for dy in range(-2, 3)
                   if dx * dx + dy * dy <= 4)
    assert expected == 13
    b = ball_members(dom2, (16, 16), 2 * dom2.spacing)
    assert b.count == 13


def test_ball_members_corner_clipped(dom2):
    interior = ball_members(dom2, (16, 16), 2 * dom2.spacing)
    corner = ball_members(dom2, (0, 0), 2 * dom2.spacing)
    assert corner.count < interior.count
    assert all(tuple(m) >= (0, 0) for m in corner.member_indices)


def test_ball_radius_floor(dom1):
    with pytest.raises(GridError):
        ball_members(dom1, (32,), 1.5 * dom1.spacing)


@settings(max_examples=30, deadline=None)
@given(r1=st.floats(2.0, 10.0), extra=st.floats(0.0, 6.0))
def test_ball_monotonicity(r1, extra):
    dom = Domain(2, 32, 1.0, 0.25)
    h = dom.spacing
    b1 = ball_members(dom, (16, 16), r1 * h)
    b2 = ball_members(dom, (16, 16), (r1 + extra) * h)
    s1 = {tuple(m) for m in b1.member_indices}
    s2 = {tuple(m) for m in b2.member_indices}
    assert s1 <= s2


def test_ball_average_constant(dom1):
    u = GridFunction(dom1, np.full(dom1.size, -0.7))
    b = ball_members(dom1, (10,), 3 * dom1.spacing)
    for q in (1.0, 2.0, 3.5):
        assert ball_average(u, b, q) == pytest.approx(0.7, rel=1e-13)


def test_ball_average_three_point_edge(dom1):
    # clipped edge ball has exactly 3 members: values {0, 0, 1}, q=1 -> 1/3
    vals = np.zeros(dom1.size)
    vals[2] = 1.0
    b = ball_members(dom1, (0,), 2 * dom1.spacing)
    assert b.count == 3
    assert ball_average(vals, b, 1.0) == pytest.approx(1.0 / 3.0, rel=1e-15)


def test_ball_average_two_point_arithmetic():
    # direct arithmetic of the q=2 averaging formula on values {3, 4}
    from morreylab._kernels import impl
    g = np.array([9.0, 16.0, 0.0, 0.0])  # |u|^2 grid
    spans = np.array([[0, 1]], dtype=np.int64)
    s, m = impl.ball_sum_point_1d(g, spans, 0)
    assert m == 2
    assert (s / m) ** 0.5 == pytest.approx(math.sqrt(25.0 / 2.0), rel=1e-15)


# ---------------------------------------------------------------------------
# lp norms

def test_lp_norm_constant(dom2):
    u = GridFunction(dom2, np.full(dom2.size, 0.9))
    for p in (1.0, 2.0, 3.0):
        expected = 0.9 * (2 * dom2.half_width) ** (dom2.dim / p)
        assert lp_norm(u, p, dom2) == pytest.approx(expected, rel=1e-12)


def test_lp_norm_zero(dom1):
    assert lp_norm(np.zeros(dom1.size), 2.0, dom1) == 0.0


def test_lp_norm_single_cell(dom1):
    vals = np.zeros(dom1.size)
    vals[7] = 2.5
    for p in (1.0, 2.0):
        assert lp_norm(vals, p, dom1) == pytest.approx(
            2.5 * dom1.spacing ** (1.0 / p), rel=1e-13)


# ---------------------------------------------------------------------------
# translation equivariance

def test_translation_equivariance(bump1):
    dom = bump1.domain
    shifted = bump1.shifted([6])
    shifted.check_margin()
    assert lp_norm(shifted, 2.0, dom) == pytest.approx(
        lp_norm(bump1, 2.0, dom), rel=1e-12)
    b0 = ball_members(dom, (30,), 4 * dom.spacing)
    b1 = ball_members(dom, (36,), 4 * dom.spacing)
    assert ball_average(shifted, b1, 2.0) == pytest.approx(
        ball_average(bump1, b0, 2.0), rel=1e-12)
    f0 = derivative_field(bump1, 1)
    f1 = derivative_field(shifted, 1)
    assert np.allclose(np.roll(f0.magnitudes, 6)[8:-8], f1.magnitudes[8:-8],
                       rtol=1e-12, atol=1e-15)


# ---------------------------------------------------------------------------
# grid dumps

def test_grid_dump_roundtrip(tmp_path, bump2):
    path = tmp_path / "f.grid"
    write_grid(path, bump2)
    back = read_grid(path)
    assert back.domain == bump2.domain
    assert np.array_equal(back.values, bump2.values)


def test_grid_dump_corrupted(tmp_path, bump1):
    path = tmp_path / "f.grid"
    write_grid(path, bump1)
    lines = path.read_text().splitlines()
    path.write_text("\n".join(lines[:-5]) + "\n")   # truncate
    with pytest.raises(GridError):
        read_grid(path)
    path.write_text("not a header\n1.0\n")
    with pytest.raises(GridError):
        read_grid(path)


def test_grid_dump_margin_validation(tmp_path, dom1):
    u = GridFunction(dom1, np.ones(dom1.size))  # violates margin
    path = tmp_path / "ones.grid"
    write_grid(path, u)
    with pytest.raises(GridError):
        read_grid(path)
    back = read_grid(path, validate_margin=False)
    assert np.all(back.values == 1.0)
