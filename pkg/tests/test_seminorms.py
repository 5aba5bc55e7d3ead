import math

import numpy as np
import pytest

import morreylab.seminorms as sn
from morreylab.families import GaussianBump
from morreylab.grid import (Domain, GridFunction, ball_average, ball_members,
                            derivative_field, lp_norm, sample)
from morreylab.seminorms import (INF, CenterGrid, RadiusGrid, bmo_seminorm,
                                 campanato_seminorm, gagliardo_energy,
                                 gagliardo_pointwise, localized_maximal,
                                 maximal_function, morrey_norm,
                                 morrey_norm_detail, riesz_potential,
                                 riesz_potential_radial, sobolev_energy)


def _const(dom, c):
    return GridFunction(dom, np.full(dom.size, float(c)))


# ---------------------------------------------------------------------------
# radius and center grids

def test_radius_grid_geometry(dom1):
    rg = RadiusGrid.build(dom1, 1.0)
    assert rg.count >= 8
    assert rg.r_min == 2 * dom1.spacing
    assert rg.r_max < 1.0
    ratios = np.diff(np.log(np.asarray(rg.radii)))
    assert np.all(ratios <= math.log(math.sqrt(2.0)) + 1e-12)


def test_radius_grid_rejects_tiny_rho(dom1):
    from morreylab.grid import GridError
    with pytest.raises(GridError):
        RadiusGrid.build(dom1, dom1.spacing)


def test_radius_grid_inf_reaches_diameter(dom2):
    rg = RadiusGrid.build(dom2, INF)
    assert rg.r_max == pytest.approx(dom2.diameter)


# ---------------------------------------------------------------------------
# Morrey

def test_morrey_constant_lambda0(dom1):
    u = _const(dom1, 0.8)
    for rho in (0.5, 1.0, INF):
        assert morrey_norm(u, 1, 0.0, rho) == pytest.approx(0.8, rel=1e-12)
        assert morrey_norm(u, 2, 0.0, rho) == pytest.approx(0.8, rel=1e-12)


def test_morrey_constant_positive_lambda(dom1):
    u = _const(dom1, 0.6)
    rg = RadiusGrid.build(dom1, 1.0)
    got = morrey_norm(u, 1, 0.7, 1.0, rg)
    assert got == pytest.approx(rg.r_max ** 0.7 * 0.6, rel=1e-12)


def test_morrey_detail_argmax(bump1):
    det = morrey_norm_detail(bump1, 1, 0.5, 1.0)
    assert det.value > 0
    assert det.argmax_radius is not None
    assert len(det.argmax_center) == 1


def test_morrey_dilation_scaling():
    # ||u_s||_{lam} ~ s^lam ||u||_{lam} for the homogeneous (rho=inf) norm
    dom = Domain(1, 256, 2.0, 0.25)
    fam = GaussianBump(1, (0.0,), 0.2, 1.0)
    lam = 1.0
    u = sample(dom, fam)
    u2 = sample(dom, fam.dilated(2.0))
    n1 = morrey_norm(u, 1, lam, INF)
    n2 = morrey_norm(u2, 1, lam, INF)
    assert n2 / n1 == pytest.approx(2.0 ** lam, rel=0.05)


# ---------------------------------------------------------------------------
# Campanato

def test_campanato_annihilates_polynomials():
    dom = Domain(1, 64, 2.0, 0.25)
    x = dom.axis_coords()
    u = GridFunction(dom, 0.5 - 1.2 * x)          # degree 1 = k-1 for k=2
    for q in (1, 2):
        val = campanato_seminorm(u, q, 0.0, 2, 1.0)
        assert val <= 1e-8 * float(np.max(np.abs(u.values)))


def test_campanato_degree0_equals_morrey(bump1):
    for lam, rho in ((0.0, 1.0), (0.5, INF), (1.0, 0.5)):
        c = campanato_seminorm(bump1, 1, lam, 0, rho)
        m = morrey_norm(bump1, 1, lam, rho)
        assert c == m  # routed through the identical kernel


def test_campanato_degree_monotonicity(bump1, bump2):
    for u in (bump1, bump2):
        cg = CenterGrid(4)
        for q in (1, 2):
            vals = [campanato_seminorm(u, q, 0.0, k, 1.0, center_grid=cg)
                    for k in (0, 1, 2)]
            scale = max(vals)
            assert vals[1] <= vals[0] + 1e-7 * scale
            assert vals[2] <= vals[1] + 1e-7 * scale


def test_campanato_skip_counting(dom2):
    # degree-2 basis (6 fns) over the smallest 2-D balls (13 members) is
    # feasible, so nothing should be skipped on a full grid
    rng = np.random.default_rng(0)
    u = GridFunction(dom2, rng.standard_normal(dom2.size))
    det = sn.campanato_seminorm_detail(u, 2, 0.0, 3, 1.0,
                                       center_grid=CenterGrid(4))
    assert det.skipped == 0


# ---------------------------------------------------------------------------
# BMO

def test_bmo_constant_is_zero(dom1):
    assert bmo_seminorm(_const(dom1, 3.3), 1.0) == 0.0


def test_bmo_campanato_sandwich(bump1, bump2):
    for u, stride in ((bump1, 2), (bump2, 4)):
        cg = CenterGrid(stride)
        for rho in (1.0, INF):
            b = bmo_seminorm(u, rho, center_grid=cg)
            c = campanato_seminorm(u, 1, 0.0, 1, rho, center_grid=cg)
            assert c <= b * (1 + 1e-6) + 1e-12
            assert b <= 2 * c * (1 + 1e-6) + 1e-12


# ---------------------------------------------------------------------------
# maximal function

def test_maximal_constant(dom1):
    u = _const(dom1, 1.7)
    M = maximal_function(u)
    assert np.allclose(M, 1.7, rtol=1e-13)


def test_maximal_domination_exact(bump1, bump2):
    # M f(x) >= smallest-ball average at every x, bitwise
    for u in (bump1, bump2):
        dom = u.domain
        M = maximal_function(u)
        rg = RadiusGrid((2 * dom.spacing,), INF)
        g = np.abs(u.values)
        from morreylab import _kernels
        from morreylab.grid import ball_spans
        spans = ball_spans(dom.dim, 2.0)
        K = _kernels.impl
        if dom.dim == 1:
            small = np.array([K.ball_sum_point_1d(g, spans, ci)[0] /
                              K.ball_sum_point_1d(g, spans, ci)[1]
                              for ci in range(dom.points_per_axis)])
        else:
            n = dom.points_per_axis
            small = np.empty(dom.size)
            t = 0
            for ci in range(n):
                for cj in range(n):
                    s, m = K.ball_sum_point_2d(g.reshape(dom.shape), spans, ci, cj)
                    small[t] = s / m
                    t += 1
        assert np.all(M >= small)


def test_maximal_spike_oracle():
    # single spike: M f(x) = max over grid radii of A / #B_r(x)
    dom = Domain(1, 64, 2.0, 0.25)
    vals = np.zeros(dom.size)
    x0, A = 20, 2.0
    vals[x0] = A
    M = maximal_function(vals, dom)
    rg = RadiusGrid.build(dom, INF)
    rng = np.random.default_rng(1)
    for ci in rng.integers(0, dom.size, 20):
        best = 0.0
        for r in rg.radii:
            b = ball_members(dom, (int(ci),), r)
            if x0 in b.member_indices[:, 0]:
                best = max(best, A / b.count)
        assert M[ci] == pytest.approx(best, rel=1e-13)


def test_localized_maximal_inf_matches_global(bump1):
    M = maximal_function(bump1)
    for ci in (5, 31, 60):
        assert localized_maximal(bump1, INF, (ci,)) == M[ci]


def test_localized_maximal_monotone_in_rho(bump1):
    for ci in (10, 32):
        v1 = localized_maximal(bump1, 0.5, (ci,))
        v2 = localized_maximal(bump1, 1.0, (ci,))
        v3 = localized_maximal(bump1, INF, (ci,))
        assert v1 <= v2 * (1 + 1e-14) and v2 <= v3 * (1 + 1e-14)


def test_maximal_theorem_band(bump1, bump2):
    # ||Mf||_2 / ||f||_2 <= 10 at desk scale
    for u in (bump1, bump2):
        M = maximal_function(u)
        ratio = lp_norm(M, 2.0, u.domain) / lp_norm(u, 2.0, u.domain)
        assert ratio <= 10.0


# ---------------------------------------------------------------------------
# Riesz potential

def test_riesz_zero_field(bump1):
    dom = bump1.domain
    zero = np.zeros(dom.size)
    assert riesz_potential(zero, (32,), 0.5, k=1, domain=dom) == 0.0


def test_riesz_single_source():
    dom = Domain(2, 32, 1.0, 0.25)
    mags = np.zeros(dom.size)
    n = dom.points_per_axis
    y0 = (16, 18)
    mags[y0[0] * n + y0[1]] = 3.0
    x = (16, 16)
    h = dom.spacing
    d = 2 * h
    got = riesz_potential(mags, x, 0.5, k=1, domain=dom)
    assert got == pytest.approx(h ** 2 * 3.0 / d, rel=1e-13)


def test_riesz_monotone_in_R(bump2):
    fld = derivative_field(bump2, 1)
    rg = RadiusGrid.build(bump2.domain, INF)
    vals = [riesz_potential(fld, (16, 16), R) for R in rg.radii]
    assert all(b >= a for a, b in zip(vals, vals[1:]))


@pytest.mark.parametrize("dim,k", [(1, 2), (2, 1)])
def test_riesz_radial_oracle(dim, k):
    # layer-cake radial binning agrees within 10%, drift shrinking under
    # refinement (smaller bins at fixed physical radius)
    drifts = []
    for n in ((128, 256) if dim == 1 else (64, 128)):
        dom = Domain(dim, n, 2.0 if dim == 1 else 1.0, 0.25)
        w = 0.25 if dim == 1 else 0.12
        u = sample(dom, GaussianBump(dim, (0.0,) * dim, w, 1.0))
        fld = derivative_field(u, k)
        x = dom.index_of([0.1] * dim)
        R = 0.45
        direct = riesz_potential(fld, x, R)
        oracle = riesz_potential_radial(fld, x, R)
        drifts.append(abs(direct - oracle) / oracle)
    assert drifts[0] <= 0.10
    assert drifts[1] <= drifts[0] + 1e-12


# ---------------------------------------------------------------------------
# energies

def test_sobolev_energy_zero(dom1):
    assert sobolev_energy(_const(dom1, 0.0), 1, 0, 2.0, 1.0) == 0.0


def test_sobolev_energy_rho_scaling(bump1):
    # energy(2 rho) <= 2^{kp} energy(rho), term by term
    k, l, p = 2, 0, 1.5
    e1 = sobolev_energy(bump1, k, l, p, 0.5)
    e2 = sobolev_energy(bump1, k, l, p, 1.0)
    assert e2 <= 2 ** (k * p) * e1 * (1 + 1e-12)


def test_sobolev_energy_gaussian_analytic():
    # pure Gaussian, tails below machine precision: analytic
    # int (u')^2 = A^2 sqrt(pi) / (2w),  int u^2 = A^2 w sqrt(pi)
    dom = Domain(1, 256, 2.0, 0.25)
    A, w = 1.0, 0.25
    x = dom.axis_coords()
    u = GridFunction(dom, A * np.exp(-x * x / (2 * w * w)))
    got = sobolev_energy(u, 1, 0, 2.0, 1.0)
    exact = A * A * math.sqrt(math.pi) * (1.0 / (2 * w) + w)
    assert got == pytest.approx(exact, rel=0.02)


def test_gagliardo_constant_zero(dom1):
    # constant tensor field: all pairwise differences vanish
    fld = derivative_field(_const(dom1, 2.0), 0)
    assert gagliardo_energy(fld, 0.5, 2.0) == 0.0


def test_gagliardo_two_cell_closed_form():
    for dim in (1, 2):
        dom = Domain(dim, 32, 1.0, 0.25)
        vals = np.zeros(dom.size)
        n = dom.points_per_axis
        if dim == 1:
            i, j = 10, 17
            a, b = 1.3, -0.4
            vals[i], vals[j] = a, b
            d = abs(j - i) * dom.spacing
        else:
            ij = (10, 12)
            kl = (13, 16)
            a, b = 1.3, -0.4
            vals[ij[0] * n + ij[1]] = a
            vals[kl[0] * n + kl[1]] = b
            d = math.hypot(kl[0] - ij[0], kl[1] - ij[1]) * dom.spacing
        fld = derivative_field(GridFunction(dom, vals), 0)
        sig, p = 0.5, 1.5
        got = gagliardo_energy(fld, sig, p)
        hN = dom.spacing ** dim
        # ordered pairs (x,y) and (y,x) plus the pairs against zero cells
        expected = 0.0
        coords = dom.points()
        nz = [t for t in range(dom.size) if vals[t] != 0]
        for t in nz:
            for t2 in range(dom.size):
                if t2 == t:
                    continue
                dist = np.linalg.norm(coords[t] - coords[t2])
                contrib = abs(vals[t] - vals[t2]) ** p / dist ** (dim + sig * p)
                if t2 in nz:
                    expected += contrib
                else:
                    expected += 2 * contrib  # counts (t,t2) and (t2,t)
        expected *= hN * hN
        assert got == pytest.approx(expected, rel=1e-12)


def test_gagliardo_two_cell_spec_form():
    # isolated pair x != y: full form = 2 h^{2N} |a-b|^p / d^{N + sigma p}
    # when only the mutual term is present (all other cells far/zero):
    # checked by restricting to a two-cell field and subtracting the
    # against-zero contributions computed independently above; here we
    # directly verify the mutual term in isolation
    dom = Domain(1, 32, 1.0, 0.25)
    i, j = 10, 17
    a, b = 1.0, -1.0
    sig, p = 0.5, 2.0
    d = abs(j - i) * dom.spacing
    mutual = 2 * dom.spacing ** 2 * abs(a - b) ** p / d ** (1 + sig * p)
    vals = np.zeros(dom.size)
    vals[i], vals[j] = a, b
    fld = derivative_field(GridFunction(dom, vals), 0)
    got = gagliardo_energy(fld, sig, p)
    # remove the against-zero terms exactly
    rest = 0.0
    for t in (i, j):
        for t2 in range(dom.size):
            if t2 in (i, j):
                continue
            dist = abs(t - t2) * dom.spacing
            rest += 2 * abs(vals[t]) ** p / dist ** (1 + sig * p)
    rest *= dom.spacing ** 2
    assert got - rest == pytest.approx(mutual, rel=1e-10)


def test_gagliardo_dilation_law():
    # k=0 energy of u_s scales like s^{N - sigma p}
    dom = Domain(1, 256, 2.0, 0.25)
    fam = GaussianBump(1, (0.0,), 0.2, 1.0)
    sig, p = 0.5, 1.5
    e1 = gagliardo_energy(derivative_field(sample(dom, fam), 0), sig, p)
    e2 = gagliardo_energy(derivative_field(sample(dom, fam.dilated(2.0)), 0), sig, p)
    expected = 2.0 ** (1 - sig * p)
    assert e2 / e1 == pytest.approx(expected, rel=0.07)


def test_gagliardo_pointwise_brute(bump1):
    fld = derivative_field(bump1, 0)
    dom = bump1.domain
    sig, p = 0.5, 2.0
    x = 30
    brute = 0.0
    for y in range(dom.size):
        if y != x:
            d = abs(y - x) * dom.spacing
            brute += abs(bump1.values[y] - bump1.values[x]) ** p / d ** (1 + sig * p)
    brute = (dom.spacing * brute) ** (1 / p)
    assert gagliardo_pointwise(fld, sig, p, (x,)) == pytest.approx(brute, rel=1e-12)


# ---------------------------------------------------------------------------
# Hölder chain: Morrey(q=1, lam) vs single large-ball L^{N/lam} averages

@pytest.mark.parametrize("lam", [0.5, 1.0])
def test_holder_chain(bump1, lam):
    dom = bump1.domain
    for rho in (1.0, INF):
        rg = RadiusGrid.build(dom, rho)
        lhs = morrey_norm(bump1, 1, lam, rho, rg)
        t = dom.dim / lam
        sup = sn.sup_single_radius_mean(bump1, t, rg.r_max)
        rho_l = rg.r_max if not math.isfinite(rho) else rho
        rhs = rho_l ** lam * sup.value ** (lam / dom.dim)
        assert lhs <= rhs + 1e-9
