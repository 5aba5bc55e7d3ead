"""Parity between the numba and pure-numpy kernel backends.

Both implement the same contracts; results must agree to floating-point
reassociation noise.  Skipped entirely if numba is unavailable.
"""

import numpy as np
import pytest

from morreylab._kernels import DISABLE_ENV, available_backends
from morreylab.grid import ball_spans

BACKENDS = available_backends()
pytestmark = pytest.mark.skipif(
    "numba" not in BACKENDS, reason="numba backend unavailable")


def _both(fn):
    return fn(BACKENDS["numba"]), fn(BACKENDS["numpy"])


@pytest.fixture(scope="module")
def rng():
    return np.random.default_rng(99)


def _tables(dim, cells):
    tabs = [ball_spans(dim, c) for c in cells]
    ptr = np.zeros(len(cells) + 1, dtype=np.int64)
    for j, t in enumerate(tabs):
        ptr[j + 1] = ptr[j] + t.shape[0]
    return np.vstack(tabs), ptr


def test_env_flag_documented():
    assert DISABLE_ENV == "MORREYLAB_DISABLE_NUMBA"
    assert BACKENDS["numba"].IS_JIT and not BACKENDS["numpy"].IS_JIT


def test_ball_sum_point(rng):
    g = np.abs(rng.standard_normal((24, 24)))
    spans = ball_spans(2, 3.7)
    (sa, ma), (sb, mb) = _both(lambda K: K.ball_sum_point_2d(g, spans, 5, 20))
    assert ma == mb
    assert sa == pytest.approx(sb, rel=1e-14)


def test_ball_sum_consistent_with_maximal_within_backend(rng):
    # within one backend the single-ball sum and the maximal field use the
    # same accumulation order, so smallest-radius domination is bitwise
    g = np.abs(rng.standard_normal((16, 16)))
    spans, ptr = _tables(2, (2.0,))
    for K in BACKENDS.values():
        field = np.asarray(K.maximal_field_2d(g, spans, ptr))
        for (ci, cj) in ((0, 0), (3, 11), (15, 15)):
            s, m = K.ball_sum_point_2d(g, ball_spans(2, 2.0), ci, cj)
            assert field[ci, cj] >= s / m


def test_sup_mean_pow(rng):
    g1 = np.abs(rng.standard_normal(64))
    spans, ptr = _tables(1, (2.0, 3.3, 5.1))
    w = np.array([1.0, 0.8, 1.3])
    (va, aa), (vb, ab) = _both(lambda K: K.sup_mean_pow_1d(g1[:], spans, w, 0.5, 2))
    np.testing.assert_allclose(va, vb, rtol=1e-13)
    assert np.array_equal(aa, ab)
    g2 = np.abs(rng.standard_normal((24, 24)))
    spans2, ptr2 = _tables(2, (2.0, 2.9, 4.4))
    (va, aa), (vb, ab) = _both(
        lambda K: K.sup_mean_pow_2d(g2, spans2, ptr2, w, 1.0, 3))
    np.testing.assert_allclose(va, vb, rtol=1e-13)
    assert np.array_equal(aa, ab)


def test_sup_vol_sum(rng):
    g = np.abs(rng.standard_normal((20, 20)))
    spans, ptr = _tables(2, (2.0, 3.5))
    w = np.array([0.01, 0.02])
    (va, _), (vb, _) = _both(lambda K: K.sup_vol_sum_2d(g, spans, ptr, w, 2))
    np.testing.assert_allclose(va, vb, rtol=1e-13)


def test_maximal_field(rng):
    g = np.abs(rng.standard_normal(50))
    spans, _ = _tables(1, (2.0, 4.0, 7.3))
    a, b = _both(lambda K: K.maximal_field_1d(g, spans))
    np.testing.assert_allclose(a, b, rtol=1e-13)
    g2 = np.abs(rng.standard_normal((16, 16)))
    spans2, ptr2 = _tables(2, (2.0, 3.1))
    a, b = _both(lambda K: K.maximal_field_2d(g2, spans2, ptr2))
    np.testing.assert_allclose(a, b, rtol=1e-13)


def test_bmo_sup(rng):
    u = rng.standard_normal((18, 18))
    spans, ptr = _tables(2, (2.0, 3.3))
    (va, aa), (vb, ab) = _both(lambda K: K.bmo_sup_2d(u, spans, ptr, 2, 400))
    np.testing.assert_allclose(va, vb, rtol=1e-12)
    assert np.array_equal(aa, ab)


def test_bmo_matches_brute_force(rng):
    # sorted-order identity vs O(m^2) double loop
    vals = rng.standard_normal(37)
    m = vals.size
    brute = sum(abs(a - b) for a in vals for b in vals) / m ** 2
    K = BACKENDS["numpy"]
    assert K._sorted_abs_diff_mean(vals) == pytest.approx(brute, rel=1e-12)
    got = BACKENDS["numba"]._sorted_abs_diff_mean(vals.copy(), m)
    assert got == pytest.approx(brute, rel=1e-12)


def test_bmo_three_point_value():
    v = np.array([0.0, 0.0, 1.0])
    assert BACKENDS["numpy"]._sorted_abs_diff_mean(v) == pytest.approx(4.0 / 9.0)
    assert BACKENDS["numba"]._sorted_abs_diff_mean(v.copy(), 3) == pytest.approx(4.0 / 9.0)


@pytest.mark.parametrize("q", [1, 2])
def test_poly_fit_members(rng, q):
    coords = rng.uniform(-1, 1, (60, 2))
    vals = rng.standard_normal(60)
    exps = np.array([[0, 0], [1, 0], [0, 1], [1, 1]], dtype=np.int64)
    (ca, ra, _, conva, _), (cb, rb, _, convb, _) = _both(
        lambda K: K.poly_fit_members(coords, vals, exps, q))
    assert conva and convb
    np.testing.assert_allclose(ca, cb, rtol=1e-8, atol=1e-10)
    assert ra == pytest.approx(rb, rel=1e-9)


def test_campanato_sup(rng):
    u = rng.standard_normal((20, 20))
    spans, ptr = _tables(2, (2.0, 3.6))
    radii = np.array([0.2, 0.36])
    w = np.array([1.0, 1.0])
    exps = np.array([[0, 0], [1, 0], [0, 1]], dtype=np.int64)
    out = _both(lambda K: K.campanato_sup_2d(
        u, 0.1, spans, ptr, radii, w, 4, exps, 1, 200, 60))
    (va, aa, sa, _), (vb, ab, sb, _) = out
    np.testing.assert_allclose(va, vb, rtol=1e-8)
    assert sa == sb


def test_riesz_gather(rng):
    g = np.abs(rng.standard_normal((22, 22)))
    offs = np.array([[0, 1], [1, 0], [-1, 2], [3, 3]], dtype=np.int64)
    w = np.array([1.0, 0.5, 0.25, 0.125])
    a, b = _both(lambda K: K.riesz_gather_2d(g, offs, w, 2, 20))
    assert a == pytest.approx(b, rel=1e-15)
    comps = rng.standard_normal((2, 22, 22))
    wts = np.array([1.0, 2.0])
    a, b = _both(lambda K: K.riesz_diff_gather_2d(comps, wts, offs, w, 10, 10))
    assert a == pytest.approx(b, rel=1e-13)


@pytest.mark.parametrize("p", [1.5, 2.0])
def test_gagliardo_energy(rng, p):
    n = 14
    comps = rng.standard_normal((2, n, n))
    comps[:, :4, :] = 0.0     # inactive band exercises the pruning paths
    act = np.ascontiguousarray((np.abs(comps) > 0).any(axis=0).astype(np.uint8))
    wts = np.array([1.0, 1.0])
    tab = np.zeros(2 * (n - 1) ** 2 + 1)
    d2 = np.arange(1, tab.size, dtype=float)
    tab[1:] = (0.05 * np.sqrt(d2)) ** (-2.5)
    a, b = _both(lambda K: K.gagliardo_energy_2d(comps, wts, p, tab, act))
    assert a == pytest.approx(b, rel=1e-12)
    comps1 = rng.standard_normal((1, 40))
    act1 = np.ascontiguousarray((np.abs(comps1) > 0).any(axis=0).astype(np.uint8))
    tab1 = np.zeros(39 ** 2 + 1)
    tab1[1:] = (0.05 * np.sqrt(np.arange(1, tab1.size, dtype=float))) ** (-1.75)
    a, b = _both(lambda K: K.gagliardo_energy_1d(comps1, np.array([1.0]), p, tab1, act1))
    assert a == pytest.approx(b, rel=1e-12)


def test_gagliardo_point(rng):
    n = 16
    comps = rng.standard_normal((3, n, n))
    wts = np.array([1.0, 2.0, 1.0])
    tab = np.zeros(2 * (n - 1) ** 2 + 1)
    tab[1:] = (0.1 * np.sqrt(np.arange(1, tab.size, dtype=float))) ** (-3.0)
    a, b = _both(lambda K: K.gagliardo_point_2d(comps, wts, 7, 9, 1.5, tab))
    assert a == pytest.approx(b, rel=1e-12)


def test_gagliardo_brute_force_oracle(rng):
    # independent O(n^2) double loop over ordered pairs
    n = 12
    comps = rng.standard_normal((1, n))
    act = np.ones(n, dtype=np.uint8)
    h, sig, p = 0.1, 0.5, 1.5
    tab = np.zeros((n - 1) ** 2 + 1)
    dd = np.arange(1, tab.size, dtype=float)
    tab[1:] = (h * np.sqrt(dd)) ** (-(1 + sig * p))
    brute = 0.0
    for i in range(n):
        for j in range(n):
            if i != j:
                brute += abs(comps[0, i] - comps[0, j]) ** p * \
                    (h * abs(i - j)) ** (-(1 + sig * p))
    for K in BACKENDS.values():
        got = K.gagliardo_energy_1d(comps, np.array([1.0]), p, tab, act)
        assert got == pytest.approx(brute, rel=1e-12)
