"""Pure-numpy kernels (fallback path).

Semantics mirror ``numba_impl`` exactly: same member ordering (row-major
within each ball), same fit initialization and tolerances, same reduction
structure.  Per-ball sums accumulate one span row at a time so that a
single-ball evaluation and the sup/maximal kernels see bitwise-identical
values for the same ball.  This path is intended for small grids and for
cross-checking the jitted path; it is considerably slower at production
sizes.
"""

from __future__ import annotations

import math

import numpy as np

IRLS_MAX_ITER = 200
IRLS_TOL = 1e-8          # relative residual change
IRLS_EPS_REL = 1e-9      # smoothing floor, relative to data scale
PIVOT_REL = 1e-13        # Cholesky pivot threshold relative to max diagonal

IS_JIT = False


# ---------------------------------------------------------------------------
# per-ball gathering helpers (row-major member order)

def _ball_sum_rows_1d(g, lo, hi, ci, n):
    a = max(lo + ci, 0)
    b = min(hi + ci, n - 1)
    if b < a:
        return 0.0, 0
    return float(np.sum(g[a:b + 1])), b - a + 1


def ball_sum_point_1d(g, spans, ci):
    """Sum and count over one ball; spans is the (1, 2) row of one radius."""
    n = g.shape[0]
    s, m = _ball_sum_rows_1d(g, spans[0, 0], spans[0, 1], ci, n)
    return s, m


def ball_sum_point_2d(g, spans, ci, cj):
    n0, n1 = g.shape
    s = 0.0
    m = 0
    for r in range(spans.shape[0]):
        i = ci + spans[r, 0]
        if i < 0 or i >= n0:
            continue
        rs, rm = _ball_sum_rows_1d(g[i], spans[r, 1], spans[r, 2], cj, n1)
        s += rs
        m += rm
    return s, m


def _gather_1d(u, lo, hi, ci, n, vout, xout, pos):
    a = max(lo + ci, 0)
    b = min(hi + ci, n - 1)
    if b < a:
        return pos
    cnt = b - a + 1
    vout[pos:pos + cnt] = u[a:b + 1]
    xout[pos:pos + cnt] = np.arange(a - ci, b - ci + 1)
    return pos + cnt


# ---------------------------------------------------------------------------
# sup over centers x radii

def sup_mean_pow_1d(g, spans, weights, invq, stride):
    """Per strided center: max over radii of w_j * (ball mean)^invq."""
    n = g.shape[0]
    centers = np.arange(0, n, stride)
    vals = np.full(centers.size, -np.inf)
    argr = np.full(centers.size, -1, dtype=np.int64)
    for k, ci in enumerate(centers):
        best = -np.inf
        bj = -1
        for j in range(spans.shape[0]):
            s, m = _ball_sum_rows_1d(g, spans[j, 0], spans[j, 1], ci, n)
            v = weights[j] * (s / m) ** invq
            if v > best:
                best = v
                bj = j
        vals[k] = best
        argr[k] = bj
    return vals, argr


def sup_mean_pow_2d(g, spans, ptr, weights, invq, stride):
    n0, n1 = g.shape
    c0 = np.arange(0, n0, stride)
    c1 = np.arange(0, n1, stride)
    vals = np.full((c0.size, c1.size), -np.inf)
    argr = np.full((c0.size, c1.size), -1, dtype=np.int64)
    R = ptr.shape[0] - 1
    for a, ci in enumerate(c0):
        for b, cj in enumerate(c1):
            best = -np.inf
            bj = -1
            for j in range(R):
                s, m = ball_sum_point_2d(g, spans[ptr[j]:ptr[j + 1]], ci, cj)
                v = weights[j] * (s / m) ** invq
                if v > best:
                    best = v
                    bj = j
            vals[a, b] = best
            argr[a, b] = bj
    return vals, argr


def sup_vol_sum_1d(g, spans, weights, stride):
    """Per strided center: max over radii of w_j * (ball sum)."""
    n = g.shape[0]
    centers = np.arange(0, n, stride)
    vals = np.full(centers.size, -np.inf)
    argr = np.full(centers.size, -1, dtype=np.int64)
    for k, ci in enumerate(centers):
        best = -np.inf
        bj = -1
        for j in range(spans.shape[0]):
            s, _ = _ball_sum_rows_1d(g, spans[j, 0], spans[j, 1], ci, n)
            v = weights[j] * s
            if v > best:
                best = v
                bj = j
        vals[k] = best
        argr[k] = bj
    return vals, argr


def sup_vol_sum_2d(g, spans, ptr, weights, stride):
    n0, n1 = g.shape
    c0 = np.arange(0, n0, stride)
    c1 = np.arange(0, n1, stride)
    vals = np.full((c0.size, c1.size), -np.inf)
    argr = np.full((c0.size, c1.size), -1, dtype=np.int64)
    R = ptr.shape[0] - 1
    for a, ci in enumerate(c0):
        for b, cj in enumerate(c1):
            best = -np.inf
            bj = -1
            for j in range(R):
                s, _ = ball_sum_point_2d(g, spans[ptr[j]:ptr[j + 1]], ci, cj)
                v = weights[j] * s
                if v > best:
                    best = v
                    bj = j
            vals[a, b] = best
            argr[a, b] = bj
    return vals, argr


def max_mean_point_1d(g, spans, ci):
    n = g.shape[0]
    best = -np.inf
    for j in range(spans.shape[0]):
        s, m = _ball_sum_rows_1d(g, spans[j, 0], spans[j, 1], ci, n)
        v = s / m
        if v > best:
            best = v
    return best


def max_mean_point_2d(g, spans, ptr, ci, cj):
    best = -np.inf
    for j in range(ptr.shape[0] - 1):
        s, m = ball_sum_point_2d(g, spans[ptr[j]:ptr[j + 1]], ci, cj)
        v = s / m
        if v > best:
            best = v
    return best


def maximal_field_1d(g, spans):
    n = g.shape[0]
    out = np.empty(n)
    for ci in range(n):
        out[ci] = max_mean_point_1d(g, spans, ci)
    return out


def maximal_field_2d(g, spans, ptr):
    n0, n1 = g.shape
    out = np.empty((n0, n1))
    for ci in range(n0):
        for cj in range(n1):
            out[ci, cj] = max_mean_point_2d(g, spans, ptr, ci, cj)
    return out


# ---------------------------------------------------------------------------
# BMO: double ball-average of |u(y) - u(z)| via the sorted identity
#   sum_{y,z} |v_y - v_z| = 2 * sum_i (2i - m + 1) v_(i)

def _sorted_abs_diff_mean(vals):
    # sum_{y,z} |v_y - v_z| = 2 sum_i (2i - m + 1) v_(i); shifting by the
    # minimum leaves the value unchanged and makes constants exactly zero
    m = vals.size
    v = np.sort(vals)
    s = 0.0
    for t in range(m):
        s += (2.0 * t - m + 1.0) * (v[t] - v[0])
    return 2.0 * s / (m * m)


def bmo_sup_1d(u, spans, stride, mmax):
    n = u.shape[0]
    centers = np.arange(0, n, stride)
    vals = np.full(centers.size, -np.inf)
    argr = np.full(centers.size, -1, dtype=np.int64)
    for k, ci in enumerate(centers):
        best = -np.inf
        bj = -1
        for j in range(spans.shape[0]):
            a = max(spans[j, 0] + ci, 0)
            b = min(spans[j, 1] + ci, n - 1)
            v = _sorted_abs_diff_mean(u[a:b + 1])
            if v > best:
                best = v
                bj = j
        vals[k] = best
        argr[k] = bj
    return vals, argr


def bmo_sup_2d(u, spans, ptr, stride, mmax):
    n0, n1 = u.shape
    c0 = np.arange(0, n0, stride)
    c1 = np.arange(0, n1, stride)
    vals = np.full((c0.size, c1.size), -np.inf)
    argr = np.full((c0.size, c1.size), -1, dtype=np.int64)
    buf = np.empty(mmax)
    for a, ci in enumerate(c0):
        for b, cj in enumerate(c1):
            best = -np.inf
            bj = -1
            for j in range(ptr.shape[0] - 1):
                pos = 0
                for r in range(ptr[j], ptr[j + 1]):
                    i = ci + spans[r, 0]
                    if i < 0 or i >= n0:
                        continue
                    lo = max(spans[r, 1] + cj, 0)
                    hi = min(spans[r, 2] + cj, n1 - 1)
                    if hi < lo:
                        continue
                    cnt = hi - lo + 1
                    buf[pos:pos + cnt] = u[i, lo:hi + 1]
                    pos += cnt
                v = _sorted_abs_diff_mean(buf[:pos])
                if v > best:
                    best = v
                    bj = j
            vals[a, b] = best
            argr[a, b] = bj
    return vals, argr


# ---------------------------------------------------------------------------
# polynomial fits

def _chol_solve(A, b):
    d = np.diag(A)
    thresh = PIVOT_REL * (d.max() if d.size else 0.0)
    try:
        L = np.linalg.cholesky(A)
    except np.linalg.LinAlgError:
        return np.zeros_like(b), False
    if np.min(np.diag(L)) ** 2 <= thresh:
        return np.zeros_like(b), False
    y = np.linalg.solve(L, b)
    return np.linalg.solve(L.T, y), True


def _pinv_solve(A, b):
    w, V = np.linalg.eigh(A)
    thresh = 1e-12 * np.max(np.abs(w)) if w.size else 0.0
    inv = np.where(np.abs(w) > thresh, 1.0 / np.where(w == 0.0, 1.0, w), 0.0)
    return V @ (inv * (V.T @ b))


def poly_fit_members(coords, vals, exps, q, max_iter=IRLS_MAX_ITER):
    """Least-squares / least-absolute-deviations fit over ball members.

    coords: (m, dim) scaled coordinates; exps: (B,) or (B, dim) integer
    exponents; q in {1, 2}.  Returns (coef, residual, iters, converged,
    rank_deficient).  q=1 runs IRLS initialized at the q=2 solution.
    """
    coords = np.atleast_2d(np.asarray(coords, dtype=float))
    vals = np.asarray(vals, dtype=float)
    m = vals.size
    exps = np.atleast_1d(np.asarray(exps, dtype=np.int64))
    if exps.ndim == 1:
        exps = exps[:, None]
    B = exps.shape[0]
    if B == 0:
        s = float(np.sum(np.abs(vals) ** q))
        return np.zeros(0), (s / m) ** (1.0 / q), 0, True, False

    X = np.ones((m, B))
    for bi in range(B):
        for d in range(exps.shape[1]):
            e = exps[bi, d]
            if e:
                X[:, bi] *= coords[:, d] ** e

    ata = X.T @ X
    aty = X.T @ vals
    coef, ok = _chol_solve(ata, aty)
    rank_deficient = not ok
    if not ok:
        coef = _pinv_solve(ata, aty)
    res = vals - X @ coef
    if q == 2:
        return coef, math.sqrt(float(res @ res) / m), 0, True, rank_deficient

    scale = float(np.max(np.abs(vals))) if m else 0.0
    if scale == 0.0:
        return coef, 0.0, 0, True, rank_deficient
    eps = IRLS_EPS_REL * scale
    cur = float(np.sum(np.abs(res))) / m
    iters = 0
    converged = False
    for _ in range(max_iter):
        iters += 1
        w = 1.0 / np.sqrt(res * res + eps * eps)
        ata = (X * w[:, None]).T @ X
        aty = X.T @ (w * vals)
        coef2, ok = _chol_solve(ata, aty)
        if not ok:
            coef2 = _pinv_solve(ata, aty)
            rank_deficient = True
        coef = coef2
        res = vals - X @ coef
        new = float(np.sum(np.abs(res))) / m
        done = abs(new - cur) <= IRLS_TOL * max(cur, eps)
        cur = new
        if done or cur <= 1e-15 * scale:
            converged = True
            break
    return coef, cur, iters, converged, rank_deficient


def _fit_residual_ball(u, spans_j, ci, cj, n0, n1, radius, h, exps, q, max_iter,
                       dim):
    """Gather one ball (row-major) and fit; returns (residual, m, rank)."""
    if dim == 1:
        a = max(spans_j[0, 0] + ci, 0)
        b = min(spans_j[0, 1] + ci, n0 - 1)
        vals = u[a:b + 1]
        coords = (np.arange(a - ci, b - ci + 1, dtype=float) * h / radius)[:, None]
    else:
        vs = []
        cs = []
        for r in range(spans_j.shape[0]):
            i = ci + spans_j[r, 0]
            if i < 0 or i >= n0:
                continue
            lo = max(spans_j[r, 1] + cj, 0)
            hi = min(spans_j[r, 2] + cj, n1 - 1)
            if hi < lo:
                continue
            vs.append(u[i, lo:hi + 1])
            dys = np.full(hi - lo + 1, (i - ci) * h / radius)
            dxs = np.arange(lo - cj, hi - cj + 1, dtype=float) * h / radius
            cs.append(np.column_stack([dys, dxs]))
        if not vs:
            return 0.0, 0, False
        vals = np.concatenate(vs)
        coords = np.concatenate(cs)
    m = vals.size
    B = exps.shape[0] if exps.ndim > 0 else 0
    if m < max(B, 1):
        return 0.0, m, False
    _, resid, _, _, rank = poly_fit_members(coords, vals, exps, q, max_iter)
    return resid, m, rank


def campanato_sup_1d(u, h, spans, radii, weights, stride, exps, q, max_iter, mmax):
    n = u.shape[0]
    centers = np.arange(0, n, stride)
    vals = np.full(centers.size, -np.inf)
    argr = np.full(centers.size, -1, dtype=np.int64)
    skipped = 0
    rank_count = 0
    B = exps.shape[0]
    for k, ci in enumerate(centers):
        best = -np.inf
        bj = -1
        for j in range(spans.shape[0]):
            resid, m, rank = _fit_residual_ball(
                u, spans[j:j + 1], ci, 0, n, 0, radii[j], h, exps, q, max_iter, 1)
            if m < B:
                skipped += 1
                continue
            rank_count += int(rank)
            v = weights[j] * resid
            if v > best:
                best = v
                bj = j
        vals[k] = best
        argr[k] = bj
    return vals, argr, skipped, rank_count


def campanato_sup_2d(u, h, spans, ptr, radii, weights, stride, exps, q,
                     max_iter, mmax):
    n0, n1 = u.shape
    c0 = np.arange(0, n0, stride)
    c1 = np.arange(0, n1, stride)
    vals = np.full((c0.size, c1.size), -np.inf)
    argr = np.full((c0.size, c1.size), -1, dtype=np.int64)
    skipped = 0
    rank_count = 0
    B = exps.shape[0]
    for a, ci in enumerate(c0):
        for b, cj in enumerate(c1):
            best = -np.inf
            bj = -1
            for j in range(ptr.shape[0] - 1):
                resid, m, rank = _fit_residual_ball(
                    u, spans[ptr[j]:ptr[j + 1]], ci, cj, n0, n1, radii[j], h,
                    exps, q, max_iter, 2)
                if m < B:
                    skipped += 1
                    continue
                rank_count += int(rank)
                v = weights[j] * resid
                if v > best:
                    best = v
                    bj = j
            vals[a, b] = best
            argr[a, b] = bj
    return vals, argr, skipped, rank_count


# ---------------------------------------------------------------------------
# singular-kernel gathers.  Offsets arrive pre-sorted by distance so that
# growing R appends terms, making the sum exactly monotone in R.

def riesz_gather_1d(g, offs, w, ci):
    n = g.shape[0]
    s = 0.0
    for t in range(offs.shape[0]):
        y = ci + offs[t, 0]
        if 0 <= y < n:
            s += g[y] * w[t]
    return s


def riesz_gather_2d(g, offs, w, ci, cj):
    n0, n1 = g.shape
    s = 0.0
    for t in range(offs.shape[0]):
        y0 = ci + offs[t, 0]
        y1 = cj + offs[t, 1]
        if 0 <= y0 < n0 and 0 <= y1 < n1:
            s += g[y0, y1] * w[t]
    return s


def riesz_diff_gather_1d(comps, wts, offs, w, ci):
    C, n = comps.shape
    s = 0.0
    for t in range(offs.shape[0]):
        y = ci + offs[t, 0]
        if 0 <= y < n:
            sq = 0.0
            for c in range(C):
                d = comps[c, y] - comps[c, ci]
                sq += wts[c] * d * d
            s += math.sqrt(sq) * w[t]
    return s


def riesz_diff_gather_2d(comps, wts, offs, w, ci, cj):
    C, n0, n1 = comps.shape
    s = 0.0
    for t in range(offs.shape[0]):
        y0 = ci + offs[t, 0]
        y1 = cj + offs[t, 1]
        if 0 <= y0 < n0 and 0 <= y1 < n1:
            sq = 0.0
            for c in range(C):
                d = comps[c, y0, y1] - comps[c, ci, cj]
                sq += wts[c] * d * d
            s += math.sqrt(sq) * w[t]
    return s


# ---------------------------------------------------------------------------
# Gagliardo pair sums.  ktable is indexed by squared cell distance and
# already contains dist^-(N + sigma p); entry 0 is unused (diagonal excluded).

def gagliardo_energy_1d(comps, wts, p, ktable, act):
    # act flags cells with a nonzero tensor; pairs of inactive cells
    # contribute exactly 0 and are skipped.
    C, n = comps.shape
    half = p / 2.0
    partial = np.zeros(n)
    idx = np.arange(n)
    active_idx = idx[act != 0]
    for i in range(n - 1):
        later = idx[i + 1:] if act[i] else active_idx[active_idx > i]
        if later.size == 0:
            continue
        d = later - i
        sq = np.zeros(later.size)
        for c in range(C):
            diff = comps[c, i] - comps[c, later]
            sq += wts[c] * diff * diff
        partial[i] = float(np.sum(sq ** half * ktable[d * d]))
    total = 0.0
    for i in range(n):
        total += partial[i]
    return 2.0 * total


def gagliardo_energy_2d(comps, wts, p, ktable, act):
    C, n0, n1 = comps.shape
    half = p / 2.0
    flat = comps.reshape(C, n0 * n1)
    aflat = act.ravel()
    ii, jj = np.divmod(np.arange(n0 * n1), n1)
    idx = np.arange(n0 * n1)
    active_idx = idx[aflat != 0]
    partial = np.zeros(n0 * n1)
    for t in range(n0 * n1 - 1):
        later = idx[t + 1:] if aflat[t] else active_idx[active_idx > t]
        if later.size == 0:
            continue
        di = ii[later] - ii[t]
        dj = jj[later] - jj[t]
        d2 = di * di + dj * dj
        sq = np.zeros(later.size)
        for c in range(C):
            diff = flat[c, t] - flat[c, later]
            sq += wts[c] * diff * diff
        partial[t] = float(np.sum(sq ** half * ktable[d2]))
    total = 0.0
    for t in range(n0 * n1):
        total += partial[t]
    return 2.0 * total


def gagliardo_point_1d(comps, wts, ci, p, ktable):
    C, n = comps.shape
    half = p / 2.0
    d = np.arange(n) - ci
    sq = np.zeros(n)
    for c in range(C):
        diff = comps[c] - comps[c, ci]
        sq += wts[c] * diff * diff
    mask = d != 0
    return float(np.sum(sq[mask] ** half * ktable[(d * d)[mask]]))


def gagliardo_point_2d(comps, wts, ci, cj, p, ktable):
    C, n0, n1 = comps.shape
    half = p / 2.0
    di = (np.arange(n0) - ci)[:, None]
    dj = (np.arange(n1) - cj)[None, :]
    d2 = di * di + dj * dj
    sq = np.zeros((n0, n1))
    for c in range(C):
        diff = comps[c] - comps[c, ci, cj]
        sq += wts[c] * diff * diff
    mask = d2 != 0
    return float(np.sum(sq[mask] ** half * ktable[d2[mask]]))
