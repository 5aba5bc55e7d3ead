"""Numba-jitted kernels (default path).

Same contracts as ``numpy_impl``; see that module for the semantics.
All reductions are deterministic under any thread count: parallel loops
write per-center (or per-row) slots and any final sum runs sequentially.
"""

from __future__ import annotations

import math

import numpy as np
from numba import njit, prange

IRLS_MAX_ITER = 200
IRLS_TOL = 1e-8
IRLS_EPS_REL = 1e-9
PIVOT_REL = 1e-13

IS_JIT = True

_JIT = dict(cache=True, nogil=True)


# ---------------------------------------------------------------------------
# per-ball sums

@njit(**_JIT)
def ball_sum_point_1d(g, spans, ci):
    n = g.shape[0]
    a = max(spans[0, 0] + ci, 0)
    b = min(spans[0, 1] + ci, n - 1)
    s = 0.0
    m = 0
    for y in range(a, b + 1):
        s += g[y]
        m += 1
    return s, m


@njit(**_JIT)
def ball_sum_point_2d(g, spans, ci, cj):
    n0, n1 = g.shape
    s = 0.0
    m = 0
    for r in range(spans.shape[0]):
        i = ci + spans[r, 0]
        if i < 0 or i >= n0:
            continue
        a = max(spans[r, 1] + cj, 0)
        b = min(spans[r, 2] + cj, n1 - 1)
        for y in range(a, b + 1):
            s += g[i, y]
            m += 1
    return s, m


# ---------------------------------------------------------------------------
# sup over centers x radii

@njit(parallel=True, **_JIT)
def sup_mean_pow_1d(g, spans, weights, invq, stride):
    n = g.shape[0]
    nc = (n + stride - 1) // stride
    vals = np.full(nc, -np.inf)
    argr = np.full(nc, -1, dtype=np.int64)
    for k in prange(nc):
        ci = k * stride
        best = -np.inf
        bj = -1
        for j in range(spans.shape[0]):
            s, m = ball_sum_point_1d(g, spans[j:j + 1], ci)
            v = weights[j] * (s / m) ** invq
            if v > best:
                best = v
                bj = j
        vals[k] = best
        argr[k] = bj
    return vals, argr


@njit(parallel=True, **_JIT)
def sup_mean_pow_2d(g, spans, ptr, weights, invq, stride):
    n0, n1 = g.shape
    nc0 = (n0 + stride - 1) // stride
    nc1 = (n1 + stride - 1) // stride
    vals = np.full((nc0, nc1), -np.inf)
    argr = np.full((nc0, nc1), -1, dtype=np.int64)
    R = ptr.shape[0] - 1
    for a in prange(nc0):
        ci = a * stride
        for b in range(nc1):
            cj = b * stride
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


@njit(parallel=True, **_JIT)
def sup_vol_sum_1d(g, spans, weights, stride):
    n = g.shape[0]
    nc = (n + stride - 1) // stride
    vals = np.full(nc, -np.inf)
    argr = np.full(nc, -1, dtype=np.int64)
    for k in prange(nc):
        ci = k * stride
        best = -np.inf
        bj = -1
        for j in range(spans.shape[0]):
            s, _ = ball_sum_point_1d(g, spans[j:j + 1], ci)
            v = weights[j] * s
            if v > best:
                best = v
                bj = j
        vals[k] = best
        argr[k] = bj
    return vals, argr


@njit(parallel=True, **_JIT)
def sup_vol_sum_2d(g, spans, ptr, weights, stride):
    n0, n1 = g.shape
    nc0 = (n0 + stride - 1) // stride
    nc1 = (n1 + stride - 1) // stride
    vals = np.full((nc0, nc1), -np.inf)
    argr = np.full((nc0, nc1), -1, dtype=np.int64)
    R = ptr.shape[0] - 1
    for a in prange(nc0):
        ci = a * stride
        for b in range(nc1):
            cj = b * stride
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


@njit(**_JIT)
def max_mean_point_1d(g, spans, ci):
    best = -np.inf
    for j in range(spans.shape[0]):
        s, m = ball_sum_point_1d(g, spans[j:j + 1], ci)
        v = s / m
        if v > best:
            best = v
    return best


@njit(**_JIT)
def max_mean_point_2d(g, spans, ptr, ci, cj):
    best = -np.inf
    for j in range(ptr.shape[0] - 1):
        s, m = ball_sum_point_2d(g, spans[ptr[j]:ptr[j + 1]], ci, cj)
        v = s / m
        if v > best:
            best = v
    return best


@njit(parallel=True, **_JIT)
def maximal_field_1d(g, spans):
    n = g.shape[0]
    out = np.empty(n)
    for ci in prange(n):
        out[ci] = max_mean_point_1d(g, spans, ci)
    return out


@njit(parallel=True, **_JIT)
def maximal_field_2d(g, spans, ptr):
    n0, n1 = g.shape
    out = np.empty((n0, n1))
    for ci in prange(n0):
        for cj in range(n1):
            out[ci, cj] = max_mean_point_2d(g, spans, ptr, ci, cj)
    return out


# ---------------------------------------------------------------------------
# BMO

@njit(**_JIT)
def _sorted_abs_diff_mean(buf, m):
    # sum_{y,z} |v_y - v_z| = 2 sum_i (2i - m + 1) v_(i); shifting by the
    # minimum leaves the value unchanged and makes constants exactly zero
    v = np.sort(buf[:m])
    s = 0.0
    for t in range(m):
        s += (2.0 * t - m + 1.0) * (v[t] - v[0])
    return 2.0 * s / (m * m)


@njit(parallel=True, **_JIT)
def bmo_sup_1d(u, spans, stride, mmax):
    n = u.shape[0]
    nc = (n + stride - 1) // stride
    vals = np.full(nc, -np.inf)
    argr = np.full(nc, -1, dtype=np.int64)
    for k in prange(nc):
        ci = k * stride
        buf = np.empty(mmax)
        best = -np.inf
        bj = -1
        for j in range(spans.shape[0]):
            a = max(spans[j, 0] + ci, 0)
            b = min(spans[j, 1] + ci, n - 1)
            m = 0
            for y in range(a, b + 1):
                buf[m] = u[y]
                m += 1
            v = _sorted_abs_diff_mean(buf, m)
            if v > best:
                best = v
                bj = j
        vals[k] = best
        argr[k] = bj
    return vals, argr


@njit(parallel=True, **_JIT)
def bmo_sup_2d(u, spans, ptr, stride, mmax):
    n0, n1 = u.shape
    nc0 = (n0 + stride - 1) // stride
    nc1 = (n1 + stride - 1) // stride
    vals = np.full((nc0, nc1), -np.inf)
    argr = np.full((nc0, nc1), -1, dtype=np.int64)
    for a in prange(nc0):
        ci = a * stride
        buf = np.empty(mmax)
        for b in range(nc1):
            cj = b * stride
            best = -np.inf
            bj = -1
            for j in range(ptr.shape[0] - 1):
                m = 0
                for r in range(ptr[j], ptr[j + 1]):
                    i = ci + spans[r, 0]
                    if i < 0 or i >= n0:
                        continue
                    lo = max(spans[r, 1] + cj, 0)
                    hi = min(spans[r, 2] + cj, n1 - 1)
                    for y in range(lo, hi + 1):
                        buf[m] = u[i, y]
                        m += 1
                v = _sorted_abs_diff_mean(buf, m)
                if v > best:
                    best = v
                    bj = j
            vals[a, b] = best
            argr[a, b] = bj
    return vals, argr


# ---------------------------------------------------------------------------
# polynomial fits

@njit(**_JIT)
def _chol_solve(A, b):
    B = A.shape[0]
    dmax = 0.0
    for i in range(B):
        if A[i, i] > dmax:
            dmax = A[i, i]
    thresh = PIVOT_REL * dmax
    L = np.zeros((B, B))
    for i in range(B):
        for j in range(i + 1):
            s = A[i, j]
            for k in range(j):
                s -= L[i, k] * L[j, k]
            if i == j:
                if s <= thresh:
                    return np.zeros(B), False
                L[i, i] = math.sqrt(s)
            else:
                L[i, j] = s / L[j, j]
    y = np.zeros(B)
    for i in range(B):
        s = b[i]
        for k in range(i):
            s -= L[i, k] * y[k]
        y[i] = s / L[i, i]
    x = np.zeros(B)
    for i in range(B - 1, -1, -1):
        s = y[i]
        for k in range(i + 1, B):
            s -= L[k, i] * x[k]
        x[i] = s / L[i, i]
    return x, True


@njit(**_JIT)
def _pinv_solve(A, b):
    """Min-norm solve via cyclic Jacobi eigendecomposition (B <= ~10)."""
    B = A.shape[0]
    M = A.copy()
    V = np.eye(B)
    for _ in range(100):
        off = 0.0
        for p in range(B - 1):
            for q in range(p + 1, B):
                off += M[p, q] * M[p, q]
        if off <= 1e-28 * max(1.0, np.trace(np.abs(M))):
            break
        for p in range(B - 1):
            for q in range(p + 1, B):
                apq = M[p, q]
                if abs(apq) < 1e-300:
                    continue
                theta = (M[q, q] - M[p, p]) / (2.0 * apq)
                t = (1.0 if theta >= 0.0 else -1.0) / (abs(theta) + math.sqrt(theta * theta + 1.0))
                c = 1.0 / math.sqrt(t * t + 1.0)
                s = t * c
                for k in range(B):
                    mkp = M[k, p]
                    mkq = M[k, q]
                    M[k, p] = c * mkp - s * mkq
                    M[k, q] = s * mkp + c * mkq
                for k in range(B):
                    mpk = M[p, k]
                    mqk = M[q, k]
                    M[p, k] = c * mpk - s * mqk
                    M[q, k] = s * mpk + c * mqk
                for k in range(B):
                    vkp = V[k, p]
                    vkq = V[k, q]
                    V[k, p] = c * vkp - s * vkq
                    V[k, q] = s * vkp + c * vkq
    wmax = 0.0
    for i in range(B):
        if abs(M[i, i]) > wmax:
            wmax = abs(M[i, i])
    thresh = 1e-12 * wmax
    x = np.zeros(B)
    for i in range(B):
        wi = M[i, i]
        if abs(wi) <= thresh:
            continue
        dot = 0.0
        for k in range(B):
            dot += V[k, i] * b[k]
        dot /= wi
        for k in range(B):
            x[k] += V[k, i] * dot
    return x


@njit(**_JIT)
def _fit_core(X, vals, m, B, q, max_iter, coef, res):
    """Fit in place; X (m_max, B), uses first m rows.  Returns
    (residual, iters, converged, rank_deficient)."""
    ata = np.zeros((B, B))
    aty = np.zeros(B)
    for i in range(m):
        for a in range(B):
            xa = X[i, a]
            aty[a] += xa * vals[i]
            for b in range(a, B):
                ata[a, b] += xa * X[i, b]
    for a in range(B):
        for b in range(a):
            ata[a, b] = ata[b, a]
    c, ok = _chol_solve(ata, aty)
    rank_deficient = not ok
    if not ok:
        c = _pinv_solve(ata, aty)
    for a in range(B):
        coef[a] = c[a]
    for i in range(m):
        s = vals[i]
        for a in range(B):
            s -= X[i, a] * coef[a]
        res[i] = s
    if q == 2:
        ss = 0.0
        for i in range(m):
            ss += res[i] * res[i]
        return math.sqrt(ss / m), 0, True, rank_deficient

    scale = 0.0
    for i in range(m):
        if abs(vals[i]) > scale:
            scale = abs(vals[i])
    if scale == 0.0:
        return 0.0, 0, True, rank_deficient
    eps = IRLS_EPS_REL * scale
    cur = 0.0
    for i in range(m):
        cur += abs(res[i])
    cur /= m
    iters = 0
    converged = False
    for _ in range(max_iter):
        iters += 1
        for a in range(B):
            aty[a] = 0.0
            for b in range(B):
                ata[a, b] = 0.0
        for i in range(m):
            w = 1.0 / math.sqrt(res[i] * res[i] + eps * eps)
            for a in range(B):
                xa = X[i, a]
                aty[a] += w * xa * vals[i]
                for b in range(a, B):
                    ata[a, b] += w * xa * X[i, b]
        for a in range(B):
            for b in range(a):
                ata[a, b] = ata[b, a]
        c, ok = _chol_solve(ata, aty)
        if not ok:
            c = _pinv_solve(ata, aty)
            rank_deficient = True
        for a in range(B):
            coef[a] = c[a]
        new = 0.0
        for i in range(m):
            s = vals[i]
            for a in range(B):
                s -= X[i, a] * coef[a]
            res[i] = s
            new += abs(s)
        new /= m
        done = abs(new - cur) <= IRLS_TOL * max(cur, eps)
        cur = new
        if done or cur <= 1e-15 * scale:
            converged = True
            break
    return cur, iters, converged, rank_deficient


@njit(**_JIT)
def _poly_fit_members_jit(coords, vals, exps, q, max_iter):
    m = vals.shape[0]
    B = exps.shape[0]
    coef = np.zeros(B)
    if B == 0:
        s = 0.0
        if q == 2:
            for i in range(m):
                s += vals[i] * vals[i]
            return coef, math.sqrt(s / m), 0, True, False
        for i in range(m):
            s += abs(vals[i])
        return coef, s / m, 0, True, False
    X = np.empty((m, B))
    for i in range(m):
        for b in range(B):
            v = 1.0
            for d in range(exps.shape[1]):
                e = exps[b, d]
                for _ in range(e):
                    v *= coords[i, d]
            X[i, b] = v
    res = np.empty(m)
    residual, iters, conv, rank = _fit_core(X, vals, m, B, q, max_iter, coef, res)
    return coef, residual, iters, conv, rank


def poly_fit_members(coords, vals, exps, q, max_iter=IRLS_MAX_ITER):
    coords = np.ascontiguousarray(np.atleast_2d(np.asarray(coords, dtype=float)))
    vals = np.ascontiguousarray(np.asarray(vals, dtype=float))
    exps = np.atleast_1d(np.asarray(exps, dtype=np.int64))
    if exps.ndim == 1:
        exps = exps[:, None]
    exps = np.ascontiguousarray(exps)
    coef, residual, iters, conv, rank = _poly_fit_members_jit(
        coords, vals, exps, np.int64(q), np.int64(max_iter))
    return coef, float(residual), int(iters), bool(conv), bool(rank)


@njit(parallel=True, **_JIT)
def campanato_sup_1d(u, h, spans, radii, weights, stride, exps, q, max_iter, mmax):
    n = u.shape[0]
    nc = (n + stride - 1) // stride
    B = exps.shape[0]
    vals = np.full(nc, -np.inf)
    argr = np.full(nc, -1, dtype=np.int64)
    skipped = np.zeros(nc, dtype=np.int64)
    rankc = np.zeros(nc, dtype=np.int64)
    for k in prange(nc):
        ci = k * stride
        vbuf = np.empty(mmax)
        X = np.empty((mmax, B))
        res = np.empty(mmax)
        coef = np.empty(B)
        best = -np.inf
        bj = -1
        for j in range(spans.shape[0]):
            a = max(spans[j, 0] + ci, 0)
            b = min(spans[j, 1] + ci, n - 1)
            m = 0
            inv = h / radii[j]
            for y in range(a, b + 1):
                vbuf[m] = u[y]
                t = (y - ci) * inv
                for bb in range(B):
                    v = 1.0
                    for _ in range(exps[bb, 0]):
                        v *= t
                    X[m, bb] = v
                m += 1
            if m < B:
                skipped[k] += 1
                continue
            residual, _, _, rank = _fit_core(X, vbuf, m, B, q, max_iter, coef, res)
            if rank:
                rankc[k] += 1
            v = weights[j] * residual
            if v > best:
                best = v
                bj = j
        vals[k] = best
        argr[k] = bj
    return vals, argr, int(np.sum(skipped)), int(np.sum(rankc))


@njit(parallel=True, **_JIT)
def campanato_sup_2d(u, h, spans, ptr, radii, weights, stride, exps, q,
                     max_iter, mmax):
    n0, n1 = u.shape
    nc0 = (n0 + stride - 1) // stride
    nc1 = (n1 + stride - 1) // stride
    B = exps.shape[0]
    vals = np.full((nc0, nc1), -np.inf)
    argr = np.full((nc0, nc1), -1, dtype=np.int64)
    skipped = np.zeros(nc0, dtype=np.int64)
    rankc = np.zeros(nc0, dtype=np.int64)
    for a in prange(nc0):
        ci = a * stride
        vbuf = np.empty(mmax)
        X = np.empty((mmax, B))
        res = np.empty(mmax)
        coef = np.empty(B)
        for b in range(nc1):
            cj = b * stride
            best = -np.inf
            bj = -1
            for j in range(ptr.shape[0] - 1):
                m = 0
                inv = h / radii[j]
                for r in range(ptr[j], ptr[j + 1]):
                    i = ci + spans[r, 0]
                    if i < 0 or i >= n0:
                        continue
                    t0 = (i - ci) * inv
                    lo = max(spans[r, 1] + cj, 0)
                    hi = min(spans[r, 2] + cj, n1 - 1)
                    for y in range(lo, hi + 1):
                        vbuf[m] = u[i, y]
                        t1 = (y - cj) * inv
                        for bb in range(B):
                            v = 1.0
                            for _ in range(exps[bb, 0]):
                                v *= t0
                            for _ in range(exps[bb, 1]):
                                v *= t1
                            X[m, bb] = v
                        m += 1
                if m < B:
                    skipped[a] += 1
                    continue
                residual, _, _, rank = _fit_core(X, vbuf, m, B, q, max_iter,
                                                 coef, res)
                if rank:
                    rankc[a] += 1
                v = weights[j] * residual
                if v > best:
                    best = v
                    bj = j
            vals[a, b] = best
            argr[a, b] = bj
    return vals, argr, int(np.sum(skipped)), int(np.sum(rankc))


# ---------------------------------------------------------------------------
# singular-kernel gathers (offsets pre-sorted by distance)

@njit(**_JIT)
def riesz_gather_1d(g, offs, w, ci):
    n = g.shape[0]
    s = 0.0
    for t in range(offs.shape[0]):
        y = ci + offs[t, 0]
        if 0 <= y < n:
            s += g[y] * w[t]
    return s


@njit(**_JIT)
def riesz_gather_2d(g, offs, w, ci, cj):
    n0, n1 = g.shape
    s = 0.0
    for t in range(offs.shape[0]):
        y0 = ci + offs[t, 0]
        y1 = cj + offs[t, 1]
        if 0 <= y0 < n0 and 0 <= y1 < n1:
            s += g[y0, y1] * w[t]
    return s


@njit(**_JIT)
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


@njit(**_JIT)
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
# Gagliardo pair sums

@njit(parallel=True, **_JIT)
def gagliardo_energy_1d(comps, wts, p, ktable, act):
    # act flags cells with a nonzero tensor; pairs of inactive cells
    # contribute exactly 0 and are skipped.
    C, n = comps.shape
    half = p / 2.0
    partial = np.zeros(n)
    for i in prange(n - 1):
        s = 0.0
        ai = act[i]
        for j in range(i + 1, n):
            if ai == 0 and act[j] == 0:
                continue
            sq = 0.0
            for c in range(C):
                d = comps[c, i] - comps[c, j]
                sq += wts[c] * d * d
            if sq > 0.0:
                dd = j - i
                s += sq ** half * ktable[dd * dd]
        partial[i] = s
    total = 0.0
    for i in range(n):
        total += partial[i]
    return 2.0 * total


@njit(parallel=True, **_JIT)
def gagliardo_energy_2d(comps, wts, p, ktable, act):
    # For a pair with one zero tensor, |T(x)-T(y)|^p reduces to the
    # precomputed |T|^p of the nonzero side, so pow() runs only on
    # active-active pairs; zero-zero pairs are skipped outright.
    C, n0, n1 = comps.shape
    half = p / 2.0
    ntot = n0 * n1
    ii = np.empty(ntot, dtype=np.int64)
    jj = np.empty(ntot, dtype=np.int64)
    aflat = np.empty(ntot, dtype=np.uint8)
    pnorm = np.empty(ntot)
    for t in range(ntot):
        i = t // n1
        j = t - i * n1
        ii[t] = i
        jj[t] = j
        aflat[t] = act[i, j]
        sq = 0.0
        for c in range(C):
            d = comps[c, i, j]
            sq += wts[c] * d * d
        pnorm[t] = sq ** half if sq > 0.0 else 0.0
    active = np.nonzero(aflat)[0]
    A = active.shape[0]
    partial = np.zeros(ntot)
    for t in prange(ntot - 1):
        i0 = ii[t]
        j0 = jj[t]
        s = 0.0
        if aflat[t]:
            px = pnorm[t]
            for t2 in range(t + 1, ntot):
                di = ii[t2] - i0
                dj = jj[t2] - j0
                if aflat[t2]:
                    sq = 0.0
                    for c in range(C):
                        d = comps[c, i0, j0] - comps[c, ii[t2], jj[t2]]
                        sq += wts[c] * d * d
                    if sq > 0.0:
                        s += sq ** half * ktable[di * di + dj * dj]
                else:
                    s += px * ktable[di * di + dj * dj]
        else:
            lo = np.searchsorted(active, t + 1)
            for a in range(lo, A):
                t2 = active[a]
                di = ii[t2] - i0
                dj = jj[t2] - j0
                s += pnorm[t2] * ktable[di * di + dj * dj]
        partial[t] = s
    total = 0.0
    for t in range(ntot):
        total += partial[t]
    return 2.0 * total


@njit(**_JIT)
def gagliardo_point_1d(comps, wts, ci, p, ktable):
    C, n = comps.shape
    half = p / 2.0
    s = 0.0
    for j in range(n):
        if j == ci:
            continue
        sq = 0.0
        for c in range(C):
            d = comps[c, j] - comps[c, ci]
            sq += wts[c] * d * d
        if sq > 0.0:
            dd = j - ci
            s += sq ** half * ktable[dd * dd]
    return s


@njit(**_JIT)
def gagliardo_point_2d(comps, wts, ci, cj, p, ktable):
    C, n0, n1 = comps.shape
    half = p / 2.0
    s = 0.0
    for i in range(n0):
        di = i - ci
        for j in range(n1):
            if i == ci and j == cj:
                continue
            sq = 0.0
            for c in range(C):
                d = comps[c, i, j] - comps[c, ci, cj]
                sq += wts[c] * d * d
            if sq > 0.0:
                dj = j - cj
                s += sq ** half * ktable[di * di + dj * dj]
    return s
