"""Compiled inner loops for point/segment queries."""
from __future__ import annotations

import numpy as np
from numba import njit

EUCLIDEAN = 0
UNIFORM = 1


@njit(cache=True)
def _uniform_to_segment(ux, uy, dx, dy):
    # max(|ux - t dx|, |uy - t dy|) is convex piecewise linear in t on [0, 1];
    # the minimum sits at an endpoint or at one of four breakpoints.
    best = max(abs(ux), abs(uy))
    v = max(abs(ux - dx), abs(uy - dy))
    if v < best:
        best = v
    for k in range(4):
        if k == 0:
            num, den = ux - uy, dx - dy
        elif k == 1:
            num, den = ux + uy, dx + dy
        elif k == 2:
            num, den = ux, dx
        else:
            num, den = uy, dy
        if den != 0.0:
            t = num / den
            if 0.0 < t < 1.0:
                v = max(abs(ux - t * dx), abs(uy - t * dy))
                if v < best:
                    best = v
    return best


@njit(cache=True)
def _one(px, py, segs, j, mode):
    ux = px - segs[j, 0]
    uy = py - segs[j, 1]
    dx = segs[j, 2] - segs[j, 0]
    dy = segs[j, 3] - segs[j, 1]
    if mode == EUCLIDEAN:
        den = dx * dx + dy * dy
        t = 0.0
        if den > 0.0:
            t = min(1.0, max(0.0, (ux * dx + uy * dy) / den))
        ex = ux - t * dx
        ey = uy - t * dy
        return np.sqrt(ex * ex + ey * ey)
    return _uniform_to_segment(ux, uy, dx, dy)


@njit(cache=True)
def segment_distance(pts, segs, mode):
    n = pts.shape[0]
    m = segs.shape[0]
    out = np.empty(n)
    lo_x = np.minimum(segs[:, 0], segs[:, 2])
    hi_x = np.maximum(segs[:, 0], segs[:, 2])
    lo_y = np.minimum(segs[:, 1], segs[:, 3])
    hi_y = np.maximum(segs[:, 1], segs[:, 3])
    last = 0
    for i in range(n):
        px = pts[i, 0]
        py = pts[i, 1]
        # seed with the previous winner; nearby queries usually share it
        best = _one(px, py, segs, last, mode)
        arg = last
        for j in range(m):
            # bounding-box gap is a lower bound in both norms
            gx = max(lo_x[j] - px, px - hi_x[j], 0.0)
            gy = max(lo_y[j] - py, py - hi_y[j], 0.0)
            if max(gx, gy) >= best:
                continue
            d = _one(px, py, segs, j, mode)
            if d < best:
                best = d
                arg = j
        out[i] = best
        last = arg
    return out


@njit(cache=True)
def parity_inside(pts, segs):
    n = pts.shape[0]
    m = segs.shape[0]
    out = np.zeros(n, dtype=np.bool_)
    for i in range(n):
        px = pts[i, 0]
        py = pts[i, 1]
        c = 0
        for j in range(m):
            y0 = segs[j, 1]
            y1 = segs[j, 3]
            if (y0 > py) != (y1 > py):
                x0 = segs[j, 0]
                x1 = segs[j, 2]
                xc = x0 + (py - y0) * (x1 - x0) / (y1 - y0)
                if px < xc:
                    c += 1
        out[i] = (c % 2) == 1
    return out


@njit(cache=True)
def _solve_psd(G, b, out):
    # Gaussian elimination on a PSD system; near-zero pivots drop their unknown.
    d = len(b)
    A = G.copy()
    r = b.copy()
    scale = 0.0
    for a in range(d):
        scale = max(scale, A[a, a])
    keep = np.ones(d, dtype=np.bool_)
    for a in range(d):
        p = A[a, a]
        if p <= 1e-11 * scale:
            keep[a] = False
            for s in range(d):
                A[a, s] = 0.0
                A[s, a] = 0.0
            r[a] = 0.0
            continue
        for s in range(a + 1, d):
            f = A[s, a] / p
            if f != 0.0:
                for c in range(a, d):
                    A[s, c] -= f * A[a, c]
                r[s] -= f * r[a]
    for a in range(d - 1, -1, -1):
        if not keep[a]:
            out[a] = 0.0
            continue
        acc = r[a]
        for c in range(a + 1, d):
            acc -= A[a, c] * out[c]
        out[a] = acc / A[a, a]


@njit(cache=True)
def window_l1(values, mask, ii, jj, R, px, py):
    """Sum over the (2R+1)^2 window of |f - P| for the least-squares P of degree pattern (px, py).

    Offsets are scaled by R so the basis stays O(1); cells outside the mask
    carry no weight.  Returns the residual sums and the cell counts.
    """
    n = len(ii)
    d = len(px)
    ny, nx = values.shape
    res = np.empty(n)
    cnt = np.empty(n)
    G = np.empty((d, d))
    b = np.empty(d)
    phi = np.empty(d)
    coef = np.empty(d)
    inv = 1.0 / R if R > 0 else 0.0
    for t in range(n):
        i0 = max(ii[t] - R, 0)
        i1 = min(ii[t] + R, ny - 1)
        j0 = max(jj[t] - R, 0)
        j1 = min(jj[t] + R, nx - 1)
        G[:, :] = 0.0
        b[:] = 0.0
        m = 0
        for i in range(i0, i1 + 1):
            v = (i - ii[t]) * inv
            for j in range(j0, j1 + 1):
                if not mask[i, j]:
                    continue
                u = (j - jj[t]) * inv
                m += 1
                for a in range(d):
                    phi[a] = u ** px[a] * v ** py[a]
                f = values[i, j]
                for a in range(d):
                    b[a] += phi[a] * f
                    for c in range(a, d):
                        G[a, c] += phi[a] * phi[c]
        for a in range(d):
            for c in range(a):
                G[a, c] = G[c, a]
        _solve_psd(G, b, coef)
        acc = 0.0
        for i in range(i0, i1 + 1):
            v = (i - ii[t]) * inv
            for j in range(j0, j1 + 1):
                if not mask[i, j]:
                    continue
                u = (j - jj[t]) * inv
                p = 0.0
                for a in range(d):
                    p += coef[a] * u ** px[a] * v ** py[a]
                acc += abs(values[i, j] - p)
        res[t] = acc
        cnt[t] = m
    return res, cnt
