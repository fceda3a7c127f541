"""Subhyperbolic length of curves and the distance d_alpha via grid geodesics.

The weight is ``dist(z, boundary) ** (alpha - 1)`` with ``dist`` in the chosen
norm (uniform by default); arclength ``ds`` is always Euclidean.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import dijkstra

from . import geometry as geo
from .errors import (
    CurveTouchesBoundary,
    Disconnected,
    HypothesisFails,
    PointOutsideDomain,
    PreconditionNotMet,
    SlackUnreachable,
)

_GL_X, _GL_W = np.polynomial.legendre.leggauss(5)
_GL_X = 0.5 * (_GL_X + 1.0)
_GL_W = 0.5 * _GL_W
_PANEL_RATIO = 1.25
_MAX_PANELS = 64
MAX_GRID_NODES = 4096 * 4096


def check_alpha(alpha):
    if not (0.0 < alpha <= 1.0):
        raise ValueError(f"alpha must lie in (0, 1], got {alpha}")


def local_segments(domain, pts):
    """Boundary segments that can be nearest to some point of the bounding box of ``pts``."""
    pts = np.atleast_2d(pts)
    lo, hi = pts.min(axis=0), pts.max(axis=0)
    c = 0.5 * (lo + hi)
    reach = float(geo.raw_distance(domain, c, "euclidean")[0]) + 0.5 * float(np.hypot(*(hi - lo)))
    return domain.segments_near(lo, hi, reach * (1 + 1e-9) + 1e-12)


# --------------------------------------------------------------------------
# curves


@dataclass(frozen=True, eq=False)
class ParamCurve:
    """Polyline inside the domain with cumulative arclength and weight trace."""

    vertices: np.ndarray
    t: np.ndarray
    w: np.ndarray
    norm: str = "uniform"

    @property
    def length(self):
        return float(self.t[-1])

    @property
    def start(self):
        return self.vertices[0]

    @property
    def end(self):
        return self.vertices[-1]

    def point_at(self, s):
        s = np.clip(np.asarray(s, float), 0.0, self.length)
        x = np.interp(s, self.t, self.vertices[:, 0])
        y = np.interp(s, self.t, self.vertices[:, 1])
        return np.stack([x, y], axis=-1)

    def resampled(self, domain, n=None, spacing=None):
        """Same geometric curve, with vertices added so every piece is at most ``spacing`` long."""
        if spacing is None:
            spacing = self.length / max(1, (n or 256))
        pieces = [self.vertices[:1]]
        for a, b in zip(self.vertices[:-1], self.vertices[1:]):
            k = max(1, int(math.ceil(np.hypot(*(b - a)) / spacing)))
            s = np.linspace(0.0, 1.0, k + 1)[1:, None]
            pieces.append(a + s * (b - a))
        return make_curve(domain, np.vstack(pieces), self.norm, check=False)

    def to_list(self):
        return self.vertices.tolist()


def make_curve(domain, vertices, norm="uniform", check=True) -> ParamCurve:
    v = np.asarray(vertices, float)
    keep = np.ones(len(v), dtype=bool)
    keep[1:] = np.any(np.abs(np.diff(v, axis=0)) > 0, axis=1)
    v = v[keep]
    if len(v) == 1:
        v = np.vstack([v, v])
    if check:
        if len(v) > 1 and not np.all(geo.segments_inside(domain, v[:-1], v[1:])):
            raise CurveTouchesBoundary("curve leaves the domain")
    seg = np.hypot(*np.diff(v, axis=0).T)
    t = np.concatenate([[0.0], np.cumsum(seg)])
    w = geo.raw_distance(domain, v, norm, local_segments(domain, v))
    return ParamCurve(v, t, w, norm)


def segment_curve(domain, x, y, norm="uniform"):
    return make_curve(domain, np.array([x, y], float), norm)


# --------------------------------------------------------------------------
# quadrature


def _panel_breaks(r, n):
    """Panel breakpoints on [0, 1] measured from the smaller-distance end."""
    if n == 1:
        return np.array([0.0, 1.0])
    i = np.arange(n + 1) / n
    return np.expm1(np.log(r) * i) / (r - 1.0)


def segment_costs(domain, a, b, alpha, norm="uniform", segs=None, d_a=None, d_b=None):
    """Graded composite Gauss-Legendre estimate of len_alpha for each segment [a_k, b_k].

    Panels are graded geometrically toward the end closer to the boundary so
    that the distance varies by at most ~25% across a panel.  Returns +inf for
    segments with a non-positive distance at a node.
    """
    a = np.atleast_2d(np.asarray(a, float))
    b = np.atleast_2d(np.asarray(b, float))
    L = np.hypot(*(b - a).T)
    if alpha == 1.0:
        return L
    if segs is None:
        segs = local_segments(domain, np.vstack([a, b]))
    if d_a is None:
        d_a = geo.raw_distance(domain, a, norm, segs)
    if d_b is None:
        d_b = geo.raw_distance(domain, b, norm, segs)
    lo = np.minimum(d_a, d_b)
    hi = np.maximum(d_a, d_b)
    out = np.full(len(a), np.inf)
    ok = lo > 0
    r = np.where(ok, hi / np.where(ok, lo, 1.0), 1.0)
    npan = np.where(r <= _PANEL_RATIO, 1, np.ceil(np.log(r) / np.log(_PANEL_RATIO)))
    npan = np.clip(npan, 1, _MAX_PANELS).astype(int)
    flip = d_a > d_b
    for n in np.unique(npan[ok]):
        sel = np.flatnonzero(ok & (npan == n))
        if n == 1:
            s = np.broadcast_to(np.array([0.0, 1.0]), (len(sel), 2))
        else:
            s = _panel_breaks(r[sel, None], n)
        ds = np.diff(s, axis=1)  # (K, n)
        nodes = s[:, :-1, None] + ds[:, :, None] * _GL_X[None, None, :]  # (K, n, 5)
        tt = np.where(flip[sel, None, None], 1.0 - nodes, nodes)
        p = a[sel, None, None, :] + tt[..., None] * (b[sel] - a[sel])[:, None, None, :]
        d = geo.raw_distance(domain, p.reshape(-1, 2), norm, segs).reshape(tt.shape)
        with np.errstate(divide="ignore"):
            f = np.where(d > 0, d ** (alpha - 1.0), np.inf)
        out[sel] = L[sel] * np.sum(f * _GL_W[None, None, :] * ds[:, :, None], axis=(1, 2))
    return out


def weighted_length(curve, alpha, domain, rtol=1e-6, norm=None) -> float:
    """len_alpha of a polyline by adaptive midpoint/trapezoid bisection.

    Each piece is split until ``|M - T| <= rtol * S`` where M and T are the
    midpoint and trapezoid rules and S = (2M + T) / 3 is the accepted value.
    """
    check_alpha(alpha)
    if isinstance(curve, ParamCurve):
        verts, norm = curve.vertices, norm or curve.norm
    else:
        verts, norm = np.asarray(curve, float), norm or "uniform"
    a, b = verts[:-1], verts[1:]
    L = np.hypot(*(b - a).T)
    if alpha == 1.0:
        return float(L.sum())
    segs = local_segments(domain, verts)

    def f(p):
        d = geo.raw_distance(domain, p, norm, segs)
        if np.any(d <= 0):
            raise CurveTouchesBoundary("weight is singular: curve meets the boundary")
        return d ** (alpha - 1.0)

    keep = L > 0
    p0, p1, ell = a[keep], b[keep], L[keep]
    f0, f1 = f(p0), f(p1)
    floor = 1e-14 * max(float(L.sum()), 1e-300)
    total = 0.0
    for _ in range(80):
        if len(p0) == 0:
            break
        pm = 0.5 * (p0 + p1)
        fm = f(pm)
        M = ell * fm
        T = 0.5 * ell * (f0 + f1)
        S = (2.0 * M + T) / 3.0
        done = (np.abs(M - T) <= rtol * S) | (ell <= floor)
        total += float(S[done].sum())
        nd = ~done
        p0, p1, pm = p0[nd], p1[nd], pm[nd]
        f0, f1, fm, ell = f0[nd], f1[nd], fm[nd], ell[nd] / 2
        p0, p1 = np.vstack([p0, pm]), np.vstack([pm, p1])
        f0, f1 = np.concatenate([f0, fm]), np.concatenate([fm, f1])
        ell = np.concatenate([ell, ell])
    else:
        total += float((0.5 * ell * (f0 + f1)).sum())
    return total


def cumulative_weighted(curve: ParamCurve, alpha, domain):
    """Running integral of dist^(alpha-1) at the curve vertices."""
    v = curve.vertices
    c = segment_costs(domain, v[:-1], v[1:], alpha, curve.norm, d_a=curve.w[:-1], d_b=curve.w[1:])
    if not np.all(np.isfinite(c)):
        raise CurveTouchesBoundary("weight is singular: curve meets the boundary")
    return np.concatenate([[0.0], np.cumsum(c)])


# --------------------------------------------------------------------------
# grid graph


@dataclass
class _WindowGraph:
    lo: np.ndarray
    h: float
    nx: int
    ny: int
    pts: np.ndarray
    included: np.ndarray
    dist: np.ndarray
    rows: np.ndarray
    cols: np.ndarray
    weights: np.ndarray


def _linear_weight_mean(d0, d1, alpha):
    """Mean of d^(alpha-1) when d runs linearly from d0 to d1 (1-Lipschitz proxy for grid edges)."""
    d0 = np.asarray(d0, float)
    d1 = np.asarray(d1, float)
    diff = d1 - d0
    close = np.abs(diff) <= 1e-9 * np.maximum(d0, d1)
    with np.errstate(divide="ignore", invalid="ignore"):
        exact = (d1 ** alpha - d0 ** alpha) / (alpha * np.where(close, 1.0, diff))
        mid = (0.5 * (d0 + d1)) ** (alpha - 1.0)
    return np.where(close, mid, exact)


def _edge_costs(domain, a, b, alpha, norm, segs, d_a, d_b):
    """Grid-edge costs: Simpson with an exact midpoint distance when the endpoint
    distances are within the panel ratio, graded Gauss-Legendre otherwise."""
    L = np.hypot(*(b - a).T)
    if alpha == 1.0:
        return L
    lo = np.minimum(d_a, d_b)
    graded = np.maximum(d_a, d_b) > _PANEL_RATIO * lo
    out = np.empty(len(a))
    s = ~graded
    if np.any(s):
        dm = geo.raw_distance(domain, 0.5 * (a[s] + b[s]), norm, segs)
        e = alpha - 1.0
        out[s] = L[s] * (d_a[s] ** e + 4 * dm ** e + d_b[s] ** e) / 6.0
    if np.any(graded):
        out[graded] = segment_costs(domain, a[graded], b[graded], alpha, norm, segs, d_a[graded], d_b[graded])
    return out


_STEPS = ((0, 1), (1, 0), (1, 1), (1, -1))  # (di, dj) in (row=y, col=x)


def _build_graph(domain, alpha, lo, hi, h, norm):
    xs, ys = geo.grid_nodes(lo, hi, h)
    nx, ny = len(xs), len(ys)
    if nx * ny > MAX_GRID_NODES:
        raise SlackUnreachable(f"grid of {nx}x{ny} nodes exceeds the refinement budget")
    X, Y = np.meshgrid(xs, ys)
    pts = np.column_stack([X.ravel(), Y.ravel()])
    segs = local_segments(domain, pts)
    inside = geo.contains(domain, pts)
    dist = np.zeros(len(pts))
    dist[inside] = geo.raw_distance(domain, pts[inside], norm, segs)
    included = inside & (dist >= 0.5 * h)
    inc2 = included.reshape(ny, nx)
    rows, cols, wts = [], [], []
    idx = np.arange(nx * ny).reshape(ny, nx)
    for di, dj in _STEPS:
        i0 = slice(0, ny - di)
        i1 = slice(di, ny)
        if dj >= 0:
            j0, j1 = slice(0, nx - dj), slice(dj, nx)
        else:
            j0, j1 = slice(-dj, nx), slice(0, nx + dj)
        both = inc2[i0, j0] & inc2[i1, j1]
        u = idx[i0, j0][both]
        v = idx[i1, j1][both]
        if len(u) == 0:
            continue
        elen = h * math.hypot(di, dj)
        near = np.minimum(dist[u], dist[v]) < elen
        if np.any(near):
            nu = np.flatnonzero(near)
            ok = geo.segments_inside(domain, pts[u[nu]], pts[v[nu]])
            drop = np.zeros(len(u), dtype=bool)
            drop[nu[~ok]] = True
            u, v = u[~drop], v[~drop]
        c = _edge_costs(domain, pts[u], pts[v], alpha, norm, segs, dist[u], dist[v])
        good = np.isfinite(c)
        rows.append(u[good])
        cols.append(v[good])
        wts.append(c[good])
    cat = lambda parts, dt: np.concatenate(parts) if parts else np.zeros(0, dt)
    return _WindowGraph(
        np.asarray(lo, float), h, nx, ny, pts, included, dist,
        cat(rows, int), cat(cols, int), cat(wts, float),
    )


def _graph(domain, alpha, lo, hi, h, norm):
    key = ("graph", alpha, norm, round(h, 15), tuple(np.round(lo, 15)), tuple(np.round(hi, 15)))
    cache = domain._cache
    if key not in cache:
        if sum(1 for k in cache if k[0] == "graph") >= 8:
            for k in [k for k in cache if k[0] == "graph"][:4]:
                del cache[k]
        cache[key] = _build_graph(domain, alpha, lo, hi, h, norm)
    return cache[key]


def _attachments(domain, g, p, alpha, norm):
    """Straight edges from an off-grid point to nearby included nodes."""
    for reach in (2, 4, 8, 16):
        ci = int(round((p[1] - g.lo[1]) / g.h))
        cj = int(round((p[0] - g.lo[0]) / g.h))
        ii = np.arange(max(0, ci - reach), min(g.ny, ci + reach + 1))
        jj = np.arange(max(0, cj - reach), min(g.nx, cj + reach + 1))
        if len(ii) == 0 or len(jj) == 0:
            continue
        cand = (ii[:, None] * g.nx + jj[None, :]).ravel()
        cand = cand[g.included[cand]]
        if len(cand) == 0:
            continue
        ok = geo.segments_inside(domain, np.repeat(p[None], len(cand), 0), g.pts[cand])
        cand = cand[ok]
        if len(cand) == 0:
            continue
        c = segment_costs(domain, np.repeat(p[None], len(cand), 0), g.pts[cand], alpha, norm)
        good = np.isfinite(c)
        if np.any(good):
            return cand[good], c[good]
    return np.zeros(0, int), np.zeros(0)


def _grid_path(domain, g, alpha, x, y, norm, limit):
    n = len(g.pts)
    ax, acx = _attachments(domain, g, x, alpha, norm)
    ay, acy = _attachments(domain, g, y, alpha, norm)
    if len(ax) == 0 or len(ay) == 0:
        return None
    src, dst = n, n + 1
    rows = np.concatenate([g.rows, np.full(len(ax), src), np.full(len(ay), dst)])
    cols = np.concatenate([g.cols, ax, ay])
    w = np.concatenate([g.weights, acx, acy])
    mat = coo_matrix((w, (rows, cols)), shape=(n + 2, n + 2)).tocsr()
    dist, pred = dijkstra(mat, directed=False, indices=src, return_predecessors=True,
                          limit=limit if limit is not None else np.inf)
    if not np.isfinite(dist[dst]):
        return None
    order = [dst]
    while order[-1] != src:
        order.append(int(pred[order[-1]]))
    order.reverse()
    pts = [x] + [g.pts[k] for k in order[1:-1]] + [y]
    return np.array(pts)


def _straighten(domain, pts, alpha, norm):
    """Replace runs of vertices by chords whenever the chord is inside and cheaper."""
    pts = np.asarray(pts, float)
    segs = local_segments(domain, pts)
    costs = segment_costs(domain, pts[:-1], pts[1:], alpha, norm, segs)
    stride = 1
    while stride * 2 < len(pts):
        stride *= 2
    while stride >= 2:
        changed = True
        while changed and len(pts) > stride:
            changed = False
            n = len(pts)
            i = np.arange(0, n - stride)
            j = i + stride
            prefix = np.concatenate([[0.0], np.cumsum(costs)])
            old = prefix[j] - prefix[i]
            inside = geo.segments_inside(domain, pts[i], pts[j])
            new = np.full(len(i), np.inf)
            if np.any(inside):
                new[inside] = segment_costs(domain, pts[i[inside]], pts[j[inside]], alpha, norm, segs)
            gain = old - new
            cand = np.flatnonzero(gain > 1e-13 * np.maximum(old, 1e-300))
            if len(cand) == 0:
                break
            keep = np.ones(n, dtype=bool)
            new_cost = {}
            last = -1
            for c in cand[np.argsort(-gain[cand], kind="stable")]:
                a, b = i[c], j[c]
                if a < last or any(a < e and s < b for s, e in new_cost):
                    continue
                new_cost[(a, b)] = new[c]
                keep[a + 1:b] = False
            changed = True
            # rebuild cost list along the kept vertices
            kept = np.flatnonzero(keep)
            nc = []
            for s, e in zip(kept[:-1], kept[1:]):
                nc.append(new_cost.get((s, e), None))
            pts = pts[kept]
            missing = [k for k, v in enumerate(nc) if v is None]
            costs = np.array([0.0 if v is None else v for v in nc])
            if missing:
                mk = np.array(missing)
                costs[mk] = segment_costs(domain, pts[mk], pts[mk + 1], alpha, norm, segs)
        stride //= 2
    return pts


_WINDOW_CELLS = 48


def _grow(R, h, auto_h):
    # a wider window keeps at most ~2 * _WINDOW_CELLS nodes across unless h was fixed
    R *= 2
    if auto_h:
        h = max(h, R / _WINDOW_CELLS)
    return R, h


@dataclass(frozen=True, eq=False)
class GeodesicResult:
    value: float
    curve: ParamCurve
    alpha: float
    h: float
    gap: float
    levels: tuple = ()

    def to_json(self):
        return {
            "value": self.value,
            "gap": self.gap,
            "alpha": self.alpha,
            "h": self.h,
            "levels": [list(l) for l in self.levels],
            "curve": self.curve.to_list(),
        }


def subhyp_distance(domain, alpha, x, y, h=None, tol=0.02, norm="uniform",
                    max_levels=4, window_factor=1.5) -> GeodesicResult:
    """Upper estimate of d_alpha(x, y) from grid geodesics with straightening.

    The grid lives on a square window around the pair (grown while the path
    hugs its edge or no path exists); ``h`` defaults to 1/8 of the Euclidean
    separation and is halved until successive values differ by < ``tol``.
    """
    check_alpha(alpha)
    x = np.asarray(x, float)
    y = np.asarray(y, float)
    for p in (x, y):
        if not geo.contains(domain, p):
            raise PointOutsideDomain(f"point {p.tolist()} is not in {domain.name}")
    sep = float(np.hypot(*(y - x)))
    if sep == 0.0:
        return GeodesicResult(0.0, make_curve(domain, [x, y], norm), alpha, 0.0, 0.0)
    direct = None
    if geo.segments_inside(domain, x, y)[0]:
        seg = make_curve(domain, [x, y], norm, check=False)
        direct = (weighted_length(seg, alpha, domain), seg)
        if alpha == 1.0:
            # straight chord is the global minimiser of Euclidean length
            return GeodesicResult(direct[0], seg, alpha, 0.0, 0.0, ((0.0, direct[0]),))
    auto_h = h is None
    if auto_h:
        h = sep / 8.0
    h = min(h, domain.diam / 16.0)
    blo, bhi = domain.bbox
    mid = 0.5 * (x + y)
    R = max(window_factor * sep, 8 * h)

    best = direct
    levels = []
    prev = None
    gap = math.inf
    level = 0
    while level < max_levels:
        lo = np.maximum(mid - R, blo)
        hi = np.minimum(mid + R, bhi)
        g = _graph(domain, alpha, lo, hi, h, norm)
        path = _grid_path(domain, g, alpha, x, y, norm, None)
        covers = np.all(lo <= blo) and np.all(hi >= bhi)
        if path is None:
            if not covers:
                R, h = _grow(R, h, auto_h)
                continue
            if best is None:
                h /= 2
                level += 1
                continue
        else:
            span_lo, span_hi = path.min(axis=0), path.max(axis=0)
            hugs = np.any((span_lo - lo < 2 * h) & (lo > blo)) or np.any((hi - span_hi < 2 * h) & (hi < bhi))
            if hugs and not covers:
                R, h = _grow(R, h, auto_h)
                continue
            pts = _straighten(domain, path, alpha, norm)
            cost = float(np.sum(segment_costs(domain, pts[:-1], pts[1:], alpha, norm)))
            if best is None or cost < best[0]:
                curve = make_curve(domain, pts, norm, check=False)
                best = (cost, curve)
        value = best[0]
        levels.append((h, value))
        if prev is not None:
            gap = abs(prev - value)
            if gap <= tol * value:
                break
        prev = value
        h /= 2
        level += 1
    if best is None:
        raise Disconnected(f"no grid path between {x.tolist()} and {y.tolist()} in {domain.name}")
    curve = best[1]
    value = weighted_length(curve, alpha, domain)
    if not math.isfinite(gap):
        gap = value
    return GeodesicResult(value, curve, alpha, levels[-1][0] if levels else 0.0, gap, tuple(levels))


def near_geodesic(domain, alpha, x, y, delta, norm="uniform", h=None, max_levels=12) -> ParamCurve:
    """Curve whose len_alpha is within ``delta`` of the converged distance estimate."""
    if not delta > 0:
        raise SlackUnreachable("slack must be positive: the infimum need not be attained")
    levels = 3
    while True:
        res = subhyp_distance(domain, alpha, x, y, h=h, tol=0.0, norm=norm, max_levels=levels)
        if res.gap <= delta:
            return res.curve
        if levels >= max_levels:
            raise SlackUnreachable(f"gap {res.gap:.3g} > slack {delta:.3g} after {levels} refinements")
        levels += 1


# --------------------------------------------------------------------------
# curve diagnostics


def _pair_norm(x, y, norm):
    return float(geo.norm_of(np.asarray(y) - np.asarray(x), norm))


def check_length_bound(curve: ParamCurve, domain, alpha, C=None) -> dict:
    """Compare lng(curve) with 2 e^C ||x - y|| and the sharper (alpha C + 2^alpha)^(1/alpha) ||x - y||."""
    x, y = curve.start, curve.end
    sep = _pair_norm(x, y, curve.norm)
    dx, dy = curve.w[0], curve.w[-1]
    if max(dx, dy) > 2 * sep:
        raise PreconditionNotMet("endpoints are deep inside; use the segment case")
    I = weighted_length(curve, alpha, domain)
    measured = I / sep ** alpha
    if C is None:
        C = measured
    elif measured > C * (1 + 1e-9):
        raise PreconditionNotMet(f"integral bound fails: needs C >= {measured:.6g}")
    bound = 2 * math.exp(C) * sep
    sharp = (alpha * C + 2 ** alpha) ** (1 / alpha) * sep
    return {
        "length": curve.length,
        "bound": bound,
        "sharp_bound": sharp,
        "C": C,
        "holds": curve.length <= bound * (1 + 1e-12),
        "sharp_holds": curve.length <= sharp * (1 + 1e-12),
    }


def check_segment_case(domain, x, y, beta, norm="uniform") -> dict:
    x = np.asarray(x, float)
    y = np.asarray(y, float)
    sep = _pair_norm(x, y, norm)
    d = geo.boundary_distance(domain, np.array([x, y]), norm)
    if not max(d) > 2 * sep:
        raise PreconditionNotMet("both endpoints lie within 2||x-y|| of the boundary")
    inside = bool(geo.segments_inside(domain, x, y)[0])
    lhs = weighted_length(np.array([x, y]), beta, domain, norm=norm)
    rhs = sep ** beta
    return {"inside": inside, "lhs": lhs, "rhs": rhs, "holds": inside and lhs <= rhs * (1 + 1e-9)}


def check_a1_property(curve: ParamCurve, domain, alpha, C) -> dict:
    """Max-distance point and mean-versus-infimum bounds for a curve obeying the lng^alpha bound."""
    fine = curve.resampled(domain, n=512)
    I = weighted_length(curve, alpha, domain)
    ell = curve.length
    minimal = I / ell ** alpha
    if minimal > C * (1 + 1e-9):
        raise HypothesisFails(f"integral exceeds C lng^alpha; minimal C is {minimal:.6g}", minimal)
    k = int(np.argmax(fine.w))
    wmax = float(fine.w[k])
    bound_i = C ** (1 / (1 - alpha)) * wmax if alpha < 1 else math.inf
    mean = I / ell
    inf_weight = wmax ** (alpha - 1)
    return {
        "length": ell,
        "integral": I,
        "minimal_C": minimal,
        "max_point": fine.vertices[k].tolist(),
        "max_distance": wmax,
        "i_bound": bound_i,
        "i_holds": ell <= bound_i * (1 + 1e-12),
        "mean_weight": mean,
        "ii_bound": 2 * C * inf_weight,
        "ii_holds": mean <= 2 * C * inf_weight * (1 + 1e-12),
    }


def arc_constants(curve: ParamCurve, domain, alpha, n=256):
    """Worst ratio of arc integrals to ||u - v||^alpha over sampled vertex pairs.

    Returns (constant, (i, j), resampled curve, cumulative integral).
    """
    fine = curve.resampled(domain, n=n)
    cum = cumulative_weighted(fine, alpha, domain)
    v = fine.vertices
    i, j = np.triu_indices(len(v), k=1)
    sep = geo.norm_of(v[j] - v[i], fine.norm)
    ok = sep > 0
    ratio = np.zeros(len(i))
    ratio[ok] = (cum[j[ok]] - cum[i[ok]]) / sep[ok] ** alpha
    k = int(np.argmax(ratio))
    return float(ratio[k]), (int(i[k]), int(j[k])), fine, cum
