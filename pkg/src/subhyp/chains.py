"""Chains of interior cubes Q(z, dist(z)/8) following a curve from x to y."""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field

import numpy as np

from . import geometry as geo
from . import metric
from .errors import ClearanceZero

#: cube radius as a fraction of the uniform-norm boundary distance of its center
RADIUS_FRACTION = 1.0 / 8.0
#: samples per cube radius when walking the curve
_SAMPLES_PER_RADIUS = 4
#: multiplicity bound for the doubled family in the plane (2^n 7^n with n = 2)
MULTIPLICITY_BOUND = 196
RADIUS_RATIO = 5.0 / 3.0


@dataclass
class CubeChain:
    """Cubes Q_0..Q_m with connection points a_1..a_m and endpoints a_0 = x, a_{m+1} = y."""

    cubes: list
    points: list
    x: np.ndarray
    y: np.ndarray
    kept: list = field(default_factory=list, repr=False)

    @property
    def length(self):
        """Chain length m (number of cubes minus one)."""
        return len(self.cubes) - 1

    def centers(self):
        return np.array([c.center for c in self.cubes], float)

    def radii(self):
        return np.array([c.radius for c in self.cubes], float)

    def to_json(self):
        return {
            "x": self.x.tolist(),
            "y": self.y.tolist(),
            "cubes": [{"center": list(map(float, c.center)), "radius": float(c.radius)} for c in self.cubes],
            "connection_points": [list(map(float, p)) for p in self.points],
            "kept_cover_size": len(self.kept),
        }


def _dense_samples(domain, curve, per_radius=_SAMPLES_PER_RADIUS, max_rounds=40):
    """Points along the curve whose spacing is at most a 1/per_radius fraction of the local cube radius."""
    pts = curve.resampled(domain, n=256).vertices
    segs = metric.local_segments(domain, pts)
    w = geo.raw_distance(domain, pts, "uniform", segs)
    if np.any(w <= 0):
        raise ClearanceZero("curve touches the boundary")
    for _ in range(max_rounds):
        step = np.hypot(*np.diff(pts, axis=0).T)
        limit = RADIUS_FRACTION * np.minimum(w[:-1], w[1:]) / per_radius
        bad = np.flatnonzero(step > limit)
        if len(bad) == 0:
            break
        mids = 0.5 * (pts[bad] + pts[bad + 1])
        wm = geo.raw_distance(domain, mids, "uniform", segs)
        if np.any(wm <= 0):
            raise ClearanceZero("curve touches the boundary")
        pts = np.insert(pts, bad + 1, mids, axis=0)
        w = np.insert(w, bad + 1, wm)
    return pts, w


def _intersect(a: geo.Cube, b: geo.Cube):
    return float(np.max(np.abs(np.subtract(a.center, b.center)))) <= a.radius + b.radius


def _intersection_center(a: geo.Cube, b: geo.Cube):
    alo, ahi = a.bounds()
    blo, bhi = b.bounds()
    return 0.5 * (np.maximum(alo, blo) + np.minimum(ahi, bhi))


def build_chain(domain, curve: metric.ParamCurve) -> CubeChain:
    """Greedy cover of the curve by cubes Q(z, dist(z)/8), then the shortest x -> y chain through it."""
    pts, w = _dense_samples(domain, curve)
    x, y = pts[0].copy(), pts[-1].copy()
    centers = [pts[0]]
    radii = [RADIUS_FRACTION * w[0]]
    for p, wp in zip(pts[1:], w[1:]):
        c = np.asarray(centers)
        if np.any(np.max(np.abs(c - p), axis=1) <= np.asarray(radii) * (1 + 1e-12)):
            continue
        centers.append(p)
        radii.append(RADIUS_FRACTION * wp)
    kept = [geo.Cube(tuple(map(float, c)), float(r)) for c, r in zip(centers, radii)]
    if kept[0].contains(y):
        return CubeChain([kept[0]], [], x, y, kept)
    c = np.asarray(centers)
    r = np.asarray(radii)
    adj = np.max(np.abs(c[:, None, :] - c[None, :, :]), axis=2) <= (r[:, None] + r[None, :]) * (1 + 1e-12)
    goal = set(np.flatnonzero(np.max(np.abs(c - y), axis=1) <= r * (1 + 1e-12)).tolist())
    prev = {0: -1}
    queue = deque([0])
    end = None
    while queue:
        i = queue.popleft()
        if i in goal:
            end = i
            break
        for j in np.flatnonzero(adj[i]):
            j = int(j)
            if j not in prev:
                prev[j] = i
                queue.append(j)
    if end is None:
        raise ClearanceZero("greedy cover is disconnected; the curve sampling is too coarse")
    path = []
    while end != -1:
        path.append(end)
        end = prev[end]
    path.reverse()
    cubes = [kept[i] for i in path]
    points = [_intersection_center(a, b) for a, b in zip(cubes[:-1], cubes[1:])]
    return CubeChain(cubes, points, x, y, kept)


def multiplicity(cubes) -> int:
    """Maximal number of closed cubes sharing a point.

    The depth is attained at (left edge of one cube, bottom edge of another),
    so it suffices to stab, for every left edge, the bottom-edge candidates.
    """
    if not cubes:
        return 0
    c = np.array([q.center for q in cubes], float)
    r = np.array([q.radius for q in cubes], float)
    lo, hi = c - r[:, None], c + r[:, None]
    best = 1
    for a in range(len(cubes)):
        xa = lo[a, 0]
        col = (lo[:, 0] <= xa) & (hi[:, 0] >= xa)
        ylo, yhi = lo[col, 1], hi[col, 1]
        ys = ylo
        depth = ((ylo[None, :] <= ys[:, None]) & (yhi[None, :] >= ys[:, None])).sum(axis=1)
        best = max(best, int(depth.max()))
    return best


def _length_in_cube(verts, cube: geo.Cube):
    """Length of the polyline inside the closed cube (slab clipping per segment)."""
    lo, hi = cube.bounds()
    p0, d = verts[:-1], np.diff(verts, axis=0)
    t0 = np.zeros(len(d))
    t1 = np.ones(len(d))
    for i in range(2):
        di = d[:, i]
        with np.errstate(divide="ignore", invalid="ignore"):
            a = (lo[i] - p0[:, i]) / di
            b = (hi[i] - p0[:, i]) / di
        near = np.where(di != 0, np.minimum(a, b), -np.inf)
        far = np.where(di != 0, np.maximum(a, b), np.inf)
        outside = (di == 0) & ((p0[:, i] < lo[i]) | (p0[:, i] > hi[i]))
        t0 = np.maximum(t0, near)
        t1 = np.minimum(t1, far)
        t1 = np.where(outside, -1.0, t1)
    frac = np.clip(t1 - t0, 0.0, None)
    return float(np.sum(frac * np.hypot(d[:, 0], d[:, 1])))


def verify_chain(chain: CubeChain, domain, curve: metric.ParamCurve = None) -> dict:
    """Check the chain invariants and measure the multiplicity of the doubled family."""
    cubes = chain.cubes
    c = chain.centers()
    r = chain.radii()
    dist = geo.raw_distance(domain, c, "uniform")
    radius_ok = np.abs(r - RADIUS_FRACTION * dist) <= 1e-9 * np.maximum(dist, 1e-300)
    doubled = [q.dilate(2.0) for q in cubes]
    corners = np.vstack([q.corners() for q in doubled])
    corners_in = np.asarray(geo.contains(domain, corners)).reshape(len(cubes), 4).all(axis=1)
    inside = corners_in & (2 * r < dist)
    consecutive = [bool(_intersect(a, b)) for a, b in zip(cubes[:-1], cubes[1:])]
    conn = [bool(a.contains(p) and b.contains(p)) for a, b, p in zip(cubes[:-1], cubes[1:], chain.points)]
    distinct = len({(q.center, q.radius) for q in cubes}) == len(cubes)
    # radius comparability over intersecting doubled pairs
    gap = np.max(np.abs(c[:, None, :] - c[None, :, :]), axis=2)
    meet = gap <= 2 * (r[:, None] + r[None, :]) * (1 + 1e-12)
    ratio = np.where(meet, r[None, :] / r[:, None], 0.0)
    worst_ratio = float(ratio.max()) if len(r) else 1.0
    mult = multiplicity(doubled)
    report = {
        "cubes": len(cubes),
        "contains_x": bool(cubes[0].contains(chain.x)),
        "contains_y": bool(cubes[-1].contains(chain.y)),
        "distinct": bool(distinct),
        "consecutive_intersect": all(consecutive),
        "connection_points_ok": all(conn),
        "radius_rule_ok": bool(radius_ok.all()),
        "doubled_inside": bool(inside.all()),
        "multiplicity": int(mult),
        "multiplicity_bound": MULTIPLICITY_BOUND,
        "multiplicity_ok": bool(mult <= MULTIPLICITY_BOUND),
        "worst_radius_ratio": worst_ratio,
        "radius_ratio_ok": bool(worst_ratio <= RADIUS_RATIO * (1 + 1e-9)),
    }
    if curve is not None:
        verts = curve.vertices
        viol = 0
        for q in cubes:
            if q.contains(chain.x) and q.contains(chain.y):
                continue
            if q.radius > _length_in_cube(verts, q) * (1 + 1e-9):
                viol += 1
        report["radius_length_violations"] = viol
    report["holds"] = all(
        report[k] for k in ("contains_x", "contains_y", "distinct", "consecutive_intersect",
                            "connection_points_ok", "radius_rule_ok", "doubled_inside",
                            "multiplicity_ok", "radius_ratio_ok")
    ) and report.get("radius_length_violations", 0) == 0
    return report
