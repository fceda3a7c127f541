"""Polygonal planar domains and exact boundary-distance queries.

A domain is an outer simple polygon minus closed polygonal holes.  Every
distance is computed exactly against the boundary segments; nothing is
propagated over a grid.  Two norms are supported: ``"uniform"`` (the max
norm, default) and ``"euclidean"``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import math

import numpy as np
from scipy import ndimage

from . import _kernels
from .errors import (
    DisconnectedDomain,
    InvalidDomain,
    PointOutsideDomain,
    ResolutionTooCoarse,
)

NORMS = ("uniform", "euclidean")
_CHUNK = 2_000_000
_MODES = {"euclidean": _kernels.EUCLIDEAN, "uniform": _kernels.UNIFORM}


def norm_of(v, norm="uniform"):
    v = np.asarray(v, dtype=float)
    if norm == "uniform":
        return np.max(np.abs(v), axis=-1)
    if norm == "euclidean":
        return np.hypot(v[..., 0], v[..., 1])
    raise ValueError(f"unknown norm {norm!r}")


def _signed_area(ring):
    x, y = ring[:, 0], ring[:, 1]
    return 0.5 * float(np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y))


def _ring_segments(ring):
    return np.hstack([ring, np.roll(ring, -1, axis=0)])


def _orient(ax, ay, bx, by, cx, cy):
    return (bx - ax) * (cy - ay) - (by - ay) * (cx - ax)


def segments_intersect(p, q, segs, eps=0.0):
    """Closed-segment intersection of ``[p_k, q_k]`` against every row of ``segs``.

    Returns a boolean array of shape (K, M).  Touching counts as intersecting.
    """
    p = np.atleast_2d(np.asarray(p, float))
    q = np.atleast_2d(np.asarray(q, float))
    ax, ay = p[:, 0:1], p[:, 1:2]
    bx, by = q[:, 0:1], q[:, 1:2]
    cx, cy, dx, dy = (segs[None, :, i] for i in range(4))
    d1 = _orient(cx, cy, dx, dy, ax, ay)
    d2 = _orient(cx, cy, dx, dy, bx, by)
    d3 = _orient(ax, ay, bx, by, cx, cy)
    d4 = _orient(ax, ay, bx, by, dx, dy)
    proper = (d1 * d2 <= eps) & (d3 * d4 <= eps)
    # collinear pieces pass the orientation test; require bounding boxes to meet
    boxes = (
        (np.minimum(ax, bx) <= np.maximum(cx, dx) + eps)
        & (np.minimum(cx, dx) <= np.maximum(ax, bx) + eps)
        & (np.minimum(ay, by) <= np.maximum(cy, dy) + eps)
        & (np.minimum(cy, dy) <= np.maximum(ay, by) + eps)
    )
    return proper & boxes


def _segment_distance(pts, segs, norm):
    """Distance from each point to the nearest of ``segs`` (exact)."""
    if norm not in _MODES:
        raise ValueError(f"unknown norm {norm!r}")
    pts = np.ascontiguousarray(pts, dtype=float).reshape(-1, 2)
    return _kernels.segment_distance(pts, np.ascontiguousarray(segs, dtype=float), _MODES[norm])


def _parity_inside(pts, rings_segs):
    """Even-odd ray casting over all rings."""
    pts = np.ascontiguousarray(pts, dtype=float).reshape(-1, 2)
    return _kernels.parity_inside(pts, np.ascontiguousarray(rings_segs, dtype=float))


@dataclass(frozen=True, eq=False)
class PlanarDomain:
    """Outer polygon (counterclockwise) minus polygonal holes (clockwise).

    Orientation is normalized on construction.  ``validate=False`` skips the
    simplicity and connectivity checks; use it only for domains derived from
    an already validated one (dilations, translations).
    """

    outer: np.ndarray
    holes: tuple = ()
    name: str = "domain"
    validate: bool = field(default=True, repr=False)

    def __post_init__(self):
        outer = np.asarray(self.outer, dtype=float)
        if outer.ndim != 2 or outer.shape[1] != 2 or len(outer) < 3:
            raise InvalidDomain("outer polygon needs at least 3 vertices")
        if np.allclose(outer[0], outer[-1]):
            outer = outer[:-1]
        if _signed_area(outer) < 0:
            outer = outer[::-1]
        holes = []
        for h in self.holes:
            h = np.asarray(h, dtype=float)
            if np.allclose(h[0], h[-1]):
                h = h[:-1]
            if len(h) < 3:
                raise InvalidDomain("hole needs at least 3 vertices")
            if _signed_area(h) > 0:
                h = h[::-1]
            holes.append(np.ascontiguousarray(h))
        outer = np.ascontiguousarray(outer)
        object.__setattr__(self, "outer", outer)
        object.__setattr__(self, "holes", tuple(holes))
        segs = np.vstack([_ring_segments(outer)] + [_ring_segments(h) for h in holes])
        object.__setattr__(self, "segments", segs)
        lo = outer.min(axis=0)
        hi = outer.max(axis=0)
        object.__setattr__(self, "bbox", (lo, hi))
        diff = outer[:, None, :] - outer[None, :, :]
        object.__setattr__(self, "diam", float(np.sqrt((diff ** 2).sum(-1)).max()))
        object.__setattr__(self, "_cache", {})
        if self.validate:
            self._check_simple()
            self._check_connected()

    # -- validation ---------------------------------------------------------

    def _check_simple(self):
        rings = [self.outer, *self.holes]
        offsets = np.cumsum([0] + [len(r) for r in rings])
        segs = self.segments
        m = len(segs)
        ring_id = np.repeat(np.arange(len(rings)), [len(r) for r in rings])
        local = np.arange(m) - offsets[ring_id]
        sizes = np.array([len(r) for r in rings])[ring_id]
        step = max(1, _CHUNK // m)
        for s in range(0, m, step):
            hit = segments_intersect(segs[s:s + step, :2], segs[s:s + step, 2:], segs)
            i = np.arange(s, min(s + step, m))[:, None]
            j = np.arange(m)[None, :]
            same = ring_id[i] == ring_id[j]
            li, lj = local[i], local[j]
            adjacent = same & (
                (li == lj)
                | ((li + 1) % sizes[i] == lj)
                | ((lj + 1) % sizes[j] == li)
            )
            if np.any(hit & ~adjacent):
                a, b = np.argwhere(hit & ~adjacent)[0]
                raise InvalidDomain(
                    f"boundary segments {s + a} and {b} intersect (rings must be simple and disjoint)"
                )
        outer_segs = _ring_segments(self.outer)
        for k, h in enumerate(self.holes):
            if not np.all(_parity_inside(h, outer_segs)):
                raise InvalidDomain(f"hole {k} is not strictly inside the outer polygon")
            for k2, h2 in enumerate(self.holes):
                if k2 != k and np.any(_parity_inside(h, _ring_segments(h2))):
                    raise InvalidDomain(f"holes {k} and {k2} overlap")

    def _check_connected(self):
        lo, hi = self.bbox
        span = float(np.max(hi - lo))
        for res in (128, 512, 2048):
            h = span / res
            xs = np.arange(lo[0] + h / 2, hi[0], h)
            ys = np.arange(lo[1] + h / 2, hi[1], h)
            X, Y = np.meshgrid(xs, ys)
            mask = contains(self, np.column_stack([X.ravel(), Y.ravel()])).reshape(X.shape)
            _, ncomp = ndimage.label(mask, structure=np.ones((3, 3)))
            if ncomp == 1:
                return
        raise DisconnectedDomain(f"{self.name}: flood fill found {ncomp} components")

    # -- derived domains ----------------------------------------------------

    def transformed(self, scale=1.0, shift=(0.0, 0.0), name=None):
        shift = np.asarray(shift, float)
        return PlanarDomain(
            self.outer * scale + shift,
            tuple(h * scale + shift for h in self.holes),
            name=name or self.name,
            validate=False,
        )

    def to_json(self):
        return {
            "name": self.name,
            "outer": self.outer.tolist(),
            "holes": [h.tolist() for h in self.holes],
        }

    @classmethod
    def from_json(cls, obj):
        try:
            return cls(obj["outer"], tuple(obj.get("holes", [])), name=obj.get("name", "domain"))
        except (KeyError, TypeError, ValueError) as exc:
            raise InvalidDomain(f"malformed domain object: {exc}") from exc

    def segments_near(self, lo, hi, reach):
        """Boundary segments whose bounding box comes within ``reach`` of box [lo, hi]."""
        s = self.segments
        smin = np.minimum(s[:, :2], s[:, 2:])
        smax = np.maximum(s[:, :2], s[:, 2:])
        gap = np.maximum(np.maximum(smin - hi, lo - smax), 0.0).max(axis=1)
        return s[gap <= reach]


@dataclass(frozen=True)
class Cube:
    """Closed ball of the uniform norm: center plus half side ``radius``."""

    center: tuple
    radius: float

    def __post_init__(self):
        if not self.radius > 0:
            raise ValueError("cube radius must be positive")

    def contains(self, pts, slack=1e-12):
        pts = np.asarray(pts, float)
        return norm_of(pts - np.asarray(self.center), "uniform") <= self.radius * (1 + slack)

    def dilate(self, factor):
        return Cube(self.center, self.radius * factor)

    def corners(self):
        c = np.asarray(self.center, float)
        r = self.radius
        return c + r * np.array([[-1, -1], [1, -1], [1, 1], [-1, 1]], dtype=float)

    def bounds(self):
        c = np.asarray(self.center, float)
        return c - self.radius, c + self.radius

    @property
    def volume(self):
        return (2 * self.radius) ** 2


def _as_points(pt):
    pts = np.asarray(pt, dtype=float)
    single = pts.ndim == 1
    return np.atleast_2d(pts), single


def contains(domain: PlanarDomain, pt):
    """True iff the point lies in the open set; boundary points are outside."""
    pts, single = _as_points(pt)
    inside = _parity_inside(pts, domain.segments)
    if np.any(inside):
        eps = 1e-12 * max(domain.diam, 1e-300)
        d = np.full(len(pts), np.inf)
        d[inside] = _segment_distance(pts[inside], domain.segments, "euclidean")
        inside &= d > eps
    return bool(inside[0]) if single else inside


def raw_distance(domain: PlanarDomain, pts, norm="uniform", segments=None):
    """Unsigned distance to the boundary, no membership check."""
    pts = np.atleast_2d(np.asarray(pts, float))
    segs = domain.segments if segments is None else segments
    if len(segs) == 0:
        segs = domain.segments
    return _segment_distance(pts, segs, norm)


def boundary_distance(domain: PlanarDomain, pt, norm="uniform"):
    pts, single = _as_points(pt)
    inside = contains(domain, pts)
    if not np.all(inside):
        bad = pts[~np.atleast_1d(inside)][0]
        raise PointOutsideDomain(f"point {bad.tolist()} is not in {domain.name}")
    d = _segment_distance(pts, domain.segments, norm)
    return float(d[0]) if single else d


def segments_inside(domain: PlanarDomain, a, b):
    """For each pair (a_k, b_k): is the closed segment contained in the open domain?"""
    a = np.atleast_2d(np.asarray(a, float))
    b = np.atleast_2d(np.asarray(b, float))
    ok = contains(domain, a) & contains(domain, b)
    if not np.any(ok):
        return ok
    idx = np.flatnonzero(ok)
    segs = domain.segments
    step = max(1, _CHUNK // len(segs))
    for s in range(0, len(idx), step):
        sel = idx[s:s + step]
        hit = segments_intersect(a[sel], b[sel], segs).any(axis=1)
        ok[sel[hit]] = False
    return ok


@dataclass(frozen=True, eq=False)
class DistanceField:
    """Boundary distances sampled at grid nodes ``origin + (j, i) * h``."""

    origin: np.ndarray
    h: float
    values: np.ndarray
    inside: np.ndarray
    norm: str = "uniform"

    @property
    def shape(self):
        return self.values.shape

    def node(self, i, j):
        return np.array([self.origin[0] + j * self.h, self.origin[1] + i * self.h])

    def coordinates(self):
        ny, nx = self.values.shape
        xs = self.origin[0] + self.h * np.arange(nx)
        ys = self.origin[1] + self.h * np.arange(ny)
        return np.meshgrid(xs, ys)


def grid_nodes(lo, hi, h):
    nx = int(np.floor((hi[0] - lo[0]) / h + 1e-9)) + 1
    ny = int(np.floor((hi[1] - lo[1]) / h + 1e-9)) + 1
    xs = lo[0] + h * np.arange(nx)
    ys = lo[1] + h * np.arange(ny)
    return xs, ys


def build_distance_field(domain: PlanarDomain, h: float, norm="uniform") -> DistanceField:
    if not h > 0:
        raise ResolutionTooCoarse("grid spacing must be positive")
    lo, hi = domain.bbox
    xs, ys = grid_nodes(lo, hi, h)
    X, Y = np.meshgrid(xs, ys)
    pts = np.column_stack([X.ravel(), Y.ravel()])
    inside = contains(domain, pts)
    if np.count_nonzero(inside) < 9:
        raise ResolutionTooCoarse(
            f"only {np.count_nonzero(inside)} grid nodes inside {domain.name} at h={h}"
        )
    values = np.zeros(len(pts))
    values[inside] = _segment_distance(pts[inside], domain.segments, norm)
    return DistanceField(
        origin=np.array(lo, float),
        h=float(h),
        values=values.reshape(X.shape),
        inside=inside.reshape(X.shape),
        norm=norm,
    )


@dataclass(frozen=True)
class InscribedBall:
    center: tuple
    radius: float
    ratio: float


def largest_inscribed_ball(domain, center, radius, h, norm="uniform") -> InscribedBall:
    """Best ball B' inside both B(center, radius) and the domain, by grid search."""
    center = np.asarray(center, float)
    n = int(np.ceil(radius / h))
    offs = h * np.arange(-n, n + 1)
    X, Y = np.meshgrid(center[0] + offs, center[1] + offs)
    cand = np.vstack([center, np.column_stack([X.ravel(), Y.ravel()])])
    to_ball = radius - norm_of(cand - center, norm)
    keep = to_ball > 0
    cand, to_ball = cand[keep], to_ball[keep]
    inside = contains(domain, cand)
    score = np.zeros(len(cand))
    if np.any(inside):
        d = _segment_distance(cand[inside], domain.segments, norm)
        score[inside] = np.minimum(d, to_ball[inside])
    best = int(np.argmax(score))
    r = float(score[best])
    return InscribedBall(tuple(cand[best].tolist()), r, r / radius)


@dataclass(frozen=True)
class RegularityEstimate:
    sigma: float
    delta: float
    worst_center: tuple
    worst_radius: float
    h: float


def regularity_constants(domain, h, delta, interior_only=False) -> RegularityEstimate:
    """Estimate sigma_S = max |Q| / |Q ∩ Ω| over cubes centered in Ω of radius <= delta/2.

    Both measures are counted on the node grid of spacing ``h``; cube radii are
    dyadic fractions of delta/2 down to 2h.
    """
    lo, hi = domain.bbox
    xs, ys = grid_nodes(lo, hi, h)
    X, Y = np.meshgrid(xs, ys)
    pts = np.column_stack([X.ravel(), Y.ravel()])
    inside = contains(domain, pts).reshape(X.shape)
    radii = []
    r = delta / 2.0
    while r >= 2 * h - 1e-12:
        radii.append(r)
        r /= 2
    if not radii:
        radii = [delta / 2.0]
    pad = int(np.floor(radii[0] / h + 1e-9))
    padded = np.pad(inside.astype(np.int64), pad)
    sat = np.zeros((padded.shape[0] + 1, padded.shape[1] + 1), dtype=np.int64)
    sat[1:, 1:] = padded.cumsum(0).cumsum(1)
    ii, jj = np.nonzero(inside)
    dist = None
    if interior_only:
        dist = _segment_distance(pts[inside.ravel()], domain.segments, "uniform")
    best = (1.0, (float(xs[jj[0]]), float(ys[ii[0]])), radii[0])
    for r in radii:
        R = int(np.floor(r / h + 1e-9))
        i0, j0 = ii + pad - R, jj + pad - R
        i1, j1 = ii + pad + R + 1, jj + pad + R + 1
        count = sat[i1, j1] - sat[i0, j1] - sat[i1, j0] + sat[i0, j0]
        ratio = (2 * R + 1) ** 2 / count
        if interior_only:
            ratio = np.where(dist > r, ratio, 1.0)
        k = int(np.argmax(ratio))
        if ratio[k] > best[0]:
            best = (float(ratio[k]), (float(xs[jj[k]]), float(ys[ii[k]])), r)
    return RegularityEstimate(best[0], float(delta), best[1], best[2], float(h))
