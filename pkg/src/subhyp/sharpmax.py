"""Local polynomial approximation, sharp and Hardy-Littlewood maximal functions on a cell grid.

Fields live on square cells of side h covering the domain's bounding box; a
cell belongs to the domain when its center does.  A cube Q(x, R h) centered
at a cell center is the (2R+1) x (2R+1) block of cells around it, and |Q| is
the area of that block, so that cube averages of constants are exact.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from itertools import product
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.optimize import linprog

from . import _kernels
from . import geometry as geo
from .errors import BadExponent, EmptyIntersection, MissingDerivatives, NotRegular
from .funcspec import AnalyticFunction
from .selfimprove import compute_exponents

LAWSON_ROUNDS = 5


@dataclass
class ScalarField:
    """Cell-centered samples on the domain's inside mask (NaN outside)."""

    origin: tuple
    h: float
    values: np.ndarray
    mask: np.ndarray
    source: Optional[Callable] = field(default=None, repr=False)

    @property
    def shape(self):
        return self.values.shape

    def centers(self):
        ny, nx = self.values.shape
        xs = self.origin[0] + (np.arange(nx) + 0.5) * self.h
        ys = self.origin[1] + (np.arange(ny) + 0.5) * self.h
        return xs, ys

    def points(self):
        """Cell centers inside the mask, in row-major order, shape (N, 2)."""
        xs, ys = self.centers()
        ii, jj = np.nonzero(self.mask)
        return np.column_stack([xs[jj], ys[ii]])

    def extended(self):
        """Extension by zero outside the domain."""
        return np.where(self.mask, self.values, 0.0)

    def scaled(self, c):
        return ScalarField(self.origin, self.h, self.values * c, self.mask, None)

    def __add__(self, other: "ScalarField"):
        return ScalarField(self.origin, self.h, self.values + other.values, self.mask, None)

    def cell_of(self, pt):
        i = int(math.floor((pt[1] - self.origin[1]) / self.h))
        j = int(math.floor((pt[0] - self.origin[0]) / self.h))
        return i, j

    def to_csv_rows(self, extra=None):
        """Rows x, y, value[, extra...] for the inside cells."""
        pts = self.points()
        vals = self.values[self.mask]
        cols = [pts[:, 0], pts[:, 1], vals]
        if extra is not None:
            cols += [np.asarray(e)[self.mask] for e in extra]
        return np.column_stack(cols)


def sample_field(domain, f: Callable, h: float) -> ScalarField:
    """Sample ``f`` at the cell centers of an h-grid over the domain's bounding box."""
    if not h > 0:
        raise ValueError("grid spacing must be positive")
    lo, hi = domain.bbox
    nx = max(1, int(math.ceil((hi[0] - lo[0]) / h - 1e-9)))
    ny = max(1, int(math.ceil((hi[1] - lo[1]) / h - 1e-9)))
    xs = lo[0] + (np.arange(nx) + 0.5) * h
    ys = lo[1] + (np.arange(ny) + 0.5) * h
    X, Y = np.meshgrid(xs, ys)
    pts = np.stack([X, Y], axis=-1)
    mask = np.asarray(geo.contains(domain, pts.reshape(-1, 2))).reshape(X.shape)
    vals = np.full(X.shape, np.nan)
    vals[mask] = np.asarray(f(pts[mask]), float)
    return ScalarField((float(lo[0]), float(lo[1])), float(h), vals, mask,
                       f if isinstance(f, AnalyticFunction) else None)


def poly_powers(k):
    """Exponent pairs (a, b) with a + b <= k - 1, graded order."""
    return [(a, s - a) for s in range(k) for a in range(s, -1, -1)]


@dataclass
class PolyApprox:
    """Polynomial in (x - c_x, y - c_y) with coefficients keyed by exponent pairs."""

    degree: int
    center: tuple
    powers: list
    coefficients: np.ndarray
    residual: float

    def __call__(self, pts):
        d = np.asarray(pts, float) - np.asarray(self.center)
        out = np.zeros(d.shape[:-1])
        for (a, b), c in zip(self.powers, self.coefficients):
            out = out + c * d[..., 0] ** a * d[..., 1] ** b
        return out

    def to_json(self):
        return {"degree": self.degree, "center": list(self.center),
                "coefficients": {f"x^{a} y^{b}": float(c) for (a, b), c in zip(self.powers, self.coefficients)},
                "residual": self.residual}


def _cube_cells(fld: ScalarField, cube: geo.Cube):
    xs, ys = fld.centers()
    c = np.asarray(cube.center, float)
    r = cube.radius * (1 + 1e-12)
    jx = np.flatnonzero(np.abs(xs - c[0]) <= r)
    iy = np.flatnonzero(np.abs(ys - c[1]) <= r)
    if len(jx) == 0 or len(iy) == 0:
        return np.zeros((0, 2)), np.zeros(0)
    sub = fld.mask[np.ix_(iy, jx)]
    X, Y = np.meshgrid(xs[jx], ys[iy])
    return np.column_stack([X[sub], Y[sub]]), fld.values[np.ix_(iy, jx)][sub]


def _norm_value(res, q, area, h):
    if q == math.inf:
        return float(np.max(np.abs(res)))
    return float((np.sum(np.abs(res) ** q) * h * h / area) ** (1.0 / q))


def local_best_approx(fld: ScalarField, cube: geo.Cube, k: int, q=1.0):
    """E_k(f; Q)_{L_q} = |Q|^(-1/q) ||f - P||_{L_q(Q cap domain)} for a fitted P of degree <= k-1.

    P is the least-squares fit over the cells in the cube; for q = inf it is
    refined by sup-residual reweighting.  The returned value is an upper
    bound for the infimum over all P.
    """
    if k < 1:
        raise ValueError("k must be at least 1")
    pts, vals = _cube_cells(fld, cube)
    if len(vals) == 0:
        raise EmptyIntersection(f"cube at {cube.center} of radius {cube.radius} holds no domain cells")
    powers = poly_powers(k)
    c = np.asarray(cube.center, float)
    s = cube.radius
    u = (pts - c) / s
    A = np.column_stack([u[:, 0] ** a * u[:, 1] ** b for a, b in powers])
    coef = np.linalg.lstsq(A, vals, rcond=None)[0]
    area = _block_area(fld, cube)
    res = vals - A @ coef
    best = (_norm_value(res, q, area, fld.h), coef)
    if q == math.inf:
        wts = np.full(len(vals), 1.0 / len(vals))
        for _ in range(LAWSON_ROUNDS):
            wts = wts * np.abs(res)
            tot = wts.sum()
            if not tot > 0:
                break
            wts /= tot
            sw = np.sqrt(wts)
            coef = np.linalg.lstsq(A * sw[:, None], vals * sw, rcond=None)[0]
            res = vals - A @ coef
            val = _norm_value(res, q, area, fld.h)
            if val < best[0]:
                best = (val, coef)
        coef = _minimax(A, vals)
        if coef is not None:
            val = _norm_value(vals - A @ coef, q, area, fld.h)
            if val < best[0]:
                best = (val, coef)
    val, coef = best
    scale = np.array([s ** -(a + b) for a, b in powers])
    return val, PolyApprox(k - 1, tuple(map(float, c)), powers, coef * scale, val)


def _minimax(A, f):
    """Discrete Chebyshev fit: minimise t subject to |f - A c| <= t (linear program)."""
    n, d = A.shape
    cost = np.zeros(d + 1)
    cost[-1] = 1.0
    ones = np.ones((n, 1))
    lhs = np.vstack([np.hstack([A, -ones]), np.hstack([-A, -ones])])
    rhs = np.concatenate([f, -f])
    bounds = [(None, None)] * d + [(0, None)]
    out = linprog(cost, A_ub=lhs, b_ub=rhs, bounds=bounds, method="highs")
    return out.x[:d] if out.status == 0 else None


def _block_area(fld, cube):
    """Area of the cells of the unbounded lattice whose centers lie in the cube."""
    c = np.asarray(cube.center, float)
    r = cube.radius * (1 + 1e-12)
    o = np.asarray(fld.origin, float)
    top = np.floor((c + r - o) / fld.h - 0.5)
    bot = np.ceil((c - r - o) / fld.h - 0.5)
    counts = np.maximum(top - bot + 1, 0)
    return float(counts[0] * counts[1]) * fld.h ** 2


def dyadic_radii(h, diam, jmin=1, jmax=None):
    """Cell half-widths R = 2^j, j = jmin..jmax, with R h <= diam."""
    if jmax is None:
        jmax = max(jmin, int(math.floor(math.log2(diam / h))))
    return [2 ** j for j in range(jmin, jmax + 1)]


@dataclass
class MaximalField:
    values: np.ndarray
    argmax_radius: np.ndarray
    radii: list
    h: float

    def inside_values(self, mask):
        return self.values[mask]


def sharp_maximal(fld: ScalarField, domain, k: int, radii: Optional[Sequence[int]] = None,
                  points=None) -> MaximalField:
    """f#_k(x) = max over r = R h of r^-k E_k(f; Q(x, r))_{L_1}, at every inside cell.

    ``radii`` are cell half-widths R; the default is the dyadic set from 2h
    up to the domain diameter.
    """
    if radii is None:
        radii = dyadic_radii(fld.h, domain.diam)
    powers = poly_powers(k)
    px = np.array([a for a, _ in powers], np.int64)
    py = np.array([b for _, b in powers], np.int64)
    if points is None:
        ii, jj = np.nonzero(fld.mask)
    else:
        ii, jj = points
    ii = np.ascontiguousarray(ii, np.int64)
    jj = np.ascontiguousarray(jj, np.int64)
    vals = np.ascontiguousarray(np.where(fld.mask, fld.values, 0.0))
    mask = np.ascontiguousarray(fld.mask)
    best = np.zeros(len(ii))
    arg = np.zeros(len(ii))
    for R in radii:
        res, _ = _kernels.window_l1(vals, mask, ii, jj, int(R), px, py)
        e = res / (2 * R + 1) ** 2
        r = R * fld.h
        v = e / r ** k
        up = v > best
        best[up] = v[up]
        arg[up] = r
    out = np.full(fld.shape, np.nan)
    out[ii, jj] = best
    am = np.full(fld.shape, np.nan)
    am[ii, jj] = arg
    return MaximalField(out, am, [int(R) for R in radii], fld.h)


def _box_sums(a, R):
    """Sums of ``a`` over (2R+1)^2 windows centered at every cell, zero padded."""
    p = np.pad(a, R)
    s = np.zeros((p.shape[0] + 1, p.shape[1] + 1))
    s[1:, 1:] = p.cumsum(0).cumsum(1)
    W = 2 * R + 1
    return s[W:, W:] - s[:-W, W:] - s[W:, :-W] + s[:-W, :-W]


def hl_maximal(values_ext: np.ndarray, radii: Sequence[int], h: float) -> MaximalField:
    """Max over windows of the average of |f|; the single cell (R = 0) is always included."""
    a = np.abs(np.asarray(values_ext, float))
    best = a.copy()
    arg = np.zeros_like(a)
    for R in radii:
        if R == 0:
            continue
        v = _box_sums(a, int(R)) / (2 * R + 1) ** 2
        up = v > best
        best[up] = v[up]
        arg[up] = R * h
    return MaximalField(best, arg, [0] + [int(R) for R in radii if R], h)


# --------------------------------------------------------------------------
# inequality checks


def _require_source(f):
    if not isinstance(f, AnalyticFunction):
        raise MissingDerivatives("an analytic source with exact derivatives is required")
    return f


def _cube_integral(f: AnalyticFunction, domain, center, radius, k, p, cells=48):
    """Integral of ||grad^k f||^p over Q(center, radius) cap domain by midpoint cells."""
    lo, hi = domain.bbox
    c = np.asarray(center, float)
    a = np.maximum(c - radius, lo)
    b = np.minimum(c + radius, hi)
    if np.any(b <= a):
        return 0.0
    n = cells
    hx = (b - a) / n
    xs = a[0] + (np.arange(n) + 0.5) * hx[0]
    ys = a[1] + (np.arange(n) + 0.5) * hx[1]
    X, Y = np.meshgrid(xs, ys)
    pts = np.column_stack([X.ravel(), Y.ravel()])
    inside = np.asarray(geo.contains(domain, pts))
    g = f.gradient_norm(k, pts[inside]) ** p
    return float(g.sum() * hx[0] * hx[1])


def _multi_indices(order):
    return [(a, s - a) for s in range(order + 1) for a in range(s, -1, -1)]


def taylor_lhs(f: AnalyticFunction, k, x, y, beta):
    """|D^beta T_x^{k-1} f (x) - D^beta T_y^{k-1} f (x)|."""
    x = np.asarray(x, float)
    y = np.asarray(y, float)
    here = float(f.derivative(beta, x))
    d = x - y
    other = 0.0
    for g in _multi_indices(k - 1 - sum(beta)):
        bg = (beta[0] + g[0], beta[1] + g[1])
        other += float(f.derivative(bg, y)) * d[0] ** g[0] * d[1] ** g[1] / (
            math.factorial(g[0]) * math.factorial(g[1]))
    return abs(here - other)


@dataclass
class TaylorReport:
    rows: list
    scales: list
    max_ratio_per_scale: list
    slope: float
    p_star: float
    lam: float

    def to_json(self):
        return {"rows": self.rows, "scales": self.scales, "max_ratio_per_scale": self.max_ratio_per_scale,
                "slope_vs_inverse_scale": self.slope, "p_star": self.p_star, "lambda": self.lam}


def taylor_remainder_check(f, domain, alpha, k, C=1.0, scales=None, pairs_per_scale=8, seed=0,
                           n=2, theta=None) -> TaylorReport:
    """Ratio of the Taylor-difference bound's two sides over dyadic pair scales.

    RHS = ||x-y||^(k-|beta|-n/p*) (integral over lambda Q(x,||x-y||) cap domain
    of ||grad^k f||^p*)^(1/p*), with lambda = 2 * 2 e^(2C).  The reported
    slope is that of log(max ratio) against log(1/scale).
    """
    f = _require_source(f)
    rec = compute_exponents(alpha, C, n=n)
    ps = rec.p_star
    lam = 2.0 * 2.0 * math.exp(2.0 * C)
    if scales is None:
        scales = [2.0 ** -j for j in range(2, 7)]
    if theta is not None:
        scales = [s for s in scales if s <= theta]
    rng = np.random.default_rng(seed)
    lo, hi = domain.bbox
    rows = []
    per_scale = []
    for s in scales:
        worst = 0.0
        got = 0
        tries = 0
        while got < pairs_per_scale and tries < 200 * pairs_per_scale:
            tries += 1
            x = lo + rng.random(2) * (hi - lo)
            ang = rng.random() * 2 * math.pi
            d = np.array([math.cos(ang), math.sin(ang)])
            y = x + s * d / np.max(np.abs(d))
            if not (geo.contains(domain, x) and geo.contains(domain, y)):
                continue
            got += 1
            integral = _cube_integral(f, domain, x, lam * s, k, ps)
            for beta in _multi_indices(k - 1):
                lhs = taylor_lhs(f, k, x, y, beta)
                rhs = s ** (k - sum(beta) - n / ps) * integral ** (1.0 / ps)
                ratio = lhs / rhs if rhs > 0 else (0.0 if lhs == 0 else math.inf)
                worst = max(worst, ratio)
                rows.append({"scale": s, "x": x.tolist(), "y": y.tolist(), "beta": list(beta),
                             "lhs": lhs, "rhs": rhs, "ratio": ratio})
        per_scale.append(worst)
    slope = _slope(scales, per_scale)
    return TaylorReport(rows, list(scales), per_scale, slope, ps, lam)


def _slope(scales, values):
    s = np.asarray(scales, float)
    v = np.asarray(values, float)
    ok = (v > 0) & np.isfinite(v)
    if ok.sum() < 2:
        return 0.0
    return float(np.polyfit(np.log(1.0 / s[ok]), np.log(v[ok]), 1)[0])


@dataclass
class Cor2Report:
    max_ratio: float
    max_ratio_small: float
    max_ratio_large: float
    theta: float
    p_star: float
    h: float
    ratio_field: np.ndarray = field(repr=False)

    def to_json(self):
        return {"max_ratio": self.max_ratio, "max_ratio_small_radii": self.max_ratio_small,
                "max_ratio_large_radii": self.max_ratio_large, "theta": self.theta, "p_star": self.p_star,
                "h": self.h}


def cor2_check(f, domain, k, p, h, C=1.0, theta=None, n=2, radii=None) -> Cor2Report:
    """Pointwise ratio f#_k / ((M[(||grad^k f||^v)^p*])^(1/p*) + M[f^v]) on the grid.

    Radii up to theta and beyond theta are reported separately; the large
    radii are compared with theta^-k M[f^v] alone.
    """
    f = _require_source(f)
    if not p > n:
        raise BadExponent("p must exceed the dimension")
    alpha = (p - n) / (p - 1)
    ps = compute_exponents(alpha, C, n=n).p_star
    theta = domain.diam / 4 if theta is None else theta
    fld = sample_field(domain, f, h)
    if radii is None:
        radii = dyadic_radii(h, domain.diam)
    small = [R for R in radii if R * h <= theta]
    large = [R for R in radii if R * h > theta]
    grad = sample_field(domain, lambda q: f.gradient_norm(k, q) ** ps, h)
    hl_grad = hl_maximal(grad.extended(), radii, h).values ** (1.0 / ps)
    hl_f = hl_maximal(fld.extended(), radii, h).values
    rhs = hl_grad + hl_f
    mask = fld.mask
    lhs_s = sharp_maximal(fld, domain, k, small).values if small else np.zeros(fld.shape)
    lhs_l = sharp_maximal(fld, domain, k, large).values if large else np.zeros(fld.shape)
    lhs = np.maximum(lhs_s, lhs_l)
    ratio = np.where(mask & (rhs > 0), lhs / np.where(rhs > 0, rhs, 1.0), 0.0)
    r_small = np.where(mask & (rhs > 0), lhs_s / np.where(rhs > 0, rhs, 1.0), 0.0)
    big = theta ** -k * hl_f
    r_large = np.where(mask & (big > 0), lhs_l / np.where(big > 0, big, 1.0), 0.0)
    return Cor2Report(float(ratio.max()), float(r_small.max()), float(r_large.max()), float(theta), ps, h, ratio)


@dataclass
class ExtensionReport:
    verdict: str
    norms: list
    sharp_norms: list
    hs: list
    relative_change: float
    sigma: list

    def to_json(self):
        return {"verdict": self.verdict, "f_norm": self.norms, "sharp_norm": self.sharp_norms, "h": self.hs,
                "relative_change": self.relative_change, "regularity_sigma": self.sigma}


EXTENDABLE = "extendable at grid scale"
NOT_EXTENDABLE = "not extendable at grid scale"
STABILITY_TOL = 0.1


def lq_norm(values, mask, h, q):
    v = np.abs(values[mask])
    return float((np.sum(v ** q) * h * h) ** (1.0 / q))


def extension_criterion(f: Callable, domain, k, q, h, tol=STABILITY_TOL, sigma_growth=1.5) -> ExtensionReport:
    """Grid-scale criterion: ||f||_q and ||f#_k||_q finite and stable under h -> h/2.

    This evaluates the criterion only; no extension operator is built.
    """
    if not q > 1:
        raise BadExponent("q must exceed 1")
    sig = []
    for hh in (h, h / 2):
        est = geo.regularity_constants(domain, hh, domain.diam / 4)
        sig.append(est.sigma)
    if sig[1] > sigma_growth * sig[0]:
        raise NotRegular(f"regularity constant grows under refinement: {sig[0]:.3g} -> {sig[1]:.3g}")
    norms, sharps, hs = [], [], []
    for hh in (h, h / 2):
        fld = sample_field(domain, f, hh)
        sm = sharp_maximal(fld, domain, k)
        norms.append(lq_norm(fld.values, fld.mask, hh, q))
        sharps.append(lq_norm(sm.values, fld.mask, hh, q))
        hs.append(hh)
    finite = all(np.isfinite(norms + sharps))
    denom = max(sharps[0], 1e-300)
    change = abs(sharps[1] - sharps[0]) / denom if sharps[0] > 1e-12 else abs(sharps[1] - sharps[0])
    verdict = EXTENDABLE if finite and change <= tol else NOT_EXTENDABLE
    return ExtensionReport(verdict, norms, sharps, hs, float(change), sig)
