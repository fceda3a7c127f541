"""m-adic Cantor selection along a near-geodesic and the exponent chain it drives.

The weight trace w(t) = dist(Gamma(t), boundary) is modelled as the piecewise
linear interpolant of its values on the level-J m-adic grid of [0, L].  Above
level J the selection recursion is carried out interval by interval; below it
every surviving interval is a *leaf* on which w is linear, so the selection
pattern is self-similar (the child at the high end of w is always chosen) and
all measures, integrals and CDFs of U inside a leaf are evaluated in closed
form or through moments of that pattern.  Depth k can therefore be far beyond
what explicit enumeration of (m-1)^k intervals would allow.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Optional, Sequence, Union

import numpy as np

from . import geometry as geo
from . import metric
from .errors import (
    DegenerateTrace,
    NotStronglySubhyperbolic,
    PreconditionNotMet,
    SlackUnreachable,
)


# --------------------------------------------------------------------------
# exponents


@dataclass(frozen=True)
class ExponentRecord:
    alpha: float
    C: float
    n: int
    m: int
    k: Optional[int]
    delta: Optional[float]
    C_g: float
    q_sharp: float
    q_star: float
    q_cap: float
    q_tilde: float
    alpha_star: float
    p_star: float
    p: float

    def to_json(self):
        return {
            "alpha": self.alpha, "C": self.C, "n": self.n, "m": self.m, "k": self.k,
            "delta": self.delta, "C_g": self.C_g, "q_sharp": self.q_sharp, "q_star": self.q_star,
            "q_cap": self.q_cap, "q_tilde": self.q_tilde, "alpha_star": self.alpha_star,
            "p_star": self.p_star, "p": self.p,
        }


def cantor_depth(C, m, sep, eps):
    """Smallest k >= 1 with 2 e^(2C) sep (1 - 1/m)^k <= eps."""
    if not eps > 0:
        raise ValueError("eps must be positive")
    # log form: 1 - 1/m rounds to 1 in floating point for very large m
    log_lead = math.log(2.0) + 2.0 * C + math.log(sep)
    log_eps = math.log(eps)
    step = math.log1p(-1.0 / m)
    k = max(1, math.ceil((log_eps - log_lead) / step))
    # guard the float log against off-by-one; bounded because for huge k a unit
    # change of k is below float resolution of k * step
    for _ in range(4):
        if k > 1 and log_lead + (k - 1) * step <= log_eps:
            k -= 1
        elif log_lead + k * step > log_eps:
            k += 1
        else:
            break
    return k


def compute_exponents(alpha, C, eps=None, sep=1.0, n=2, d=None) -> ExponentRecord:
    """m, k, slack and the exponent chain q# -> q* -> q~ -> alpha* -> p*.

    ``d`` is the distance d_alpha(x, y) if known; otherwise the upper
    estimate C sep^alpha bounds the slack.
    """
    if not 0 < alpha < 1:
        raise ValueError("alpha must lie in (0, 1)")
    if not C >= 1:
        raise ValueError("C must be at least 1")
    m = int(math.floor(2.0 * (2.0 * C) ** (1.0 / (1.0 - alpha)))) + 1
    k = cantor_depth(C, m, sep, eps) if eps is not None else None
    delta = None
    if k is not None:
        d_est = C * sep ** alpha if d is None else d
        delta = min(d_est, m ** (-alpha * k) * sep ** alpha)
    C_g = 4.0 * C
    q_sharp = math.log(m) / math.log(m - (m - 1) / C_g)
    q_star = 0.5 * (1.0 + q_sharp)
    q_cap = (1.0 - alpha / 2.0) / (1.0 - alpha)
    q_tilde = min(q_star, q_cap)
    alpha_star = 1.0 - q_tilde * (1.0 - alpha)
    p_star = (n - alpha_star) / (1.0 - alpha_star)
    p = (n - alpha) / (1.0 - alpha)
    return ExponentRecord(float(alpha), float(C), int(n), m, k, delta, C_g, q_sharp, q_star,
                          q_cap, q_tilde, alpha_star, p_star, p)


def tau_from_q(alpha, q):
    """Exponent tau = q (alpha - 1) + 1 after capping q at (1 - alpha/2)/(1 - alpha)."""
    q = min(q, (1.0 - alpha / 2.0) / (1.0 - alpha))
    return q * (alpha - 1.0) + 1.0, q


# --------------------------------------------------------------------------
# self-similar leaf patterns


class _Pattern:
    """Selection pattern inside a linear leaf, normalised to [0, 1].

    The right-oriented pattern of depth D keeps child m-1 and recurses into
    children 0..m-2; the left one is its mirror image.
    """

    def __init__(self, m, max_depth, degree=12):
        self.m = m
        self.degree = degree
        r = (m - 1) / m
        self.mu = 1.0 - r ** np.arange(max_depth + 1)  # U-fraction of a depth-D leaf
        P = degree
        F = np.zeros((max_depth + 1, P + 1))
        # power sums over the m-1 recursed children
        S = np.array([sum(float(i) ** e for i in range(m - 1)) for e in range(P + 1)])
        T = np.zeros((P + 1, P + 1))
        for p in range(P + 1):
            for s in range(p + 1):
                T[p, s] = math.comb(p, s) * S[p - s] / m ** (p + 1)
        top = (1.0 - r ** (np.arange(P + 1) + 1)) / (np.arange(P + 1) + 1)
        for D in range(1, max_depth + 1):
            F[D] = top + T @ F[D - 1]
        self.moments = F
        nodes = 0.5 * (1 - np.cos(np.pi * (np.arange(2 * P + 2) + 0.5) / (2 * P + 2)))
        self.nodes = nodes
        self.fit = np.linalg.pinv(np.vander(nodes, P + 1, increasing=True))

    def cdf(self, u, D):
        """|pattern_D cap [0, u]| for the right orientation (vectorised)."""
        m, mu = self.m, self.mu
        u = np.asarray(u, float).copy()
        D = np.broadcast_to(np.asarray(D), u.shape).copy()
        out = np.zeros_like(u)
        scale = np.ones_like(u)
        live = D > 0
        edge = (m - 1) / m
        while np.any(live):
            i = np.flatnonzero(live)
            ui, Di = u[i], D[i]
            top = ui >= edge
            t = i[top]
            out[t] += scale[t] * (edge * mu[D[t] - 1] + (u[t] - edge))
            live[t] = False
            b = i[~top]
            c = np.floor(u[b] * m)
            out[b] += scale[b] * c * mu[D[b] - 1] / m
            u[b] = u[b] * m - c
            scale[b] /= m
            D[b] -= 1
            live[b] = (D[b] > 0) & (scale[b] > 1e-18)
        return out

    def integrate(self, phi_nodes, D):
        """Integral of a smooth function over pattern_D from its values at ``self.nodes``."""
        coef = phi_nodes @ self.fit.T  # (..., P+1)
        return np.sum(coef * self.moments[D], axis=-1)

    def sample(self, rng, D, count):
        """Points of pattern_D (right orientation) drawn with density proportional to |U|."""
        m, mu = self.m, self.mu
        out = np.zeros(count)
        scale = np.ones(count)
        Dv = np.full(count, D)
        live = Dv > 0
        while np.any(live):
            i = np.flatnonzero(live)
            p_sel = (1.0 / m) / mu[Dv[i]]
            pick = rng.random(len(i)) < p_sel
            s = i[pick]
            out[s] += scale[s] * ((m - 1) + rng.random(len(s))) / m
            live[s] = False
            r = i[~pick]
            c = rng.integers(0, m - 1, size=len(r))
            out[r] += scale[r] * c / m
            scale[r] /= m
            Dv[r] -= 1
            live[r] = (Dv[r] > 0) & (scale[r] > 1e-18)
            # depth exhausted with no selected child hit: fall back to a uniform point
            dead = r[~live[r]]
            out[dead] += scale[dead] * rng.random(len(dead))
        return out


@lru_cache(maxsize=16)
def _pattern(m, max_depth):
    return _Pattern(m, max_depth)


# --------------------------------------------------------------------------
# decomposition


@dataclass(frozen=True)
class Piece:
    """A cell of the partition of [0, L]: selected interval, E interval, or leaf."""

    kind: str  # "S" selected, "E" complement, "P" leaf pattern
    level: int
    index: int
    a: float
    b: float
    depth: int = 0  # remaining levels inside a leaf
    orient: int = 1  # +1: w increases across the leaf
    w_a: float = 0.0
    w_b: float = 0.0


@dataclass
class CantorDecomposition:
    curve: metric.ParamCurve
    L: float
    m: int
    k: int
    J: int
    t_grid: np.ndarray
    w_grid: np.ndarray
    pieces: list
    exponents: ExponentRecord
    alpha: float
    eps: float
    sep: float
    slack_met: bool
    gap: float
    domain: object = field(repr=False, default=None)

    # measures -------------------------------------------------------------

    @property
    def pattern(self):
        return _pattern(self.m, max(1, self.k))

    def selected_explicit(self):
        return [p for p in self.pieces if p.kind == "S"]

    def leaves(self):
        return [p for p in self.pieces if p.kind == "P"]

    def selected_count(self):
        """Exact number of selected intervals (a Python int; may be astronomically large)."""
        n = len(self.selected_explicit())
        m = self.m
        depths = {}
        for p in self.leaves():
            depths[p.depth] = depths.get(p.depth, 0) + 1
        for D, count in depths.items():
            n += count * sum((m - 1) ** d for d in range(D))
        return n

    def measure_E(self):
        r = (self.m - 1) / self.m
        tot = 0.0
        for p in self.pieces:
            if p.kind == "E":
                tot += p.b - p.a
            elif p.kind == "P":
                tot += (p.b - p.a) * r ** p.depth
        return tot

    def measure_U(self):
        mu = self.pattern.mu
        tot = 0.0
        for p in self.pieces:
            if p.kind == "S":
                tot += p.b - p.a
            elif p.kind == "P":
                tot += (p.b - p.a) * mu[p.depth]
        return tot

    def expected_E(self):
        return ((self.m - 1) / self.m) ** self.k * self.L

    # trace ---------------------------------------------------------------

    def w_at(self, t):
        return np.interp(t, self.t_grid, self.w_grid)

    def _arrays(self):
        if not hasattr(self, "_cache_arrays"):
            P = self.pieces
            self._cache_arrays = dict(
                kind=np.array([p.kind for p in P]),
                a=np.array([p.a for p in P]),
                b=np.array([p.b for p in P]),
                depth=np.array([p.depth for p in P], int),
                orient=np.array([p.orient for p in P], int),
            )
            mu = self.pattern.mu
            arr = self._cache_arrays
            umass = np.where(arr["kind"] == "S", arr["b"] - arr["a"], 0.0)
            leaf = arr["kind"] == "P"
            umass[leaf] = (arr["b"][leaf] - arr["a"][leaf]) * mu[arr["depth"][leaf]]
            arr["umass"] = umass
            arr["before"] = np.concatenate([[0.0], np.cumsum(umass)[:-1]])
        return self._cache_arrays

    def cdf_U(self, x):
        """|U cap [0, x]| for an array of positions."""
        arr = self._arrays()
        x = np.clip(np.asarray(x, float), 0.0, self.L)
        j = np.clip(np.searchsorted(arr["b"], x, side="left"), 0, len(arr["a"]) - 1)
        out = arr["before"][j].copy()
        a, b = arr["a"][j], arr["b"][j]
        kind = arr["kind"][j]
        s = kind == "S"
        out[s] += np.clip(x[s] - a[s], 0.0, b[s] - a[s])
        lf = kind == "P"
        if np.any(lf):
            width = b[lf] - a[lf]
            u = np.clip((x[lf] - a[lf]) / width, 0.0, 1.0)
            D = arr["depth"][j][lf]
            right = arr["orient"][j][lf] > 0
            pat = self.pattern
            val = np.where(
                right,
                pat.cdf(np.where(right, u, 0.0), D),
                pat.mu[D] - pat.cdf(np.where(right, 0.0, 1.0 - u), D),
            )
            out[lf] += width * val
        return out

    def sample_U(self, rng, count):
        arr = self._arrays()
        pick = rng.choice(len(arr["a"]), size=count, p=arr["umass"] / arr["umass"].sum())
        a, b = arr["a"][pick], arr["b"][pick]
        out = a + rng.random(count) * (b - a)
        lf = arr["kind"][pick] == "P"
        pat = self.pattern
        for i in np.flatnonzero(lf):
            u = pat.sample(rng, int(arr["depth"][pick[i]]), 1)[0]
            if arr["orient"][pick[i]] < 0:
                u = 1.0 - u
            out[i] = a[i] + u * (b[i] - a[i])
        return out

    # integrals -------------------------------------------------------------

    def integral_U(self, e):
        """Integral over U of w(t)^e for the piecewise-linear trace."""
        sel = [p for p in self.pieces if p.kind == "S"]
        tot = _pl_power_integral_many(self.t_grid, self.w_grid, [p.a for p in sel], [p.b for p in sel], e)
        leaves = self.leaves()
        if leaves:
            tot += self._leaf_integrals(leaves, e)
        return tot

    def integral_total(self, e):
        return _pl_power_integral(self.t_grid, self.w_grid, 0.0, self.L, e)

    def _leaf_integrals(self, leaves, e, max_ratio=1.5):
        pat = self.pattern
        m = self.m
        stack = [(p.a, p.b, p.depth, p.orient, p.w_a, p.w_b) for p in leaves]
        tot = 0.0
        smooth = []
        while stack:
            a, b, D, o, wa, wb = stack.pop()
            if D == 0:
                continue
            if max(wa, wb) <= max_ratio * min(wa, wb):
                smooth.append((a, b, D, o, wa, wb))
                continue
            # split: the selected child is exact, the others are shallower leaves
            h = (b - a) / m
            sel = m - 1 if o > 0 else 0
            for c in range(m):
                ca, cb = a + c * h, a + (c + 1) * h
                wca = wa + (wb - wa) * c / m
                wcb = wa + (wb - wa) * (c + 1) / m
                if c == sel:
                    tot += _linear_power_integral(wca, wcb, cb - ca, e)
                else:
                    stack.append((ca, cb, D - 1, o, wca, wcb))
        if smooth:
            S = np.array(smooth)
            a, b, D, o, wa, wb = S.T
            D = D.astype(int)
            u = pat.nodes[None, :]
            # right orientation: phi(u) = w(a + u|J|)^e ; left: mirror so w(b - u|J|)
            w_lo = np.where(o > 0, wa, wb)[:, None]
            w_hi = np.where(o > 0, wb, wa)[:, None]
            # pattern measure sits at the high-w end for the right orientation;
            # mirror left leaves so the same moments apply
            phi = (w_lo + (w_hi - w_lo) * u) ** e
            tot += float(np.sum((b - a) * pat.integrate(phi, D)))
        return tot


def _linear_power_integral(w0, w1, length, e):
    """Integral over [0, length] of (w0 + (w1 - w0) t/length)^e."""
    if length <= 0:
        return 0.0
    if abs(w1 - w0) <= 1e-12 * max(w0, w1):
        return length * (0.5 * (w0 + w1)) ** e
    if abs(e + 1.0) < 1e-14:
        return length * (math.log(w1) - math.log(w0)) / (w1 - w0)
    return length * (w1 ** (e + 1) - w0 ** (e + 1)) / ((e + 1) * (w1 - w0))


def _pl_power_integral(tg, wg, a, b, e):
    """Integral over [a, b] of w^e for the piecewise-linear trace (tg, wg)."""
    return _pl_power_integral_many(tg, wg, [a], [b], e)


def _pl_power_integral_many(tg, wg, a, b, e):
    """Sum over intervals [a_i, b_i] of the integral of w^e for the trace (tg, wg)."""
    a = np.asarray(a, float)
    b = np.asarray(b, float)
    if a.size == 0:
        return 0.0
    # exact primitive on the grid, plus corrections at the interval ends
    w0, w1, ln = wg[:-1], wg[1:], np.diff(tg)
    cell = _cell_integrals(w0, w1, ln, e)
    cum = np.concatenate([[0.0], np.cumsum(cell)])

    def prim(x):
        x = np.clip(x, tg[0], tg[-1])
        i = np.clip(np.searchsorted(tg, x, side="right") - 1, 0, len(tg) - 2)
        wx = np.interp(x, tg, wg)
        return cum[i] + _cell_integrals(wg[i], wx, x - tg[i], e)

    return float(np.sum(np.where(b > a, prim(b) - prim(a), 0.0)))


def _cell_integrals(w0, w1, ln, e):
    w0, w1, ln = np.broadcast_arrays(np.asarray(w0, float), np.asarray(w1, float), np.asarray(ln, float))
    flat = np.abs(w1 - w0) <= 1e-9 * np.maximum(w0, w1)
    out = ln * (0.5 * (w0 + w1)) ** e
    nf = ~flat & (ln > 0)
    if abs(e + 1.0) < 1e-14:
        out[nf] = ln[nf] * (np.log(w1[nf]) - np.log(w0[nf])) / (w1[nf] - w0[nf])
    else:
        out[nf] = ln[nf] * (w1[nf] ** (e + 1) - w0[nf] ** (e + 1)) / ((e + 1) * (w1[nf] - w0[nf]))
    return out


def _grid_level(m, k, min_nodes=4096, max_nodes=200_000):
    J = max(1, math.ceil(math.log(min_nodes) / math.log(m)))
    while J > 1 and m ** J > max_nodes:
        J -= 1
    return min(J, k)


def decompose_trace(t_grid, w_grid, m, k):
    """Cantor selection on a trace sampled at the level-J m-adic grid (len = m^J + 1).

    Returns the partition of [0, L] into selected intervals, complement
    intervals (level k, only when k == J) and linear leaves.
    """
    w = np.asarray(w_grid, float)
    N = len(w) - 1
    J = int(round(math.log(N) / math.log(m)))
    if m ** J != N:
        raise DegenerateTrace(f"trace length {N} is not a power of m = {m}")
    if J > k:
        raise ValueError("grid level exceeds the Cantor depth")
    if np.any(w <= 0):
        raise DegenerateTrace("weight trace touches the boundary")
    L = float(t_grid[-1])
    pieces = []
    surv = np.array([0], dtype=np.int64)
    for j in range(J):
        width = m ** (J - j)
        cw = width // m
        start = surv * width
        seg = w[start[:, None] + np.arange(width + 1)[None, :]]
        p = np.argmax(seg, axis=1)  # first maximiser: ties go to the lowest position
        child = np.where(p == 0, 0, -(-p // cw) - 1)  # shared endpoint -> lower child
        for s, c in zip(surv, child):
            idx = int(s) * m + int(c)
            a, b = idx * cw, (idx + 1) * cw
            pieces.append(Piece("S", j + 1, idx, t_grid[a], t_grid[b]))
        kids = surv[:, None] * m + np.arange(m)[None, :]
        keep = np.arange(m)[None, :] != child[:, None]
        surv = kids[keep]
    D = k - J
    for s in surv:
        a, b = int(s), int(s) + 1
        if D == 0:
            pieces.append(Piece("E", J, int(s), t_grid[a], t_grid[b]))
        else:
            orient = 1 if w[b] > w[a] else -1
            pieces.append(Piece("P", J, int(s), t_grid[a], t_grid[b], D, orient, float(w[a]), float(w[b])))
    pieces.sort(key=lambda p: p.a)
    return pieces, J


def cantor_decompose(domain, alpha, C=None, x=None, y=None, eps=None, h=None, norm="uniform",
                     curve=None, require_slack=False, n=2, tol=0.02) -> CantorDecomposition:
    """Cantor decomposition of a near-geodesic between a hard-stratum pair.

    ``C`` defaults to the measured ratio d_alpha(x, y)/||x - y||^alpha (at
    least 1).  ``eps`` defaults to 0.1 ||x - y||.  The proof's slack
    m^(-alpha k) ||x - y||^alpha is far below any grid refinement; the curve
    used is the converged distance estimate and ``slack_met`` records whether
    its gap met the slack (``require_slack`` turns a miss into an error).
    """
    x = np.asarray(x, float)
    y = np.asarray(y, float)
    sep = float(geo.norm_of(y - x, norm))
    dx, dy = geo.boundary_distance(domain, np.array([x, y]), norm)
    if max(dx, dy) > 2 * sep:
        raise PreconditionNotMet("pair is not in the hard stratum: max dist > 2||x - y||")
    if curve is None:
        res = metric.subhyp_distance(domain, alpha, x, y, h=h, tol=tol, norm=norm)
        curve, value, gap = res.curve, res.value, res.gap
    else:
        value, gap = metric.weighted_length(curve, alpha, domain), float("nan")
    if C is None:
        C = max(1.0, value / sep ** alpha)
    if eps is None:
        eps = 0.1 * sep
    rec = compute_exponents(alpha, C, eps, sep, n, d=value)
    slack_met = bool(gap <= rec.delta)
    if require_slack and not slack_met:
        raise SlackUnreachable(f"curve gap {gap:.3g} exceeds slack {rec.delta:.3g}")
    J = _grid_level(rec.m, rec.k)
    N = rec.m ** J
    t = np.linspace(0.0, curve.length, N + 1)
    pts = curve.point_at(t)
    w = geo.raw_distance(domain, pts, norm, metric.local_segments(domain, pts))
    pieces, J = decompose_trace(t, w, rec.m, rec.k)
    return CantorDecomposition(curve, curve.length, rec.m, rec.k, J, t, w, pieces, rec, float(alpha),
                               float(eps), sep, slack_met, float(gap), domain)


# --------------------------------------------------------------------------
# verification


def oscillation_report(dec: CantorDecomposition):
    """Worst max g / min g over all selected intervals, g = w^(alpha - 1)."""
    e = 1.0 - dec.alpha
    bound = 3.0 ** e
    worst = 1.0
    bad_explicit = 0
    tol = bound * (1 + 1e-12)
    sel = dec.selected_explicit()
    for lev in sorted({p.level for p in sel}):
        cw = dec.m ** (dec.J - lev)
        start = np.array([p.index for p in sel if p.level == lev]) * cw
        ws = dec.w_grid[start[:, None] + np.arange(cw + 1)[None, :]]
        r = (ws.max(axis=1) / ws.min(axis=1)) ** e
        worst = max(worst, float(r.max()))
        bad_explicit += int(np.sum(r > tol))
    bad_leaves = 0
    m = dec.m
    leaves = dec.leaves()
    if leaves:
        wa = np.array([p.w_a for p in leaves])
        wb = np.array([p.w_b for p in leaves])
        D = np.array([p.depth for p in leaves])
        wl, sl = np.minimum(wa, wb)[:, None], np.abs(wb - wa)[:, None]
        d = np.arange(1, D.max() + 1)[None, :]
        with np.errstate(over="ignore"):  # m^d overflows to inf deep in a leaf; the ratio tends to 1
            r = (wl + sl / m ** (d - 1.0)) / (wl + sl * (m - 1) / m ** d.astype(float))
        r = np.where(d <= D[:, None], r, 1.0).max(axis=1) ** e
        worst = max(worst, float(r.max()))
        bad_leaves = int(np.sum(r > tol))
    return {"bound": bound, "worst": worst, "violating_explicit": int(bad_explicit),
            "leaves_with_violation": int(bad_leaves), "holds": bool(worst <= bound * (1 + 1e-12))}


def porosity_report(dec: CantorDecomposition, centers=1000, min_exponent=40, seed=0):
    """max |I| / |I cap U| over intervals centred in U with |I| = 2L 2^-i, i = 0..min_exponent."""
    rng = np.random.default_rng(seed)
    c = dec.sample_U(rng, centers)
    half = dec.L * 2.0 ** (-np.arange(min_exponent + 1))
    C = np.repeat(c, len(half))
    H = np.tile(half, len(c))
    inter = dec.cdf_U(C + H) - dec.cdf_U(C - H)
    ratio = np.where(inter > 0, 2 * H / np.maximum(inter, 1e-300), np.inf)
    k = int(np.argmax(ratio))
    bound = 4 * dec.m
    return {"bound": bound, "worst": float(ratio[k]), "worst_center": float(C[k]),
            "worst_length": float(2 * H[k]), "tested": int(len(ratio)),
            "violations": int(np.sum(ratio > bound * (1 + 1e-9)))}


def _cube_exit(p0, p1, c, r):
    """Fraction along p0 -> p1 where the segment leaves the cube Q(c, r); p0 is inside."""
    d = p1 - p0
    best = 1.0
    for i in range(2):
        if d[i] > 0:
            best = min(best, (c[i] + r - p0[i]) / d[i])
        elif d[i] < 0:
            best = min(best, (c[i] - r - p0[i]) / d[i])
    return max(0.0, best)


def _arc_inside(verts, t, a, c, r):
    """Arclength reach (backward, forward) from t=a of the arc staying in the cube Q(c, r)."""
    out = np.max(np.abs(verts - c), axis=1) > r
    p_a = np.array([np.interp(a, t, verts[:, 0]), np.interp(a, t, verts[:, 1])])
    i = int(np.searchsorted(t, a, side="right"))
    fwd = np.flatnonzero(out[i:])
    if len(fwd):
        j = i + int(fwd[0])
        p0, t0 = (verts[j - 1], t[j - 1]) if j - 1 >= i else (p_a, a)
        lp = t0 + _cube_exit(p0, verts[j], c, r) * (t[j] - t0) - a
    else:
        lp = t[-1] - a
    back = np.flatnonzero(out[:i][::-1])
    if len(back):
        j = i - 1 - int(back[0])
        p0, t0 = (verts[j + 1], t[j + 1]) if j + 1 <= i - 1 else (p_a, a)
        lm = a - (t0 - _cube_exit(p0, verts[j], c, r) * (t0 - t[j]))
    else:
        lm = a - t[0]
    return max(0.0, lm), max(0.0, lp)


def regularity_report(dec: CantorDecomposition, centers=200, seed=1):
    """Lower-bound estimate of sup diam B / lng(B cap Gamma-hat) over cubes centred on Gamma-hat."""
    rng = np.random.default_rng(seed)
    a = dec.sample_U(rng, centers)
    verts, tv = dec.curve.vertices, dec.curve.t
    radii = dec.sep * 2.0 ** (-np.arange(0, 16))
    lo, hi, diam, at = [], [], [], []
    for ai in a:
        c = dec.curve.point_at(ai)
        for r in radii:
            lm, lp = _arc_inside(verts, tv, ai, c, r)
            lo.append(ai - lm)
            hi.append(ai + lp)
            diam.append(2 * r)
            at.append((float(ai), float(r)))
    inter = dec.cdf_U(np.array(hi)) - dec.cdf_U(np.array(lo))
    ratio = np.where(inter > 0, np.array(diam) / np.maximum(inter, 1e-300), np.inf)
    k = int(np.argmax(ratio))
    return {"constant": float(ratio[k]), "bound": 4 * dec.m, "worst_center_t": at[k][0],
            "worst_radius": at[k][1]}


def verify_decomposition(dec: CantorDecomposition, taus=None, eps=None, centers=1000) -> dict:
    """All measurable conclusions for one decomposition; failures are report entries."""
    rec = dec.exponents
    eps = dec.eps if eps is None else eps
    if taus is None:
        taus = np.linspace(rec.alpha_star, dec.alpha, 9)
    E = dec.measure_E()
    expected = dec.expected_E()
    gw = []
    for tau in taus:
        I = dec.integral_U(float(tau) - 1.0)
        gw.append({"tau": float(tau), "integral": I, "constant": I / dec.sep ** tau})
    total = dec.integral_total(dec.alpha - 1.0)
    off = max(0.0, total - dec.integral_U(dec.alpha - 1.0))
    return {
        "m": dec.m,
        "k": dec.k,
        "grid_level": dec.J,
        "L": dec.L,
        "sep": dec.sep,
        "selected_count": str(dec.selected_count()),
        "E_measure": E,
        "E_expected": expected,
        "E_relative_error": abs(E - expected) / expected if expected > 0 else abs(E),
        "E_below_eps": bool(E <= eps),
        "eps": eps,
        "weighted_on_selected": gw,
        "weighted_off_selected": {"integral": off, "constant": off / dec.sep ** dec.alpha},
        "oscillation": oscillation_report(dec),
        "porosity": porosity_report(dec, centers=centers),
        "ball_regularity": regularity_report(dec, centers=max(20, centers // 5)),
        "slack_met": dec.slack_met,
        "gap": dec.gap,
        "slack": rec.delta,
    }


# --------------------------------------------------------------------------
# reverse Hoelder


@dataclass
class ReverseHolderResult:
    qs: list
    constants: list
    q_max: Optional[float]
    cap: float
    C_g: float
    m: int
    k: int

    def to_json(self):
        return {"q": self.qs, "C_tilde": self.constants, "q_max": self.q_max, "cap": self.cap,
                "C_g": self.C_g, "m": self.m, "k": self.k}


def cell_averages(g: Callable, length, cells, nodes=16):
    """Cell averages of ``g`` on ``cells`` equal cells of [0, length] (Gauss-Legendre per cell)."""
    x, wt = np.polynomial.legendre.leggauss(nodes)
    h = length / cells
    left = np.arange(cells) * h
    pts = left[:, None] + 0.5 * h * (x[None, :] + 1.0)
    return (g(pts) * wt[None, :]).sum(axis=1) * 0.5


def restricted_maximal(avg, m, k):
    """M_S g on cells: max of m-adic averages over levels 0..k containing each cell."""
    avg = np.asarray(avg, float)
    N = len(avg)
    if N % m ** k:
        raise DegenerateTrace(f"{N} cells cannot resolve level {k} of the {m}-adic family")
    out = np.full(N, avg.mean())
    for j in range(1, k + 1):
        blocks = avg.reshape(m ** j, -1).mean(axis=1)
        out = np.maximum(out, np.repeat(blocks, N // m ** j))
    return out


def a1_constant(avg, m, k):
    """max over I in S of (average of g on I) / (min cell average on I)."""
    avg = np.asarray(avg, float)
    worst = 1.0
    for j in range(0, k + 1):
        blk = avg.reshape(m ** j, -1)
        worst = max(worst, float((blk.mean(axis=1) / blk.min(axis=1)).max()))
    return worst


def reverse_holder_exponent(g: Union[np.ndarray, Callable], length=1.0, m=2, k=10, qs=None,
                            cap=None, cells=None) -> ReverseHolderResult:
    """Best constants in (mean (M_S g)^q)^(1/q) <= C~ mean g over a grid of q.

    ``g`` is either an array of cell averages on equal cells (the count must
    be a multiple of m^k) or a callable, averaged on m^k * 8 cells.
    ``q_max`` is the largest grid q whose constant is at most ``cap``
    (default 10 C_g with C_g the measured A1 constant on the family).
    """
    if callable(g):
        n = cells or m ** k * 8
        avg = cell_averages(g, length, n)
    else:
        avg = np.asarray(g, float)
    if len(avg) < m ** k:
        raise DegenerateTrace(f"need at least {m ** k} samples, got {len(avg)}")
    if np.any(avg <= 0) or not np.all(np.isfinite(avg)):
        raise DegenerateTrace("weight must be positive and finite")
    if qs is None:
        qs = np.round(np.arange(1.0, 3.0001, 0.05), 10)
    Mg = restricted_maximal(avg, m, k)
    base = avg.mean()
    ratio = Mg / base  # normalise first so a constant weight gives exactly 1
    consts = [float(np.mean(ratio ** q) ** (1.0 / q)) for q in qs]
    C_g = a1_constant(avg, m, k)
    cap = 10.0 * C_g if cap is None else cap
    ok = [q for q, c in zip(qs, consts) if c <= cap]
    return ReverseHolderResult([float(q) for q in qs], consts, float(max(ok)) if ok else None,
                               float(cap), C_g, m, k)


# --------------------------------------------------------------------------
# strong property and tau


@dataclass
class TauReport:
    tau: float
    per_curve: list

    def to_json(self):
        return {"tau": self.tau, "curves": self.per_curve}


def self_improve_tau(domain, alpha, curves: Sequence[metric.ParamCurve], C, h=None, m=2, k=10,
                     samples=256) -> TauReport:
    """Improved exponent for a family of curves with the arc-wise bound.

    Each curve must satisfy int over every sub-arc gamma_uv of dist^(alpha-1)
    <= C ||u - v||^alpha (checked on sampled vertex pairs).  The reverse
    Hoelder exponent of w^(alpha-1) along the curve gives q, tau = q(alpha-1)+1,
    and the bound int dist^(tau-1) <= (C1 C)^q ||x - y||^tau is verified.
    """
    rows = []
    taus = []
    for idx, curve in enumerate(curves):
        const, (i, j), fine, cum = metric.arc_constants(curve, domain, alpha, n=samples)
        if const > C * (1 + 1e-9):
            u, v = fine.vertices[i], fine.vertices[j]
            raise NotStronglySubhyperbolic(
                f"curve {idx}: arc bound fails with ratio {const:.4g} > C = {C:.4g}",
                {"curve": idx, "u": u.tolist(), "v": v.tolist(), "ratio": const},
            )
        cells = m ** k * 4
        tt = np.linspace(0.0, curve.length, cells + 1)
        mid = 0.5 * (tt[:-1] + tt[1:])
        pts = curve.point_at(mid)
        w = geo.raw_distance(domain, pts, curve.norm, metric.local_segments(domain, pts))
        hvals = w ** (alpha - 1.0)
        rh = reverse_holder_exponent(hvals, curve.length, m=m, k=k,
                                     qs=np.round(np.arange(1.0, (1 - alpha / 2) / (1 - alpha) + 1e-9, 0.01), 10))
        q_meas = rh.q_max if rh.q_max is not None else 1.0
        tau, q = tau_from_q(alpha, q_meas)
        # measured reverse-Hoelder constant of this curve at exponent q
        C1 = float(np.mean(hvals ** q) ** (1 / q) / np.mean(hvals))
        sep = float(geo.norm_of(curve.end - curve.start, curve.norm))
        lhs = metric.weighted_length(curve, tau, domain)
        rhs = (C1 * C) ** q * sep ** tau
        rows.append({"q_measured": q_meas, "q": q, "tau": tau, "C1": C1, "arc_constant": const,
                     "lhs": lhs, "rhs": rhs, "holds": bool(lhs <= rhs * (1 + 1e-9))})
        taus.append(tau)
    return TauReport(float(min(taus)) if taus else float("nan"), rows)
