"""Numerical certification of the local bound d_alpha(x, y) <= C ||x - y||^alpha.

Pairs are sampled per dyadic scale with most of the budget spent next to the
boundary, the worst pairs are pushed further by hill climbing along the
boundary, and a log-log fit of the per-scale maximum ratio decides between
bounded and diverging behaviour.  The verdict is evidence, never a proof.
"""
from __future__ import annotations

import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import List, Optional, Sequence

import numpy as np

from . import geometry as geo
from . import metric
from .errors import BadExponent, SubhypError

EPS_SLOPE = 0.1
MIN_R2 = 0.7
DEFAULT_SEED = 20240601
WORKERS_ENV = "SUBHYP_WORKERS"

SUBHYPERBOLIC = "subhyperbolic"
DIVERGING = "diverging"
INCONCLUSIVE = "inconclusive"


def alpha_from_p(p, n=2):
    """Exponent map p -> (p - n)/(p - 1)."""
    if not p > n:
        raise BadExponent(f"need p > n, got p={p}, n={n}")
    return (p - n) / (p - 1)


def p_from_alpha(alpha, n=2):
    """Inverse map alpha -> (n - alpha)/(1 - alpha)."""
    if not 0 < alpha < 1:
        raise BadExponent(f"alpha must lie in (0, 1), got {alpha}")
    return (n - alpha) / (1 - alpha)


@dataclass(frozen=True)
class PairSample:
    x: tuple
    y: tuple
    scale: float
    ratio: float
    value: float
    stratum: str

    def to_json(self):
        return {
            "x": list(self.x),
            "y": list(self.y),
            "scale": self.scale,
            "ratio": self.ratio,
            "value": self.value,
            "stratum": self.stratum,
        }


@dataclass
class SubhypCertificate:
    alpha: float
    theta: float
    C_est: float
    verdict: str
    divergence_slope: float
    fit_r2: float
    scales: list
    scale_max: list
    worst_pairs: list
    budget: int
    seed: int
    norm: str = "uniform"
    failures: int = 0

    def to_json(self):
        return {
            "alpha": self.alpha,
            "theta": self.theta,
            "C_est": self.C_est,
            "verdict": self.verdict,
            "divergence_slope": self.divergence_slope,
            "fit_r2": self.fit_r2,
            "eps_slope": EPS_SLOPE,
            "scales": list(self.scales),
            "scale_max_ratio": list(self.scale_max),
            "worst_pairs": [p.to_json() for p in self.worst_pairs],
            "budget": self.budget,
            "seed": self.seed,
            "norm": self.norm,
            "failed_pairs": self.failures,
        }

    def scale_table(self):
        """Rows (scale, max ratio) for CSV output."""
        return list(zip(self.scales, self.scale_max))


# --------------------------------------------------------------------------
# sampling


def _boundary_frame(domain, seg_idx, offset):
    """Boundary points at ``offset`` along segments, with unit tangents and inward normals."""
    segs = domain.segments[seg_idx]
    d = segs[:, 2:] - segs[:, :2]
    L = np.hypot(d[:, 0], d[:, 1])
    tang = d / L[:, None]
    p = segs[:, :2] + np.minimum(offset, L)[:, None] * tang
    # outer ring is counterclockwise, holes clockwise: the domain is on the left
    normal = np.column_stack([-tang[:, 1], tang[:, 0]])
    return p, tang, normal


def _unit(v, norm):
    return v / geo.norm_of(v, norm)[..., None]


def obstacle_thickness(domain, pts, outward):
    """Length of the first excursion outside the domain along each outward ray.

    Returns inf where the ray never re-enters the domain.
    """
    segs = domain.segments
    ax, ay = segs[:, 0], segs[:, 1]
    ex, ey = segs[:, 2] - ax, segs[:, 3] - ay
    px, py = pts[:, 0:1], pts[:, 1:2]
    dx, dy = outward[:, 0:1], outward[:, 1:2]
    den = dx * ey - dy * ex
    with np.errstate(divide="ignore", invalid="ignore"):
        t = ((ax - px) * ey - (ay - py) * ex) / den
        u = ((ax - px) * dy - (ay - py) * dx) / den
    tiny = 1e-9 * domain.diam
    hit = (np.abs(den) > 0) & (t > tiny) & (u >= 0) & (u <= 1)
    t = np.where(hit, t, np.inf)
    return t.min(axis=1)


@dataclass(frozen=True)
class _Plan:
    """Scale-free pair recipes, reused at every scale so that maxima are comparable."""

    interior: np.ndarray  # (k, 3): x in unit bbox coords, direction angle
    seg_idx: np.ndarray
    seg_off: np.ndarray  # offset from the segment start, in units of the scale
    eta: np.ndarray  # distance of x from the boundary, in units of the scale
    phi: np.ndarray  # direction of y - x relative to the tangent, in [0, pi)
    cross_frac: np.ndarray  # target obstacle thickness, in units of the scale
    cross_eta: np.ndarray
    anchors: np.ndarray  # candidate cross-boundary anchor points
    anchor_out: np.ndarray  # outward normals at the anchors
    anchor_tau: np.ndarray  # obstacle thickness beyond each anchor


def _plan(domain, rng, count):
    n_int = max(1, count // 4)
    n_cross = max(1, count // 4)
    n_bdry = max(1, count - n_int - n_cross)
    M = len(domain.segments)
    interior = np.column_stack([rng.random(n_int), rng.random(n_int), rng.uniform(0, 2 * np.pi, n_int)])
    seg_idx = rng.integers(0, M, size=n_bdry)
    seg_off = rng.uniform(0.0, 2.0, size=n_bdry)
    eta = np.exp(rng.uniform(np.log(1e-3), 0.0, size=n_bdry))
    # half the recipes put y at a log-uniform depth too: near-tangential pairs
    phi = rng.uniform(0.0, np.pi, size=n_bdry)
    hug = np.arange(n_bdry) % 2 == 0
    lean = np.arcsin(np.exp(rng.uniform(np.log(1e-3), 0.0, size=n_bdry)))
    phi = np.where(hug, np.where(rng.random(n_bdry) < 0.5, lean, np.pi - lean), phi)
    # anchors: every vertex plus arclength-uniform points
    segs = domain.segments
    L = np.hypot(*(segs[:, 2:] - segs[:, :2]).T)
    extra = rng.choice(M, size=1024, p=L / L.sum())
    idx = np.concatenate([np.arange(M), extra])
    off = np.concatenate([0.5 * L, rng.random(1024) * L[extra]])
    p, _, nrm = _boundary_frame(domain, idx, off)
    tau = obstacle_thickness(domain, p, -nrm)
    fin = np.isfinite(tau)
    return _Plan(
        interior, seg_idx, seg_off, eta, phi,
        np.exp(rng.uniform(np.log(1 / 8), np.log(0.95), size=n_cross)),
        np.exp(rng.uniform(np.log(1e-3), np.log(0.5), size=n_cross)),
        p[fin], -nrm[fin], tau[fin],
    )


def _sample_pairs(domain, plan: _Plan, scale, norm):
    """Pairs at one scale: interior, boundary-proximal, and across thin obstacles."""
    lo, hi = domain.bbox
    out = []
    for ux, uy, ang in plan.interior:
        x = lo + np.array([ux, uy]) * (hi - lo)
        u = _unit(np.array([np.cos(ang), np.sin(ang)]), norm)
        out.append((x, x + scale * u, "interior"))
    b, tang, nrm = _boundary_frame(domain, plan.seg_idx, plan.seg_off * scale)
    for k in range(len(b)):
        x = b[k] + plan.eta[k] * scale * nrm[k]
        d = np.cos(plan.phi[k]) * tang[k] + np.sin(plan.phi[k]) * nrm[k]
        out.append((x, x + scale * _unit(d, norm), "boundary"))
    # anchor whose obstacle thickness is the recipe's fraction of the scale
    if len(plan.anchor_tau):
        frac = plan.anchor_tau / scale
        for f, eta in zip(plan.cross_frac, plan.cross_eta):
            k = int(np.argmin(np.abs(np.log(frac / f))))
            if not 0.05 <= frac[k] < 0.98:
                continue
            out_dir = plan.anchor_out[k]
            x = plan.anchors[k] - eta * (scale - plan.anchor_tau[k]) * out_dir
            y = x + scale * _unit(out_dir, norm)
            out.append((x, y, "cross"))
    keep = []
    for x, y, s in out:
        if geo.contains(domain, x) and geo.contains(domain, y):
            keep.append((x, y, s))
    return keep


def _ratio(task):
    domain, alpha, x, y, h, tol, norm = task
    try:
        res = metric.subhyp_distance(domain, alpha, x, y, h=h, tol=tol, norm=norm, max_levels=3)
    except SubhypError:
        return None
    # arclength is Euclidean, so the separation is too (alpha = 1 on a convex set gives 1)
    sep = float(np.hypot(*(np.asarray(y) - np.asarray(x))))
    return res.value, res.value / sep ** alpha


def _workers():
    try:
        return max(1, int(os.environ.get(WORKERS_ENV, "1")))
    except ValueError:
        return 1


def _map(tasks):
    n = _workers()
    if n == 1 or len(tasks) < 2:
        return [_ratio(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=n) as pool:
        return list(pool.map(_ratio, tasks, chunksize=max(1, len(tasks) // (4 * n))))


def _nearest_frame(domain, p):
    segs = domain.segments
    d = geo.raw_distance(domain, p, "euclidean", segs)[0]
    ax, ay = segs[:, 0], segs[:, 1]
    dx, dy = segs[:, 2] - ax, segs[:, 3] - ay
    den = np.where(dx * dx + dy * dy > 0, dx * dx + dy * dy, 1.0)
    t = np.clip(((p[0] - ax) * dx + (p[1] - ay) * dy) / den, 0, 1)
    j = int(np.argmin(np.hypot(p[0] - ax - t * dx, p[1] - ay - t * dy)))
    tang = np.array([dx[j], dy[j]]) / np.sqrt(den[j])
    return d, tang, np.array([-tang[1], tang[0]])


def _hill_climb(domain, alpha, sample, h, tol, norm, rounds):
    """Greedy search around a bad pair.

    Moves cycle through sliding the pair along the nearest boundary tangent
    (both senses) and pulling either endpoint halfway to the boundary; the
    separation is kept within a factor sqrt(2) of the sampled scale.
    """
    best = sample
    step = sample.scale / 4
    for r in range(rounds):
        if step < 1e-3 * sample.scale:
            break
        x = np.asarray(best.x, float)
        y = np.asarray(best.y, float)
        move = r % 4
        if move < 2:
            _, tang, _ = _nearest_frame(domain, 0.5 * (x + y))
            sign = 1.0 if move == 0 else -1.0
            nx, ny = x + sign * step * tang, y + sign * step * tang
        else:
            p = x if move == 2 else y
            d, _, nrm = _nearest_frame(domain, p)
            q = p - 0.5 * d * nrm
            nx, ny = (q, y) if move == 2 else (x, q)
        sep = float(geo.norm_of(ny - nx, norm))
        if not (sample.scale / np.sqrt(2) <= sep <= sample.scale * np.sqrt(2)):
            continue
        if not (geo.contains(domain, nx) and geo.contains(domain, ny)):
            if move < 2:
                step /= 2
            continue
        got = _ratio((domain, alpha, nx, ny, h, tol, norm))
        if got is not None and got[1] > best.ratio:
            best = PairSample(tuple(map(float, nx)), tuple(map(float, ny)), best.scale, got[1], got[0],
                              best.stratum.split("+")[0] + "+climb")
        elif move == 1:
            step /= 2
    return best


def _fit(scales, maxima):
    s = np.log(np.asarray(scales, float))
    r = np.log(np.asarray(maxima, float))
    if len(s) < 2 or np.ptp(s) == 0:
        return 0.0, 0.0
    A = np.column_stack([s, np.ones_like(s)])
    coef, *_ = np.linalg.lstsq(A, r, rcond=None)
    pred = A @ coef
    ss_tot = float(np.sum((r - r.mean()) ** 2))
    r2 = 1.0 - float(np.sum((r - pred) ** 2)) / ss_tot if ss_tot > 0 else 1.0
    return float(coef[0]), r2


def verdict_from_fit(slope, r2):
    if slope >= -EPS_SLOPE:
        return SUBHYPERBOLIC
    if r2 >= MIN_R2:
        return DIVERGING
    return INCONCLUSIVE


def default_theta(domain, global_=False):
    return domain.diam if global_ else domain.diam / 4


def default_levels(global_=False):
    # the same absolute scales diam * 2^-(4..7) for the local and global thetas
    return (4, 5, 6, 7) if global_ else (2, 3, 4, 5)


def estimate_constant(domain, alpha, theta=None, budget=32, h=None, seed=DEFAULT_SEED,
                      norm="uniform", levels=None, tol=0.02, climb_rounds=20, top_k=2,
                      scales=None) -> SubhypCertificate:
    """Estimate C_alpha by adversarial sampling over dyadic scales of ``theta``.

    ``budget`` pairs are split evenly over the scales; at each scale the
    ``top_k`` worst pairs are refined by ``climb_rounds`` of hill climbing.
    ``h`` is the grid spacing passed to the metric (default: scale/8 per pair).
    """
    metric.check_alpha(alpha)
    if theta is None:
        theta = default_theta(domain)
    if scales is None:
        levels = levels or default_levels()
        scales = [theta * 2.0 ** (-j) for j in levels]
    scales = [float(s) for s in scales]
    if any(s > theta * (1 + 1e-12) for s in scales):
        raise ValueError("every sampled scale must be at most theta")
    rng = np.random.default_rng(seed)
    per = max(4, budget // len(scales))
    plan = _plan(domain, rng, per)
    maxima, worst, failures = [], [], 0
    for s in scales:
        pairs = _sample_pairs(domain, plan, s, norm)
        res = _map([(domain, alpha, x, y, h, tol, norm) for x, y, _ in pairs])
        samples = []
        for (x, y, st), got in zip(pairs, res):
            if got is None:
                failures += 1
                continue
            samples.append(PairSample(tuple(map(float, x)), tuple(map(float, y)), s, got[1], got[0], st))
        if not samples:
            maxima.append(float("nan"))
            continue
        samples.sort(key=lambda p: -p.ratio)
        climbed = [_hill_climb(domain, alpha, p, h, tol, norm, climb_rounds) for p in samples[:top_k]]
        samples = sorted(climbed + samples[top_k:], key=lambda p: -p.ratio)
        maxima.append(samples[0].ratio)
        worst.extend(samples[:top_k])
    good = [i for i, m in enumerate(maxima) if math.isfinite(m)]
    slope, r2 = _fit([scales[i] for i in good], [maxima[i] for i in good])
    verdict = verdict_from_fit(slope, r2) if len(good) >= 2 else INCONCLUSIVE
    worst.sort(key=lambda p: -p.ratio)
    C_est = max((maxima[i] for i in good), default=float("nan"))
    return SubhypCertificate(
        alpha=float(alpha), theta=float(theta), C_est=float(C_est), verdict=verdict,
        divergence_slope=slope, fit_r2=r2, scales=scales, scale_max=maxima,
        worst_pairs=worst[: max(top_k, 4)], budget=int(budget), seed=int(seed), norm=norm,
        failures=failures,
    )


def classify_alpha(domain, alpha, theta=None, budget=32, h=None, seed=DEFAULT_SEED, **kw):
    """Verdict string plus the certificate that supports it."""
    cert = estimate_constant(domain, alpha, theta, budget, h, seed, **kw)
    return cert.verdict, cert


@dataclass
class ScanResult:
    alphas: list
    verdicts: list
    slopes: list
    bracket: tuple
    inversions: list

    def to_json(self):
        return {
            "alphas": self.alphas,
            "verdicts": self.verdicts,
            "slopes": self.slopes,
            "critical_bracket": list(self.bracket),
            "inversions": self.inversions,
        }


def scan_alpha(domain, alphas: Sequence[float], theta=None, budget=32, h=None, seed=DEFAULT_SEED, **kw):
    """Bracket the critical exponent between the diverging prefix and the subhyperbolic suffix.

    Verdict inversions (diverging above subhyperbolic) are reported, not repaired.
    """
    alphas = [float(a) for a in alphas]
    if alphas != sorted(alphas):
        raise ValueError("alpha grid must be ascending")
    verdicts, slopes = [], []
    for a in alphas:
        v, cert = classify_alpha(domain, a, theta, budget, h, seed, **kw)
        verdicts.append(v)
        slopes.append(cert.divergence_slope)
    prefix = 0
    while prefix < len(alphas) and verdicts[prefix] == DIVERGING:
        prefix += 1
    suffix = len(alphas)
    while suffix > 0 and verdicts[suffix - 1] == SUBHYPERBOLIC:
        suffix -= 1
    lo = alphas[prefix - 1] if prefix > 0 else 0.0
    hi = alphas[suffix] if suffix < len(alphas) else 1.0
    inversions = [
        [alphas[i], alphas[j]]
        for i in range(len(alphas))
        for j in range(i + 1, len(alphas))
        if verdicts[i] == SUBHYPERBOLIC and verdicts[j] == DIVERGING
    ]
    return ScanResult(alphas, verdicts, slopes, (lo, hi), inversions)


@dataclass
class ExtensionVerdict:
    p: float
    n: int
    alpha: float
    extension: Optional[bool]
    kind: str
    certificate: SubhypCertificate

    @property
    def label(self):
        if self.extension is None:
            return "inconclusive"
        if self.kind == "sufficient" and not self.extension:
            return "no conclusion (sufficient condition not met)"
        return "extension domain" if self.extension else "not an extension domain"

    def to_json(self):
        return {
            "p": self.p,
            "n": self.n,
            "alpha": self.alpha,
            "verdict": self.label,
            "extension": self.extension,
            "criterion": self.kind,
            "certificate": self.certificate.to_json(),
        }


def classify_extension(domain, p, n=2, theta=None, budget=32, h=None, seed=DEFAULT_SEED, **kw):
    """Sobolev extension verdict from the subhyperbolic test at alpha = (p - n)/(p - 1).

    For n = 2 (bounded, finitely connected planar domains) the test is an
    equivalence; otherwise a positive answer is sufficient only.
    """
    alpha = alpha_from_p(p, n)
    if theta is None:
        theta = default_theta(domain, global_=True)
        kw.setdefault("levels", default_levels(global_=True))
    verdict, cert = classify_alpha(domain, alpha, theta, budget, h, seed, **kw)
    kind = "equivalence" if n == 2 else "sufficient"
    ext = {SUBHYPERBOLIC: True, DIVERGING: False}.get(verdict)
    return ExtensionVerdict(float(p), int(n), alpha, ext, kind, cert)
