"""Shipped domains, generated at fixed resolutions.

=====================  =======================================================
name                   construction
=====================  =======================================================
square                 [0,1]^2, 4 vertices
disk                   regular 256-gon of circumradius 1 at the origin
annulus                256-gon radius 1 minus 128-gon radius 0.5
inward-cusp-S          {0<x<1, |y|<x^S}, 2x200 curve vertices plus the right edge
exterior-cusp-S        (-1,1)^2 minus the spike {0<=x<=1, |y|<=x^S/2} entering
                       from the right edge, 2x240 spike vertices graded toward
                       the tip at the origin
rooms-and-corridors    base room [0,2]x[0,0.5] with 4 rooms of side 2^-j/2 on
                       corridors of width side^2, j = 0..3
=====================  =======================================================

Exponents S are baked into the name (``exterior-cusp-2``, ``inward-cusp-1.5``).
"""
from __future__ import annotations

import hashlib
import json
import re

import numpy as np

from .errors import InvalidDomain
from .geometry import PlanarDomain

BASE_NAMES = ("square", "disk", "annulus", "inward-cusp-2", "exterior-cusp-2", "rooms-and-corridors")


def _regular_polygon(n, radius, center=(0.0, 0.0)):
    t = 2 * np.pi * np.arange(n) / n
    return np.column_stack([center[0] + radius * np.cos(t), center[1] + radius * np.sin(t)])


def _graded(n, lo=1e-4):
    # dense near 0, uniform-ish near 1
    g = np.geomspace(lo, 1.0, n // 2)
    u = np.linspace(0.0, 1.0, n - n // 2 + 1)[1:]
    return np.unique(np.concatenate([g, u]))


def square():
    return PlanarDomain([[0, 0], [1, 0], [1, 1], [0, 1]], name="square")


def disk():
    return PlanarDomain(_regular_polygon(256, 1.0), name="disk")


def annulus():
    return PlanarDomain(
        _regular_polygon(256, 1.0), (_regular_polygon(128, 0.5)[::-1],), name="annulus"
    )


def inward_cusp(s=2.0):
    xs = np.linspace(0.0, 1.0, 201)[1:]
    lower = np.column_stack([xs, -(xs ** s)])
    upper = np.column_stack([xs[::-1], xs[::-1] ** s])
    outer = np.vstack([[[0.0, 0.0]], lower, upper])
    return PlanarDomain(outer, name=f"inward-cusp-{_fmt(s)}")


def exterior_cusp(s=2.0, width=0.5):
    xs = _graded(240)
    spike_lower = np.column_stack([xs[::-1], -width * xs[::-1] ** s])
    spike_upper = np.column_stack([xs, width * xs ** s])
    outer = np.vstack(
        [
            [[-1.0, -1.0], [1.0, -1.0]],
            spike_lower,
            [[0.0, 0.0]],
            spike_upper,
            [[1.0, 1.0], [-1.0, 1.0]],
        ]
    )
    return PlanarDomain(outer, name=f"exterior-cusp-{_fmt(s)}")


def rooms_and_corridors(nrooms=4):
    pts = [[0.0, 0.0], [2.0, 0.0], [2.0, 0.5]]
    # walk the top edge right to left, placing a corridor and room per slot
    slots = np.linspace(2.0, 0.0, nrooms + 2)[1:-1]
    for j, xc in enumerate(slots):
        side = 0.5 * 2.0 ** (-j)
        w = side ** 2
        top = 0.5 + side
        pts += [
            [xc + w / 2, 0.5],
            [xc + w / 2, top],
            [xc + side / 2, top],
            [xc + side / 2, top + side],
            [xc - side / 2, top + side],
            [xc - side / 2, top],
            [xc - w / 2, top],
            [xc - w / 2, 0.5],
        ]
    pts.append([0.0, 0.5])
    return PlanarDomain(np.array(pts), name="rooms-and-corridors")


def _fmt(s):
    return f"{float(s):g}"


def get(name: str) -> PlanarDomain:
    if name.startswith("catalog:"):
        name = name[len("catalog:"):]
    fixed = {
        "square": square,
        "disk": disk,
        "disk-256": disk,
        "annulus": annulus,
        "rooms-and-corridors": rooms_and_corridors,
    }
    if name in fixed:
        return fixed[name]()
    m = re.fullmatch(r"(inward|exterior)-cusp(?:-([0-9.]+))?", name)
    if m:
        s = float(m.group(2) or 2.0)
        if s < 1:
            raise InvalidDomain("cusp exponent must be >= 1")
        return inward_cusp(s) if m.group(1) == "inward" else exterior_cusp(s)
    raise InvalidDomain(f"unknown catalog domain {name!r}")


def checksum(domain: PlanarDomain) -> str:
    blob = json.dumps(domain.to_json(), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()[:16]


def load(spec: str) -> PlanarDomain:
    """Resolve ``catalog:NAME`` or a path to a domain JSON file."""
    if spec.startswith("catalog:"):
        return get(spec)
    try:
        with open(spec) as fh:
            obj = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise InvalidDomain(f"cannot read domain file {spec}: {exc}") from exc
    return PlanarDomain.from_json(obj)
