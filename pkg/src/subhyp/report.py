"""JSON, CSV and SVG emission shared by the command line."""
from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import is_dataclass
from typing import Iterable, Optional

import numpy as np


def clean(obj):
    """Convert numpy scalars/arrays and non-finite floats into plain JSON values."""
    if isinstance(obj, dict):
        return {str(k): clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return clean(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        if math.isnan(v):
            return "nan"
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return v
    if is_dataclass(obj) and hasattr(obj, "to_json"):
        return clean(obj.to_json())
    return obj


def dumps(obj) -> str:
    """Canonical JSON text: sorted keys, fixed separators, trailing newline."""
    return json.dumps(clean(obj), sort_keys=True, indent=2, ensure_ascii=True, allow_nan=False) + "\n"


def write_text(path: Optional[str], text: str, stream=None):
    if path is None or path == "-":
        (stream or io.StringIO()).write(text)
        return
    with open(path, "w", newline="") as fh:
        fh.write(text)


def csv_text(header: Iterable[str], rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(list(header))
    for r in rows:
        w.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v for v in r])
    return buf.getvalue()


class Svg:
    """Minimal SVG canvas mapping a world box onto a fixed pixel size (y axis up)."""

    def __init__(self, lo, hi, size=600, pad=0.05):
        lo = np.asarray(lo, float)
        hi = np.asarray(hi, float)
        span = float(np.max(hi - lo))
        self.lo = lo - pad * span
        self.span = span * (1 + 2 * pad)
        self.size = size
        self.items = []

    def _xy(self, p):
        s = self.size / self.span
        return (p[0] - self.lo[0]) * s, self.size - (p[1] - self.lo[1]) * s

    def polyline(self, pts, stroke="black", width=1.0, fill="none", closed=False):
        coords = " ".join(f"{x:.3f},{y:.3f}" for x, y in (self._xy(p) for p in pts))
        tag = "polygon" if closed else "polyline"
        self.items.append(f'<{tag} points="{coords}" fill="{fill}" stroke="{stroke}" stroke-width="{width}"/>')

    def rect(self, center, radius, stroke="steelblue", width=0.6, fill="none"):
        c = np.asarray(center, float)
        x0, y1 = self._xy(c - radius)
        x1, y0 = self._xy(c + radius)
        self.items.append(f'<rect x="{x0:.3f}" y="{y0:.3f}" width="{x1 - x0:.3f}" height="{y1 - y0:.3f}" '
                          f'fill="{fill}" stroke="{stroke}" stroke-width="{width}"/>')

    def dot(self, p, r=2.5, fill="crimson"):
        x, y = self._xy(p)
        self.items.append(f'<circle cx="{x:.3f}" cy="{y:.3f}" r="{r}" fill="{fill}"/>')

    def domain(self, dom):
        self.polyline(dom.outer, closed=True, fill="#f4f4f4")
        for hole in dom.holes:
            self.polyline(hole, closed=True, fill="white")

    def text(self) -> str:
        body = "\n".join(self.items)
        return (f'<svg xmlns="http://www.w3.org/2000/svg" width="{self.size}" height="{self.size}" '
                f'viewBox="0 0 {self.size} {self.size}">\n{body}\n</svg>\n')
