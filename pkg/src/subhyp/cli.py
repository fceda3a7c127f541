"""Command line entry point: ``subhyp COMMAND [options]``.

Every command writes one canonical JSON report (stdout or ``--out``).  Exit
codes: 0/1/2 encode positive/negative/inconclusive verdicts for ``certify``
and ``classify`` (0 on success elsewhere), 64 usage errors, 65 unreadable or
invalid domains, 70 numerical failures (the error name is in the report).
"""
from __future__ import annotations

import argparse
import math
import os
import re
import sys
from typing import List, Optional

import numpy as np

from . import catalog, certify, chains, metric, selfimprove, sharpmax
from .errors import BadExponent, FunctionSpecError, InvalidDomain, SubhypError
from .funcspec import parse as parse_function
from .report import Svg, csv_text, dumps, write_text

EXIT_OK, EXIT_NEGATIVE, EXIT_INCONCLUSIVE = 0, 1, 2
EXIT_USAGE, EXIT_DOMAIN, EXIT_NUMERIC = 64, 65, 70

#: property exercised by each command, named by what it checks
STATEMENTS = {
    "geodesic": "weighted-distance-estimate",
    "certify": "subhyperbolic-bound-certificate",
    "classify": "sobolev-extension-classification",
    "scan-alpha": "critical-exponent-bracket",
    "selfimprove": "cantor-selection-exponent-gain",
    "chain": "curve-following-cube-chain",
    "sharpmax": "sharp-maximal-function",
    "extend-check": "sharp-function-extension-criterion",
    "catalog": "domain-catalog",
}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _point(text):
    try:
        vals = [float(v) for v in text.split(",")]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected x,y but got {text!r}")
    if len(vals) != 2 or not all(math.isfinite(v) for v in vals):
        raise argparse.ArgumentTypeError(f"expected x,y but got {text!r}")
    return np.array(vals)


def _floats(text):
    """Comma separated values or an inclusive range START:STOP:STEP."""
    try:
        if ":" in text:
            a, b, s = (float(v) for v in text.split(":"))
            if not s > 0 or b < a:
                raise ValueError
            n = int(math.floor((b - a) / s + 1e-9))
            return [round(a + i * s, 12) for i in range(n + 1)]
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a list or START:STOP:STEP, got {text!r}")


def _radii(text):
    parts = text.split(":")
    if len(parts) != 3 or parts[0] != "dyadic":
        raise argparse.ArgumentTypeError("radii must look like dyadic:JMIN:JMAX")
    try:
        lo, hi = int(parts[1]), int(parts[2])
    except ValueError:
        raise argparse.ArgumentTypeError("radii exponents must be integers")
    if lo < 0 or hi < lo:
        raise argparse.ArgumentTypeError("need 0 <= JMIN <= JMAX")
    return [2 ** j for j in range(lo, hi + 1)]


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="subhyp", description="Subhyperbolic distance toolkit for planar domains.")
    sub = p.add_subparsers(dest="command", parser_class=_Parser)

    def common(sp, domain=True):
        if domain:
            sp.add_argument("--domain", required=True, help="catalog:NAME or a domain JSON file")
        sp.add_argument("--seed", type=int, default=certify.DEFAULT_SEED)
        sp.add_argument("--out", default=None, help="JSON report path (default stdout)")
        sp.add_argument("--workers", type=int, default=None, help="worker processes for pair evaluation")

    g = sub.add_parser("geodesic", help="estimate d_alpha between two points")
    common(g)
    g.add_argument("--alpha", type=float, required=True)
    g.add_argument("--from", dest="x", type=_point, required=True)
    g.add_argument("--to", dest="y", type=_point, required=True)
    g.add_argument("--h", type=float, default=None)
    g.add_argument("--tol", type=float, default=0.02)
    g.add_argument("--norm", choices=("uniform", "euclidean"), default="uniform")
    g.add_argument("--svg", default=None)

    for name in ("certify", "classify"):
        c = sub.add_parser(name, help="subhyperbolicity certificate" if name == "certify"
                           else "Sobolev extension verdict")
        common(c)
        if name == "certify":
            c.add_argument("--alpha", type=float, required=True)
        else:
            c.add_argument("--p", type=float, required=True)
            c.add_argument("--n", type=int, default=2)
        c.add_argument("--theta", type=float, default=None)
        c.add_argument("--budget", type=int, default=32)
        c.add_argument("--h", type=float, default=None)
        c.add_argument("--csv", default=None, help="per-scale table")

    s = sub.add_parser("scan-alpha", help="bracket the critical exponent")
    common(s)
    s.add_argument("--alphas", type=_floats, required=True)
    s.add_argument("--theta", type=float, default=None)
    s.add_argument("--budget", type=int, default=32)
    s.add_argument("--h", type=float, default=None)
    s.add_argument("--csv", default=None)

    si = sub.add_parser("selfimprove", help="Cantor selection along a near-geodesic")
    common(si)
    si.add_argument("--alpha", type=float, required=True)
    si.add_argument("--from", dest="x", type=_point, required=True)
    si.add_argument("--to", dest="y", type=_point, required=True)
    si.add_argument("--eps", type=float, default=None, help="default 0.1 ||x - y||")
    si.add_argument("--C", type=float, default=None, help="default: measured ratio, at least 1")
    si.add_argument("--h", type=float, default=None)
    si.add_argument("--svg", default=None)

    ch = sub.add_parser("chain", help="cube chain along a near-geodesic")
    common(ch)
    ch.add_argument("--alpha", type=float, required=True)
    ch.add_argument("--from", dest="x", type=_point, required=True)
    ch.add_argument("--to", dest="y", type=_point, required=True)
    ch.add_argument("--h", type=float, default=None)
    ch.add_argument("--svg", default=None)

    for name in ("sharpmax", "extend-check"):
        sm = sub.add_parser(name, help="sharp maximal function" if name == "sharpmax"
                            else "grid-scale extension criterion")
        common(sm)
        sm.add_argument("--function", required=True)
        sm.add_argument("--k", type=int, required=True)
        sm.add_argument("--q", type=float, required=True)
        sm.add_argument("--h", type=float, default=1.0 / 32)
        if name == "sharpmax":
            sm.add_argument("--radii", type=_radii, default=None)
            sm.add_argument("--csv", default=None)

    cat = sub.add_parser("catalog", help="list or emit shipped domains")
    cat.add_argument("action", choices=("list", "emit"))
    cat.add_argument("name", nargs="?")
    cat.add_argument("--out", default=None)
    return p


def _check_alpha(a, closed_top=True):
    if not (0 < a <= 1 if closed_top else 0 < a < 1):
        raise BadExponent(f"alpha must lie in (0, 1{']' if closed_top else ')'}, got {a}")


def _run_geodesic(a, dom):
    _check_alpha(a.alpha)
    res = metric.subhyp_distance(dom, a.alpha, a.x, a.y, h=a.h, tol=a.tol, norm=a.norm)
    if a.svg:
        svg = Svg(*dom.bbox)
        svg.domain(dom)
        svg.polyline(res.curve.vertices, stroke="crimson", width=1.5)
        svg.dot(a.x)
        svg.dot(a.y)
        write_text(a.svg, svg.text())
    return EXIT_OK, res.to_json(), {"levels": [list(map(float, lv)) for lv in res.levels], "final_h": res.h}


def _verdict_code(verdict):
    return {certify.SUBHYPERBOLIC: EXIT_OK, certify.DIVERGING: EXIT_NEGATIVE}.get(verdict, EXIT_INCONCLUSIVE)


def _run_certify(a, dom):
    _check_alpha(a.alpha)
    verdict, cert = certify.classify_alpha(dom, a.alpha, theta=a.theta, budget=a.budget, h=a.h, seed=a.seed)
    if a.csv:
        write_text(a.csv, csv_text(["scale", "max_ratio"], cert.scale_table()))
    return _verdict_code(verdict), cert.to_json(), {"h": a.h, "scales": list(cert.scales)}


def _run_classify(a, dom):
    ev = certify.classify_extension(dom, a.p, n=a.n, theta=a.theta, budget=a.budget, h=a.h, seed=a.seed)
    code = EXIT_OK if ev.extension else (EXIT_INCONCLUSIVE if ev.extension is None or ev.kind == "sufficient"
                                         else EXIT_NEGATIVE)
    if a.csv:
        write_text(a.csv, csv_text(["scale", "max_ratio"], ev.certificate.scale_table()))
    return code, ev.to_json(), {"h": a.h, "scales": list(ev.certificate.scales)}


def _run_scan(a, dom):
    for al in a.alphas:
        _check_alpha(al)
    res = certify.scan_alpha(dom, a.alphas, theta=a.theta, budget=a.budget, h=a.h, seed=a.seed)
    if a.csv:
        rows = zip(res.alphas, res.verdicts, res.slopes)
        write_text(a.csv, csv_text(["alpha", "verdict", "slope"], rows))
    return EXIT_OK, res.to_json(), {"h": a.h}


def _run_selfimprove(a, dom):
    _check_alpha(a.alpha, closed_top=False)
    dec = selfimprove.cantor_decompose(dom, a.alpha, C=a.C, x=a.x, y=a.y, eps=a.eps, h=a.h)
    rep = selfimprove.verify_decomposition(dec)
    intervals = [[p.level, p.index] for p in dec.selected_explicit()]
    leaves = [{"level": p.level, "index": p.index, "depth": p.depth, "orientation": p.orient}
              for p in dec.leaves()]
    if a.svg:
        svg = Svg(*dom.bbox)
        svg.domain(dom)
        svg.polyline(dec.curve.vertices, stroke="gray", width=1.0)
        for p in dec.selected_explicit():
            t = np.linspace(p.a, p.b, 8)
            svg.polyline(dec.curve.point_at(t), stroke="crimson", width=2.0)
        write_text(a.svg, svg.text())
    out = {"exponents": dec.exponents.to_json(), "verification": rep,
           "selected_intervals": intervals, "pattern_leaves": leaves}
    return EXIT_OK, out, {"grid_level": dec.J, "trace_samples": len(dec.t_grid), "h": a.h}


def _run_chain(a, dom):
    _check_alpha(a.alpha)
    res = metric.subhyp_distance(dom, a.alpha, a.x, a.y, h=a.h)
    chain = chains.build_chain(dom, res.curve)
    rep = chains.verify_chain(chain, dom, res.curve)
    if a.svg:
        svg = Svg(*dom.bbox)
        svg.domain(dom)
        for q in chain.cubes:
            svg.rect(q.center, 2 * q.radius, stroke="#bbbbbb", width=0.4)
            svg.rect(q.center, q.radius)
        svg.polyline(res.curve.vertices, stroke="crimson", width=1.2)
        write_text(a.svg, svg.text())
    return EXIT_OK, {"chain": chain.to_json(), "verification": rep, "curve_value": res.value}, \
        {"final_h": res.h}


def _run_sharpmax(a, dom):
    f = parse_function(a.function)
    if a.k < 1:
        raise BadExponent("k must be at least 1")
    if not a.q >= 1:
        raise BadExponent("q must be at least 1")
    fld = sharpmax.sample_field(dom, f, a.h)
    radii = a.radii or sharpmax.dyadic_radii(a.h, dom.diam)
    sm = sharpmax.sharp_maximal(fld, dom, a.k, radii)
    hl = sharpmax.hl_maximal(fld.extended(), radii, a.h)
    mask = fld.mask
    out = {
        "function": a.function,
        "k": a.k,
        "q": a.q,
        "sharp_norm": sharpmax.lq_norm(sm.values, mask, a.h, a.q),
        "sharp_max": float(np.max(sm.values[mask])),
        "f_norm": sharpmax.lq_norm(fld.values, mask, a.h, a.q),
        "hl_max": float(np.max(hl.values[mask])),
        "cells": int(mask.sum()),
    }
    if a.csv:
        rows = fld.to_csv_rows([sm.values, sm.argmax_radius, hl.values])
        write_text(a.csv, csv_text(["x", "y", "f", "sharp", "argmax_radius", "hl"], rows))
    return EXIT_OK, out, {"h": a.h, "radii_cells": list(radii)}


def _run_extend(a, dom):
    f = parse_function(a.function)
    if a.k < 1:
        raise BadExponent("k must be at least 1")
    rep = sharpmax.extension_criterion(f, dom, a.k, a.q, a.h)
    code = EXIT_OK if rep.verdict == sharpmax.EXTENDABLE else EXIT_NEGATIVE
    return code, rep.to_json(), {"h": rep.hs}


_RUNNERS = {
    "geodesic": _run_geodesic,
    "certify": _run_certify,
    "classify": _run_classify,
    "scan-alpha": _run_scan,
    "selfimprove": _run_selfimprove,
    "chain": _run_chain,
    "sharpmax": _run_sharpmax,
    "extend-check": _run_extend,
}


def _config(args):
    cfg = {}
    for k, v in sorted(vars(args).items()):
        if k in ("out", "svg", "csv", "workers"):
            continue
        cfg[k] = v.tolist() if isinstance(v, np.ndarray) else v
    return cfg


def _catalog(args, stdout):
    if args.action == "list":
        rows = [{"name": n, "checksum": catalog.checksum(catalog.get(n))} for n in catalog.BASE_NAMES]
        report = {"command": "catalog", "statement": STATEMENTS["catalog"], "domains": rows, "status": "ok"}
        _emit(args.out, report, stdout)
        return EXIT_OK
    if not args.name:
        raise UsageError("catalog emit needs a domain NAME")
    dom = catalog.get(args.name)
    text = dumps(dom.to_json())
    if args.out:
        write_text(args.out, text)
    else:
        stdout.write(text)
    return EXIT_OK


def _emit(path, report, stdout):
    text = dumps(report)
    if path:
        write_text(path, text)
    else:
        stdout.write(text)


_NEGATIVE_VALUE = re.compile(r"-(\d+\.?\d*|\.\d+)([eE][+-]?\d+)?(,.*)?")


def _attach_negative_values(argv):
    """Join ``--opt -0.5,0`` into ``--opt=-0.5,0``; argparse would read the value as a flag."""
    out = []
    for tok in argv:
        if out and out[-1].startswith("--") and "=" not in out[-1] and _NEGATIVE_VALUE.fullmatch(tok):
            out[-1] = f"{out[-1]}={tok}"
        else:
            out.append(tok)
    return out


def main(argv: Optional[List[str]] = None, stdout=None, stderr=None) -> int:
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    parser = build_parser()
    argv = _attach_negative_values(sys.argv[1:] if argv is None else list(argv))
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        stderr.write(f"subhyp: {exc}\n")
        return EXIT_USAGE
    if args.command is None:
        parser.print_usage(stderr)
        return EXIT_USAGE
    try:
        if args.command == "catalog":
            return _catalog(args, stdout)
    except InvalidDomain as exc:
        stderr.write(f"subhyp: {exc}\n")
        return EXIT_DOMAIN
    except UsageError as exc:
        stderr.write(f"subhyp: {exc}\n")
        return EXIT_USAGE
    if args.workers is not None:
        os.environ[certify.WORKERS_ENV] = str(max(1, args.workers))
    report = {"command": args.command, "config": _config(args), "seed": args.seed,
              "statement": STATEMENTS[args.command]}
    try:
        dom = catalog.load(args.domain)
        report["domain"] = {"name": dom.name, "checksum": catalog.checksum(dom)}
    except InvalidDomain as exc:
        report.update(status="error", error=exc.name, message=str(exc))
        _emit(args.out, report, stdout)
        stderr.write(f"subhyp: {exc}\n")
        return EXIT_DOMAIN
    try:
        code, result, resolution = _RUNNERS[args.command](args, dom)
    except (BadExponent, FunctionSpecError) as exc:
        report.update(status="error", error=exc.name, message=str(exc))
        _emit(args.out, report, stdout)
        stderr.write(f"subhyp: {exc}\n")
        return EXIT_USAGE
    except SubhypError as exc:
        report.update(status="error", error=exc.name, message=str(exc))
        extra = getattr(exc, "minimal_constant", None)
        if extra is not None:
            report["minimal_constant"] = extra
        witness = getattr(exc, "witness", None)
        if witness is not None:
            report["witness"] = witness
        _emit(args.out, report, stdout)
        stderr.write(f"subhyp: {exc.name}: {exc}\n")
        return EXIT_NUMERIC
    report.update(status="ok", result=result, resolution=resolution, exit_code=code)
    _emit(args.out, report, stdout)
    return code


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
