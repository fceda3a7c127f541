import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from subhyp import catalog
from subhyp.chains import MULTIPLICITY_BOUND, build_chain, multiplicity, verify_chain
from subhyp.errors import ClearanceZero
from subhyp.geometry import Cube, PlanarDomain, boundary_distance
from subhyp.metric import ParamCurve, make_curve, subhyp_distance

SQUARE = catalog.get("square")


def _stab_oracle(cubes):
    # brute-force depth on the lattice of all cube edge coordinates
    bounds = [tuple(np.asarray(b, float) for b in q.bounds()) for q in cubes]
    xs = sorted({v for lo, hi in bounds for v in (lo[0], hi[0])})
    ys = sorted({v for lo, hi in bounds for v in (lo[1], hi[1])})
    X, Y = np.meshgrid(xs, ys)
    depth = np.zeros(X.shape, int)
    for lo, hi in bounds:
        depth += (X >= lo[0]) & (X <= hi[0]) & (Y >= lo[1]) & (Y <= hi[1])
    return int(depth.max())


def test_single_cube_chain():
    disk = catalog.get("disk")
    c = make_curve(disk, [(-0.005, 0.0), (0.005, 0.0)])
    chain = build_chain(disk, c)
    assert chain.length == 0
    d = boundary_distance(disk, (-0.005, 0.0))
    assert chain.cubes[0].radius == pytest.approx(d / 8)
    rep = verify_chain(chain, disk, c)
    assert rep["multiplicity"] == 1
    assert rep["holds"]


def test_square_mid_height_diameter():
    c = make_curve(SQUARE, [(0.02, 0.5), (0.98, 0.5)])
    chain = build_chain(SQUARE, c)
    rep = verify_chain(chain, SQUARE, c)
    assert rep["holds"]
    assert rep["worst_radius_ratio"] <= 5 / 3
    assert rep["multiplicity"] <= 8


def test_corridor_radii_and_multiplicity():
    w = 0.1
    corridor = PlanarDomain([[0, 0], [2, 0], [2, w], [0, w]], name="corridor")
    c = make_curve(corridor, [(0.5, w / 2), (1.5, w / 2)])
    chain = build_chain(corridor, c)
    np.testing.assert_allclose(chain.radii(), w / 16, rtol=1e-9)
    rep = verify_chain(chain, corridor, c)
    assert rep["holds"]
    # greedy centres sit just beyond the previous cube (spacing s in (r, 5r/4]), so a point
    # meets at most ceil(4r/s) = 4 doubled cubes and at most 2 undoubled ones
    s = np.diff(chain.centers()[:, 0])
    r = w / 16
    assert np.all((s > r) & (s <= 1.25 * r + 1e-12))
    assert rep["multiplicity"] == int(np.ceil(4 * r / s.max()))
    assert multiplicity(chain.cubes) <= 2


def test_exterior_cusp_chain_shrinks_toward_tip():
    dom = catalog.get("exterior-cusp-2")
    t = 0.1
    res = subhyp_distance(dom, 0.5, (t, -t * t), (t, t * t))
    chain = build_chain(dom, res.curve)
    rep = verify_chain(chain, dom, res.curve)
    assert rep["holds"]
    tip = np.max(np.abs(chain.centers()), axis=1)
    # radius is at most one eighth of the uniform distance to the tip point
    assert np.all(chain.radii() <= tip / 8 + 1e-12)


@pytest.mark.parametrize("name", ["square", "disk", "annulus", "rooms-and-corridors"])
def test_catalog_chains_hold(name):
    dom = catalog.get(name)
    pairs = {
        "square": ((0.1, 0.1), (0.9, 0.2)),
        "disk": ((-0.8, 0.0), (0.7, 0.3)),
        "annulus": ((0.75, 0.0), (-0.75, 0.0)),
        "rooms-and-corridors": ((0.2, 0.25), (1.8, 0.25)),
    }[name]
    res = subhyp_distance(dom, 0.5, *pairs)
    chain = build_chain(dom, res.curve)
    rep = verify_chain(chain, dom, res.curve)
    assert rep["holds"]
    assert rep["doubled_inside"]
    assert rep["multiplicity"] <= MULTIPLICITY_BOUND
    assert rep["multiplicity"] == _stab_oracle([q.dilate(2) for q in chain.cubes])
    # connection points chain the cubes together
    for a, b, p in zip(chain.cubes[:-1], chain.cubes[1:], chain.points):
        assert a.contains(p) and b.contains(p)


def test_multiplicity_stable_under_resampling():
    res = subhyp_distance(SQUARE, 0.5, (0.1, 0.05), (0.9, 0.05))
    a = verify_chain(build_chain(SQUARE, res.curve), SQUARE)["multiplicity"]
    b = verify_chain(build_chain(SQUARE, res.curve.resampled(SQUARE, n=2048)), SQUARE)["multiplicity"]
    assert abs(a - b) <= 1


@settings(max_examples=15)
@given(st.lists(st.tuples(st.floats(0.05, 0.95), st.floats(0.05, 0.95)), min_size=2, max_size=5))
def test_random_polylines(pts):
    c = make_curve(SQUARE, pts)
    if c.length == 0:
        return
    chain = build_chain(SQUARE, c)
    rep = verify_chain(chain, SQUARE, c)
    assert rep["holds"]


@given(st.lists(st.tuples(st.floats(-1, 1), st.floats(-1, 1), st.floats(0.01, 0.5)), min_size=1, max_size=12))
def test_multiplicity_matches_oracle(spec):
    cubes = [Cube((x, y), r) for x, y, r in spec]
    assert multiplicity(cubes) == _stab_oracle(cubes)


def test_clearance_zero():
    v = np.array([(0.0, 0.5), (0.5, 0.5)])
    c = ParamCurve(v, np.array([0.0, 0.5]), np.array([0.0, 0.5]))
    with pytest.raises(ClearanceZero):
        build_chain(SQUARE, c)
