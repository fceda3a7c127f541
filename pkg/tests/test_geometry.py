import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy.optimize import minimize_scalar

from subhyp import catalog
from subhyp.errors import InvalidDomain, PointOutsideDomain, ResolutionTooCoarse
from subhyp.geometry import (
    Cube,
    PlanarDomain,
    boundary_distance,
    build_distance_field,
    contains,
    largest_inscribed_ball,
    regularity_constants,
)

SQUARE = catalog.get("square")
DISK = catalog.get("disk")
ANNULUS = catalog.get("annulus")


def test_contains_examples():
    assert contains(SQUARE, (0.5, 0.5))
    assert not contains(SQUARE, (0.0, 0.5))
    assert not contains(ANNULUS, (0.0, 0.0))
    assert contains(ANNULUS, (0.75, 0.0))


@pytest.mark.parametrize("norm", ["euclidean", "uniform"])
def test_boundary_distance_square(norm):
    assert boundary_distance(SQUARE, (0.5, 0.5), norm) == pytest.approx(0.5)
    assert boundary_distance(SQUARE, (0.5, 0.1), norm) == pytest.approx(0.1)


def test_boundary_distance_disk_apothem():
    apothem = np.cos(np.pi / 256)
    d = boundary_distance(DISK, (0.0, 0.0), "euclidean")
    assert d == pytest.approx(apothem, abs=1e-12)
    assert abs(d - 1.0) < 1e-3


def test_boundary_distance_outside_raises():
    with pytest.raises(PointOutsideDomain):
        boundary_distance(SQUARE, (1.5, 0.5))
    with pytest.raises(PointOutsideDomain):
        boundary_distance(ANNULUS, (0.1, 0.1))


def test_uniform_is_at_most_euclidean():
    rng = np.random.default_rng(3)
    pts = rng.uniform(-1, 1, size=(200, 2))
    pts = pts[contains(ANNULUS, pts)]
    du = boundary_distance(ANNULUS, pts, "uniform")
    de = boundary_distance(ANNULUS, pts, "euclidean")
    assert np.all(du <= de + 1e-12)
    assert np.all(de <= np.sqrt(2) * du + 1e-12)


def test_distance_field_coarse_square():
    fld = build_distance_field(SQUARE, 0.25)
    vals = fld.values[fld.inside]
    assert fld.inside.sum() == 9
    assert set(np.round(vals, 12)) == {0.25, 0.5}
    assert fld.values[2, 2] == pytest.approx(0.5)


def test_distance_field_too_coarse():
    with pytest.raises(ResolutionTooCoarse):
        build_distance_field(SQUARE, 0.5)


def _parabola_distance(p, s=2.0):
    # independent oracle: nearest point on y = +-x^s (x in [0,1]) or on x = 1
    def sq(t):
        return (t - p[0]) ** 2 + (t ** s - abs(p[1])) ** 2

    res = minimize_scalar(sq, bounds=(0.0, 1.0), method="bounded", options={"xatol": 1e-12})
    return min(np.sqrt(res.fun), 1.0 - p[0])


def test_distance_field_inward_cusp():
    dom = catalog.get("inward-cusp-2")
    h = 1 / 16
    fld = build_distance_field(dom, h, norm="euclidean")
    X, Y = fld.coordinates()
    i, j = np.unravel_index(np.argmin((X - 0.5) ** 2 + Y ** 2), fld.shape)
    p = (X[i, j], Y[i, j])
    assert fld.inside[i, j]
    assert fld.values[i, j] == pytest.approx(_parabola_distance(p), abs=2e-3)
    assert abs(fld.values[i, j] - 0.25) <= h


def test_distance_field_is_exact():
    fld = build_distance_field(ANNULUS, 1 / 16)
    X, Y = fld.coordinates()
    xy = np.column_stack([X[fld.inside], Y[fld.inside]])
    np.testing.assert_array_equal(fld.values[fld.inside], boundary_distance(ANNULUS, xy))
    assert np.all(fld.values[fld.inside] > 0)
    assert np.all(fld.values[~fld.inside] == 0)


def test_distance_field_lipschitz():
    fld = build_distance_field(catalog.get("exterior-cusp-2"), 1 / 32)
    v, m = fld.values, fld.inside
    for a, b in [(np.s_[1:, :], np.s_[:-1, :]), (np.s_[:, 1:], np.s_[:, :-1])]:
        both = m[a] & m[b]
        assert np.all(np.abs(v[a] - v[b])[both] <= fld.h + 1e-12)


@given(
    st.tuples(st.floats(-0.99, 0.99), st.floats(-0.99, 0.99)),
    st.tuples(st.floats(-0.99, 0.99), st.floats(-0.99, 0.99)),
    st.sampled_from(["uniform", "euclidean"]),
)
def test_boundary_distance_lipschitz(u, v, norm):
    dom = catalog.get("exterior-cusp-2")
    if not (contains(dom, u) and contains(dom, v)):
        return
    du = boundary_distance(dom, u, norm)
    dv = boundary_distance(dom, v, norm)
    diff = np.subtract(u, v)
    step = np.max(np.abs(diff)) if norm == "uniform" else np.hypot(*diff)
    assert du > 0 and dv > 0
    assert abs(du - dv) <= step + 1e-12


def test_inscribed_ball_inside_disk():
    ball = largest_inscribed_ball(DISK, (0.0, 0.0), 0.5, h=0.05)
    assert ball.ratio == pytest.approx(1.0)
    assert ball.center == (0.0, 0.0)


def test_inscribed_ball_corner_of_square():
    ball = largest_inscribed_ball(SQUARE, (0.01, 0.01), 0.5, h=0.01)
    assert ball.ratio > 0.4
    assert ball.center[0] > 0.01 and ball.center[1] > 0.01
    # the best ball in the quarter box [0, 0.51]^2 has radius 0.255
    assert ball.radius == pytest.approx(0.255, abs=0.01)


def test_regularity_square_corner_limited():
    prev = None
    for h in (1 / 16, 1 / 32, 1 / 64):
        est = regularity_constants(SQUARE, h, 0.5)
        assert est.sigma <= 4.0
        if prev is not None:
            assert est.sigma >= prev - 1e-9
        prev = est.sigma
    # corner cube of R cells covers (R+1)^2 of (2R+1)^2 cells
    R = int(0.25 * 64)
    assert prev == pytest.approx((2 * R + 1) ** 2 / (R + 1) ** 2)
    assert 4.0 - prev < 0.25


def test_regularity_disk():
    est = regularity_constants(DISK, 1 / 32, 0.5)
    assert est.sigma <= 4.0 + 0.1


def test_regularity_box_interior_only():
    box = PlanarDomain([[0, 0], [2, 0], [2, 1], [0, 1]], name="box")
    est = regularity_constants(box, 1 / 32, 0.5, interior_only=True)
    assert est.sigma == 1.0


def test_cube_uniform_norm():
    q = Cube((0.0, 0.0), 1.0)
    assert q.contains((0.99, -0.99))
    assert not q.contains((1.01, 0.0))
    assert q.dilate(2).radius == 2.0
    with pytest.raises(Exception):
        Cube((0.0, 0.0), 0.0)


def test_invalid_domains():
    with pytest.raises(InvalidDomain):
        PlanarDomain([[0, 0], [1, 1], [1, 0], [0, 1]])
    with pytest.raises(InvalidDomain):
        PlanarDomain([[0, 0], [1, 0]])
    # hole splitting the square into two pieces
    with pytest.raises(InvalidDomain):
        PlanarDomain([[0, 0], [1, 0], [1, 1], [0, 1]], holes=([[0.4, -0.1], [0.6, -0.1], [0.6, 1.1], [0.4, 1.1]],))


def test_orientation_normalised_and_json_round_trip():
    dom = PlanarDomain([[0, 1], [1, 1], [1, 0], [0, 0]], holes=([[0.4, 0.4], [0.6, 0.4], [0.6, 0.6], [0.4, 0.6]],))
    again = PlanarDomain.from_json(dom.to_json())
    np.testing.assert_array_equal(again.outer, dom.outer)
    assert catalog.checksum(again) == catalog.checksum(dom)
    assert not contains(dom, (0.5, 0.5))
    assert contains(dom, (0.2, 0.5))


@pytest.mark.parametrize("name", catalog.BASE_NAMES)
def test_catalog_domains_valid(name):
    dom = catalog.get("catalog:" + name)
    assert dom.name == name
    assert catalog.checksum(dom) == catalog.checksum(catalog.get(name))
