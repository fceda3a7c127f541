from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, strategies as st

from subhyp import catalog
from subhyp.certify import (
    DIVERGING,
    SUBHYPERBOLIC,
    alpha_from_p,
    classify_alpha,
    classify_extension,
    estimate_constant,
    p_from_alpha,
    scan_alpha,
    verdict_from_fit,
)
from subhyp.errors import BadExponent
from subhyp.geometry import PlanarDomain

SQUARE = catalog.get("square")


@given(st.fractions(min_value=Fraction(201, 100), max_value=100), st.integers(2, 5))
def test_exponent_round_trip_exact(p, n):
    if p <= n:
        return
    a = (p - n) / (p - 1)
    assert 0 < a < 1
    assert (n - a) / (1 - a) == p


@given(st.floats(2.01, 1e3), st.integers(2, 4))
def test_exponent_round_trip_float(p, n):
    if p <= n:
        return
    assert p_from_alpha(alpha_from_p(p, n), n) == pytest.approx(p, rel=1e-9)


def test_bad_exponent():
    with pytest.raises(BadExponent):
        alpha_from_p(2, 2)
    with pytest.raises(BadExponent):
        classify_extension(SQUARE, 2.0, n=2)
    assert alpha_from_p(3, 2) == 0.5
    assert alpha_from_p(4, 2) == pytest.approx(2 / 3)


def test_verdict_rule():
    assert verdict_from_fit(-0.05, 0.1) == SUBHYPERBOLIC
    assert verdict_from_fit(-0.3, 0.99) == DIVERGING
    assert verdict_from_fit(-0.3, 0.2) == "inconclusive"


def test_square_alpha_one_is_one():
    cert = estimate_constant(SQUARE, 1.0, theta=0.5)
    assert cert.C_est == pytest.approx(1.0, rel=0.02)
    assert cert.verdict == SUBHYPERBOLIC


def test_square_half_stable():
    base = estimate_constant(SQUARE, 0.5, theta=0.5, budget=32)
    more = estimate_constant(SQUARE, 0.5, theta=0.5, budget=64)
    assert np.isfinite(base.C_est)
    assert more.C_est == pytest.approx(base.C_est, rel=0.10)
    h1 = estimate_constant(SQUARE, 0.5, theta=0.5, budget=32, h=1 / 128)
    h2 = estimate_constant(SQUARE, 0.5, theta=0.5, budget=32, h=1 / 256)
    assert h2.C_est == pytest.approx(h1.C_est, rel=0.10)
    for cert in (base, more):
        assert all(cert.C_est >= p.ratio - 1e-12 for p in cert.worst_pairs)
        assert all(p.scale <= cert.theta for p in cert.worst_pairs)


def test_certificate_deterministic():
    a = estimate_constant(SQUARE, 0.5, budget=16)
    b = estimate_constant(SQUARE, 0.5, budget=16)
    assert a.to_json() == b.to_json()


def test_disk_subhyperbolic():
    verdict, cert = classify_alpha(catalog.get("disk"), 0.9)
    assert verdict == SUBHYPERBOLIC
    assert cert.divergence_slope >= -0.1


def test_inward_cusp_subhyperbolic():
    verdict, _ = classify_alpha(catalog.get("inward-cusp-2"), 0.5)
    assert verdict == SUBHYPERBOLIC


def test_scaling_invariance():
    lam = 3.0
    big = PlanarDomain(lam * SQUARE.outer, name="big")
    a = estimate_constant(SQUARE, 0.5, theta=0.25, budget=8, climb_rounds=0)
    b = estimate_constant(big, 0.5, theta=0.75, budget=8, climb_rounds=0)
    # identical recipes at scaled positions: ratio is scale invariant up to metric tol
    ra = sorted(p.ratio for p in a.worst_pairs)
    rb = sorted(p.ratio for p in b.worst_pairs)
    np.testing.assert_allclose(rb, ra, rtol=0.03)


def test_scan_square_all_subhyperbolic():
    res = scan_alpha(SQUARE, [0.5, 1.0], budget=16)
    assert res.verdicts == [SUBHYPERBOLIC, SUBHYPERBOLIC]
    assert res.bracket == (0.0, 0.5)
    assert res.inversions == []


def test_scan_rejects_unsorted():
    with pytest.raises(ValueError):
        scan_alpha(SQUARE, [0.5, 0.3])


def test_extension_disk():
    v = classify_extension(catalog.get("disk"), 3.0, n=2)
    assert v.alpha == 0.5
    assert v.extension is True
    assert v.label == "extension domain"
    v3 = classify_extension(catalog.get("disk"), 4.0, n=3, budget=8)
    assert v3.kind == "sufficient"
    assert v3.alpha == pytest.approx(1 / 3)


@pytest.mark.slow
def test_exterior_cusp_diverging_alpha_two_thirds():
    v = classify_extension(catalog.get("exterior-cusp-2"), 4.0, n=2)
    assert v.alpha == pytest.approx(2 / 3)
    assert v.extension is False
    assert v.label == "not an extension domain"
