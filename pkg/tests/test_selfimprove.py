import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from subhyp import catalog
from subhyp.errors import DegenerateTrace, NotStronglySubhyperbolic, PreconditionNotMet
from subhyp.geometry import PlanarDomain
from subhyp.metric import make_curve, subhyp_distance
from subhyp.selfimprove import (
    CantorDecomposition,
    a1_constant,
    cell_averages,
    cantor_decompose,
    cantor_depth,
    compute_exponents,
    decompose_trace,
    oscillation_report,
    porosity_report,
    restricted_maximal,
    reverse_holder_exponent,
    self_improve_tau,
    tau_from_q,
    verify_decomposition,
)

SQUARE = catalog.get("square")


def _from_trace(w, m, k, alpha=0.5, L=1.0):
    w = np.asarray(w, float)
    t = np.linspace(0.0, L, len(w))
    pieces, J = decompose_trace(t, w, m, k)
    rec = compute_exponents(alpha, 1.0)
    return CantorDecomposition(None, L, m, k, J, t, w, pieces, rec, alpha, 1.0, L, True, 0.0)


def _brute_depth(C, m, sep, eps):
    k = 1
    while 2 * math.exp(2 * C) * sep * (1 - 1 / m) ** k > eps:
        k += 1
    return k


def test_exponent_record_half():
    rec = compute_exponents(0.5, 1.0, eps=1.0, sep=1.0)
    assert rec.m == 9
    assert rec.C_g == 4.0
    assert rec.q_sharp == pytest.approx(math.log(9) / math.log(7), rel=1e-14)
    assert rec.q_sharp == pytest.approx(1.1291, abs=1e-4)
    assert rec.q_star == pytest.approx(1.0646, abs=1e-4)
    assert rec.q_cap == 1.5
    assert rec.q_tilde == rec.q_star
    assert rec.alpha_star == pytest.approx(0.4677, abs=1e-4)
    assert rec.p_star == pytest.approx(2.879, abs=1e-3)
    # smallest k: (8/9)^23 = 0.0667 <= 1/(2e^2) = 0.0677 < (8/9)^22
    assert rec.k == _brute_depth(1.0, 9, 1.0, 1.0) == 23
    assert rec.delta == pytest.approx(9.0 ** (-0.5 * 23))


@given(st.floats(0.05, 0.95), st.floats(1.0, 10.0), st.floats(1e-3, 1.0), st.integers(2, 4))
def test_exponent_invariants(alpha, C, eps, n):
    rec = compute_exponents(alpha, C, eps=eps, sep=1.0, n=n)
    assert rec.m >= 3
    assert rec.q_sharp > 1 and rec.q_star > 1
    assert 1 < rec.q_tilde <= rec.q_star
    assert rec.q_tilde <= rec.q_cap
    assert 0 < rec.alpha_star < alpha
    assert n < rec.p_star < rec.p
    if rec.m < 10 ** 3:
        assert rec.k == _brute_depth(C, rec.m, 1.0, eps)


def test_cantor_depth_scale_free():
    assert cantor_depth(1.0, 9, 2.0, 0.2) == cantor_depth(1.0, 9, 1.0, 0.1)


def test_tau_examples():
    tau, q = tau_from_q(0.5, 1.05)
    assert tau == pytest.approx(0.475)
    tau, q = tau_from_q(0.5, 4.0)
    assert q == 1.5 and tau == pytest.approx(0.25)


def test_measure_E_exact_small():
    dec = _from_trace(np.linspace(1.0, 2.0, 82), 9, 2)
    assert dec.measure_E() == pytest.approx(64 / 81, rel=1e-15)
    assert dec.expected_E() == pytest.approx(64 / 81, rel=1e-15)
    assert dec.measure_U() + dec.measure_E() == pytest.approx(1.0, rel=1e-15)
    # 1 + 8 selected intervals
    assert dec.selected_count() == 9


def test_constant_weight_ratio_one_and_tie_break():
    dec = _from_trace(np.full(3 ** 4 + 1, 0.05), 3, 4)
    rep = oscillation_report(dec)
    assert rep["worst"] == 1.0 and rep["holds"]
    # every argmax is tied: the lowest child is always chosen
    assert all(p.index % 3 == 0 for p in dec.selected_explicit())


def test_selection_deterministic():
    rng = np.random.default_rng(7)
    w = rng.uniform(0.1, 1.0, 3 ** 5 + 1)
    a, _ = decompose_trace(np.linspace(0, 1, len(w)), w, 3, 5)
    b, _ = decompose_trace(np.linspace(0, 1, len(w)), w, 3, 5)
    assert a == b


def test_selected_intervals_disjoint():
    rng = np.random.default_rng(8)
    w = rng.uniform(0.1, 1.0, 3 ** 5 + 1)
    dec = _from_trace(w, 3, 5)
    ivs = sorted((p.a, p.b) for p in dec.pieces)
    assert all(b0 <= a1 + 1e-15 for (_, b0), (a1, _) in zip(ivs, ivs[1:]))
    assert ivs[0][0] == 0.0 and ivs[-1][1] == pytest.approx(1.0)


def test_porosity_exhaustive_m3_k2():
    rng = np.random.default_rng(11)
    w = rng.uniform(0.5, 1.0, 10)
    dec = _from_trace(w, 3, 2)
    # U as a 0/1 indicator on the 3^-4 lattice
    res = 3 ** 4
    cells = np.zeros(res, bool)
    for p in dec.selected_explicit():
        cells[int(round(p.a * res)):int(round(p.b * res))] = True
    worst = 0.0
    for c2 in range(2 * res + 1):  # centres on the half lattice
        c = c2 / (2 * res)
        j = min(int(c * res), res - 1)
        if not cells[j] and not (c2 % 2 == 0 and j > 0 and cells[j - 1]):
            continue
        for half2 in range(1, 2 * res + 1):
            half = half2 / (2 * res)
            lo, hi = c - half, c + half
            grid = (np.arange(res) + 0.5) / res
            cover = np.clip(np.minimum(hi, grid + 0.5 / res) - np.maximum(lo, grid - 0.5 / res), 0, None)
            inter = float(cover[cells].sum())
            if inter > 0:
                worst = max(worst, 2 * half / inter)
    assert worst <= 12.0
    rep = porosity_report(dec, centers=500)
    assert rep["violations"] == 0
    assert rep["worst"] <= 12.0


def test_leaves_match_explicit_enumeration():
    m, J, k = 3, 3, 7
    rng = np.random.default_rng(5)
    coarse = rng.uniform(0.2, 1.0, m ** J + 1)
    t_c = np.linspace(0, 1, m ** J + 1)
    t_f = np.linspace(0, 1, m ** k + 1)
    fine = np.interp(t_f, t_c, coarse)
    leafy = _from_trace(coarse, m, k)
    flat = _from_trace(fine, m, k)
    assert leafy.leaves() and not flat.leaves()
    assert leafy.measure_U() == pytest.approx(flat.measure_U(), rel=1e-12)
    assert leafy.selected_count() == flat.selected_count() == len(flat.selected_explicit())
    for e in (-0.5, -0.3):
        assert leafy.integral_U(e) == pytest.approx(flat.integral_U(e), rel=1e-9)
    x = np.linspace(0, 1, 101)
    np.testing.assert_allclose(leafy.cdf_U(x), flat.cdf_U(x), atol=1e-12)
    assert oscillation_report(leafy)["worst"] == pytest.approx(oscillation_report(flat)["worst"], rel=1e-12)


def test_degenerate_trace():
    with pytest.raises(DegenerateTrace):
        decompose_trace(np.linspace(0, 1, 11), np.ones(11), 3, 2)
    w = np.ones(10)
    w[4] = 0.0
    with pytest.raises(DegenerateTrace):
        decompose_trace(np.linspace(0, 1, 10), w, 3, 2)


def test_square_hard_pair_end_to_end():
    dec = cantor_decompose(SQUARE, 0.5, x=(0.2, 0.05), y=(0.7, 0.05))
    rep = verify_decomposition(dec, centers=300)
    assert rep["E_relative_error"] < 1e-12
    assert rep["E_below_eps"]
    assert rep["oscillation"]["holds"]
    assert rep["porosity"]["violations"] == 0
    assert rep["ball_regularity"]["constant"] <= rep["ball_regularity"]["bound"]
    taus = [g["tau"] for g in rep["weighted_on_selected"]]
    assert len(taus) == 9
    assert taus[0] == pytest.approx(dec.exponents.alpha_star) and taus[-1] == 0.5
    consts = [g["constant"] for g in rep["weighted_on_selected"]]
    assert all(np.isfinite(consts))
    # endpoint consistency: the alpha integral over U plus E is the whole length
    whole = dec.integral_total(-0.5)
    on_alpha = rep["weighted_on_selected"][-1]["integral"]
    assert on_alpha + rep["weighted_off_selected"]["integral"] == pytest.approx(whole, rel=1e-9)


def test_cantor_requires_hard_stratum():
    with pytest.raises(PreconditionNotMet):
        cantor_decompose(SQUARE, 0.5, x=(0.5, 0.5), y=(0.55, 0.5))


def test_reverse_holder_constant():
    res = reverse_holder_exponent(lambda t: np.full_like(t, 3.0), m=2, k=8)
    np.testing.assert_allclose(res.constants, 1.0, rtol=1e-12)
    assert res.C_g == pytest.approx(1.0)


def test_reverse_holder_inverse_sqrt():
    qs = [1.0, 1.5, 1.8, 1.95]
    res = reverse_holder_exponent(lambda t: t ** -0.5, m=2, k=10, qs=qs)
    c = res.constants
    assert all(np.isfinite(c))
    assert c[0] <= c[1] <= c[2] <= c[3]
    # closed form: the average of t^-1/2 on [0, 2^-j] is 2^(1 + j/2), largest at j = k
    avg = cell_averages(lambda t: t ** -0.5, 1.0, 2 ** 13)
    Mg = restricted_maximal(avg, 2, 10)
    assert Mg[0] == pytest.approx(2.0 ** 6, rel=0.02)
    mid = 2 ** 12 + 3  # a cell just right of t = 1/2
    assert Mg[mid] == pytest.approx(2.0, rel=1e-3)  # the whole interval wins; quadrature error sits in cell 0


@given(st.integers(1, 6), st.integers(0, 10 ** 6))
def test_restricted_maximal_monotone_in_k(k, seed):
    g = np.random.default_rng(seed).uniform(0.1, 5.0, 2 ** 7)
    assert np.all(restricted_maximal(g, 2, k + 1) >= restricted_maximal(g, 2, k) - 1e-12)
    assert np.all(restricted_maximal(g, 2, 7) >= g - 1e-12)


def test_a1_constant_of_constant():
    assert a1_constant(np.full(64, 2.0), 2, 6) == 1.0


def test_self_improve_tau_corridor():
    corridor = PlanarDomain([[0, 0], [1, 0], [1, 0.1], [0, 0.1]], name="corridor")
    curve = make_curve(corridor, [(0.2, 0.05), (0.8, 0.05)])
    rep = self_improve_tau(corridor, 0.5, [curve], C=10.0)
    # constant weight along the curve: q hits the cap, tau = 0.25
    assert rep.tau == pytest.approx(0.25)
    row = rep.per_curve[0]
    assert row["holds"]


def test_self_improve_tau_witness():
    curve = subhyp_distance(SQUARE, 0.5, (0.2, 0.05), (0.8, 0.05)).curve
    with pytest.raises(NotStronglySubhyperbolic) as exc:
        self_improve_tau(SQUARE, 0.5, [curve], C=0.5)
    assert exc.value.witness["ratio"] > 0.5


def test_depth_huge_m_terminates():
    # k ~ 1e27: a unit step in k is below float resolution
    rec = compute_exponents(0.95, 10.0, eps=1e-3, sep=1.0)
    assert rec.m > 10 ** 25 and rec.k > 10 ** 25
