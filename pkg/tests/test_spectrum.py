import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.special import mathieu_a, mathieu_b

from gaplab import operators as ops
from gaplab import spectrum as sp
from gaplab.acceptance import thresholds_for, trig_potential
from gaplab.seqspace import FourierSeq, PotentialSpec, RandomDecayProfile, make_potential
from oracles import charpoly_roots

PI = math.pi
MATHIEU_K = 64


@pytest.fixture(scope="module")
def mathieu():
    v = FourierSeq.from_dict({2: 1.0, -2: 1.0}, MATHIEU_K)
    return v, sp.eigs_truncated(1, v, MATHIEU_K)


def test_free_spectrum_small():
    e = sp.eigs_truncated(1, FourierSeq.zeros(3), 3).values
    exact = np.array([0, 1, 1, 4, 4, 9, 9]) * PI ** 2
    np.testing.assert_allclose(e.real, exact, rtol=1e-15, atol=0)
    assert not np.any(e.imag)


def test_order_eigs():
    assert list(sp.order_eigs([1 + 2j, 1 + 0j, 0]).values) == [0, 1 + 0j, 1 + 2j]
    assert list(sp.order_eigs([3.0, -1.0, 2.0]).values) == [-1, 2, 3]
    assert list(sp.order_eigs([2.0, 2.0, 1.0]).values) == [1, 2, 2]


def test_small_instance_against_characteristic_polynomial():
    # 5x5 truncation (K = 2) of D + B for a random complex potential
    v = make_potential(PotentialSpec(1, 0.0, RandomDecayProfile(9)), 4)
    A = sp.truncated_matrix(1, v, 2)
    got = sp.eigs_truncated(1, v, 2).values
    ref = sp.order_eigs(charpoly_roots(A)).values
    np.testing.assert_allclose(got, ref, rtol=1e-9, atol=1e-9)


@given(st.integers(0, 2 ** 20), st.integers(1, 2))
@settings(max_examples=15, deadline=None)
def test_trace_and_reality_properties(seed, m):
    K = 10
    v = make_potential(PotentialSpec(m, 0.0, RandomDecayProfile(seed), real_symmetric=True), K)
    e = sp.eigs_truncated(m, v, K).values
    assert abs(np.sum(e) - np.trace(sp.truncated_matrix(m, v, K))) <= 1e-10 * np.abs(e).max()
    assert np.abs(e.imag).max() <= 1e-8 * np.abs(e).max()


def test_mathieu_eigenvalues(mathieu):
    # -y'' + 2 cos(2 pi x) y on [-1, 1] is Mathieu's equation with q = 1/pi^2, a = lambda/pi^2
    v, e = mathieu
    q = 1 / PI ** 2
    table = sp.pair_eigs(e, 1, thresholds_for(1, 0.0, v), 10)
    assert e.values[0].real == pytest.approx(PI ** 2 * mathieu_a(0, q), rel=1e-10)
    for r in table:
        assert r.lambda_minus.real == pytest.approx(PI ** 2 * mathieu_b(r.n, q), rel=1e-10)
        assert r.lambda_plus.real == pytest.approx(PI ** 2 * mathieu_a(r.n, q), rel=1e-10)


@pytest.mark.parametrize("n", [2, 3, 4])
def test_mathieu_gap_via_projector(n, mathieu):
    v, _ = mathieu
    q = 1 / PI ** 2
    exact = PI ** 2 * (mathieu_a(n, q) - mathieu_b(n, q))
    red = sp.gap_via_reduction(n, 1, v, MATHIEU_K, 64)
    assert abs(red.gamma) == pytest.approx(exact, rel=1e-6)


def test_pair_eigs_free():
    K, m = 12, 2
    th = ops.lemma4_thresholds(m, 0.0, 1.0)
    table = sp.pair_eigs(sp.eigs_truncated(m, FourierSeq.zeros(K), K), m, th, 10)
    for r in table:
        assert r.gamma == 0 and r.tau == pytest.approx((r.n * PI) ** (2 * m), rel=1e-15)


def test_pair_eigs_flags_bad_count():
    th = ops.lemma4_thresholds(1, 0.0, 1.0)
    e = sp.order_eigs([PI ** 2, 4 * PI ** 2, 4 * PI ** 2 + 1, 4 * PI ** 2 - 1])
    table = sp.pair_eigs(e, 1, th, 2)
    assert table.row(1).flag == "count=1" and table.row(2).flag == "count=3"
    assert not table.row(1).ok and math.isnan(table.row(2).tau.real)


def test_pair_table_csv_round_trip():
    v = trig_potential(40)
    th = thresholds_for(1, 0.0, v)
    table = sp.pair_eigs(sp.eigs_truncated(1, v, 40), 1, th, 12)
    back = sp.PairTable.from_csv(table.to_csv(), 1)
    assert back.to_csv() == table.to_csv()
    assert back.row(5).gamma == table.row(5).gamma


def test_free_contour_quantities_exact():
    K, n = 16, 3
    z = FourierSeq.zeros(K)
    rd = sp.riesz_projector(n, 1, z, K)
    np.testing.assert_array_equal(rd.P.data, sp.unperturbed_projector(n, K))
    assert sp.tau_via_trace(n, 2, z, K) == (n * PI) ** 4
    assert sp.q1_norm(n, 1, z, K) == 0
    red = sp.gap_via_reduction(n, 1, z, K)
    assert red.gamma_sq == 0 and not np.any(red.matrix)


def test_free_contour_by_quadrature_matches_residues():
    # the explicit quadrature (no shortcut) on a tiny potential reproduces P0 to rounding
    K, n = 16, 3
    v = FourierSeq.from_dict({5: 1e-300}, K)
    d = sp.contour_pass(n, 1, v, K, 32)
    np.testing.assert_allclose(d.P, sp.unperturbed_projector(n, K), atol=1e-14)


def test_q0_matrix_closed_form_nonzero_corner():
    # potential with modes at +-2n so the closed-form corner entries are nonzero
    K, n = 40, 4
    v = FourierSeq.from_dict({8: 0.3 + 0.1j, -8: 0.2 - 0.4j, 1: 0.5, -3: 0.1j}, K)
    q0 = sp.q0_matrix(n, 1, v, K).data
    exact = np.zeros_like(q0)
    exact[K + n, K - n] = v[2 * n]
    exact[K - n, K + n] = v[-2 * n]
    np.testing.assert_allclose(q0, exact, atol=1e-9)
    assert abs(np.trace(q0)) <= 1e-10


@pytest.mark.parametrize("n", [3, 8, 12])
def test_lowrank_pass_matches_full(n):
    K = 48
    v = make_potential(PotentialSpec(1, 0.25, RandomDecayProfile(4)), K)
    full = sp.contour_pass(n, 1, v, K, 32)
    low = sp.contour_pass_lowrank(n, 1, v, K, 32)
    np.testing.assert_allclose(low.P, full.P, atol=1e-12)
    np.testing.assert_allclose(low.Z, full.Z, atol=1e-9 * max(1, np.abs(full.Z).max()))
    assert low.trace_Q == pytest.approx(full.trace_Q, abs=1e-10)


def test_projector_properties():
    K, n = 48, 6
    v = trig_potential(K)
    d = sp.contour_pass(n, 1, v, K, 64)
    P = d.P
    assert np.trace(P) == pytest.approx(2, abs=1e-10)
    np.testing.assert_allclose(P @ P, P, atol=1e-10)
    A = sp.truncated_matrix(1, v, K)
    np.testing.assert_allclose(A @ P, P @ A, atol=1e-7 * np.abs(A).max())
    assert d.quad_error < 1e-8


def test_tau_trace_matches_eigs():
    K = 64
    v = trig_potential(K)
    table = sp.pair_eigs(sp.eigs_truncated(1, v, K), 1, thresholds_for(1, 0.0, v), 12)
    for n in (2, 5, 12):
        assert abs(sp.tau_via_trace(n, 1, v, K) - table.row(n).tau) <= 1e-7


def test_reduction_raises_below_n_star():
    K = 40
    v = FourierSeq.from_dict({1: 40.0, -1: 35.0, 2: 30.0}, K)
    with pytest.raises(sp.ContourError):
        sp.gap_via_reduction(1, 1, v, K, 32)


def test_bad_quadrature_nodes():
    with pytest.raises(ValueError):
        sp.contour_pass(2, 1, trig_potential(10), 10, Q=15)
    with pytest.raises(ValueError):
        sp.contour_pass(2, 1, trig_potential(10), 10, Q=8)


def test_principal_sqrt_branch():
    assert sp.principal_sqrt(-1) == 1j
    assert sp.principal_sqrt(4) == 2
    r = sp.principal_sqrt(-3 - 4j)
    assert r.real >= 0 and r * r == pytest.approx(-3 - 4j)


def test_parity_split_free_sets():
    K, m = 10, 2
    ev, od = sp.parity_split(m, FourierSeq.zeros(K), K)
    ks = np.arange(-K, K + 1)
    np.testing.assert_allclose(ev.values.real, np.sort(ks[ks % 2 == 0] ** 4) * PI ** 4, rtol=1e-15)
    np.testing.assert_allclose(od.values.real, np.sort(ks[ks % 2 != 0] ** 4) * PI ** 4, rtol=1e-15)


def test_parity_split_rejects_odd_modes():
    with pytest.raises(ValueError):
        sp.parity_split(1, trig_potential(8), 8)


def test_empirical_n_star_trig():
    assert sp.empirical_n_star(1, trig_potential(64), 64, 16) == 2


def test_projector_pairs_flags_errors():
    K = 40
    v = FourierSeq.from_dict({1: 40.0, -1: 35.0, 2: 30.0}, K)
    table = sp.projector_pairs(1, v, K, [1], Q=32)
    assert table.row(1).flag.startswith("error:")
