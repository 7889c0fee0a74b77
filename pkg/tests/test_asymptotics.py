import json
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from gaplab import asymptotics as asy
from gaplab import spectrum as sp
from gaplab.seqspace import FourierSeq

PI = math.pi


def series(f, lo=1, hi=60, name="x"):
    ns = np.arange(lo, hi + 1)
    return asy.ResidualSeries.from_arrays(ns, [f(n) for n in ns], name)


def test_predict_tau():
    assert asy.predict_tau(2, 1) == pytest.approx(4 * PI ** 2)
    assert asy.predict_tau(1, 3) == pytest.approx(PI ** 6)
    assert asy.predict_tau(2, 1, 0.5) == pytest.approx(4 * PI ** 2 + 0.5)


def test_predict_gap_first():
    assert asy.predict_gap_first(3, FourierSeq.from_dict({1: 1.0, -2: 3.0})) == 0
    c = 0.3 - 1.2j
    v = FourierSeq.from_dict({4: c, -4: np.conj(c)})
    g = asy.predict_gap_first(2, v)
    assert g.imag == 0 and g.real == pytest.approx(2 * abs(c))
    assert asy.predict_gap_first(1, FourierSeq.from_dict({2: 1.0, -2: -1.0})) == 2j


def test_w_and_l_hand_enumeration():
    c = 0.7 + 0.2j
    v = FourierSeq.from_dict({2: c, -2: c}, 10)
    for fn in (asy.compute_w, asy.compute_l):
        assert fn(2, 1, v) == pytest.approx(c * c / (4 * PI ** 2), rel=1e-15)
        assert fn(2, 1, FourierSeq.zeros(5)) == 0


def test_w_and_l_match_brute_force():
    rng = np.random.default_rng(5)
    v = FourierSeq(6, rng.normal(size=13) + 1j * rng.normal(size=13))
    for m in (1, 2):
        for n in (2, 3, -3):
            k = [k for k in range(-50, 51) if abs(k) != abs(n)]
            w = sum(v[n - kk] * v[n + kk] / ((n - kk) ** m * (n + kk) ** m) for kk in k) / PI ** (2 * m)
            l_ = sum(v[n - kk] * v[n + kk] / ((n ** m - kk ** m) * (n ** m + kk ** m)) for kk in k) / PI ** (2 * m)
            assert asy.compute_w(n, m, v) == pytest.approx(w, rel=1e-13)
            assert asy.compute_l(n, m, v) == pytest.approx(l_, rel=1e-13)


def test_refined_prediction():
    assert asy.predict_gap_refined(3, 1, FourierSeq.zeros(4)) == 0
    # v(+-4) = 0 but low modes open the second gap at second order
    v = FourierSeq.from_dict({1: 0.5, -1: 0.4, 3: 0.3, -3: 0.2}, 10)
    assert asy.predict_gap_refined(2, 1, v) != 0
    assert asy.predict_gap_first(2, v) == 0


def test_lw_ratio():
    v = FourierSeq.from_dict({2: 1.0, -2: 1.0}, 8)
    assert asy.lw_ratio(1, v, [2]) == pytest.approx(1.0)
    assert asy.lw_ratio(1, FourierSeq.zeros(3), [2, 3]) == 0.0


def test_decay_fit_examples():
    f = asy.decay_fit(series(lambda n: n ** -2.0))
    assert f.slope == pytest.approx(-2, abs=1e-12) and f.r_squared == pytest.approx(1)
    assert asy.decay_fit(series(lambda n: 3.0)).slope == pytest.approx(0, abs=1e-12)
    noisy = asy.decay_fit(series(lambda n: n ** -2.0 * (1 + 0.1 * math.sin(n)), 8, 64))
    assert abs(noisy.slope + 2) <= 0.05


def test_decay_fit_degenerate_and_zero_skipping():
    with pytest.raises(asy.DegenerateSeriesError):
        asy.decay_fit(series(lambda n: 0.0 if n > 3 else 1.0, 1, 10))
    f = asy.decay_fit(series(lambda n: 0.0 if n == 5 else n ** -1.0, 1, 10))
    assert f.zeros_excluded == 1 and f.slope == pytest.approx(-1)


@given(st.floats(-5, 3), st.floats(0.1, 10), st.integers(1, 10), st.integers(5, 40))
@settings(max_examples=40)
def test_decay_fit_recovers_power_laws(p, c, lo, length):
    f = asy.decay_fit(series(lambda n: c * n ** p, lo, lo + length))
    assert f.slope == pytest.approx(p, abs=1e-9)
    assert math.exp(f.intercept) == pytest.approx(c, rel=1e-8)


def test_fit_json_round_trip():
    f = asy.decay_fit(series(lambda n: n ** -1.5))
    assert asy.DecayFit.from_json(f.to_json()) == f
    assert json.loads(f.to_json())["window"] == [1, 60]


def test_residual_series_validation_and_csv():
    with pytest.raises(ValueError):
        asy.ResidualSeries({1: 1.0, 3: 1.0}, 1, 3)
    with pytest.raises(ValueError):
        asy.ResidualSeries({1: -1.0}, 1, 1)
    with pytest.raises(ValueError):
        asy.ResidualSeries({1: math.nan}, 1, 1)
    s = series(lambda n: 1 / n, 3, 9)
    assert asy.ResidualSeries.from_csv(s.to_csv()).entries == s.entries
    assert list(s.window(4, 6).ns) == [4, 5, 6]


@pytest.mark.parametrize("s, verdict", [(0.4, "consistent"), (0.6, "inconsistent")])
def test_membership_harmonic(s, verdict):
    # exact analytic answer: sum n^{2s-2} converges iff s < 1/2
    res = asy.h_membership(series(lambda n: 1 / n, 1, 200), s, slack=0.0)
    assert res.verdict == verdict
    assert res.slope == pytest.approx(-1)


def test_membership_zero_series():
    for s in (-3.0, 0.0, 5.0):
        assert asy.h_membership(series(lambda n: 0.0), s).verdict == "consistent"


def _table(rows, m=1):
    return sp.PairTable(m, tuple(rows))


def test_residual_series_free_is_zero():
    rows = [sp.PairRow(n, sp.center(n, 1), sp.center(n, 1), sp.center(n, 1), 0j, "eig", "", 0j)
            for n in range(1, 8)]
    for pred in ("tau", "gap_first", "gap_refined"):
        r = asy.residual_series(_table(rows), pred, 1, FourierSeq.zeros(10))
        assert not np.any(r.values)


def test_residual_series_rejects_flagged_rows():
    nan = complex("nan")
    rows = [sp.PairRow(1, nan, nan, nan, nan, "eig", "count=3")]
    with pytest.raises(ValueError, match="flagged"):
        asy.residual_series(_table(rows), "tau", 1, FourierSeq.zeros(2))
    with pytest.raises(ValueError):
        asy.residual_series(_table([sp.PairRow(1, 0j, 0j, 0j, 0j, "eig")]), "nope", 1, FourierSeq.zeros(2))


def test_gap_residual_is_sign_free():
    v = FourierSeq.from_dict({2: 1.0, -2: 1.0}, 4)
    rows = [sp.PairRow(1, 0j, 0j, 0j, -2.0 + 0j, "eig", "", 0j)]
    r = asy.residual_series(_table(rows), "gap_first", 1, v)
    assert r.values[0] == 0


def test_corollary_check_zero_and_preconditions():
    gabs = series(lambda n: 0.0, 8, 32)
    rep = asy.corollary1_check(gabs, FourierSeq.zeros(80), 1, 0.0)
    assert rep.vacuous and rep.verdict
    with pytest.raises(ValueError):
        asy.corollary1_check(gabs, FourierSeq.from_dict({1: 1.0, -1: 1.0}), 1, 0.0)


def test_corollary_check_synthetic():
    K = 80
    v = FourierSeq.from_dict({2 * j: abs(j) ** -1.5 for j in range(-40, 41) if j}, K)
    # gaps equal to 2|v(2n)| plus a faster-decaying correction
    gabs = series(lambda n: 2 * n ** -1.5 + n ** -3.0, 8, 32)
    rep = asy.corollary1_check(gabs, v, 1, 0.0)
    assert rep.verdict and rep.slope_v == pytest.approx(-1.5)
