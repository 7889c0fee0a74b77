import json
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from gaplab.seqspace import (
    ExplicitProfile, FourierSeq, PotentialSpec, RandomDecayProfile, WeightParams, bracket_weight,
    conv_bound_ratio, convolve, h_norm, make_potential,
)
from oracles import convolve_loop, h_norm_loop

cplx = st.complex_numbers(max_magnitude=10, allow_nan=False, allow_infinity=False)


@st.composite
def seqs(draw, max_K=8):
    K = draw(st.integers(0, max_K))
    c = draw(st.lists(cplx, min_size=2 * K + 1, max_size=2 * K + 1))
    return FourierSeq(K, np.array(c, dtype=complex))


def as_dict(a: FourierSeq) -> dict:
    return {int(k): complex(c) for k, c in zip(a.indices, a.coeffs)}


@pytest.mark.parametrize("k, w", [(0, 1), (2, 3), (-5, 6)])
def test_bracket_weight(k, w):
    assert bracket_weight(k) == w


@pytest.mark.parametrize("k, s, shift, expected", [(0, 2.7, 0, 1.0), (2, 1, 0, 3.0), (2, 1, -2, 1.0)])
def test_h_norm_deltas(k, s, shift, expected):
    assert h_norm(FourierSeq.delta(k), WeightParams(s, shift)) == pytest.approx(expected, rel=1e-15)


@given(seqs(), st.floats(-2, 2), st.integers(-5, 5))
def test_h_norm_matches_loop(a, s, shift):
    assert h_norm(a, s, shift) == pytest.approx(h_norm_loop(as_dict(a), s, shift), rel=1e-12, abs=1e-300)


def test_indexing_outside_support_is_zero():
    a = FourierSeq.from_dict({1: 2.0, -1: 3j})
    assert a[5] == 0 and a[-1] == 3j and a(1) == 2.0
    np.testing.assert_array_equal(a[np.array([-3, -1, 0, 1, 3])], [0, 3j, 0, 2, 0])
    with pytest.raises(TypeError):
        a[0.5]


def test_rejects_bad_shapes():
    with pytest.raises(ValueError):
        FourierSeq(2, np.zeros(4))
    with pytest.raises(ValueError):
        FourierSeq(-1, np.zeros(0))
    with pytest.raises(ValueError):
        FourierSeq(0, np.array([np.nan]))


def test_convolve_examples():
    b = FourierSeq.from_dict({-1: 1.0, 3: 2 - 1j})
    assert convolve(FourierSeq.delta(0), b) == b
    c = convolve(FourierSeq.delta(1), FourierSeq.delta(1))
    assert c[2] == 1 and np.count_nonzero(c.coeffs) == 1


def test_convolve_random_radius8_against_double_loop():
    rng = np.random.default_rng(7)
    for _ in range(20):
        a = FourierSeq(8, rng.normal(size=17) + 1j * rng.normal(size=17))
        b = FourierSeq(8, rng.normal(size=17) + 1j * rng.normal(size=17))
        ref = convolve_loop(as_dict(a), as_dict(b))
        c = convolve(a, b)
        for k, x in ref.items():
            assert abs(c[k] - x) <= 1e-14 * max(1.0, abs(x))


@given(seqs(), seqs())
def test_convolve_commutes(a, b):
    np.testing.assert_allclose(convolve(a, b).coeffs, convolve(b, a).coeffs, rtol=1e-12, atol=1e-9)


@given(seqs(), st.integers(-6, 6))
def test_shift_and_conj_reflect(a, n):
    b = a.shifted(n)
    for i in range(-a.K - 7, a.K + 8):
        assert b[i] == a[i - n]
    r = a.conj_reflect()
    assert all(r[k] == np.conj(a[-k]) for k in range(-a.K, a.K + 1))


@given(seqs(), st.floats(-1, 2))
def test_shifted_weight_is_translation(a, s):
    # ||a||_{h^{s,n}} equals the plain norm of a shifted by +n
    for n in (-3, 0, 4):
        assert h_norm(a, s, n) == pytest.approx(h_norm(a.shifted(n), s), rel=1e-12, abs=1e-300)


def test_conv_bound_ratio_examples():
    d0 = FourierSeq.delta(0)
    assert conv_bound_ratio(d0, d0, 1, 1, 0, 0) == pytest.approx(1.0)
    for n in (0, 1, 4, 16):
        assert conv_bound_ratio(FourierSeq.delta(-n), FourierSeq.delta(n), 1, 1, 0, n) == pytest.approx(1.0, rel=1e-15)


def test_conv_bound_ratio_preconditions():
    d = FourierSeq.delta(0)
    for r, s, t in [(-1, 1, 0), (1, 1, 2), (0.2, 0.2, 0.2)]:
        with pytest.raises(ValueError):
            conv_bound_ratio(d, d, r, s, t, 0)
    with pytest.raises(ValueError):
        conv_bound_ratio(FourierSeq.zeros(2), d, 1, 1, 0, 0)


def test_serialization_round_trip():
    a = FourierSeq.from_dict({2: 0.1 + 0.2j, -3: -1e-300})
    assert FourierSeq.from_json(a.to_json()) == a
    assert json.loads(a.to_json())["K"] == 3


@given(seqs())
def test_serialization_property(a):
    assert FourierSeq.from_json(a.to_json()) == a


def test_explicit_potential_passthrough():
    c = 0.3 - 0.7j
    v = make_potential(PotentialSpec(1, 0.0, ExplicitProfile({2: c, -2: np.conj(c), 0: 5.0}), True), 6)
    assert v[2] == c and v[-2] == np.conj(c) and v[0] == 0


def test_explicit_potential_flag_violations():
    with pytest.raises(ValueError):
        make_potential(PotentialSpec(1, 0.0, ExplicitProfile({2: 1j, -2: 1j}), real_symmetric=True), 4)
    with pytest.raises(ValueError):
        make_potential(PotentialSpec(1, 0.0, ExplicitProfile({1: 1.0}), one_periodic=True), 4)


@given(st.integers(0, 2 ** 31), st.integers(1, 3), st.sampled_from([0.0, 0.25, 0.5]),
       st.booleans(), st.booleans(), st.integers(2, 60))
@settings(max_examples=40)
def test_random_potential_invariants(seed, m, alpha, rs, op, K):
    v = make_potential(PotentialSpec(m, alpha, RandomDecayProfile(seed), rs, op), K)
    assert v[0] == 0
    if rs:
        assert v.is_real_symmetric()
    if op:
        assert v.is_one_periodic()
    assert math.isfinite(h_norm(v, -m * alpha))


def test_random_potential_prefix_stable():
    spec = PotentialSpec(2, 0.25, RandomDecayProfile(11))
    small, big = make_potential(spec, 20), make_potential(spec, 80)
    assert big.truncated(20) == small


@pytest.mark.parametrize("m, alpha", [(1, 0.0), (2, 0.25), (3, 0.5)])
def test_norm_under_K_doubling_matches_tail_estimate(m, alpha):
    # |v(k)|^2 <k>^{-2 m alpha} = <k>^{-1 - 2 delta}: the added mass between K and 2K
    # is 2 * sum_{K<|k|<=2K} <k>^{-1-2 delta}, computed here in closed form by mpmath
    import mpmath
    spec = PotentialSpec(m, alpha, RandomDecayProfile(3))
    K = 136
    s = -m * alpha
    n1, n2 = h_norm(make_potential(spec, K), s), h_norm(make_potential(spec, 2 * K), s)
    p = 1 + 2 * 0.05
    tail = 2 * float(mpmath.zeta(p, K + 2) - mpmath.zeta(p, 2 * K + 2))
    assert n2 ** 2 - n1 ** 2 == pytest.approx(tail, rel=1e-10)
    assert n2 > n1


def test_potential_spec_validation():
    with pytest.raises(ValueError):
        PotentialSpec(0, 0.0)
    with pytest.raises(ValueError):
        PotentialSpec(1, 1.0)
    with pytest.raises(ValueError):
        make_potential(PotentialSpec(1, 0.0), 0)
