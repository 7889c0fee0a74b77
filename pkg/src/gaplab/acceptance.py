"""Acceptance suite: one function per criterion, each returning a :class:`CriterionResult`.

Tolerances are keyword arguments so the test-suite can pin them
explicitly. Expensive intermediate results (contour passes for the
trigonometric potential, the random-potential sweep) are memoized for
the lifetime of the process.
"""
from __future__ import annotations

import functools
import math
import time
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.optimize import linear_sum_assignment

from . import asymptotics as asy
from . import harness
from . import operators as ops
from . import spectrum as spec
from .seqspace import (
    FourierSeq, PotentialSpec, RandomDecayProfile, conv_bound_ratio, convolve, h_norm, make_potential,
)

#: Trigonometric test potential with modes +-1, +-2.
TRIG_COEFFS = {1: 0.6 + 0.2j, -1: 0.4 - 0.3j, 2: 0.5 + 0.1j, -2: 0.5 - 0.2j}
#: One-periodic trigonometric potential (even modes only).
TRIG_EVEN_COEFFS = {2: 0.5 + 0.1j, -2: 0.5 - 0.2j, 4: 0.3 + 0.0j, -4: 0.2j}
K_DESK = 136
N_MAX = 32
WINDOW = (8, 32)
SEEDS = (0, 1, 2, 3, 4)


@dataclass
class CriterionResult:
    name: str
    passed: bool
    summary: str
    details: dict = field(default_factory=dict)
    seconds: float = 0.0

    def line(self) -> str:
        return f"{'PASS' if self.passed else 'FAIL'} {self.name}: {self.summary} ({self.seconds:.1f}s)"


def _timed(fn: Callable[..., CriterionResult]) -> Callable[..., CriterionResult]:
    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        t = time.perf_counter()
        res = fn(*args, **kwargs)
        res.seconds = time.perf_counter() - t
        return res
    return wrapper


def trig_potential(K: int = K_DESK) -> FourierSeq:
    return FourierSeq.from_dict(TRIG_COEFFS, K)


def random_potential(m: int, alpha: float, seed: int, K: int = K_DESK,
                     real_symmetric: bool = False) -> FourierSeq:
    return make_potential(PotentialSpec(m, alpha, RandomDecayProfile(seed), real_symmetric), K)


def thresholds_for(m: int, alpha: float, v: FourierSeq, C: float = 4.0) -> ops.ThresholdSet:
    R = h_norm(v, -m * alpha)
    return ops.lemma4_thresholds(m, alpha, R if R > 0 else 1.0, C)


@functools.lru_cache(maxsize=None)
def _trig_contour(n: int, K: int, Q: int) -> spec.ContourData:
    return spec.contour_pass(n, 1, trig_potential(K), K, Q)


@functools.lru_cache(maxsize=None)
def _trig_eig_pairs(K: int) -> spec.PairTable:
    v = trig_potential(K)
    return spec.pair_eigs(spec.eigs_truncated(1, v, K), 1, thresholds_for(1, 0.0, v), N_MAX)


@functools.lru_cache(maxsize=None)
def _trig_n_star(K: int) -> int:
    return spec.empirical_n_star(1, trig_potential(K), K, N_MAX)


def _match_multisets(a: np.ndarray, b: np.ndarray) -> float:
    """Largest distance under the optimal one-to-one matching of two multisets."""
    if a.size != b.size:
        return math.inf
    cost = np.abs(a[:, None] - b[None, :])
    r, c = linear_sum_assignment(cost)
    return float(cost[r, c].max()) if a.size else 0.0


# ---------------------------------------------------------------------------
# criteria


@_timed
def free_operator_exact(rel_tol: float = 1e-10, K: int = 32) -> CriterionResult:
    """``v = 0``: the truncated spectrum is ``{(k pi)^{2m} : |k| <= K}``."""
    worst = {}
    for m in (1, 2, 3):
        e = spec.eigs_truncated(m, FourierSeq.zeros(K), K).values
        exact = np.sort(np.array([float(k ** (2 * m)) * math.pi ** (2 * m) for k in range(-K, K + 1)]))
        got = np.sort(e.real)
        rel = np.abs(got - exact) / np.maximum(1.0, exact)
        worst[m] = float(max(rel.max(), np.abs(e.imag).max() / exact.max()))
    ok = all(w <= rel_tol for w in worst.values())
    return CriterionResult("free_operator_exact", ok, f"max relative error {max(worst.values()):.2e} <= {rel_tol:g}",
                           {"per_m": worst})


@_timed
def first_order_trace_operator(entry_tol: float = 1e-9, trace_tol: float = 1e-10,
                               ns=(8, 16), Q: int = 64) -> CriterionResult:
    """Quadrature ``q0_matrix`` against its closed form: ``v(+-2n)`` at ``(+-n, -+n)``, else zero."""
    K = K_DESK
    v = trig_potential(K)
    worst_e, worst_t = 0.0, 0.0
    for n in ns:
        q0 = spec.q0_matrix(n, 1, v, K, Q).data
        exact = np.zeros_like(q0)
        exact[K + n, K - n] = v[2 * n]
        exact[K - n, K + n] = v[-2 * n]
        worst_e = max(worst_e, float(np.abs(q0 - exact).max()))
        worst_t = max(worst_t, abs(np.trace(q0)))
    ok = worst_e <= entry_tol and worst_t <= trace_tol
    return CriterionResult("first_order_trace_operator", ok,
                           f"entry error {worst_e:.2e} <= {entry_tol:g}, |trace| {worst_t:.2e} <= {trace_tol:g}",
                           {"ns": list(ns), "entry_error": worst_e, "trace": worst_t})


def _trig_cross(Q: int) -> list[tuple[int, complex, complex, complex, complex]]:
    K = K_DESK
    v = trig_potential(K)
    eig = _trig_eig_pairs(K)
    out = []
    for n in range(_trig_n_star(K), N_MAX + 1):
        d = _trig_contour(n, K, Q)
        tau = spec.tau_via_trace(n, 1, v, K, Q, data=d)
        gam = spec.gap_via_reduction(n, 1, v, K, Q, data=d).gamma
        row = eig.row(n)
        out.append((n, tau, row.tau, gam, row.gamma))
    return out


@_timed
def tau_cross_method(abs_tol: float = 1e-7, Q: int = 64) -> CriterionResult:
    """Pair mean from the projector trace against the dense eigenvalue pair."""
    rows = _trig_cross(Q)
    diffs = {n: abs(t1 - t2) for n, t1, t2, _, _ in rows}
    worst = max(diffs.values())
    ok = all(np.isfinite(list(diffs.values()))) and worst <= abs_tol
    return CriterionResult("tau_cross_method", ok,
                           f"n={rows[0][0]}..{rows[-1][0]}, max |dtau| {worst:.2e} <= {abs_tol:g}",
                           {"n_star": rows[0][0], "diffs": diffs})


@_timed
def gap_cross_method(rel_tol: float = 1e-6, Q: int = 64) -> CriterionResult:
    """Gap from the 2x2 reduction against the dense eigenvalue pair (sign-free)."""
    rows = _trig_cross(Q)
    diffs = {n: min(abs(g1 - g2), abs(g1 + g2)) / max(1.0, abs(g2)) for n, _, _, g1, g2 in rows}
    worst = max(diffs.values())
    ok = all(np.isfinite(list(diffs.values()))) and worst <= rel_tol
    return CriterionResult("gap_cross_method", ok,
                           f"n={rows[0][0]}..{rows[-1][0]}, max scaled |dgamma| {worst:.2e} <= {rel_tol:g}",
                           {"n_star": rows[0][0], "diffs": diffs})


@functools.lru_cache(maxsize=None)
def _sweep_table(m: int, alpha: float, seed: int, Q: int) -> spec.PairTable:
    v = random_potential(m, alpha, seed)
    return spec.projector_pairs(m, v, K_DESK, range(WINDOW[0], WINDOW[1] + 1), Q=Q, lowrank=True)


def _sweep_slopes(predictor: str, alphas, Q: int) -> dict:
    out = {}
    for m in (1, 2):
        for a in alphas:
            slopes = []
            for seed in SEEDS:
                table = _sweep_table(m, a, seed, Q)
                try:
                    series = asy.residual_series(table, predictor, m, random_potential(m, a, seed))
                    slopes.append(asy.decay_fit(series).slope)
                except (ValueError, asy.DegenerateSeriesError):
                    slopes.append(math.nan)
            out[(m, a)] = slopes
    return out


def _seed_vote(slopes: dict, bound: Callable[[int, float], float], need: int) -> tuple[bool, dict]:
    detail = {}
    ok = True
    for (m, a), ss in slopes.items():
        b = bound(m, a)
        wins = sum(1 for s in ss if s <= b)
        detail[f"m={m},alpha={a}"] = {"slopes": ss, "bound": b, "passing_seeds": wins}
        ok &= wins >= need
    return ok, detail


@_timed
def pair_mean_decay(slack: float = 0.3, need: int = 4, Q: int = 32) -> CriterionResult:
    """Slope of ``|tau_n - (n pi)^{2m}|`` over the window, for seeded random potentials."""
    slopes = _sweep_slopes("tau", (0.0, 0.25, 0.5), Q)
    ok, det = _seed_vote(slopes, lambda m, a: -m * (1 - 2 * a) + slack, need)
    worst = min(d["passing_seeds"] for d in det.values())
    return CriterionResult("pair_mean_decay", ok, f"min passing seeds per (m, alpha) {worst}/5 (need {need})", det)


@_timed
def gap_first_decay(slack: float = 0.3, need: int = 4, Q: int = 32) -> CriterionResult:
    """Slope of the first-order gap residual for ``alpha < 1/2``."""
    slopes = _sweep_slopes("gap_first", (0.0, 0.25), Q)
    ok, det = _seed_vote(slopes, lambda m, a: -m * (0.5 - a) + slack, need)
    worst = min(d["passing_seeds"] for d in det.values())
    return CriterionResult("gap_first_decay", ok, f"min passing seeds per (m, alpha) {worst}/5 (need {need})", det)


@_timed
def refined_gap_prediction(factor: float = 2.0, l_tol: float = 1e-12, n: int = 2, K: int = 64) -> CriterionResult:
    """``v = delta_{+-2}``: the second-order correction improves the gap prediction at ``n = 2``."""
    v = FourierSeq.from_dict({2: 1.0, -2: 1.0}, K)
    # only k = 0 contributes to l(4): v(2) v(2) / ((2 - 0)(2 + 0)) / pi^2
    l_hand = 1.0 / (4 * math.pi ** 2)
    l_err = abs(asy.compute_l(n, 1, v) - l_hand)
    l_neg_err = abs(asy.compute_l(-n, 1, v) - l_hand)
    table = spec.pair_eigs(spec.eigs_truncated(1, v, K), 1, thresholds_for(1, 0.0, v), n, n_min=n)
    g = table.row(n).gamma
    r_first = min(abs(g - p) for p in (asy.predict_gap_first(n, v), -asy.predict_gap_first(n, v)))
    r_ref = min(abs(g - p) for p in (asy.predict_gap_refined(n, 1, v), -asy.predict_gap_refined(n, 1, v)))
    ok = bool(np.isfinite(g)) and r_ref * factor <= r_first and max(l_err, l_neg_err) <= l_tol
    return CriterionResult("refined_gap_prediction", ok,
                           f"residual first {r_first:.3e} vs refined {r_ref:.3e} (ratio {r_first / r_ref:.1f}), "
                           f"|l(4) - 1/(4 pi^2)| {l_err:.1e}",
                           {"gamma": g, "residual_first": r_first, "residual_refined": r_ref,
                            "l_error": l_err, "l_minus_error": l_neg_err})


@_timed
def reality(rel_tol: float = 1e-8) -> CriterionResult:
    """Real symmetric potentials give a real spectrum."""
    worst = {}
    for m in (1, 2):
        for seed in SEEDS:
            v = random_potential(m, 0.0, seed, real_symmetric=True)
            e = spec.eigs_truncated(m, v, K_DESK).values
            worst[f"m={m},seed={seed}"] = float(np.abs(e.imag).max() / np.abs(e).max())
    w = max(worst.values())
    return CriterionResult("reality", w <= rel_tol, f"max |Im| / max |lambda| {w:.2e} <= {rel_tol:g}", worst)


LOCALIZATION_CASES = ((2, 0.0), (3, 0.0), (3, 0.25))


@_timed
def localization(C: float = 4.0, cases=LOCALIZATION_CASES) -> CriterionResult:
    """Two eigenvalues per disc ``r_n`` for ``n0 <= n <= 32``, ``2 n0 - 1`` in the bounded cone."""
    det = {}
    ok = True
    for m, a in cases:
        v = random_potential(m, a, 0)
        th = thresholds_for(m, a, v, C)
        if th.n0 > N_MAX:
            det[f"m={m},alpha={a}"] = {"n0": th.n0, "note": "n0 beyond n_max; no discs to test"}
            ok = False
            continue
        loc = spec.localization_counts(spec.eigs_truncated(m, v, K_DESK), m, th, N_MAX)
        det[f"m={m},alpha={a}"] = {"n0": th.n0, "R": th.R, "cone_count": loc.cone_count,
                                   "cone_expected": loc.cone_expected,
                                   "bad_discs": {n: c for n, c in loc.disc_counts.items() if c != 2}}
        ok &= loc.ok
    return CriterionResult("localization", ok,
                           "; ".join(f"{k}: n0={d['n0']}" for k, d in det.items()), det)


BOUND_CASES = tuple((m, a) for m in (1, 2, 3) for a in (0.0, 0.25))


@_timed
def cone_exterior_bound(cases=BOUND_CASES, samples: int = 64) -> CriterionResult:
    """``hs_norm(S_lam) <= lemma1_bound`` on sampled points of ``Ext_M0``."""
    det = {}
    viol = 0
    for m, a in cases:
        v = random_potential(m, a, 0)
        th = thresholds_for(m, a, v)
        bound = ops.lemma1_bound(th.M0, a, m, th.R)
        pts = ops.sample_ext(th.M0, samples // 2, samples - samples // 2)
        assert all(ops.region_contains(ops.ExtM(th.M0), p, m) for p in pts)
        ratios = [ops.hs_norm(ops.build_S(p, m, v, K_DESK)) / bound for p in pts]
        nv = sum(r > 1 for r in ratios)
        viol += nv
        det[f"m={m},alpha={a}"] = {"M0": th.M0, "max_ratio": max(ratios), "violations": nv}
    return CriterionResult("cone_exterior_bound", viol == 0,
                           f"{viol} violations over {len(cases) * samples} samples", det)


#: Literal range ``n0..32`` where it is non-empty, plus the hypothesis-valid
#: subsample for ``m = 1`` whose ``n0`` lies far beyond desk scale.
STRIP_CASES = (((2, 0.0), None), ((3, 0.0), None), ((3, 0.25), None), ((1, 0.0), (5, 8, 16, 32)))


@_timed
def strip_bounds(cases=STRIP_CASES, n_circle: int = 48, n_edge: int = 16) -> CriterionResult:
    """On ``Vert(n, r_n)``: ``op_norm <= hs_norm <= lemma2_bound``, entrywise and diagonal bounds."""
    det = {}
    viol = {"op_le_hs": 0, "hs_le_bound": 0, "entry": 0, "diag": 0}
    total = 0
    for (m, a), ns in cases:
        v = random_potential(m, a, 0)
        th = thresholds_for(m, a, v)
        ns = list(range(th.n0, N_MAX + 1)) if ns is None else list(ns)
        worst = {"op_over_hs": 0.0, "hs_over_bound": 0.0, "entry": 0.0, "diag": 0.0}
        for n in ns:
            r = float(th.r_n(n))
            reg = ops.Vert(n, r, m)
            b2, b6 = ops.lemma2_bound(n, r, a, m, v), ops.eq6_bound(n, r, m)
            for z in ops.sample_vert(reg, n_circle, n_edge):
                total += 1
                S = ops.build_S(z, m, v, K_DESK, center_n=n)
                hs = ops.hs_norm(S)
                op = ops.op_norm(S, tol=1e-10)
                e3 = float(np.nanmax(ops.eq3_ratio(z, n, m, K_DESK)))
                e6 = float(np.max(np.abs(ops.lam_minus_d(z, m, K_DESK, n)) ** -0.5)) / b6
                # op_norm is iterative: allow its own relative tolerance
                viol["op_le_hs"] += op > hs * (1 + 1e-9)
                viol["hs_le_bound"] += hs > b2
                viol["entry"] += e3 > 1
                viol["diag"] += e6 > 1
                worst["op_over_hs"] = max(worst["op_over_hs"], op / hs)
                worst["hs_over_bound"] = max(worst["hs_over_bound"], hs / b2)
                worst["entry"] = max(worst["entry"], e3)
                worst["diag"] = max(worst["diag"], e6)
        det[f"m={m},alpha={a}"] = {"n": [ns[0], ns[-1]] if ns else [], "n0": th.n0, **worst}
    nv = sum(viol.values())
    return CriterionResult("strip_bounds", nv == 0, f"{nv} violations over {total} samples",
                           {"cases": det, "violations": viol})


@_timed
def elementary_estimates(K_sum: int = 10_000, alphas=(0.0, 0.25, 0.5)) -> CriterionResult:
    """The three sup/sum estimates for ``n in [m, 100]``; for ``m = 1`` the sum is recorded only."""
    det = {}
    ok = True
    for m in (1, 2, 3):
        for a in alphas:
            fails = {"a": [], "b": [], "c": []}
            for n in range(m, 101):
                for key, h in zip("abc", ops.lemma3_checks(m, a, n, K_sum).holds):
                    if not h:
                        fails[key].append(n)
            asserted = "abc" if m >= 2 else "ab"
            ok &= all(not fails[k] for k in asserted)
            det[f"m={m},alpha={a}"] = {"failures": fails, "asserted": asserted}
    recorded = {k: d["failures"]["c"] for k, d in det.items() if k.startswith("m=1")}
    return CriterionResult("elementary_estimates", ok,
                           f"asserted parts hold; m=1 sum-estimate failures recorded: "
                           f"{sum(len(x) for x in recorded.values())}", det)


@functools.lru_cache(maxsize=None)
def theorem1_report(slack: float = 0.3) -> harness.RunReport:
    """The bundled random-potential run, without the strip-bound sweep."""
    cfg = harness.load_bundled("theorem1-alpha0").replace(
        checks={"bounds": False, "decay": True, "localization": False},
        tolerances={"slope_slack": slack})
    return harness.run_experiment(cfg, write=False)


@_timed
def decay_surrogates(slack: float = 0.3) -> CriterionResult:
    """Slopes of ``sup ||S||`` on ``Vert(n, n^m)``, ``||P_n - P0_n||`` and ``||Q_n - Q0_n||``."""
    rep = theorem1_report(slack)
    ids = ("decay:strip_sup_norm", "decay:projector_distance", "decay:second_order_trace_op")
    found = {c.id: c for c in rep.checks if c.id in ids}
    ok = len(found) == 3 and all(c.passed for c in found.values())
    summary = ", ".join(f"{k.split(':')[1]} slope {c.values.get('slope', math.nan):.2f} <= {c.values.get('bound', math.nan):.2f}"
                        for k, c in found.items())
    return CriterionResult("decay_surrogates", ok, summary or "no decay checks produced",
                           {k: c.values for k, c in found.items()})


@_timed
def parity_split(tol: float = 1e-8, K: int = 32, rel_tol: float = 1e-10) -> CriterionResult:
    """Even/odd block spectra recombine to the full spectrum; free blocks are the even/odd levels."""
    v = FourierSeq.from_dict(TRIG_EVEN_COEFFS, K)
    full = spec.eigs_truncated(1, v, K).values
    ev, od = spec.parity_split(1, v, K)
    dist = _match_multisets(np.concatenate([ev.values, od.values]), full)
    free_err = 0.0
    for m in (1, 2, 3):
        e0, o0 = spec.parity_split(m, FourierSeq.zeros(K), K)
        ks = np.arange(-K, K + 1)
        for vals, sel in ((e0.values, ks % 2 == 0), (o0.values, ks % 2 != 0)):
            exact = np.sort(ks[sel].astype(float) ** (2 * m)) * math.pi ** (2 * m)
            free_err = max(free_err, float(np.max(np.abs(np.sort(vals.real) - exact) / np.maximum(1.0, exact))))
    ok = dist <= tol and free_err <= rel_tol
    return CriterionResult("parity_split", ok,
                           f"multiset distance {dist:.2e} <= {tol:g}; free blocks rel error {free_err:.1e}",
                           {"matched_distance": dist, "free_relative_error": free_err})


@_timed
def gap_coefficient_decay(agree_tol: float = 0.3, steeper_by: float = 0.2, Q: int = 64) -> CriterionResult:
    """``v(2n) = n^{-1.5}``: gaps decay like the coefficients, their difference faster."""
    cfg = harness.load_bundled("even-power")
    v = cfg.build_potential()
    table = spec.projector_pairs(1, v, cfg.K, range(WINDOW[0], WINDOW[1] + 1), Q=Q, lowrank=True)
    flagged = [r.n for r in table if not r.ok]
    if flagged:
        return CriterionResult("gap_coefficient_decay", False, f"projector rows flagged at n={flagged}")
    gabs = asy.ResidualSeries.from_arrays(table.ns(), [abs(r.gamma) for r in table], "abs_gamma")
    rep = asy.corollary1_check(gabs, v, 1, 0.0, agree_tol, steeper_by)
    return CriterionResult("gap_coefficient_decay", rep.verdict,
                           f"slope |gamma| {rep.slope_gamma:.3f}, 2|v(2n)| {rep.slope_v:.3f}, "
                           f"difference {rep.slope_residual:.3f}",
                           {"slope_gamma": rep.slope_gamma, "slope_v": rep.slope_v,
                            "slope_residual": rep.slope_residual})


@_timed
def convolution(tol: float = 1e-14, pairs: int = 100, shifts=(0, 4, 16), max_spread: float = 2.0,
                r: float = 1.0, s: float = 1.0, t: float = 0.0, radius: int = 16) -> CriterionResult:
    """Exact convolution against the double sum, and shift-stability of the bound ratio."""
    rng = np.random.default_rng(2024)
    worst = 0.0
    ratios = {n: 0.0 for n in shifts}
    for _ in range(pairs):
        Ka, Kb = rng.integers(1, radius + 1, size=2)
        a = FourierSeq(int(Ka), rng.normal(size=2 * Ka + 1) + 1j * rng.normal(size=2 * Ka + 1))
        b = FourierSeq(int(Kb), rng.normal(size=2 * Kb + 1) + 1j * rng.normal(size=2 * Kb + 1))
        c = convolve(a, b)
        for k in range(-c.K, c.K + 1):
            direct = sum(a[k - j] * b[j] for j in range(-b.K, b.K + 1))
            worst = max(worst, abs(c[k] - direct) / max(1.0, abs(direct)))
        for n in shifts:
            # both the raw pair and the pair concentrated where the shifted weights sit
            ratios[n] = max(ratios[n], conv_bound_ratio(a, b, r, s, t, n),
                            conv_bound_ratio(a.shifted(-n), b.shifted(n), r, s, t, n))
    spread = max(ratios.values()) / min(ratios.values())
    ok = worst <= tol and spread < max_spread
    return CriterionResult("convolution", ok, f"max error {worst:.1e} <= {tol:g}; ratio spread {spread:.2f} < {max_spread:g}",
                           {"max_error": worst, "max_ratio_by_shift": ratios})


@_timed
def truncation_convergence(tol: float = 1e-8, K_list=(96, 136)) -> CriterionResult:
    """Projector-path ``tau - (n pi)^{2m}`` and ``gamma`` move by at most ``tol`` between truncations."""
    cfg = harness.load_bundled("trig-m1")
    rows = harness.convergence_study(cfg, list(K_list))
    last = rows[-1]
    worst = max(last["tau_shift_delta"], last["gamma_delta"])
    ok = worst <= tol and not last["failures"]
    return CriterionResult("truncation_convergence", ok,
                           f"K {last['K_a']}->{last['K_b']}: max delta {worst:.2e} <= {tol:g}", {"rows": rows})


CRITERIA: dict[str, Callable[..., CriterionResult]] = {
    f.__name__: f for f in (
        free_operator_exact, first_order_trace_operator, tau_cross_method, gap_cross_method,
        pair_mean_decay, gap_first_decay, refined_gap_prediction, reality, localization,
        cone_exterior_bound, strip_bounds, elementary_estimates, decay_surrogates,
        parity_split, gap_coefficient_decay, convolution, truncation_convergence,
    )
}


def run_all(names=None, echo: Callable[[str], None] | None = print) -> list[CriterionResult]:
    results = []
    for name in names or CRITERIA:
        res = CRITERIA[name]()
        if echo:
            echo(res.line())
        results.append(res)
    return results
