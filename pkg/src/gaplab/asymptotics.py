"""Closed-form predictors for pair means and gaps, residual series and decay fits.

A sequence ``x_n`` lies in ``h^s`` when ``sum <n>^{2s} |x_n|^2`` is finite.
Only finitely many terms are ever available, so membership is judged by
a log-log slope: ``x_n ~ n^p`` is square-summable against ``<n>^{2s}``
exactly when ``p < -s - 1/2``.
"""
from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .seqspace import FourierSeq, bracket_weight
from .spectrum import PairTable, center, principal_sqrt

#: Default slack added to slope thresholds.
SLOPE_SLACK = 0.3


def predict_tau(n: int, m: int, v0: complex = 0.0) -> complex:
    """Leading-order pair mean ``(n pi)^{2m} + v0``."""
    if n < 1:
        raise ValueError("n must be >= 1")
    return center(n, m) + v0


def predict_gap_first(n: int, v: FourierSeq) -> complex:
    """``2 sqrt(v(-2n) v(2n))`` on the principal branch.

    The sign of a gap is convention-dependent; compare via
    ``min(|g - p|, |g + p|)``.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    return 2 * principal_sqrt(v[-2 * n] * v[2 * n])


def _support_range(n: int, v: FourierSeq, K_sum: int | None) -> np.ndarray:
    # v(n - k) and v(n + k) both vanish unless |k| <= K_v + |n|
    reach = v.K + abs(n)
    lim = reach if K_sum is None else min(K_sum, reach)
    k = np.arange(-lim, lim + 1)
    return k[np.abs(k) != abs(n)]


def compute_w(n: int, m: int, v: FourierSeq, K_sum: int | None = None) -> complex:
    """``w(2n) = pi^{-2m} sum_{k != +-n} v(n-k)/(n-k)^m * v(n+k)/(n+k)^m``."""
    k = _support_range(n, v, K_sum)
    num = v[n - k] * v[n + k]
    den = np.array([float((n - kk) ** m * (n + kk) ** m) for kk in k])
    return complex(np.sum(num / den) / math.pi ** (2 * m)) if k.size else 0j


def compute_l(n: int, m: int, v: FourierSeq, K_sum: int | None = None) -> complex:
    """``l(2n) = pi^{-2m} sum_{k != +-n} v(n-k)/(n^m-k^m) * v(n+k)/(n^m+k^m)``.

    Negative ``n`` evaluates the same expression, giving ``l(-2n)``.
    """
    k = _support_range(n, v, K_sum)
    num = v[n - k] * v[n + k]
    den = np.array([float((n ** m - kk ** m) * (n ** m + kk ** m)) for kk in k])
    return complex(np.sum(num / den) / math.pi ** (2 * m)) if k.size else 0j


def predict_gap_refined(n: int, m: int, v: FourierSeq, K_sum: int | None = None) -> complex:
    """``2 sqrt((v + l)(-2n) (v + l)(2n))``, principal branch."""
    if n < 1:
        raise ValueError("n must be >= 1")
    plus = v[2 * n] + compute_l(n, m, v, K_sum)
    minus = v[-2 * n] + compute_l(-n, m, v, K_sum)
    return 2 * principal_sqrt(plus * minus)


def lw_ratio(m: int, v: FourierSeq, ns: Sequence[int], t: float = 0.0) -> float:
    """``||l||_{h^t} / ||w||_{h^t}`` restricted to the indices ``2n``, ``n in ns``."""
    ns = np.asarray(list(ns))
    wt = bracket_weight(2 * ns).astype(float) ** (2 * t)
    lv = np.array([abs(compute_l(int(n), m, v)) for n in ns])
    wv = np.array([abs(compute_w(int(n), m, v)) for n in ns])
    num = math.sqrt(np.sum(wt * lv ** 2))
    den = math.sqrt(np.sum(wt * wv ** 2))
    if den == 0:
        return 0.0 if num == 0 else math.inf
    return num / den


# ---------------------------------------------------------------------------
# residual series


@dataclass(frozen=True)
class ResidualSeries:
    """Nonnegative values ``x_n`` on ``n_lo..n_hi``."""

    entries: Mapping[int, float]
    n_lo: int
    n_hi: int
    name: str = ""

    def __post_init__(self):
        e = {int(k): float(x) for k, x in self.entries.items()}
        if set(e) != set(range(self.n_lo, self.n_hi + 1)):
            raise ValueError("entries must cover exactly n_lo..n_hi")
        bad = [k for k, x in e.items() if not (math.isfinite(x) and x >= 0)]
        if bad:
            raise ValueError(f"residuals must be finite and >= 0 (bad at n={bad[0]})")
        object.__setattr__(self, "entries", dict(sorted(e.items())))

    @classmethod
    def from_arrays(cls, ns: Sequence[int], values: Sequence[float], name: str = "") -> "ResidualSeries":
        ns = [int(n) for n in ns]
        return cls(dict(zip(ns, values)), min(ns), max(ns), name)

    @property
    def ns(self) -> np.ndarray:
        return np.array(list(self.entries), dtype=int)

    @property
    def values(self) -> np.ndarray:
        return np.array(list(self.entries.values()), dtype=float)

    def window(self, n_lo: int, n_hi: int) -> "ResidualSeries":
        return ResidualSeries({n: x for n, x in self.entries.items() if n_lo <= n <= n_hi},
                              n_lo, n_hi, self.name)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["n", "value"])
        for n, x in self.entries.items():
            w.writerow([n, repr(x)])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str, name: str = "") -> "ResidualSeries":
        rows = list(csv.DictReader(io.StringIO(text)))
        return cls.from_arrays([int(r["n"]) for r in rows], [float(r["value"]) for r in rows], name)


class DegenerateSeriesError(ValueError):
    """Too few nonzero entries for a log-log fit."""


@dataclass(frozen=True)
class DecayFit:
    slope: float
    intercept: float
    r_squared: float
    n_window: tuple[int, int]
    zeros_excluded: int = 0

    def to_json_dict(self) -> dict:
        return {"slope": self.slope, "intercept": self.intercept, "r_squared": self.r_squared,
                "window": list(self.n_window), "zeros_excluded": self.zeros_excluded}

    def to_json(self) -> str:
        return json.dumps(self.to_json_dict(), sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "DecayFit":
        d = json.loads(text)
        return cls(d["slope"], d["intercept"], d["r_squared"], tuple(d["window"]), d["zeros_excluded"])


def decay_fit(series: ResidualSeries, min_points: int = 5) -> DecayFit:
    """Least-squares line through ``(log n, log x_n)``, zero entries skipped."""
    ns, xs = series.ns, series.values
    nz = xs > 0
    if nz.sum() < min_points:
        raise DegenerateSeriesError(f"need {min_points} nonzero entries, have {int(nz.sum())}")
    X, Y = np.log(ns[nz]), np.log(xs[nz])
    slope, intercept = np.polyfit(X, Y, 1)
    resid = Y - (slope * X + intercept)
    ss_tot = float(np.sum((Y - Y.mean()) ** 2))
    r2 = 1.0 if ss_tot == 0 else max(0.0, 1.0 - float(np.sum(resid ** 2)) / ss_tot)
    return DecayFit(float(slope), float(intercept), r2, (series.n_lo, series.n_hi), int((~nz).sum()))


@dataclass(frozen=True)
class Membership:
    weighted_partial_sum: float
    verdict: str
    slope: float | None
    threshold: float


def h_membership(series: ResidualSeries, s: float, slack: float = SLOPE_SLACK) -> Membership:
    """Finite-sample test of ``x in h^s``.

    ``consistent`` iff the fitted slope is at most ``-s - 1/2 + slack``; an
    all-zero series is consistent for every ``s``.
    """
    ns, xs = series.ns, series.values
    wsum = float(np.sum(bracket_weight(ns).astype(float) ** (2 * s) * xs ** 2))
    threshold = -s - 0.5 + slack
    if not np.any(xs > 0):
        return Membership(wsum, "consistent", None, threshold)
    slope = decay_fit(series).slope
    return Membership(wsum, "consistent" if slope <= threshold else "inconsistent", slope, threshold)


def residual_series(table: PairTable, predictor: str, m: int, v: FourierSeq,
                    window: tuple[int, int] | None = None) -> ResidualSeries:
    """Residuals of a pair table against a predictor.

    ``tau``: ``|tau_n - (n pi)^{2m}|`` (the shift is taken directly from the
    row when the projector path supplied it). ``gap_first`` and
    ``gap_refined``: ``min(|gamma_n - p_n|, |gamma_n + p_n|)``.
    """
    rows = [r for r in table if window is None or window[0] <= r.n <= window[1]]
    if not rows:
        raise ValueError("no rows in the requested window")
    flagged = [r.n for r in rows if not r.ok]
    if flagged:
        raise ValueError(f"pair table has flagged rows at n={flagged}")
    vals = {}
    for r in rows:
        if predictor == "tau":
            shift = r.tau_shift if np.isfinite(r.tau_shift) else r.tau - center(r.n, m)
            vals[r.n] = abs(shift)
        elif predictor in ("gap_first", "gap_refined"):
            p = predict_gap_first(r.n, v) if predictor == "gap_first" else predict_gap_refined(r.n, m, v)
            vals[r.n] = min(abs(r.gamma - p), abs(r.gamma + p))
        else:
            raise ValueError(f"unknown predictor {predictor!r}")
    ns = sorted(vals)
    return ResidualSeries(vals, ns[0], ns[-1], predictor)


# ---------------------------------------------------------------------------
# gap decay versus coefficient decay


@dataclass(frozen=True)
class GapDecayReport:
    slope_gamma: float
    slope_v: float
    slope_residual: float
    member_gamma: Membership
    member_v: Membership
    verdict: bool
    vacuous: bool = False


def corollary1_check(gamma_abs: ResidualSeries, v: FourierSeq, m: int, beta: float,
                     agree_tol: float = 0.3, steeper_by: float = 0.2) -> GapDecayReport:
    """Compare the decay of ``|gamma_n|`` with that of ``|v(2n)|``.

    For a real symmetric, one-periodic potential gaps and coefficients
    should decay at the same rate, while ``||gamma_n| - 2|v(2n)||`` decays
    strictly faster. The verdict requires the first two slopes to agree
    within ``agree_tol`` and the third to be steeper than both by
    ``steeper_by``. Membership of both sequences in ``h^{-m beta}`` is
    reported alongside.
    """
    if not v.is_real_symmetric(atol=1e-15) or not v.is_one_periodic():
        raise ValueError("needs a real symmetric potential with v(2k+1) = 0")
    ns = gamma_abs.ns
    g = gamma_abs.values
    vv = np.array([abs(v[2 * int(n)]) for n in ns])
    vs = ResidualSeries.from_arrays(ns, 2 * vv, "two_abs_v2n")
    rs = ResidualSeries.from_arrays(ns, np.abs(g - 2 * vv), "gap_minus_coeff")
    mg = h_membership(gamma_abs, -m * beta)
    mv = h_membership(vs, -m * beta)
    if not np.any(g > 0) and not np.any(vv > 0):
        return GapDecayReport(math.nan, math.nan, math.nan, mg, mv, True, vacuous=True)
    sg = decay_fit(gamma_abs).slope
    sv = decay_fit(vs).slope
    sr = decay_fit(rs).slope
    ok = abs(sg - sv) <= agree_tol and sr <= min(sg, sv) - steeper_by
    return GapDecayReport(sg, sv, sr, mg, mv, bool(ok))
