"""Truncated Fourier-side operators, resolvent factorization and explicit bounds.

The free operator acts diagonally, ``D(k, k) = (k pi)^{2m}``, and the
potential acts as the Toeplitz matrix ``B(k, j) = v(k - j)``. For a
spectral parameter ``lam`` off the diagonal of ``D`` the resolvent factors
as::

    lam - D - B = D_lam^{1/2} (I_lam - S_lam) D_lam^{1/2}

with ``D_lam = diag|lam - d_k|``, ``I_lam = diag((lam - d_k)/|lam - d_k|)``
and ``S_lam(k, j) = v(k - j) / (|lam - d_k| |lam - d_j|)^{1/2}``.

Spectral parameters near ``(n pi)^{2m}`` are huge for large ``n``. Every
function taking ``lam`` therefore also accepts ``center_n``: when given,
``lam`` is the offset ``z`` from ``(n pi)^{2m}`` and all differences
``lam - d_k`` are formed as ``z + (n^{2m} - k^{2m}) pi^{2m}`` with the
integer part exact. No large number is ever subtracted from another.
"""
from __future__ import annotations

import functools
import math
import struct
from dataclasses import dataclass
from typing import Callable, Union

import numpy as np
import scipy.linalg

from .seqspace import FourierSeq, bracket_weight, h_norm

_MAGIC = b"GAPLABOP"


class ConvergenceError(RuntimeError):
    """An iterative method did not reach its tolerance."""


class SingularOperatorError(RuntimeError):
    """A linear system was singular to working precision."""


@dataclass(frozen=True, eq=False)
class TruncatedOp:
    """Dense matrix on indices ``-K..K``; index ``k`` is stored at ``k + K``."""

    K: int
    data: np.ndarray

    def __post_init__(self):
        d = np.array(self.data, dtype=complex)
        N = 2 * int(self.K) + 1
        if d.shape != (N, N):
            raise ValueError(f"expected a {N}x{N} matrix for K={self.K}, got {d.shape}")
        d.setflags(write=False)
        object.__setattr__(self, "K", int(self.K))
        object.__setattr__(self, "data", d)

    @property
    def dim(self) -> int:
        return 2 * self.K + 1

    def entry(self, k: int, j: int) -> complex:
        return complex(self.data[k + self.K, j + self.K])

    def to_bytes(self) -> bytes:
        """Binary dump: magic, little-endian int32 K, row-major complex128."""
        body = np.ascontiguousarray(self.data, dtype="<c16").tobytes()
        return _MAGIC + struct.pack("<i", self.K) + body

    @classmethod
    def from_bytes(cls, raw: bytes) -> "TruncatedOp":
        if raw[:8] != _MAGIC:
            raise ValueError("not a truncated-operator dump (bad magic)")
        (K,) = struct.unpack("<i", raw[8:12])
        N = 2 * K + 1
        body = raw[12:]
        if len(body) != 16 * N * N:
            raise ValueError(f"payload length {len(body)} does not match K={K}")
        return cls(K, np.frombuffer(body, dtype="<c16").reshape(N, N))


# ---------------------------------------------------------------------------
# assembly


def indices(K: int) -> np.ndarray:
    return np.arange(-K, K + 1)


def d_diag(m: int, K: int) -> np.ndarray:
    """Diagonal of the free operator, ``(k pi)^{2m}``."""
    k = indices(K).astype(float)
    return k ** (2 * m) * math.pi ** (2 * m)


def build_D(m: int, K: int) -> TruncatedOp:
    if m < 1 or K < 1:
        raise ValueError("need m >= 1 and K >= 1")
    return TruncatedOp(K, np.diag(d_diag(m, K)).astype(complex))


def toeplitz_matrix(v: FourierSeq, K: int) -> np.ndarray:
    """Raw array ``B(k, j) = v(k - j)`` on ``|k|, |j| <= K``."""
    col = v[np.arange(0, 2 * K + 1)]      # v(k - (-K)) for k = -K..K, i.e. v(0..2K)
    row = v[-np.arange(0, 2 * K + 1)]     # v(-K - j) for j = -K..K, i.e. v(0..-2K)
    return scipy.linalg.toeplitz(col, row)


def build_B(v: FourierSeq, K: int) -> TruncatedOp:
    if v[0] != 0:
        raise ValueError("potential must be normalized with v(0) = 0")
    return TruncatedOp(K, toeplitz_matrix(v, K))


def lam_minus_d(lam: complex, m: int, K: int, center_n: int | None = None) -> np.ndarray:
    """``lam - (k pi)^{2m}`` for ``k = -K..K``.

    With ``center_n`` the argument is the local offset ``z`` and the
    integer differences ``n^{2m} - k^{2m}`` are formed exactly.
    """
    if center_n is None:
        return complex(lam) - d_diag(m, K)
    return complex(lam) + _scaled_int_diffs(m, K, int(center_n))


@functools.lru_cache(maxsize=256)
def _scaled_int_diffs(m: int, K: int, n: int) -> np.ndarray:
    n2m = n ** (2 * m)
    diff = np.array([n2m - k ** (2 * m) for k in range(-K, K + 1)], dtype=float)
    out = diff * math.pi ** (2 * m)
    out.setflags(write=False)
    return out


def _check_off_spectrum(delta: np.ndarray) -> None:
    bad = np.flatnonzero(delta == 0)
    if bad.size:
        K = (delta.size - 1) // 2
        raise ValueError(f"lambda coincides with the free eigenvalue at k={int(bad[0]) - K}")


def build_S(lam: complex, m: int, v: FourierSeq, K: int, center_n: int | None = None) -> TruncatedOp:
    """The equilibrated perturbation ``S_lam``."""
    delta = lam_minus_d(lam, m, K, center_n)
    _check_off_spectrum(delta)
    s = 1.0 / np.sqrt(np.abs(delta))
    return TruncatedOp(K, s[:, None] * toeplitz_matrix(v, K) * s[None, :])


def factor_parts(lam: complex, m: int, K: int, center_n: int | None = None):
    """Return ``(sqrt|lam - d_k|, (lam - d_k)/|lam - d_k|)``."""
    delta = lam_minus_d(lam, m, K, center_n)
    _check_off_spectrum(delta)
    a = np.abs(delta)
    return np.sqrt(a), delta / a


def hs_norm(S: Union[TruncatedOp, np.ndarray]) -> float:
    a = S.data if isinstance(S, TruncatedOp) else np.asarray(S)
    return float(np.linalg.norm(a, "fro"))


def op_norm(S: Union[TruncatedOp, np.ndarray], tol: float = 1e-10, max_iter: int = 5000,
            block: int = 4) -> float:
    """Largest singular value by block power iteration on ``S^H S``.

    A small block with Rayleigh-Ritz extraction keeps convergence fast when
    the top singular values come in near-degenerate pairs, which is the
    typical situation here (indices ``n`` and ``-n`` couple symmetrically).
    The returned Ritz value never exceeds the true norm.

    Raises
    ------
    ConvergenceError
        If the top Ritz pair has relative residual above ``tol`` after
        ``max_iter`` sweeps.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    A = S.data if isinstance(S, TruncatedOp) else np.asarray(S, dtype=complex)
    if A.size == 0 or not np.any(A):
        return 0.0
    p = min(block, A.shape[1])
    rng = np.random.default_rng(12345)
    X = rng.standard_normal((A.shape[1], p)) + 1j * rng.standard_normal((A.shape[1], p))
    X, _ = np.linalg.qr(X)
    for _ in range(max_iter):
        Y = A.conj().T @ (A @ X)
        H = X.conj().T @ Y
        theta, W = np.linalg.eigh((H + H.conj().T) / 2)
        rho = theta[-1]
        x = X @ W[:, -1]
        r = Y @ W[:, -1] - rho * x
        if rho <= 0:
            return 0.0
        if np.linalg.norm(r) <= tol * rho:
            return float(math.sqrt(rho))
        X, _ = np.linalg.qr(Y)
    raise ConvergenceError(f"op_norm: no convergence to tol={tol} in {max_iter} iterations")


# ---------------------------------------------------------------------------
# resolvent


def resolvent_apply(lam: complex, m: int, v: FourierSeq, K: int, rhs: FourierSeq,
                    method: str = "direct", tol: float = 1e-12,
                    center_n: int | None = None) -> FourierSeq:
    """Solve ``(lam - D - B) x = rhs`` through the factorized form.

    ``method="neumann"`` sums ``(I_lam - S)^{-1} = sum_l (I_lam^{-1} S)^l
    I_lam^{-1}``; it requires ``||S|| < 1`` and stops once a term falls
    below ``tol (1 - ||S||)`` relative to the first term, with at most 200
    terms. ``method="direct"`` solves the equilibrated dense system.
    """
    rhs_c = rhs.truncated(K).coeffs if rhs.K > K else rhs.padded(K).coeffs
    root, phase = factor_parts(lam, m, K, center_n)
    S = toeplitz_matrix(v, K) / root[:, None] / root[None, :]
    b = rhs_c / root
    if method == "neumann":
        s_norm = op_norm(S, tol=1e-8)
        if s_norm >= 1.0:
            raise ConvergenceError(
                f"Neumann series diverges (||S|| = {s_norm:.3g} >= 1); use method='direct'")
        term = b / phase
        y = term.copy()
        scale = np.linalg.norm(term)
        stop = tol * (1.0 - s_norm) * max(scale, np.finfo(float).tiny)
        for _ in range(200):
            term = (S @ term) / phase
            y += term
            if np.linalg.norm(term) < stop:
                break
        else:
            raise ConvergenceError("Neumann series did not reach tolerance in 200 terms")
    elif method == "direct":
        A = np.diag(phase) - S
        try:
            lu = scipy.linalg.lu_factor(A, check_finite=False)
        except (np.linalg.LinAlgError, ValueError) as exc:
            raise SingularOperatorError(str(exc)) from exc
        if np.any(np.abs(np.diag(lu[0])) < np.finfo(float).eps * np.abs(A).max()):
            raise SingularOperatorError(f"lambda={lam!r} is numerically an eigenvalue")
        y = scipy.linalg.lu_solve(lu, b, check_finite=False)
    else:
        raise ValueError(f"unknown method {method!r}")
    return FourierSeq(K, y / root)


def resolvent_matrix(lam: complex, m: int, v: FourierSeq, K: int,
                     center_n: int | None = None) -> np.ndarray:
    """Full ``(lam - D - B)^{-1}`` as an array, via the factorized form."""
    root, phase = factor_parts(lam, m, K, center_n)
    S = toeplitz_matrix(v, K) / root[:, None] / root[None, :]
    inv = np.linalg.inv(np.diag(phase) - S)
    return inv / root[:, None] / root[None, :]


# ---------------------------------------------------------------------------
# regions


@dataclass(frozen=True)
class ExtM:
    """Exterior of the cone, ``Re lam <= |Im lam| - M``."""

    M: float

    def __post_init__(self):
        if not self.M >= 1:
            raise ValueError("Ext_M needs M >= 1")


@dataclass(frozen=True)
class Vert:
    """Strip ``|Re z| <= n^m pi^{2m}`` minus the disc ``|z| < r``, ``z = lam - (n pi)^{2m}``."""

    n: int
    r: float
    m: int

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("Vert needs n >= 1")
        if not 0 < self.r < self.n ** self.m * math.pi ** (2 * self.m):
            raise ValueError(f"Vert needs 0 < r < n^m pi^(2m); got r={self.r} for n={self.n}")

    @property
    def half_width(self) -> float:
        return self.n ** self.m * math.pi ** (2 * self.m)

    @property
    def center(self) -> float:
        return float(self.n ** (2 * self.m)) * math.pi ** (2 * self.m)


RegionSpec = Union[ExtM, Vert]


def min_vert_n(m: int) -> int:
    """Smallest integer ``n`` with ``n >= (8m - 4) m / (8m - 7)``."""
    return math.ceil((8 * m - 4) * m / (8 * m - 7) - 1e-12)


def region_contains(region: RegionSpec, lam: complex, m: int, local: bool = False) -> bool:
    """Exact membership test; for ``Vert`` a ``local=True`` point is the offset ``z``."""
    lam = complex(lam)
    if isinstance(region, ExtM):
        return lam.real <= abs(lam.imag) - region.M
    if isinstance(region, Vert):
        if region.m != m:
            raise ValueError("region was built for a different order m")
        z = lam if local else lam - region.center
        return abs(z.real) <= region.half_width and abs(z) >= region.r
    raise TypeError(f"unknown region {region!r}")


def sample_ext(M: float, n_boundary: int = 32, n_interior: int = 32) -> np.ndarray:
    """Deterministic sample of ``Ext_M``: log-spaced boundary and interior points."""
    t = np.geomspace(1e-2, 1e9, n_boundary)
    sign = np.where(np.arange(n_boundary) % 2 == 0, 1.0, -1.0)
    boundary = (t - M) + 1j * sign * t
    depth = np.geomspace(1.0, 1e9, n_interior)
    y = np.geomspace(1e-1, 1e9, n_interior)[::-1] * np.where(np.arange(n_interior) % 2 == 0, 1.0, -1.0)
    interior = (np.abs(y) - M - depth) + 1j * y
    return np.concatenate([boundary, interior])


def sample_vert(region: Vert, n_circle: int = 64, n_edge: int = 32) -> np.ndarray:
    """Deterministic sample of ``Vert`` as local offsets ``z``."""
    theta = 2 * np.pi * (np.arange(n_circle) + 0.5) / n_circle
    # nudge outward so rounding never puts a point inside the removed disc
    circle = region.r * (1 + 4 * np.finfo(float).eps) * np.exp(1j * theta)
    h = region.half_width
    heights = np.geomspace(1e-3 * h, 1e3 * h, n_edge // 2)
    edge_r = h + 1j * heights * np.where(np.arange(heights.size) % 2 == 0, 1.0, -1.0)
    edge = np.concatenate([edge_r, -np.conj(edge_r)])
    return np.concatenate([circle, edge])


# ---------------------------------------------------------------------------
# explicit bounds


def lemma1_bound(M: float, alpha: float, m: int, v_norm: float) -> float:
    """``||S_lam|| <= 2^{2m+1} ||v|| M^{-((1-alpha)/2 + 1/4)}`` on ``Ext_M``."""
    if M < 1 or not 0 <= alpha <= 1:
        raise ValueError("need M >= 1 and 0 <= alpha <= 1")
    return 2.0 ** (2 * m + 1) * v_norm * M ** (-((1 - alpha) / 2 + 0.25))


def _check_vert_hypotheses(n: int, r: float, m: int) -> None:
    if n < (8 * m - 4) * m / (8 * m - 7):
        raise ValueError(f"n={n} below (8m-4)m/(8m-7) for m={m}")
    if not 0 < r < n ** m * math.pi ** (2 * m):
        raise ValueError(f"need 0 < r < n^m pi^(2m), got r={r}")


def lemma2_bound(n: int, r: float, alpha: float, m: int, v: FourierSeq) -> float:
    """Upper bound for ``||S_lam||`` on ``Vert(n, r)``."""
    _check_vert_hypotheses(n, r, m)
    vn = h_norm(v, -m * alpha)
    first = (abs(v[2 * n]) + abs(v[-2 * n])) / r
    second = (n ** (m * (alpha - 1 + 1 / (2 * m))) / math.sqrt(r)
              + 6 * math.log(n) / n ** (m * (1 - alpha)))
    return first + 4 * (2 / math.pi) ** m * second * vn


def eq6_bound(n: int, r: float, m: int) -> float:
    """Bound ``r^{-1/2} + sqrt(3) pi^{-m} n^{-m+1/2}`` for ``max_k |lam - d_k|^{-1/2}``."""
    _check_vert_hypotheses(n, r, m)
    return r ** -0.5 + math.sqrt(3) / math.pi ** m * n ** (-m + 0.5)


def eq3_ratio(z: complex, n: int, m: int, K: int) -> np.ndarray:
    """Per-entry ratio ``|lam - d_k|^{-1} / (3 pi^{-2m} / |k^{2m} - n^{2m}|)`` for ``k != +-n``.

    Values ``<= 1`` mean the inequality holds. Entries ``k = +-n`` are NaN.
    """
    delta = lam_minus_d(z, m, K, center_n=n)
    n2m = n ** (2 * m)
    gap = np.array([abs(k ** (2 * m) - n2m) for k in range(-K, K + 1)], dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = (1.0 / np.abs(delta)) / (3.0 / math.pi ** (2 * m) / gap)
    ratio[gap == 0] = np.nan
    return ratio


@dataclass(frozen=True)
class Lemma3Result:
    a: float
    b: float
    c: float
    rhs_a: float
    rhs_b: float
    rhs_c: float

    @property
    def holds(self) -> tuple[bool, bool, bool]:
        return (self.a <= self.rhs_a, self.b <= self.rhs_b, self.c <= self.rhs_c)


def _power_gap(k: np.ndarray, n: int, m: int) -> np.ndarray:
    # |k^{2m} - n^{2m}| = |k^2 - n^2| * sum_i k^{2i} n^{2(m-1-i)}, no cancellation
    k2 = k.astype(float) ** 2
    n2 = float(n) ** 2
    s = sum(k2 ** i * n2 ** (m - 1 - i) for i in range(m))
    return np.abs(k.astype(np.int64) ** 2 - n * n).astype(float) * s


def lemma3_checks(m: int, alpha: float, n: int, K_sum: int = 10_000) -> Lemma3Result:
    """Evaluate the three elementary sup/sum estimates over ``|k| <= K_sum, k != +-n``.

    Sums are plain partial sums; no tail is added.
    """
    if n < m:
        raise ValueError("need n >= m")
    k = np.arange(-K_sum, K_sum + 1)
    k = k[np.abs(k) != n]
    root = np.sqrt(_power_gap(k, n, m))
    a = np.max(bracket_weight(k).astype(float) ** (m * alpha) / root)
    b = max(np.max(bracket_weight(k + n).astype(float) ** (m * alpha) / root),
            np.max(bracket_weight(k - n).astype(float) ** (m * alpha) / root))
    c = float(np.sum(1.0 / root))
    expo = m * (alpha - 1 + 1 / (2 * m))
    return Lemma3Result(float(a), float(b), c,
                        3 ** (m * alpha) * n ** expo, 4 ** (m * alpha) * n ** expo,
                        5 * (1 + math.log(n)) / n)


# ---------------------------------------------------------------------------
# thresholds


@dataclass(frozen=True)
class ThresholdSet:
    """Constants controlling where ``||S_lam|| < 1/2`` is guaranteed.

    ``n_star`` defaults to ``n0``; the spectrum module can replace it by a
    sampled value.
    """

    m: int
    alpha: float
    R: float
    C: float
    M0: float
    n0: int
    n_star: int

    def __post_init__(self):
        if self.M0 < 1:
            raise ValueError("M0 must be >= 1")
        if self.n0 < (8 * self.m - 4) * self.m / (8 * self.m - 7):
            raise ValueError("n0 below (8m-4)m/(8m-7)")
        if self.n_star < 1:
            raise ValueError("n_star must be >= 1")

    def r_n(self, n) -> float:
        return 3 ** self.m * math.sqrt(2) * self.C * self.R * np.asarray(n, dtype=float) ** (self.m * self.alpha)

    def with_n_star(self, n_star: int) -> "ThresholdSet":
        return ThresholdSet(self.m, self.alpha, self.R, self.C, self.M0, self.n0, int(n_star))


def _smallest_int(pred: Callable[[int], bool], start: int) -> int:
    """Smallest ``n >= start`` with ``pred(n)`` for a monotone predicate."""
    if pred(start):
        return start
    lo, hi = start, start + 1
    while not pred(hi):
        lo, hi = hi, 2 * hi
        if hi > 2 ** 62:
            raise ConvergenceError("threshold search did not terminate")
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if pred(mid):
            hi = mid
        else:
            lo = mid
    return hi


def lemma4_thresholds(m: int, alpha: float, R: float, C: float = 4.0) -> ThresholdSet:
    """Thresholds ``M0`` and ``n0`` for ``||S_lam|| < 1/2``.

    ``M0`` is the smallest integer with ``M0^{(1-alpha)/2+1/4} > 2^{2m+2} R``.
    ``n0`` is the smallest integer ``>= (8m-4)m/(8m-7)`` satisfying the
    strip condition with ``n = n0`` substituted on both sides, and for which
    ``r_n < n^m pi^{2m}`` holds from ``n0`` on.
    """
    if R <= 0 or C <= 2:
        raise ValueError("need R > 0 and C > 2")
    if not 0 <= alpha < 1:
        raise ValueError("alpha must lie in [0, 1)")
    e = (1 - alpha) / 2 + 0.25
    target = 2.0 ** (2 * m + 2) * R
    M0 = max(1, math.floor(target ** (1 / e)) + 1)
    # the root can land a rounding step below an exact integer; step on the
    # defining strict inequality instead
    while M0 ** e <= target:
        M0 += 1
    while M0 > 1 and (M0 - 1) ** e > target:
        M0 -= 1
    M0 = float(M0)

    pref = 4 * C / (C - 2) * (2 / math.pi) ** m

    def strip_ok(n: int) -> bool:
        rhs = pref * (2 ** (m - 0.25) / (3 ** (m / 2) * math.sqrt(C * R) * n ** (m * (1 - 1 / m) / 2))
                      + 12 / (m * (1 - alpha)))
        return n ** (m * (1 - alpha) / 2) > rhs

    rn_const = 3 ** m * math.sqrt(2) * C * R

    def radius_ok(n: int) -> bool:
        return rn_const * n ** (m * alpha) < n ** m * math.pi ** (2 * m)

    n0 = _smallest_int(lambda n: strip_ok(n) and radius_ok(n), min_vert_n(m))
    return ThresholdSet(m, alpha, R, C, M0, n0, n0)
