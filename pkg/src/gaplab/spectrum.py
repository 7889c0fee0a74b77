"""Periodic spectrum of the truncated operator, computed three ways.

* ``eigs_truncated``: dense eigensolver, trusted for small ``n``.
* Contour integrals over ``Gamma_n = {|lam - (n pi)^{2m}| = n^m}``: Riesz
  projectors and the mean ``tau_n`` via a trace formula. All contour work
  uses the local offset ``z = lam - (n pi)^{2m}``, so the large centre value
  never enters a subtraction.
* A 2x2 reduction of ``D + B - tau_n`` on the Riesz space, whose
  determinant gives ``-(gamma_n / 2)^2``.
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np
import scipy.linalg

from .operators import (
    ConvergenceError, ThresholdSet, TruncatedOp, build_B, d_diag, factor_parts,
    lam_minus_d, op_norm, toeplitz_matrix,
)
from .seqspace import FourierSeq


class EigensolverError(RuntimeError):
    """Eigenpair failed the backward-error check."""


class ContourError(RuntimeError):
    """Contour integral could not be evaluated or encloses the wrong count."""


# ---------------------------------------------------------------------------
# dense path


@dataclass(frozen=True, eq=False)
class EigenList:
    """Eigenvalues sorted by real part, ties by imaginary part."""

    values: np.ndarray

    def __post_init__(self):
        v = np.array(self.values, dtype=complex)
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    def __len__(self):
        return self.values.size

    def __iter__(self):
        return iter(self.values)

    def __getitem__(self, i):
        return self.values[i]


def order_eigs(values: Iterable[complex]) -> EigenList:
    """Sort by ``Re``, ties broken by ``Im``; multiplicities are kept."""
    a = np.asarray(list(values) if not isinstance(values, np.ndarray) else values, dtype=complex)
    return EigenList(a[np.lexsort((a.imag, a.real))])


def truncated_matrix(m: int, v: FourierSeq, K: int) -> np.ndarray:
    return np.diag(d_diag(m, K)).astype(complex) + build_B(v, K).data


def _dense_eigs(A: np.ndarray, tol: float) -> EigenList:
    try:
        w, X = scipy.linalg.eig(A, check_finite=True)
    except np.linalg.LinAlgError as exc:
        raise EigensolverError(f"eigensolver failed: {exc}") from exc
    scale = np.linalg.norm(A, "fro")
    resid = np.linalg.norm(A @ X - X * w[None, :], axis=0) / np.linalg.norm(X, axis=0)
    bad = np.flatnonzero(~(resid <= tol * scale))
    if bad.size:
        i = int(bad[0])
        raise EigensolverError(
            f"eigenpair {i} (lambda={w[i]:.6g}) has backward error {resid[i]:.3g} > {tol * scale:.3g}")
    return order_eigs(w)


def eigs_truncated(m: int, v: FourierSeq, K: int, tol: float = 1e-12) -> EigenList:
    """All ``2K+1`` eigenvalues of ``D + B`` truncated to ``|k| <= K``.

    Each eigenpair is checked to have backward error ``<= tol * ||A||_F``.
    """
    if K < 1:
        raise ValueError("K must be >= 1")
    return _dense_eigs(truncated_matrix(m, v, K), tol)


def parity_split(m: int, v: FourierSeq, K: int, tol: float = 1e-12) -> tuple[EigenList, EigenList]:
    """Spectra of the even-index and odd-index blocks.

    Requires ``v(2k+1) = 0``; then ``D + B`` does not couple even and odd
    Fourier indices and the two blocks carry the periodic and
    antiperiodic halves of the period-1 problem.
    """
    if not v.is_one_periodic():
        raise ValueError("parity splitting needs v(2k+1) = 0 for all k")
    A = truncated_matrix(m, v, K)
    k = np.arange(-K, K + 1)
    even = np.flatnonzero(k % 2 == 0)
    odd = np.flatnonzero(k % 2 != 0)
    return (_dense_eigs(A[np.ix_(even, even)], tol),
            _dense_eigs(A[np.ix_(odd, odd)], tol) if odd.size else EigenList(np.zeros(0)))


# ---------------------------------------------------------------------------
# pairing


PAIR_CSV_HEADER = ["n", "re_lm", "im_lm", "re_lp", "im_lp", "re_tau", "im_tau",
                   "re_gamma", "im_gamma", "method", "flag"]


@dataclass(frozen=True)
class PairRow:
    """One eigenvalue pair. ``tau_shift`` is ``tau - (n pi)^{2m}`` when known
    directly (projector path), else derived from the pair."""

    n: int
    lambda_minus: complex
    lambda_plus: complex
    tau: complex
    gamma: complex
    method: str
    flag: str = ""
    tau_shift: complex = complex("nan")

    @property
    def ok(self) -> bool:
        return self.flag == ""


@dataclass(frozen=True)
class PairTable:
    m: int
    rows: tuple[PairRow, ...] = field(default_factory=tuple)

    def __iter__(self):
        return iter(self.rows)

    def __len__(self):
        return len(self.rows)

    def row(self, n: int) -> PairRow:
        for r in self.rows:
            if r.n == n:
                return r
        raise KeyError(n)

    def ns(self) -> list[int]:
        return [r.n for r in self.rows]

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(PAIR_CSV_HEADER)
        for r in self.rows:
            w.writerow([r.n, repr(r.lambda_minus.real), repr(r.lambda_minus.imag),
                        repr(r.lambda_plus.real), repr(r.lambda_plus.imag),
                        repr(r.tau.real), repr(r.tau.imag), repr(r.gamma.real), repr(r.gamma.imag),
                        r.method, r.flag])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str, m: int) -> "PairTable":
        rd = csv.DictReader(io.StringIO(text))
        if rd.fieldnames != PAIR_CSV_HEADER:
            raise ValueError(f"unexpected header {rd.fieldnames}")
        rows = []
        for d in rd:
            c = lambda a, b: complex(float(d[a]), float(d[b]))  # noqa: E731
            rows.append(PairRow(int(d["n"]), c("re_lm", "im_lm"), c("re_lp", "im_lp"),
                                c("re_tau", "im_tau"), c("re_gamma", "im_gamma"),
                                d["method"], d["flag"]))
        return cls(m, tuple(rows))


def center(n: int, m: int) -> float:
    return float(n ** (2 * m)) * math.pi ** (2 * m)


def half_gap_below(n: int, m: int) -> float:
    """Half the distance from ``(n pi)^{2m}`` to the next lower free eigenvalue."""
    return (n ** (2 * m) - (n - 1) ** (2 * m)) * math.pi ** (2 * m) / 2


def pair_eigs(e: EigenList, m: int, thresholds: ThresholdSet, n_max: int,
              n_min: int = 1, method: str = "eig") -> PairTable:
    """Group eigenvalues into pairs around ``(n pi)^{2m}``.

    The selection disc has radius ``min(r_n, half gap to level n-1)``, so
    discs never overlap even below ``n0`` where ``r_n`` alone would. A disc
    holding other than two eigenvalues yields a flagged row of NaNs.
    """
    vals = e.values
    rows = []
    for n in range(n_min, n_max + 1):
        c = center(n, m)
        rad = min(float(thresholds.r_n(n)), half_gap_below(n, m))
        inside = vals[np.abs(vals - c) < rad]
        if inside.size != 2:
            nan = complex("nan")
            rows.append(PairRow(n, nan, nan, nan, nan, method, f"count={inside.size}"))
            continue
        lm, lp = order_eigs(inside).values
        shift = ((lm - c) + (lp - c)) / 2
        rows.append(PairRow(n, complex(lm), complex(lp), complex((lm + lp) / 2), complex(lp - lm),
                            method, "", complex(shift)))
    return PairTable(m, tuple(rows))


@dataclass(frozen=True)
class LocalizationCounts:
    disc_counts: dict
    cone_count: int
    cone_expected: int
    n0: int
    M: float

    @property
    def ok(self) -> bool:
        return all(c == 2 for c in self.disc_counts.values()) and self.cone_count == self.cone_expected


def localization_counts(e: EigenList, m: int, thresholds: ThresholdSet, n_max: int) -> LocalizationCounts:
    """Count eigenvalues in the discs ``|lam - (n pi)^{2m}| < r_n``, ``n0 <= n <= n_max``,
    and in the bounded cone ``|Im lam| - M0 <= Re lam <= (n0^{2m} - n0^m) pi^{2m}``."""
    vals = e.values
    n0 = thresholds.n0
    discs = {n: int(np.sum(np.abs(vals - center(n, m)) < float(thresholds.r_n(n))))
             for n in range(n0, n_max + 1)}
    top = (n0 ** (2 * m) - n0 ** m) * math.pi ** (2 * m)
    in_cone = (np.abs(vals.imag) - thresholds.M0 <= vals.real) & (vals.real <= top)
    return LocalizationCounts(discs, int(np.sum(in_cone)), 2 * n0 - 1, n0, thresholds.M0)


# ---------------------------------------------------------------------------
# contour path


@dataclass(frozen=True, eq=False)
class ContourData:
    """Everything one pass of trapezoidal quadrature on ``Gamma_n`` produces.

    Attributes
    ----------
    P, P_half : ndarray
        Riesz projector with ``Q`` and with the embedded ``Q/2`` nodes.
    Z : ndarray
        ``(1/2 pi i) \\oint z R(lam) dlam``; equals ``(D + B - c) P``.
    trace_Q : complex
        Trace of ``\\oint z R B R0``, i.e. ``2 (tau_n - c)``.
    Q_mat : ndarray or None
        The matrix ``\\oint z R B R0`` when requested.
    max_S_hs : float
        Largest Hilbert-Schmidt norm of ``S_lam`` over the nodes.
    """

    n: int
    m: int
    K: int
    Q: int
    radius: float
    P: np.ndarray
    P_half: np.ndarray
    Z: np.ndarray
    trace_Q: complex
    Q_mat: np.ndarray | None
    max_S_hs: float

    @property
    def quad_error(self) -> float:
        return float(np.max(np.abs(self.P - self.P_half)))


def contour_nodes(n: int, m: int, Q: int) -> np.ndarray:
    return n ** m * np.exp(2j * np.pi * np.arange(Q) / Q)


def _check_nodes(Q: int) -> None:
    if Q < 16 or Q % 2:
        raise ValueError("quadrature needs an even number of nodes, at least 16")


def _free_pass(n: int, m: int, K: int, Q: int, want_Q_mat: bool) -> ContourData:
    # B = 0: R = R0 is diagonal and the integrals are known in closed form
    N = 2 * K + 1
    P0 = unperturbed_projector(n, K)
    zero = np.zeros((N, N), complex)
    return ContourData(n, m, K, Q, float(n ** m), P0, P0.copy(), zero, 0j,
                       zero.copy() if want_Q_mat else None, 0.0)


def contour_pass(n: int, m: int, v: FourierSeq, K: int, Q: int = 64,
                 want_Q_mat: bool = False, chunk: int = 16) -> ContourData:
    """Run the trapezoidal rule on ``Gamma_n`` for all contour quantities.

    Each node solves the equilibrated system ``(I_lam - S_lam)`` for all
    columns at once (the full resolvent), then rescales by ``D_lam^{-1/2}``
    on both sides.
    """
    _check_nodes(Q)
    if n < 1 or n > K:
        raise ValueError(f"need 1 <= n <= K, got n={n}, K={K}")
    if not np.any(v.coeffs):
        return _free_pass(n, m, K, Q, want_Q_mat)
    N = 2 * K + 1
    B = toeplitz_matrix(v, K)
    zs = contour_nodes(n, m, Q)
    P = np.zeros((N, N), complex)
    P_half = np.zeros((N, N), complex)
    Z = np.zeros((N, N), complex)
    Q_mat = np.zeros((N, N), complex) if want_Q_mat else None
    trQ = 0.0j
    max_hs = 0.0
    for start in range(0, Q, chunk):
        idx = np.arange(start, min(start + chunk, Q))
        roots, phases = [], []
        for z in zs[idx]:
            root, phase = factor_parts(z, m, K, center_n=n)
            roots.append(root)
            phases.append(phase)
        roots = np.array(roots)
        phases = np.array(phases)
        S = B[None, :, :] / roots[:, :, None] / roots[:, None, :]
        max_hs = max(max_hs, float(np.max(np.linalg.norm(S, axis=(1, 2)))))
        A = -S
        A[:, np.arange(N), np.arange(N)] += phases
        try:
            inv = np.linalg.inv(A)
        except np.linalg.LinAlgError as exc:
            raise ContourError(f"singular resolvent at a node in {zs[idx]} on Gamma_{n}") from exc
        R = inv / roots[:, :, None] / roots[:, None, :]
        if not np.all(np.isfinite(R)):
            bad = idx[~np.all(np.isfinite(R), axis=(1, 2))][0]
            raise ContourError(f"non-finite resolvent at node z={zs[bad]:.6g} on Gamma_{n}")
        r0 = 1.0 / (phases * roots ** 2)            # diagonal of (lam - D)^{-1}
        w = zs[idx] / Q
        wz = w * zs[idx]
        P += np.tensordot(w, R, axes=1)
        even = idx % 2 == 0
        P_half += np.tensordot(2 * w[even], R[even], axes=1)
        Z += np.tensordot(wz, R, axes=1)
        # Tr(R B R0) = sum_{k,j} R(k,j) B(j,k) r0(k)
        rowsum = np.einsum("bkj,kj->bk", R, B.T)
        trQ += np.sum(wz * np.sum(rowsum * r0, axis=1))
        if want_Q_mat:
            Q_mat += np.tensordot(wz, R @ (B[None, :, :] * r0[:, None, :]), axes=1)
    return ContourData(n, m, K, Q, float(n ** m), P, P_half, Z, complex(trQ), Q_mat, max_hs)


def contour_pass_lowrank(n: int, m: int, v: FourierSeq, K: int, Q: int = 64) -> ContourData:
    """Cheaper contour pass that only solves for the columns and rows ``+-n``.

    ``P`` has rank two, so with ``C = P[:, +-n]``, ``L = P[+-n, :]`` and
    ``G = P[+-n, +-n]`` one has ``P = C G^{-1} L`` exactly, and likewise
    ``Z = Z[:, +-n] G^{-1} L`` because ``Z = (D + B - c) P``. One LU
    factorization and four triangular solves per node replace a full
    inverse. ``Q_mat`` is not produced; ``trace_Q`` equals the trace of
    ``Z`` (the free part integrates to zero).
    """
    _check_nodes(Q)
    if n < 1 or n > K:
        raise ValueError(f"need 1 <= n <= K, got n={n}, K={K}")
    if not np.any(v.coeffs):
        return _free_pass(n, m, K, Q, False)
    N = 2 * K + 1
    B = toeplitz_matrix(v, K)
    sel = np.array([K + n, K - n])
    zs = contour_nodes(n, m, Q)
    C = np.zeros((N, 2), complex)
    C_half = np.zeros((N, 2), complex)
    L = np.zeros((2, N), complex)
    L_half = np.zeros((2, N), complex)
    Zc = np.zeros((N, 2), complex)
    rhs = np.zeros((N, 2), complex)
    rhs[sel, [0, 1]] = 1.0
    max_hs = 0.0
    for j, z in enumerate(zs):
        root, phase = factor_parts(z, m, K, center_n=n)
        S = B / root[:, None] / root[None, :]
        max_hs = max(max_hs, float(np.linalg.norm(S)))
        A = -S
        A[np.arange(N), np.arange(N)] += phase
        try:
            lu = scipy.linalg.lu_factor(A, check_finite=False)
        except (np.linalg.LinAlgError, ValueError) as exc:
            raise ContourError(f"singular resolvent at node z={z:.6g} on Gamma_{n}") from exc
        b = rhs / root[:, None]
        col = scipy.linalg.lu_solve(lu, b, check_finite=False) / root[:, None]
        row = (scipy.linalg.lu_solve(lu, b, trans=1, check_finite=False) / root[:, None]).T
        if not (np.all(np.isfinite(col)) and np.all(np.isfinite(row))):
            raise ContourError(f"non-finite resolvent at node z={z:.6g} on Gamma_{n}")
        w = z / Q
        C += w * col
        L += w * row
        Zc += w * z * col
        if j % 2 == 0:
            C_half += 2 * w * col
            L_half += 2 * w * row
    G = C[sel, :]
    Ginv_L = np.linalg.solve(G, L)
    P = C @ Ginv_L
    P_half = C_half @ np.linalg.solve(C_half[sel, :], L_half)
    Z = Zc @ Ginv_L
    return ContourData(n, m, K, Q, float(n ** m), P, P_half, Z, complex(np.trace(Z)), None, max_hs)


def unperturbed_projector(n: int, K: int) -> np.ndarray:
    P0 = np.zeros((2 * K + 1, 2 * K + 1), complex)
    P0[K + n, K + n] = 1.0
    P0[K - n, K - n] = 1.0
    return P0


@dataclass(frozen=True, eq=False)
class RieszData:
    n: int
    P: TruncatedOp
    P0: TruncatedOp
    quad_nodes: int
    contour_radius: float
    quad_error: float


def riesz_projector(n: int, m: int, v: FourierSeq, K: int, Q: int = 64,
                    data: ContourData | None = None) -> RieszData:
    """Riesz projector onto the eigenvalue pair inside ``Gamma_n``.

    ``quad_error`` is the largest entrywise change between the ``Q``-node
    rule and its embedded ``Q/2``-node rule.
    """
    d = data if data is not None else contour_pass(n, m, v, K, Q)
    return RieszData(n, TruncatedOp(K, d.P), TruncatedOp(K, unperturbed_projector(n, K)),
                     d.Q, d.radius, d.quad_error)


def _check_pair_enclosed(d: ContourData, tol: float = 1e-6) -> None:
    tr = np.trace(d.P)
    if abs(tr - 2) > tol:
        raise ContourError(
            f"Gamma_{d.n} encloses trace(P) = {tr:.6g} eigenvalues, not 2; n is below n_star")


def tau_shift_via_trace(n: int, m: int, v: FourierSeq, K: int, Q: int = 64,
                        data: ContourData | None = None) -> complex:
    """``tau_n - (n pi)^{2m}`` as half the trace of ``\\oint z R B R0``."""
    d = data if data is not None else contour_pass(n, m, v, K, Q)
    _check_pair_enclosed(d)
    return d.trace_Q / 2


def tau_via_trace(n: int, m: int, v: FourierSeq, K: int, Q: int = 64,
                  data: ContourData | None = None) -> complex:
    """Pair mean ``tau_n``; the shift is computed without cancellation."""
    return center(n, m) + tau_shift_via_trace(n, m, v, K, Q, data)


def q0_matrix(n: int, m: int, v: FourierSeq, K: int, Q: int = 64) -> TruncatedOp:
    """First-order part ``\\oint z R0 B R0`` by quadrature (entrywise, exact in B)."""
    _check_nodes(Q)
    B = toeplitz_matrix(v, K)
    zs = contour_nodes(n, m, Q)
    acc = np.zeros_like(B)
    for z in zs:
        r0 = 1.0 / lam_minus_d(z, m, K, center_n=n)
        acc += (z * z / Q) * np.outer(r0, r0)
    return TruncatedOp(K, B * acc)


def q1_norm(n: int, m: int, v: FourierSeq, K: int, Q: int = 64,
            data: ContourData | None = None, tol: float = 1e-10) -> float:
    """Operator norm of the second-order remainder ``Q_n - Q_n^0``."""
    d = data if data is not None and data.Q_mat is not None else contour_pass(n, m, v, K, Q, want_Q_mat=True)
    return op_norm(d.Q_mat - q0_matrix(n, m, v, K, d.Q).data, tol=tol)


def projector_distance(n: int, m: int, v: FourierSeq, K: int, Q: int = 64,
                       data: ContourData | None = None, tol: float = 1e-10) -> float:
    """``||P_n - P_n^0||`` in the operator norm."""
    d = data if data is not None else contour_pass(n, m, v, K, Q)
    return op_norm(d.P - unperturbed_projector(n, K), tol=tol)


def principal_sqrt(x: complex) -> complex:
    """Square root with ``Re >= 0``; on the imaginary axis ``Im >= 0``."""
    r = complex(np.sqrt(complex(x)))
    if r.real < 0 or (r.real == 0 and r.imag < 0):
        r = -r
    return r


@dataclass(frozen=True, eq=False)
class GapReduction:
    """Output of the 2x2 reduction.

    ``matrix`` is indexed by ``(n, -n)`` in that order. ``gamma`` is the
    principal root of ``gamma_sq``.
    """

    n: int
    gamma_sq: complex
    matrix: np.ndarray
    gamma: complex
    tau_shift: complex
    proj_dist: float
    biorth_error: float
    trace_residual: float


def _inv_sqrt_apply(Qp_apply, X: np.ndarray, tol: float = 1e-14, cap: int = 500) -> np.ndarray:
    # (I - Qp)^{-1/2} X = sum_l binom(2l, l) / 4^l Qp^l X
    out = X.copy()
    term = X.copy()
    coef = 1.0
    ref = max(np.linalg.norm(X), np.finfo(float).tiny)
    for l in range(1, cap):
        coef *= (2 * l - 1) / (2 * l)
        term = Qp_apply(term)
        out += coef * term
        if coef * np.linalg.norm(term) < tol * ref:
            return out
    raise ConvergenceError("binomial series for (I - Q)^{-1/2} did not converge")


def gap_via_reduction(n: int, m: int, v: FourierSeq, K: int, Q: int = 64,
                      data: ContourData | None = None) -> GapReduction:
    """Reduce ``D + B - tau_n`` on the Riesz space to a 2x2 matrix.

    With ``Qp = (P - P0)^2`` and ``U = (I - Qp)^{-1/2} P P0`` restricted to
    ``span{e_n, e_-n}``, the matrix ``U^{-1} (D + B - tau_n) U`` has
    determinant ``-(gamma_n/2)^2``. ``(D + B - c) P`` is taken from the
    contour integral of ``z R``, so no large diagonal is multiplied out.

    Raises
    ------
    ContourError
        If ``||P - P0|| > 1/2`` (the series for ``(I - Qp)^{-1/2}`` is not
        guaranteed) or the reduction is numerically singular.
    """
    d = data if data is not None else contour_pass(n, m, v, K, Q)
    _check_pair_enclosed(d)
    s = d.trace_Q / 2
    P = d.P
    E = P - unperturbed_projector(n, K)
    dist = op_norm(E, tol=1e-10)
    if dist > 0.5:
        raise ContourError(f"||P - P0|| = {dist:.3g} > 1/2 at n={n}; n is below n_star")
    sel = np.array([K + n, K - n])
    AP = d.Z - s * P
    V = _inv_sqrt_apply(lambda X: E @ (E @ X), P[:, sel])
    Wt = _inv_sqrt_apply(lambda X: E.T @ (E.T @ X), P[sel, :].T)
    W = Wt.T
    G = W @ V
    biorth = float(np.max(np.abs(G - np.eye(2))))
    if not biorth < 0.5:
        raise ContourError(f"transformation operator numerically singular at n={n}")
    M = W @ AP @ V
    gamma_sq = complex(-4 * np.linalg.det(M))
    return GapReduction(n, gamma_sq, M, principal_sqrt(gamma_sq), complex(s), dist,
                        biorth, float(abs(np.trace(M))))


def empirical_n_star(m: int, v: FourierSeq, K: int, n_max: int, samples: int = 32,
                     tol: float = 1e-8) -> int:
    """Smallest ``n`` with ``sup ||S_lam|| <= 1/2`` on ``Gamma_n'`` for all ``n <= n' <= n_max``.

    The supremum is taken over ``samples`` equispaced points of each circle.
    """
    B = toeplitz_matrix(v, K)
    for n in range(n_max, 0, -1):
        for z in contour_nodes(n, m, samples):
            root, _ = factor_parts(z, m, K, center_n=n)
            if op_norm(B / root[:, None] / root[None, :], tol=tol) > 0.5:
                return n + 1
    return 1


def projector_pairs(m: int, v: FourierSeq, K: int, ns: Sequence[int], Q: int = 64,
                    lowrank: bool = False) -> PairTable:
    """Pair table from the contour path: ``tau`` via the trace formula and
    ``gamma`` via the reduction; the pair itself is ``tau -+ gamma/2``.

    ``lowrank=True`` uses :func:`contour_pass_lowrank`.
    """
    rows = []
    pass_fn = contour_pass_lowrank if lowrank else contour_pass
    for n in ns:
        c = center(n, m)
        try:
            d = pass_fn(n, m, v, K, Q)
            red = gap_via_reduction(n, m, v, K, Q, data=d)
        except (ContourError, ConvergenceError) as exc:
            nan = complex("nan")
            rows.append(PairRow(n, nan, nan, nan, nan, "projector", f"error:{type(exc).__name__}"))
            continue
        s, g = red.tau_shift, red.gamma
        rows.append(PairRow(n, c + s - g / 2, c + s + g / 2, c + s, g, "projector", "", s))
    return PairTable(m, tuple(rows))
