"""Finitely supported two-sided sequences, weighted norms and potentials.

A potential is represented exclusively by its Fourier coefficients
``v(k)``, ``|k| <= K``; everything downstream works on the Fourier side.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Mapping, Union

import numpy as np

#: Margin below the critical decay rate used by the random-decay profile.
RANDOM_DECAY_DELTA = 0.05


def bracket_weight(k):
    """Return ``<k> = 1 + |k|`` (works elementwise on arrays)."""
    return 1 + np.abs(k)


@dataclass(frozen=True, eq=False)
class FourierSeq:
    """Complex sequence ``a(k)`` vanishing for ``|k| > K``.

    Coefficients are stored in ``coeffs`` at position ``k + K``. Indexing
    with any integer (or integer array) is allowed; indices outside the
    support return zero.
    """

    K: int
    coeffs: np.ndarray

    def __post_init__(self):
        K = int(self.K)
        if K < 0:
            raise ValueError(f"support radius must be >= 0, got {K}")
        c = np.array(self.coeffs, dtype=complex)
        if c.shape != (2 * K + 1,):
            raise ValueError(f"expected {2 * K + 1} coefficients for K={K}, got shape {c.shape}")
        if not np.all(np.isfinite(c)):
            raise ValueError("coefficients must be finite")
        c.setflags(write=False)
        object.__setattr__(self, "K", K)
        object.__setattr__(self, "coeffs", c)

    # construction helpers
    @classmethod
    def zeros(cls, K: int) -> "FourierSeq":
        return cls(K, np.zeros(2 * K + 1, dtype=complex))

    @classmethod
    def delta(cls, k: int, value: complex = 1.0, K: int | None = None) -> "FourierSeq":
        K = abs(k) if K is None else K
        return cls.from_dict({k: value}, K)

    @classmethod
    def from_dict(cls, entries: Mapping[int, complex], K: int | None = None) -> "FourierSeq":
        if K is None:
            K = max((abs(int(k)) for k in entries), default=0)
        c = np.zeros(2 * K + 1, dtype=complex)
        for k, val in entries.items():
            k = int(k)
            if abs(k) > K:
                raise ValueError(f"index {k} outside support radius {K}")
            c[k + K] = val
        return cls(K, c)

    @classmethod
    def from_function(cls, K: int, func) -> "FourierSeq":
        ks = np.arange(-K, K + 1)
        return cls(K, np.asarray(func(ks), dtype=complex))

    @property
    def indices(self) -> np.ndarray:
        return np.arange(-self.K, self.K + 1)

    def __getitem__(self, k):
        k = np.asarray(k)
        if not np.issubdtype(k.dtype, np.integer):
            raise TypeError("FourierSeq indices must be integers")
        inside = np.abs(k) <= self.K
        pos = np.where(inside, k + self.K, 0)
        out = np.where(inside, self.coeffs[pos], 0.0)
        return complex(out) if out.ndim == 0 else out

    def __call__(self, k):
        return self[k]

    def __len__(self):
        return 2 * self.K + 1

    def __eq__(self, other):
        if not isinstance(other, FourierSeq):
            return NotImplemented
        K = max(self.K, other.K)
        return bool(np.array_equal(self.padded(K).coeffs, other.padded(K).coeffs))

    def __hash__(self):
        return hash((self.K, self.coeffs.tobytes()))

    def __repr__(self):
        nz = {int(k): complex(c) for k, c in zip(self.indices, self.coeffs) if c != 0}
        return f"FourierSeq(K={self.K}, nonzero={nz})"

    # algebra
    def __add__(self, other: "FourierSeq") -> "FourierSeq":
        K = max(self.K, other.K)
        return FourierSeq(K, self.padded(K).coeffs + other.padded(K).coeffs)

    def __sub__(self, other: "FourierSeq") -> "FourierSeq":
        return self + (-1.0) * other

    def __mul__(self, scalar) -> "FourierSeq":
        return FourierSeq(self.K, self.coeffs * scalar)

    __rmul__ = __mul__

    def padded(self, K: int) -> "FourierSeq":
        """Same sequence with support radius raised to ``K``."""
        if K < self.K:
            raise ValueError("padded() cannot shrink; use truncated()")
        if K == self.K:
            return self
        c = np.zeros(2 * K + 1, dtype=complex)
        c[K - self.K:K + self.K + 1] = self.coeffs
        return FourierSeq(K, c)

    def truncated(self, K: int) -> "FourierSeq":
        """Drop all coefficients with ``|k| > K``."""
        if K >= self.K:
            return self.padded(K)
        return FourierSeq(K, self.coeffs[self.K - K:self.K + K + 1])

    def shifted(self, n: int) -> "FourierSeq":
        """Return ``b`` with ``b(i) = a(i - n)``."""
        K = self.K + abs(n)
        c = np.zeros(2 * K + 1, dtype=complex)
        start = K - self.K + n
        c[start:start + 2 * self.K + 1] = self.coeffs
        return FourierSeq(K, c)

    def conj_reflect(self) -> "FourierSeq":
        """Return ``k -> conj(a(-k))``."""
        return FourierSeq(self.K, np.conj(self.coeffs[::-1]))

    def is_real_symmetric(self, atol: float = 0.0) -> bool:
        return bool(np.all(np.abs(self.coeffs - np.conj(self.coeffs[::-1])) <= atol))

    def is_one_periodic(self) -> bool:
        odd = (self.indices % 2) != 0
        return bool(np.all(self.coeffs[odd] == 0))

    # serialization
    def to_json_dict(self) -> dict:
        return {"K": self.K, "re": self.coeffs.real.tolist(), "im": self.coeffs.imag.tolist()}

    def to_json(self) -> str:
        return json.dumps(self.to_json_dict())

    @classmethod
    def from_json_dict(cls, d: Mapping) -> "FourierSeq":
        K = int(d["K"])
        re = np.asarray(d["re"], dtype=float)
        im = np.asarray(d["im"], dtype=float)
        if re.shape != (2 * K + 1,) or im.shape != (2 * K + 1,):
            raise ValueError("re/im arrays must have length 2K+1")
        return cls(K, re + 1j * im)

    @classmethod
    def from_json(cls, text: str) -> "FourierSeq":
        return cls.from_json_dict(json.loads(text))


@dataclass(frozen=True)
class WeightParams:
    """Exponent ``s`` and shift ``n`` of the weight ``<j + n>^{2s}``."""

    s: float
    shift_n: int = 0

    def __post_init__(self):
        if not math.isfinite(self.s):
            raise ValueError("weight exponent must be finite")


def h_norm(a: FourierSeq, s: Union[float, WeightParams], shift_n: int = 0) -> float:
    """Weighted l2 norm ``(sum_j <j+n>^{2s} |a(j)|^2)^{1/2}``.

    ``s`` may be a :class:`WeightParams`, in which case ``shift_n`` is
    taken from it.
    """
    if isinstance(s, WeightParams):
        s, shift_n = s.s, s.shift_n
    w = bracket_weight(a.indices + shift_n).astype(float) ** (2.0 * s)
    return float(math.sqrt(np.sum(w * np.abs(a.coeffs) ** 2)))


def convolve(a: FourierSeq, b: FourierSeq) -> FourierSeq:
    """Exact convolution ``(a*b)(k) = sum_j a(k-j) b(j)``."""
    return FourierSeq(a.K + b.K, np.convolve(a.coeffs, b.coeffs))


def conv_bound_ratio(a: FourierSeq, b: FourierSeq, r: float, s: float, t: float, n: int) -> float:
    """Ratio ``||a*b||_{h^t} / (||a||_{h^{r,n}} ||b||_{h^{s,-n}})``.

    The admissible parameter set is ``s, r >= 0``, ``t <= min(s, r)`` and
    ``s + r - t > 1/2``; on that set the ratio is bounded by a constant
    independent of ``n``.
    """
    if r < 0 or s < 0:
        raise ValueError("r and s must be nonnegative")
    if t > min(s, r):
        raise ValueError("t must not exceed min(s, r)")
    if not s + r - t > 0.5:
        raise ValueError("need s + r - t > 1/2")
    den = h_norm(a, r, n) * h_norm(b, s, -n)
    if den == 0.0:
        raise ValueError("ratio undefined for a zero factor")
    return h_norm(convolve(a, b), t) / den


@dataclass(frozen=True)
class ExplicitProfile:
    """Coefficients given one by one as ``{k: v(k)}``."""

    coeffs: Mapping[int, complex]

    def __post_init__(self):
        object.__setattr__(self, "coeffs", {int(k): complex(c) for k, c in self.coeffs.items()})


@dataclass(frozen=True)
class RandomDecayProfile:
    """``|v(k)| = <k>^exponent`` with unit-modulus random phases.

    ``exponent=None`` selects ``m*alpha - 1/2 - RANDOM_DECAY_DELTA``, which
    keeps ``v`` in ``h^{-m alpha}`` uniformly in the support radius.
    """

    seed: int = 0
    exponent: float | None = None


@dataclass(frozen=True)
class PotentialSpec:
    m: int
    alpha: float
    profile: Union[ExplicitProfile, RandomDecayProfile] = field(default_factory=RandomDecayProfile)
    real_symmetric: bool = False
    one_periodic: bool = False

    def __post_init__(self):
        if int(self.m) != self.m or self.m < 1:
            raise ValueError(f"order m must be a positive integer, got {self.m}")
        if not 0.0 <= self.alpha < 1.0:
            raise ValueError(f"alpha must lie in [0, 1), got {self.alpha}")

    def decay_exponent(self) -> float:
        if isinstance(self.profile, RandomDecayProfile) and self.profile.exponent is not None:
            return float(self.profile.exponent)
        return self.m * self.alpha - 0.5 - RANDOM_DECAY_DELTA


def _random_phases(seed: int, K: int) -> np.ndarray:
    # Draw order 1, -1, 2, -2, ... so that coefficients with |k| <= K do not
    # depend on K.
    rng = np.random.default_rng(seed)
    draws = rng.uniform(0.0, 2.0 * np.pi, size=2 * K)
    phases = np.zeros(2 * K + 1)
    ks = np.arange(1, K + 1)
    phases[K + ks] = draws[0::2]
    phases[K - ks] = draws[1::2]
    return phases


def make_potential(spec: PotentialSpec, K: int) -> FourierSeq:
    """Build the normalized coefficient sequence ``v`` with support radius K.

    ``v(0)`` is always set to zero (adding a constant to the potential only
    shifts the spectrum). For explicit profiles the symmetry flags are
    validated; for random profiles they are enforced by construction.
    """
    if int(K) != K or K < 1:
        raise ValueError(f"support radius K must be an integer >= 1, got {K}")
    ks = np.arange(-K, K + 1)
    if isinstance(spec.profile, ExplicitProfile):
        v = FourierSeq.from_dict(spec.profile.coeffs, K)
        c = np.array(v.coeffs)
        c[K] = 0.0
        v = FourierSeq(K, c)
        if spec.real_symmetric and not v.is_real_symmetric():
            raise ValueError("explicit coefficients violate v(-k) = conj(v(k))")
        if spec.one_periodic and not v.is_one_periodic():
            raise ValueError("explicit coefficients violate v(2k+1) = 0")
        return v
    if not isinstance(spec.profile, RandomDecayProfile):
        raise TypeError(f"unknown coefficient profile {spec.profile!r}")
    mags = bracket_weight(ks).astype(float) ** spec.decay_exponent()
    phases = _random_phases(spec.profile.seed, K)
    c = mags * np.exp(1j * phases)
    c[K] = 0.0
    if spec.one_periodic:
        c[(ks % 2) != 0] = 0.0
    if spec.real_symmetric:
        # exact conjugate symmetry, independent of rounding in exp()
        c[:K] = np.conj(c[K + 1:][::-1])
    return FourierSeq(K, c)
