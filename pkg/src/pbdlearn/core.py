"""Poisson binomial ground truth: specs, exact pmfs, sampling, moments and distances."""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field

import numpy as np
from scipy import signal, stats

# Groups of identical probabilities at least this large use a closed-form binomial pmf.
_BINOMIAL_GROUP_MIN = 64
# Above this many indicators per-draw Bernoulli sampling is replaced by inverse-cdf draws.
_PER_INDICATOR_MAX_N = 10_000
_FFT_MIN_PRODUCT = 250_000


class EmptyConditioningError(ValueError):
    """Raised when conditioning on an interval that carries zero probability."""


@dataclass(frozen=True)
class PbdSpec:
    probs: np.ndarray

    def __post_init__(self):
        p = np.asarray(self.probs, dtype=float).copy()
        if p.ndim != 1 or p.size < 1:
            raise ValueError("a PBD needs at least one indicator")
        if np.any(~np.isfinite(p)) or np.any(p < 0.0) or np.any(p > 1.0):
            raise ValueError("indicator means must lie in [0, 1]")
        p.setflags(write=False)
        object.__setattr__(self, "probs", p)

    @property
    def n(self) -> int:
        return int(self.probs.size)


@dataclass(frozen=True)
class DensePmf:
    """Probability mass on the integers ``origin, origin+1, ..., origin+len(mass)-1``."""

    origin: int
    mass: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.mass, dtype=float).copy()
        if m.ndim != 1 or m.size < 1:
            raise ValueError("mass must be a non-empty vector")
        if np.any(m < 0.0):
            raise ValueError("mass entries must be nonnegative")
        if abs(m.sum() - 1.0) > 1e-9:
            raise ValueError(f"mass sums to {m.sum()!r}, not 1")
        m.setflags(write=False)
        object.__setattr__(self, "origin", int(self.origin))
        object.__setattr__(self, "mass", m)

    @property
    def end(self) -> int:
        """Last integer covered (inclusive)."""
        return self.origin + self.mass.size - 1

    def support(self) -> np.ndarray:
        return self.origin + np.flatnonzero(self.mass > 0)

    def prob(self, points) -> np.ndarray:
        pts = np.asarray(points, dtype=np.int64)
        idx = pts - self.origin
        inside = (idx >= 0) & (idx < self.mass.size)
        out = np.zeros(pts.shape, dtype=float)
        out[inside] = self.mass[idx[inside]]
        return out

    def on(self, lo: int, hi: int) -> np.ndarray:
        """Mass vector over ``lo..hi`` with zeros outside the stored range."""
        return self.prob(np.arange(lo, hi + 1))

    def cdf(self) -> np.ndarray:
        return np.cumsum(self.mass)

    def trimmed(self) -> "DensePmf":
        """Drop exactly-zero entries at both ends."""
        nz = np.flatnonzero(self.mass > 0)
        return DensePmf(self.origin + int(nz[0]), self.mass[nz[0] : nz[-1] + 1])

    def mean(self) -> float:
        x = np.arange(self.origin, self.end + 1, dtype=float)
        return float(np.dot(x, self.mass))

    def variance(self) -> float:
        x = np.arange(self.origin, self.end + 1, dtype=float)
        mu = np.dot(x, self.mass)
        return float(np.dot((x - mu) ** 2, self.mass))


@dataclass(frozen=True)
class MomentSummary:
    mean: float
    variance: float


@dataclass(frozen=True)
class SampleBatch:
    values: np.ndarray
    seed: int | None
    domain: tuple[int, int] | None = None
    count: int = field(init=False)

    def __post_init__(self):
        v = np.asarray(self.values, dtype=np.int64).copy()
        v.setflags(write=False)
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "count", int(v.size))
        if self.domain is not None and v.size:
            lo, hi = self.domain
            if v.min() < lo or v.max() > hi:
                raise ValueError("sample value outside declared domain")


def make_rng(seed: int) -> np.random.Generator:
    """PCG64 generator; every randomized API takes an explicit seed and routes through here."""
    return np.random.Generator(np.random.PCG64(int(seed)))


def derive_seed(seed: int, *keys: int) -> int:
    """Deterministic 63-bit child seed for ``(seed, *keys)``."""
    ss = np.random.SeedSequence([int(seed) & 0xFFFFFFFFFFFFFFFF, *(int(k) for k in keys)])
    return int(ss.generate_state(1, np.uint64)[0] >> np.uint64(1))


def _bernoulli_dp(probs: np.ndarray) -> np.ndarray:
    mass = np.ones(1)
    for p in probs:
        nxt = np.empty(mass.size + 1)
        nxt[:-1] = mass * (1.0 - p)
        nxt[-1] = 0.0
        nxt[1:] += mass * p
        mass = nxt
    return mass


def _convolve(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    if a.size * b.size >= _FFT_MIN_PRODUCT:
        out = signal.fftconvolve(a, b)
        np.clip(out, 0.0, None, out=out)
        return out
    return np.convolve(a, b)


def _convolve_all(parts: list[np.ndarray]) -> np.ndarray:
    if not parts:
        return np.ones(1)
    while len(parts) > 1:
        merged = [_convolve(parts[i], parts[i + 1]) for i in range(0, len(parts) - 1, 2)]
        if len(parts) % 2:
            merged.append(parts[-1])
        parts = merged
    return parts[0]


def nontrivial_pmf(probs) -> tuple[int, np.ndarray]:
    """Exact pmf of a Bernoulli sum as ``(shift, mass)``, with ``shift`` the number of sure ones.

    Indicators equal to 0 or 1 only shift the support, so the returned vector has
    length ``#nontrivial + 1``.
    """
    p = np.asarray(probs, dtype=float)
    ones = int(np.count_nonzero(p == 1.0))
    inner = p[(p > 0.0) & (p < 1.0)]
    if inner.size == 0:
        return ones, np.ones(1)
    parts = []
    singles = []
    for value, count in sorted(Counter(inner.tolist()).items()):
        if count >= _BINOMIAL_GROUP_MIN:
            parts.append(stats.binom.pmf(np.arange(count + 1), count, value))
        else:
            singles.extend([value] * count)
    for start in range(0, len(singles), 512):
        parts.append(_bernoulli_dp(np.asarray(singles[start : start + 512])))
    mass = _convolve_all(parts)
    np.clip(mass, 0.0, None, out=mass)
    return ones, mass / mass.sum()


def pbd_pmf(spec: PbdSpec) -> DensePmf:
    """Exact pmf of ``sum X_i`` over ``0..n``."""
    ones, inner = nontrivial_pmf(spec.probs)
    full = np.zeros(spec.n + 1)
    full[ones : ones + inner.size] = inner
    return DensePmf(0, full)


def pbd_sample(spec: PbdSpec, m: int, seed: int, method: str = "auto") -> SampleBatch:
    """Draw ``m`` i.i.d. values of the sum.

    ``method`` is ``"indicator"`` (sum of per-indicator Bernoulli draws), ``"inverse-cdf"``
    (search in the exact cdf) or ``"auto"`` (indicator draws for n <= 10^4).
    """
    if m < 1:
        raise ValueError("m must be positive")
    rng = make_rng(seed)
    if method == "auto":
        method = "indicator" if spec.n <= _PER_INDICATOR_MAX_N else "inverse-cdf"
    if method == "indicator":
        out = np.empty(m, dtype=np.int64)
        rows = max(1, (1 << 22) // spec.n)
        for start in range(0, m, rows):
            stop = min(m, start + rows)
            u = rng.random((stop - start, spec.n))
            out[start:stop] = (u < spec.probs).sum(axis=1)
    elif method == "inverse-cdf":
        out = sample_from_pmf(pbd_pmf(spec), m, rng)
    else:
        raise ValueError(f"unknown sampling method {method!r}")
    return SampleBatch(out, seed, (0, spec.n))


def sample_from_pmf(pmf: DensePmf, m: int, rng: np.random.Generator) -> np.ndarray:
    t = pmf.trimmed()
    cdf = np.cumsum(t.mass)
    cdf[-1] = 1.0
    idx = np.searchsorted(cdf, rng.random(m), side="right")
    return t.origin + np.minimum(idx, t.mass.size - 1).astype(np.int64)


def tv_distance(p: DensePmf, q: DensePmf) -> float:
    lo = min(p.origin, q.origin)
    hi = max(p.end, q.end)
    return 0.5 * float(np.abs(p.on(lo, hi) - q.on(lo, hi)).sum())


def moments(spec: PbdSpec) -> MomentSummary:
    p = spec.probs
    return MomentSummary(float(p.sum()), float(np.dot(p, 1.0 - p)))


def conditional_restrict(p: DensePmf, a: int, b: int) -> DensePmf:
    """The law of ``X`` conditioned on ``a <= X <= b``."""
    if b < a:
        raise EmptyConditioningError(f"empty interval [{a}, {b}]")
    block = p.on(a, b)
    total = block.sum()
    if total <= 0.0:
        raise EmptyConditioningError(f"interval [{a}, {b}] has zero probability")
    return DensePmf(a, block / total)


def point_mass(x: int) -> DensePmf:
    return DensePmf(int(x), np.ones(1))
