"""Sums of Bernoullis with a few known distinct weights.

Weights may be rationals.  All support arithmetic is done on integers after multiplying
by the least common denominator of the weights (``scale``), so a sample value ``v``
stands for ``v / scale``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np

from .core import DensePmf, PbdSpec, _convolve_all, pbd_pmf, tv_distance
from .hypotheses import PmfHypothesis
from .learn import LearnConfig
from .oracle import PmfOracle, SampleOracle
from .proper import BinomialFormSpec, form_groups, grid_size, group_pmf
from .selection import TournamentRecord, tournament_select


class CandidateBudgetExceeded(RuntimeError):
    """The cover would hold more candidates than the configured budget allows."""


@dataclass(frozen=True)
class WeightClass:
    weight: Fraction
    probs: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "weight", Fraction(self.weight))
        p = np.asarray(self.probs, dtype=float)
        if p.ndim != 1 or p.size == 0 or np.any((p < 0) | (p > 1)) or not np.all(np.isfinite(p)):
            raise ValueError("each class needs at least one probability in [0, 1]")
        p = p.copy()
        p.setflags(write=False)
        object.__setattr__(self, "probs", p)

    @property
    def count(self) -> int:
        return int(self.probs.size)


@dataclass(frozen=True)
class WeightedSumSpec:
    classes: tuple[WeightClass, ...]

    def __post_init__(self):
        object.__setattr__(self, "classes", tuple(self.classes))
        if not self.classes:
            raise ValueError("need at least one weight class")
        weights = [c.weight for c in self.classes]
        if len(set(weights)) != len(weights):
            raise ValueError("class weights must be pairwise distinct")

    @classmethod
    def from_indicators(cls, weights: Sequence, probs: Sequence[float]) -> "WeightedSumSpec":
        """Group per-indicator ``(a_i, p_i)`` pairs by weight, in order of first appearance."""
        if len(weights) != len(probs):
            raise ValueError("one weight per indicator")
        groups: dict[Fraction, list[float]] = {}
        for a, p in zip(weights, probs):
            groups.setdefault(Fraction(a), []).append(float(p))
        return cls(tuple(WeightClass(w, np.array(ps)) for w, ps in groups.items()))

    @property
    def n(self) -> int:
        return sum(c.count for c in self.classes)

    @property
    def k(self) -> int:
        return len(self.classes)

    @property
    def scale(self) -> int:
        return math.lcm(*(c.weight.denominator for c in self.classes))

    def shape(self) -> list[tuple[Fraction, int]]:
        return [(c.weight, c.count) for c in self.classes]

    def expanded(self) -> tuple[list[Fraction], np.ndarray]:
        """Per-indicator weights and means, class by class."""
        weights = [c.weight for c in self.classes for _ in range(c.count)]
        return weights, np.concatenate([c.probs for c in self.classes])

    def to_document(self) -> dict:
        return {
            "type": "weighted",
            "classes": [
                {"weight": str(c.weight), "p": c.probs.tolist()} for c in self.classes
            ],
        }


@dataclass(frozen=True)
class SparsePmf:
    """Probabilities on the points ``support / scale``; only positive masses are stored."""

    scale: int
    support: np.ndarray
    probs: np.ndarray

    def __post_init__(self):
        if self.support.shape != self.probs.shape:
            raise ValueError("support and probabilities must align")
        if np.any(self.probs < 0) or abs(float(self.probs.sum()) - 1.0) > 1e-9:
            raise ValueError("probabilities must be nonnegative and sum to 1")

    @classmethod
    def from_dense(cls, pmf: DensePmf, scale: int) -> "SparsePmf":
        nz = np.flatnonzero(pmf.mass > 0)
        return cls(scale, pmf.origin + nz.astype(np.int64), pmf.mass[nz])

    def to_dense(self) -> DensePmf:
        lo, hi = int(self.support.min()), int(self.support.max())
        mass = np.zeros(hi - lo + 1)
        mass[self.support - lo] = self.probs
        return DensePmf(lo, mass)

    def as_dict(self) -> dict[Fraction, float]:
        return {Fraction(int(s), self.scale): float(p) for s, p in zip(self.support, self.probs)}


def _int_weights(shape: Sequence[tuple[Fraction, int]]) -> tuple[int, list[int]]:
    scale = math.lcm(*(Fraction(w).denominator for w, _ in shape))
    return scale, [int(Fraction(w) * scale) for w, _ in shape]


def _spread(mass: np.ndarray, weight: int) -> DensePmf:
    """Law of ``weight * S`` for ``S`` with pmf ``mass`` on ``0..len-1``."""
    if weight == 0:
        return DensePmf(0, np.array([1.0]))
    step = abs(weight)
    out = np.zeros((mass.size - 1) * step + 1)
    out[::step] = mass if weight > 0 else mass[::-1]
    origin = 0 if weight > 0 else weight * (mass.size - 1)
    return DensePmf(origin, out)


def _combine(parts: list[DensePmf]) -> DensePmf:
    origin = sum(p.origin for p in parts)
    mass = _convolve_all([p.mass for p in parts])
    mass = np.clip(mass, 0.0, None)
    return DensePmf(origin, mass / mass.sum())


def weighted_dense_pmf(spec: WeightedSumSpec) -> DensePmf:
    """Exact pmf on the integer grid ``scale * W``."""
    _, ints = _int_weights(spec.shape())
    parts = [_spread(pbd_pmf(PbdSpec(c.probs)).mass, w) for c, w in zip(spec.classes, ints)]
    return _combine(parts)


def weighted_pmf(spec: WeightedSumSpec) -> SparsePmf:
    return SparsePmf.from_dense(weighted_dense_pmf(spec), spec.scale)


def weighted_oracle(spec: WeightedSumSpec, seed: int) -> PmfOracle:
    """Sample source over scaled integer values ``scale * X``."""
    return PmfOracle(weighted_dense_pmf(spec), seed)


# ---------------------------------------------------------------- cover


@dataclass
class ClassCover:
    """Net of PBDs for one class: means vectors and their pmfs on ``0..n_j``."""

    weight: Fraction
    count: int
    probs: list[np.ndarray]
    pmfs: np.ndarray
    raw_size: int

    def __len__(self) -> int:
        return len(self.probs)


def _class_raw_forms(count: int, eps_c: float, config: LearnConfig, k_classes: int, eps: float):
    """``(means, pmf on 0..count)`` for every raw cover member of one class."""
    k = grid_size(eps_c, config.C)
    for group in form_groups(k, None, config.weighted_distinct_cap, count):
        g = group_pmf(group)
        probs = np.repeat(
            [i / k**2 for i, _ in group.multiplicities], [c for _, c in group.multiplicities]
        )
        for ones in range(group.ones_lo, group.ones_hi + 1):
            pmf = np.zeros(count + 1)
            pmf[ones : ones + g.size] = g
            means = np.zeros(count)
            means[:ones] = 1.0
            means[ones : ones + group.ell] = probs
            yield means, pmf
    floor_var = k * k - k - 1 - 3.0 / k
    step = Fraction(1, k_classes * count * math.ceil(1.0 / eps))
    n_q = int(1 / step)
    for ell in range(1, count + 1):
        if ell / 4.0 < floor_var:
            continue
        for j in range(1, n_q):
            q = float(j * step)
            for t in range(0, count - ell + 1):
                form = BinomialFormSpec(ell, q, t)
                if form.is_heavy(k):
                    spec = form.to_spec(count)
                    yield spec.probs, pbd_pmf(spec).mass


_class_cover_cache: dict[tuple, "ClassCover"] = {}


def build_class_cover(
    weight, count: int, eps_c: float, config: LearnConfig, k_classes: int = 1, eps: float | None = None
) -> ClassCover:
    """Sparse forms plus certified heavy Binomial forms, thinned greedily so that every
    raw form lies within ``eps_c`` of a kept one (exact total variation)."""
    eps = eps_c * k_classes if eps is None else eps
    key = (count, eps_c, k_classes, eps, config.C, config.weighted_distinct_cap)
    if key not in _class_cover_cache:
        kept_probs: list[np.ndarray] = []
        kept = np.empty((64, count + 1))
        size = raw = 0
        for probs, pmf in _class_raw_forms(count, eps_c, config, k_classes, eps):
            raw += 1
            if size and (0.5 * np.abs(kept[:size] - pmf[None, :]).sum(axis=1)).min() <= eps_c:
                continue
            if size == kept.shape[0]:
                kept = np.vstack([kept, np.empty_like(kept)])
            kept[size] = pmf
            size += 1
            kept_probs.append(probs)
        _class_cover_cache[key] = ClassCover(Fraction(0), count, kept_probs, kept[:size].copy(), raw)
    base = _class_cover_cache[key]
    return ClassCover(Fraction(weight), count, base.probs, base.pmfs, base.raw_size)


@dataclass
class WeightedCover:
    classes: list[ClassCover]
    scale: int
    int_weights: list[int]

    def __len__(self) -> int:
        return math.prod(len(c) for c in self.classes)

    def index_tuple(self, idx: int) -> tuple[int, ...]:
        return tuple(int(i) for i in np.unravel_index(idx, [len(c) for c in self.classes]))

    def spec(self, idx: int) -> WeightedSumSpec:
        picks = self.index_tuple(idx)
        return WeightedSumSpec(
            tuple(WeightClass(c.weight, c.probs[i]) for c, i in zip(self.classes, picks))
        )

    def dense(self, idx: int) -> DensePmf:
        picks = self.index_tuple(idx)
        parts = [_spread(c.pmfs[i], w) for c, i, w in zip(self.classes, picks, self.int_weights)]
        return _combine(parts)

    def sizes(self) -> list[int]:
        return [len(c) for c in self.classes]


class CoverCandidates(Sequence):
    """Lazily built hypotheses for the members of a weighted cover."""

    def __init__(self, cover: WeightedCover):
        self.cover = cover
        self._cache: dict[int, PmfHypothesis] = {}

    def __len__(self) -> int:
        return len(self.cover)

    def __getitem__(self, idx):
        if isinstance(idx, slice):
            return [self[i] for i in range(*idx.indices(len(self)))]
        if idx < 0:
            idx += len(self)
        if not 0 <= idx < len(self):
            raise IndexError(idx)
        if idx not in self._cache:
            self._cache[idx] = PmfHypothesis(self.cover.dense(idx))
        return self._cache[idx]


def build_weighted_cover(
    shape: Sequence[tuple[Fraction, int]], eps: float, config: LearnConfig | None = None
) -> WeightedCover:
    """Product of per-class ``(eps/k)``-covers.  Raises :class:`CandidateBudgetExceeded`
    when the product exceeds ``config.candidate_budget``."""
    config = config or LearnConfig()
    shape = [(Fraction(w), int(c)) for w, c in shape]
    k = len(shape)
    if k < 1:
        raise ValueError("need at least one weight class")
    eps_c = eps / k
    classes = []
    total = 1
    for w, count in shape:
        cc = build_class_cover(w, count, eps_c, config, k_classes=k, eps=eps)
        classes.append(cc)
        total *= len(cc)
        if total > config.candidate_budget:
            raise CandidateBudgetExceeded(
                f"cover would hold more than {config.candidate_budget} candidates; "
                "use a coarser eps or a smaller weighted_distinct_cap"
            )
    scale, ints = _int_weights(shape)
    return WeightedCover(classes, scale, ints)


@dataclass
class WeightedResult:
    spec: WeightedSumSpec
    cover_size: int
    class_sizes: list[int]
    winner_index: int | None
    tournament: TournamentRecord
    samples_used: int
    flags: list[str]

    def metrics(self) -> dict:
        return {
            "cover_size": self.cover_size,
            "class_sizes": self.class_sizes,
            "winner_index": self.winner_index,
            "samples_used": self.samples_used,
            "flags": list(self.flags),
            "tournament": self.tournament.to_document(),
        }


def learn_weighted(
    oracle: SampleOracle,
    shape: Sequence[tuple[Fraction, int]],
    eps: float,
    delta: float,
    config: LearnConfig | None = None,
) -> WeightedResult:
    """Tournament over the weighted cover; samples must be scaled integers ``scale * X``.

    When every candidate loses at least once, the candidate with the fewest losses is
    returned and the result is flagged.
    """
    config = config or LearnConfig()
    cover = build_weighted_cover(shape, eps, config)
    start = oracle.used
    candidates = CoverCandidates(cover)
    winner, rec = tournament_select(oracle, candidates, eps, delta)
    flags: list[str] = []
    idx = rec.winner_index
    if winner is None:
        flags.append("tournament-failed")
        idx = int(np.argmin(rec.losses))
    return WeightedResult(
        cover.spec(idx), len(cover), cover.sizes(), idx, rec, oracle.used - start, flags
    )


def weighted_tv(spec: WeightedSumSpec, other: WeightedSumSpec) -> float:
    if spec.shape() != other.shape():
        raise ValueError("specs must share weights and class sizes")
    return tv_distance(weighted_dense_pmf(spec), weighted_dense_pmf(other))


__all__ = [
    "CandidateBudgetExceeded",
    "WeightClass",
    "WeightedSumSpec",
    "SparsePmf",
    "weighted_pmf",
    "weighted_dense_pmf",
    "weighted_oracle",
    "ClassCover",
    "WeightedCover",
    "CoverCandidates",
    "build_class_cover",
    "build_weighted_cover",
    "WeightedResult",
    "learn_weighted",
    "weighted_tv",
]
