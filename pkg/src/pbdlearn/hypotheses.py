"""Evaluable hypothesis distributions over the integers.

Every hypothesis answers two questions: what its pmf is on an integer range, and whether
that support is finite.  Unbounded hypotheses (translated Poisson laws) also report a
window holding all but a negligible sliver of their mass and the exact mass outside any
range, which is what the competition routine needs.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .core import DensePmf, PbdSpec, pbd_pmf
from .poisson_eval import (
    TranslatedPoissonParams,
    tp_mass_outside,
    tp_pmf,
    tp_pmf_array,
    tp_window,
)


class Hypothesis:
    kind: str = "abstract"

    def support(self) -> tuple[int, int] | None:
        """Finite support interval, or ``None`` for unbounded laws."""
        raise NotImplementedError

    def window(self) -> tuple[int, int]:
        raise NotImplementedError

    def pmf_on(self, lo: int, hi: int) -> np.ndarray:
        raise NotImplementedError

    def pmf_at(self, points) -> np.ndarray:
        pts = np.asarray(points, dtype=np.int64)
        if pts.size == 0:
            return np.zeros(0)
        lo, hi = int(pts.min()), int(pts.max())
        return self.pmf_on(lo, hi)[pts - lo]

    def mass_outside(self, lo: int, hi: int) -> float:
        raise NotImplementedError

    def to_dense(self) -> DensePmf:
        lo, hi = self.window()
        mass = np.clip(self.pmf_on(lo, hi), 0.0, None)
        return DensePmf(lo, mass / mass.sum())

    def payload(self) -> dict:
        raise NotImplementedError

    def to_document(self) -> dict:
        return {"type": self.kind, **self.payload()}


@dataclass
class PmfHypothesis(Hypothesis):
    """Hypothesis given by an explicit finite pmf."""

    pmf: DensePmf
    kind: str = "pmf"

    def support(self):
        return self.pmf.origin, self.pmf.end

    def window(self):
        return self.support()

    def pmf_on(self, lo, hi):
        return self.pmf.on(lo, hi)

    def mass_outside(self, lo, hi):
        return max(0.0, 1.0 - float(self.pmf.on(lo, hi).sum()))

    def to_dense(self):
        return self.pmf

    def payload(self):
        return {"origin": self.pmf.origin, "mass": self.pmf.mass.tolist()}


@dataclass
class SparseIntervalHypothesis(PmfHypothesis):
    """Explicit pmf on ``[a, b]``; ``failed`` marks the trivial point mass at 0."""

    failed: bool = False
    kind: str = "sparse"

    @property
    def a(self) -> int:
        return self.pmf.origin

    @property
    def b(self) -> int:
        return self.pmf.end

    def payload(self):
        return {"a": self.a, "b": self.b, "mass": self.pmf.mass.tolist(), "failed": self.failed}


@dataclass
class PbdHypothesis(PmfHypothesis):
    spec: PbdSpec | None = None
    kind: str = "pbd"

    @classmethod
    def from_spec(cls, spec: PbdSpec) -> "PbdHypothesis":
        return cls(pbd_pmf(spec).trimmed(), spec=spec)

    def payload(self):
        return {"p": self.spec.probs.tolist()}


@dataclass
class TranslatedPoissonHypothesis(Hypothesis):
    params: TranslatedPoissonParams
    kind: str = "translated-poisson"

    def support(self):
        return None

    def window(self):
        return tp_window(self.params)

    def pmf_on(self, lo, hi):
        return tp_pmf_array(self.params, lo, hi)

    def mass_outside(self, lo, hi):
        return tp_mass_outside(self.params, lo, hi)

    def payload(self):
        return {"mu": self.params.mu, "sigma2": self.params.sigma2}


@dataclass
class DiscretizedTpHypothesis(Hypothesis):
    """Translated Poisson law whose values on a point set come from the additive-error
    evaluator at accuracy ``1/t``; other points are evaluated on demand and memoized."""

    params: TranslatedPoissonParams
    t: int
    table: dict[int, float] = field(default_factory=dict)
    kind: str = "discretized-tp"

    def value(self, i: int) -> float:
        i = int(i)
        if i not in self.table:
            self.table[i] = tp_pmf(self.params, i, self.t)
        return self.table[i]

    def support(self):
        return None

    def window(self):
        return tp_window(self.params)

    def pmf_on(self, lo, hi):
        return np.array([self.value(i) for i in range(lo, hi + 1)])

    def mass_outside(self, lo, hi):
        return tp_mass_outside(self.params, lo, hi)

    def to_dense(self):
        lo, hi = self.window()
        mass = tp_pmf_array(self.params, lo, hi)
        return DensePmf(lo, mass / mass.sum())

    def payload(self):
        return {
            "mu": self.params.mu,
            "sigma2": self.params.sigma2,
            "t": self.t,
            "table": [[k, v] for k, v in sorted(self.table.items())],
        }


@dataclass
class PiecewiseUniformHypothesis(Hypothesis):
    """Uniform mass on each of a list of contiguous integer intervals."""

    intervals: list[tuple[int, int]]
    masses: np.ndarray
    domain: tuple[int, int]
    kind: str = "piecewise-uniform"

    def __post_init__(self):
        self.masses = np.asarray(self.masses, dtype=float)
        if len(self.intervals) != self.masses.size:
            raise ValueError("one mass per interval")
        prev = self.domain[0] - 1
        for a, b in self.intervals:
            if a != prev + 1 or b < a:
                raise ValueError("intervals must be ordered, contiguous and nonempty")
            prev = b
        if prev != self.domain[1]:
            raise ValueError("intervals must cover the domain")
        if np.any(self.masses < 0) or abs(self.masses.sum() - 1.0) > 1e-9:
            raise ValueError("interval masses must be a probability vector")
        self._dense = None

    def as_pmf(self) -> DensePmf:
        if self._dense is None:
            lo, hi = self.domain
            mass = np.empty(hi - lo + 1)
            for (a, b), w in zip(self.intervals, self.masses):
                mass[a - lo : b - lo + 1] = w / (b - a + 1)
            self._dense = DensePmf(lo, mass / mass.sum())
        return self._dense

    def support(self):
        return self.domain

    def window(self):
        return self.domain

    def pmf_on(self, lo, hi):
        return self.as_pmf().on(lo, hi)

    def mass_outside(self, lo, hi):
        return max(0.0, 1.0 - float(self.pmf_on(lo, hi).sum()))

    def to_dense(self):
        return self.as_pmf()

    def payload(self):
        return {
            "domain": list(self.domain),
            "intervals": [[int(a), int(b), float(w)] for (a, b), w in zip(self.intervals, self.masses)],
        }


def binomial_spec(n_hat: int, p_hat: float, n: int) -> PbdSpec:
    """Length-``n`` PBD with ``n_hat`` copies of ``p_hat`` followed by zeros."""
    if not 0 <= n_hat <= n:
        raise ValueError("binomial size must be within 0..n")
    probs = np.zeros(n)
    probs[:n_hat] = min(1.0, max(0.0, p_hat))
    return PbdSpec(probs)


def tv_to(target: DensePmf, h: Hypothesis) -> float:
    """Exact TV between a finite target pmf and a hypothesis, counting mass outside the target range."""
    lo, hi = target.origin, target.end
    inside = h.pmf_on(lo, hi)
    return 0.5 * (float(np.abs(target.mass - inside).sum()) + h.mass_outside(lo, hi))


def is_finite(h: Hypothesis) -> bool:
    return h.support() is not None


__all__ = [
    "Hypothesis",
    "PmfHypothesis",
    "SparseIntervalHypothesis",
    "PbdHypothesis",
    "TranslatedPoissonHypothesis",
    "DiscretizedTpHypothesis",
    "PiecewiseUniformHypothesis",
    "binomial_spec",
    "tv_to",
    "is_finite",
]
