"""Proper learning: map a learned hypothesis back to an explicit PBD.

Sparse hypotheses are matched against sparse-form PBDs (few nontrivial indicators on the
grid ``{i/k^2}``); Poisson-branch results are turned into a Binomial by moment matching.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Iterator

import numpy as np
from scipy import stats

from .core import DensePmf, PbdSpec, nontrivial_pmf, tv_distance
from .hypotheses import SparseIntervalHypothesis, binomial_spec
from .learn import LearnConfig, LearnResult, SPARSE_BRANCH, learn_pbd
from .oracle import SampleOracle


class DegenerateBinomialError(ValueError):
    """Moment matching hit ``mu_hat <= sigma2``, where no Binomial fits."""


@dataclass(frozen=True)
class SparseFormSpec:
    """``ones`` sure indicators plus ``count`` indicators of mean ``i/k^2`` per grid entry."""

    grid_k: int
    multiplicities: tuple[tuple[int, int], ...]
    ones: int = 0

    def __post_init__(self):
        k2 = self.grid_k**2
        for i, c in self.multiplicities:
            if not 1 <= i <= k2 - 1 or c < 1:
                raise ValueError("grid index must lie in 1..k^2-1 with positive count")
        if self.ell > self.grid_k**3:
            raise ValueError("sparse form has more than k^3 nontrivial indicators")
        if self.ones < 0:
            raise ValueError("negative translation")

    @property
    def ell(self) -> int:
        return sum(c for _, c in self.multiplicities)

    @property
    def probs(self) -> np.ndarray:
        k2 = self.grid_k**2
        return np.array([i / k2 for i, c in self.multiplicities for _ in range(c)])

    def to_spec(self, n: int) -> PbdSpec:
        if self.ones + self.ell > n:
            raise ValueError("form does not fit in n indicators")
        p = np.zeros(n)
        p[: self.ones] = 1.0
        p[self.ones : self.ones + self.ell] = self.probs
        return PbdSpec(p)

    def to_document(self) -> dict:
        return {
            "type": "sparse-form",
            "k": self.grid_k,
            "multiplicities": [[i, c] for i, c in self.multiplicities],
            "ones": self.ones,
        }


@dataclass(frozen=True)
class BinomialFormSpec:
    """Translated Binomial: ``t`` sure indicators plus ``ell`` indicators of mean ``q``."""

    ell: int
    q: float
    t: int = 0

    def is_heavy(self, k: int) -> bool:
        mean = self.ell * self.q
        return mean >= k * k - 1.0 / k and mean * (1 - self.q) >= k * k - k - 1 - 3.0 / k

    def to_spec(self, n: int) -> PbdSpec:
        if self.t + self.ell > n:
            raise ValueError("form does not fit in n indicators")
        p = np.zeros(n)
        p[: self.t] = 1.0
        p[self.t : self.t + self.ell] = self.q
        return PbdSpec(p)

    def to_document(self) -> dict:
        return {"type": "binomial-form", "ell": self.ell, "q": self.q, "t": self.t}


@dataclass(frozen=True)
class BinomialSpec:
    n_hat: int
    p_hat: float

    def __post_init__(self):
        if self.n_hat < 1 or not 0.0 <= self.p_hat <= 1.0:
            raise ValueError("need n_hat >= 1 and p_hat in [0, 1]")

    def to_document(self) -> dict:
        return {"type": "binomial", "n_hat": self.n_hat, "p_hat": self.p_hat}


# ---------------------------------------------------------------- enumeration


def grid_size(eps: float, C: float = 2.0) -> int:
    return math.ceil(C / eps)


def default_distinct_cap(eps: float) -> int:
    return max(1, math.ceil(math.log2(1.0 / eps)))


def _compositions(total: int, parts: int) -> Iterator[tuple[int, ...]]:
    """Positive integer tuples of length ``parts`` summing to ``total``, lexicographic."""
    for cuts in itertools.combinations(range(1, total), parts - 1):
        bounds = (0,) + cuts + (total,)
        yield tuple(bounds[i + 1] - bounds[i] for i in range(parts))


def _ones_range(ell: int, constraint: tuple[int, int] | None, n: int | None) -> tuple[int, int]:
    if constraint is None:
        lo, hi = 0, (n - ell if n is not None else 0)
    else:
        a, b = constraint
        lo, hi = max(0, b - ell), a
    if n is not None:
        hi = min(hi, n - ell)
    return lo, hi


@dataclass(frozen=True)
class FormGroup:
    """Sparse forms sharing grid values and multiplicities; translations ``ones_lo..ones_hi``."""

    k: int
    ell: int
    multiplicities: tuple[tuple[int, int], ...]
    ones_lo: int
    ones_hi: int


def form_groups(
    k: int, constraint: tuple[int, int] | None, distinct_cap: int, n: int | None
) -> Iterator[FormGroup]:
    """Forms grouped by everything except the translation.

    Order: number of distinct grid values, then ``ell``, then grid values
    lexicographically, then multiplicities lexicographically.
    """
    grid = range(1, k * k)
    max_ell = k**3
    for d in range(0, distinct_cap + 1):
        ells = [0] if d == 0 else range(d, max_ell + 1)
        for ell in ells:
            lo, hi = _ones_range(ell, constraint, n)
            if lo > hi:
                continue
            for values in itertools.combinations(grid, d):
                for counts in _compositions(ell, d) if d else [()]:
                    yield FormGroup(k, ell, tuple(zip(values, counts)), lo, hi)


def enumerate_sparse_forms(
    eps: float,
    support_constraint: tuple[int, int] | None = None,
    distinct_cap: int | None = None,
    C: float = 2.0,
    n: int | None = None,
) -> Iterator[SparseFormSpec]:
    """Every sparse form with grid ``k = ceil(C/eps)`` and at most ``distinct_cap`` distinct
    grid values whose support covers ``support_constraint``.

    ``n`` caps ``ones + ell``.  With neither a constraint nor ``n`` the translation is zero;
    with ``n`` alone every translation that fits is produced.
    """
    if not 0 < eps < 1:
        raise ValueError("eps must lie in (0, 1)")
    k = grid_size(eps, C)
    cap = default_distinct_cap(eps) if distinct_cap is None else distinct_cap
    for block in form_groups(k, support_constraint, cap, n):
        for ones in range(block.ones_lo, block.ones_hi + 1):
            yield SparseFormSpec(k, block.multiplicities, ones)


# ---------------------------------------------------------------- search


@dataclass
class LocateResult:
    form: SparseFormSpec | None
    tv: float | None
    examined: int
    budget_exhausted: bool

    @property
    def found(self) -> bool:
        return self.form is not None


def group_pmf(block: FormGroup) -> np.ndarray:
    """Pmf on ``0..ell`` of the nontrivial part shared by a form group."""
    k2 = block.k**2
    if not block.multiplicities:
        return np.ones(1)
    if len(block.multiplicities) == 1:
        (i, c), = block.multiplicities
        return stats.binom.pmf(np.arange(c + 1), c, i / k2)
    probs = np.repeat([i / k2 for i, _ in block.multiplicities], [c for _, c in block.multiplicities])
    shift, mass = nontrivial_pmf(probs)
    out = np.zeros(block.ell + 1)
    out[shift : shift + mass.size] = mass
    return out


def _seed_probs(hs: SparseIntervalHypothesis) -> np.ndarray:
    """Indicator means read off the roots of the probability generating polynomial.

    A PBD on ``a + {0..w}`` with all means in (0, 1) has generating polynomial
    ``prod (1 - p + p z)``, whose roots are ``-(1 - p)/p``; for other pmfs the root
    magnitudes still give a usable starting point.
    """
    mass = hs.pmf.mass
    if mass.size < 2:
        return np.zeros(0)
    roots = np.roots(mass[::-1])
    return np.sort(1.0 / (1.0 + np.abs(roots)))


def _form_tv(indices: tuple[int, ...], ones: int, k: int, target) -> float:
    probs = np.asarray(indices, dtype=float) / k**2
    shift, mass = nontrivial_pmf(probs)
    return tv_distance(DensePmf(ones + shift, mass), target)


def _local_search(
    indices: list[int], ones: int, k: int, target, tau: float, max_evals: int, n: int | None
) -> tuple[tuple[int, ...], int, float, int]:
    """Greedy coordinate search over grid indices and translation, coarse to fine.

    Returns the best ``(indices, ones, tv, evaluations)``; stops as soon as ``tv <= tau``.
    """
    top = k * k - 1
    cur = tuple(sorted(indices))
    cur_tv = _form_tv(cur, ones, k, target)
    evals = 1
    step = 1 << max(0, (top // 4).bit_length() - 1)
    while step >= 1 and cur_tv > tau and evals < max_evals:
        improved = False
        moves: list[tuple[tuple[int, ...], int]] = [(cur, ones - 1), (cur, ones + 1)]
        for pos in sorted(set(range(len(cur))), key=lambda j: cur[j]):
            for dv in (-step, step):
                v = min(top, max(1, cur[pos] + dv))
                if v != cur[pos]:
                    moves.append((tuple(sorted(cur[:pos] + (v,) + cur[pos + 1 :])), ones))
        for cand, o in moves:
            if o < 0 or (n is not None and o + len(cand) > n) or evals >= max_evals:
                continue
            tv = _form_tv(cand, o, k, target)
            evals += 1
            if tv < cur_tv - 1e-15:
                cur, ones, cur_tv, improved = cand, o, tv, True
                break
        if not improved:
            step //= 2
    return cur, ones, cur_tv, evals


def locate_sparse(
    hs: SparseIntervalHypothesis,
    eps: float,
    config: LearnConfig | None = None,
    n: int | None = None,
    distinct_cap: int | None = None,
) -> LocateResult:
    """A sparse form within total variation ``eps/6`` of ``hs``, or a failed result.

    The search first refines a seed read off the generating-polynomial roots of ``hs``
    (grid-rounded, then improved by local search on exact TV), and then walks the
    enumeration order of :func:`enumerate_sparse_forms`, returning the first form under
    the threshold.  In the walk, candidates are screened with two necessary conditions
    for TV at most ``tau``: the form's mean is within ``tau (2w + ell)`` of the
    hypothesis mean, and the form puts at most ``tau`` mass outside ``[a, b]``.  The
    whole search stops after ``config.locate_budget`` units of work: one per TV
    evaluation in the seeded phase, one per form group visited and one per translation
    screened in the walk.
    """
    config = config or LearnConfig()
    if hs.failed:
        raise ValueError("cannot locate a sparse form for the trivial hypothesis")
    tau = eps / 6.0
    a, b = hs.a, hs.b
    w = b - a
    h = hs.pmf.mass
    xs = np.arange(a, b + 1)
    m_h = float(xs @ h)
    k = grid_size(eps, config.C)
    cap = default_distinct_cap(eps) if distinct_cap is None else distinct_cap
    examined = 0

    if 0 < w <= min(k**3, config.locate_seed_width) and (n is None or b <= n):
        seed = _seed_probs(hs)
        idx = [int(min(k * k - 1, max(1, round(p * k * k)))) for p in seed]
        form_idx, ones, tv, evals = _local_search(
            idx, a, k, hs.pmf, tau, min(config.locate_seed_evals, config.locate_budget), n
        )
        examined += evals
        if tv <= tau:
            mult = tuple((v, form_idx.count(v)) for v in sorted(set(form_idx)))
            return LocateResult(SparseFormSpec(k, mult, ones), float(tv), examined, False)

    for block in form_groups(k, (a, b), cap, n):
        examined += 1
        if examined > config.locate_budget:
            return LocateResult(None, None, examined - 1, True)
        ell = block.ell
        mu_g = sum(c * i for i, c in block.multiplicities) / k**2
        slack = tau * (2 * w + ell)
        lo = max(block.ones_lo, math.ceil(m_h - mu_g - slack))
        hi = min(block.ones_hi, math.floor(m_h - mu_g + slack))
        if lo > hi:
            continue
        ones = np.arange(lo, hi + 1)
        if examined + ones.size > config.locate_budget:
            return LocateResult(None, None, examined, True)
        examined += ones.size
        g = group_pmf(block)
        cdf = np.concatenate(([0.0], np.cumsum(g)))
        # form mass on [a, b] when shifted by o is cdf[b-o+1] - cdf[a-o]
        inside = cdf[np.minimum(b - ones + 1, ell + 1)] - cdf[np.maximum(a - ones, 0)]
        keep = 1.0 - inside <= tau + 1e-12
        if not keep.any():
            continue
        ones = ones[keep]
        rows = g[(a - ones)[:, None] + np.arange(w + 1)[None, :]]
        tv = 0.5 * (np.abs(rows - h[None, :]).sum(axis=1) + (1.0 - rows.sum(axis=1)))
        hit = np.flatnonzero(tv <= tau)
        if hit.size:
            j = int(hit[0])
            form = SparseFormSpec(k, block.multiplicities, int(ones[j]))
            return LocateResult(form, float(tv[j]), examined, False)
    return LocateResult(None, None, examined, False)


def locate_binomial(mu_hat: float, sigma2_hat: float, n: int) -> BinomialSpec:
    """Moment-matched ``Bin(n_hat, p_hat)`` with ``n_hat <= n``.

    The variance is first capped at ``n/4`` and then lowered further if needed so that
    the implied number of trials does not exceed ``n``.  A negative variance estimate is
    treated as zero.
    """
    if not 0 < mu_hat <= n:
        raise ValueError("mu_hat must lie in (0, n]")
    s1 = min(max(sigma2_hat, 0.0), n / 4.0)
    s2 = s1 if mu_hat * mu_hat <= n * (mu_hat - s1) else (n * mu_hat - mu_hat * mu_hat) / n
    if mu_hat <= s2:
        raise DegenerateBinomialError(
            f"mu_hat={mu_hat} <= adjusted variance {s2}: no Binomial matches these moments"
        )
    n_hat = math.floor(mu_hat * mu_hat / (mu_hat - s2))
    # floor can reach 0 only when mu_hat < 1; one trial still respects n_hat <= n
    n_hat = min(n, max(1, n_hat))
    p_hat = min(1.0, max(0.0, (mu_hat - s2) / mu_hat))
    return BinomialSpec(n_hat, p_hat)


def round_binomial(spec: BinomialSpec, n: int) -> tuple[int, float]:
    """``(n_hat, q)`` with ``q`` the nearest multiple of ``1/n`` to ``p_hat``."""
    return spec.n_hat, math.floor(spec.p_hat * n + 0.5) / n


# ---------------------------------------------------------------- proper learner


@dataclass
class ProperResult:
    spec: PbdSpec
    branch: str
    learn: LearnResult
    form: SparseFormSpec | None = None
    binomial: BinomialSpec | None = None
    locate: LocateResult | None = None
    flags: list[str] = field(default_factory=list)

    def metrics(self) -> dict:
        out = self.learn.metrics()
        out.update(
            proper_branch=self.branch,
            flags=self.learn.flags + self.flags,
            form=None if self.form is None else self.form.to_document(),
            binomial=None if self.binomial is None else self.binomial.to_document(),
        )
        if self.locate is not None:
            out["locate_examined"] = self.locate.examined
        return out


def _moment_fallback(mu_hat: float, n: int) -> PbdSpec:
    ones = int(round(min(max(mu_hat, 0.0), float(n))))
    p = np.zeros(n)
    p[:ones] = 1.0
    return PbdSpec(p)


def proper_learn_pbd(
    oracle: SampleOracle, n: int, eps: float, delta: float, config: LearnConfig | None = None
) -> ProperResult:
    """Learn a PBD and return it as an explicit length-``n`` vector of means."""
    config = (config or LearnConfig()).with_accuracy(eps, delta)
    res = learn_pbd(oracle, n, eps, delta, config)
    flags: list[str] = []
    located = None
    if res.branch == SPARSE_BRANCH and not res.sparse.failed:
        located = locate_sparse(res.sparse, eps, config, n=n)
        if located.found:
            return ProperResult(located.form.to_spec(n), "sparse-form", res, form=located.form,
                                locate=located)
        flags.append("locate-sparse-failed")

    mu, s2 = res.poisson.mu_hat, res.poisson.sigma2_hat
    try:
        binom = locate_binomial(mu, s2, n)
    except ValueError:
        flags.append("degenerate-moments")
        return ProperResult(_moment_fallback(mu, n), "point-mass", res, locate=located, flags=flags)
    spec = binomial_spec(binom.n_hat, binom.p_hat, n)
    return ProperResult(spec, "binomial", res, binomial=binom, locate=located, flags=flags)
