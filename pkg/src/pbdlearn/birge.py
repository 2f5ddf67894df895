"""Unimodal density estimation from the empirical cdf.

Left of a located mode the estimate is the slope of the convex minorant of the empirical
cdf, right of it the slope of the concave majorant.  Both hulls are built with a single
monotone-stack pass over integer corner points, so all geometry is exact integer
arithmetic on sample counts.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import SampleBatch
from .hypotheses import PiecewiseUniformHypothesis
from .oracle import SampleOracle
from .selection import tournament_select


@dataclass(frozen=True)
class EmpiricalCdf:
    """Step cdf of a sample on the integer domain ``[lo, hi]``.

    ``values`` are the distinct sample values and ``cum`` the number of samples at or
    below each of them.  The cdf is anchored at ``lo - 1`` with height zero.
    """

    values: np.ndarray
    cum: np.ndarray
    m: int
    domain: tuple[int, int]

    @classmethod
    def from_samples(cls, samples, domain: tuple[int, int]) -> "EmpiricalCdf":
        if isinstance(samples, SampleBatch):
            samples = samples.values
        x = np.sort(np.asarray(samples, dtype=np.int64))
        if x.size == 0:
            raise ValueError("empirical cdf needs at least one sample")
        lo, hi = int(domain[0]), int(domain[1])
        if x[0] < lo or x[-1] > hi:
            raise ValueError("samples fall outside the domain")
        values, counts = np.unique(x, return_counts=True)
        return cls(values, np.cumsum(counts), int(x.size), (lo, hi))

    def counts_at(self, x) -> np.ndarray:
        """Number of samples ``<= x`` (vectorized)."""
        idx = np.searchsorted(self.values, np.asarray(x), side="right")
        return np.where(idx > 0, self.cum[np.maximum(idx - 1, 0)], 0)

    def __call__(self, x) -> np.ndarray:
        return self.counts_at(x) / self.m

    def corner_points(self) -> np.ndarray:
        """Integer abscissae where the hull of the step cdf can bend."""
        lo, hi = self.domain
        pts = np.concatenate(([lo - 1, hi], self.values - 1, self.values))
        return np.unique(np.clip(pts, lo - 1, hi))


def _hull(xs: list[int], ys: list[int], lower: bool) -> tuple[list[int], list[int]]:
    hx: list[int] = []
    hy: list[int] = []
    for x, y in zip(xs, ys):
        while len(hx) >= 2:
            cross = (hx[-1] - hx[-2]) * (y - hy[-2]) - (hy[-1] - hy[-2]) * (x - hx[-2])
            if (cross <= 0) if lower else (cross >= 0):
                hx.pop()
                hy.pop()
            else:
                break
        hx.append(x)
        hy.append(y)
    return hx, hy


def _prefix(cdf: EmpiricalCdf, upto: int) -> tuple[np.ndarray, np.ndarray]:
    corners = cdf.corner_points()
    xs = corners[corners <= upto]
    if xs.size == 0 or xs[-1] != upto:
        xs = np.append(xs, upto)
    return xs, cdf.counts_at(xs)


def _suffix(cdf: EmpiricalCdf, start: int) -> tuple[np.ndarray, np.ndarray]:
    corners = cdf.corner_points()
    xs = corners[corners >= start]
    if xs.size == 0 or xs[0] != start:
        xs = np.insert(xs, 0, start)
    return xs, cdf.counts_at(xs)


def convex_minorant(cdf: EmpiricalCdf, upto: int) -> tuple[np.ndarray, np.ndarray]:
    """Vertices ``(x, F(x))`` of the greatest convex function below the cdf on ``[lo-1, upto]``."""
    xs, ys = _prefix(cdf, upto)
    hx, hy = _hull(xs.tolist(), ys.tolist(), lower=True)
    return np.asarray(hx), np.asarray(hy) / cdf.m


def concave_majorant(cdf: EmpiricalCdf, start: int) -> tuple[np.ndarray, np.ndarray]:
    """Vertices of the least concave function above the cdf on ``[start, hi]``."""
    xs, ys = _suffix(cdf, start)
    hx, hy = _hull(xs.tolist(), ys.tolist(), lower=False)
    return np.asarray(hx), np.asarray(hy) / cdf.m


def deviation_minus(cdf: EmpiricalCdf, j: int) -> float:
    """Largest gap between the cdf and its convex minorant over ``[lo-1, j]``."""
    xs, ys = _prefix(cdf, j)
    hx, hy = _hull(xs.tolist(), ys.tolist(), lower=True)
    gap = ys - np.interp(xs, hx, hy)
    return float(gap.max()) / cdf.m


def deviation_plus(cdf: EmpiricalCdf, j: int) -> float:
    """Largest gap between the concave majorant over ``[j, hi]`` and the cdf."""
    xs, ys = _suffix(cdf, j)
    hx, hy = _hull(xs.tolist(), ys.tolist(), lower=False)
    gap = np.interp(xs, hx, hy) - ys
    return float(gap.max()) / cdf.m


def mode_distance(cdf: EmpiricalCdf, r: int) -> float:
    return max(deviation_minus(cdf, r), deviation_plus(cdf, r))


def locate_mode(cdf: EmpiricalCdf, eta: float) -> int:
    """Integer ``r`` whose ``max(d-(r), d+(r))`` is within ``eta`` of the minimum.

    ``d-`` is nondecreasing and ``d+`` nonincreasing in ``r``, so the minimum sits where
    they cross.  The crossing is bracketed by binary search over the sample points and
    then refined by binary search over the integers between them.
    """
    lo, hi = cdf.domain
    cache: dict[int, tuple[float, float]] = {}

    def devs(r: int) -> tuple[float, float]:
        if r not in cache:
            cache[r] = (deviation_minus(cdf, r), deviation_plus(cdf, r))
        return cache[r]

    def crossed(r: int) -> bool:
        dm, dp = devs(r)
        return dm >= dp

    pts = cdf.values
    if not crossed(int(pts[-1])):
        left, right = int(pts[-1]), hi
    elif crossed(int(pts[0])):
        left, right = lo, int(pts[0])
    else:
        i, j = 0, pts.size - 1
        while j - i > 1:
            mid = (i + j) // 2
            if crossed(int(pts[mid])):
                j = mid
            else:
                i = mid
        left, right = int(pts[i]), int(pts[j])

    # smallest r in [left, right] that has crossed (right has, unless right == hi and nothing crossed)
    while right - left > 1:
        mid = (left + right) // 2
        dm, dp = devs(mid)
        if abs(dm - dp) <= eta:
            left = right = mid
            break
        if dm >= dp:
            right = mid
        else:
            left = mid

    best_key, best_r = None, None
    for r in sorted({left - 1, left, right, right + 1}):
        if r < lo or r > hi:
            continue
        dm, dp = devs(r)
        at_r = int(cdf.counts_at(r) - cdf.counts_at(r - 1))
        key = (max(dm, dp), -at_r, r)
        if best_key is None or key < best_key:
            best_key, best_r = key, r
    return int(best_r)


def hypothesis_from_mode(cdf: EmpiricalCdf, r: int) -> PiecewiseUniformHypothesis:
    """Derivative of the cdf hull spliced at ``r``."""
    lo, hi = cdf.domain
    xs, ys = _prefix(cdf, r)
    lx, ly = _hull(xs.tolist(), ys.tolist(), lower=True)
    xs, ys = _suffix(cdf, r)
    ux, uy = _hull(xs.tolist(), ys.tolist(), lower=False)
    vx = lx + ux[1:]
    vy = ly + uy[1:]
    if vx[0] != lo - 1:
        vx.insert(0, lo - 1)
        vy.insert(0, 0)
    intervals = [(vx[i] + 1, vx[i + 1]) for i in range(len(vx) - 1)]
    masses = np.diff(np.asarray(vy, dtype=float)) / cdf.m
    return PiecewiseUniformHypothesis(intervals, masses, (lo, hi))


def birge_learn(samples, domain: tuple[int, int], eps: float) -> PiecewiseUniformHypothesis:
    """One run of the unimodal learner on a fixed sample."""
    cdf = EmpiricalCdf.from_samples(samples, domain)
    r = locate_mode(cdf, eps)
    return hypothesis_from_mode(cdf, r)


def birge_sample_size(width: int, eps: float, c_b: float = 20.0) -> int:
    """``ceil(c_B ln(width + 2) / eps^3)`` samples for a domain of ``width + 1`` points."""
    return math.ceil(c_b * math.log(width + 2) / eps**3)


def amplification_runs(delta: float) -> int:
    return max(1, math.ceil(math.log2(3.0 / delta)))


@dataclass
class AmplifiedResult:
    hypothesis: PiecewiseUniformHypothesis
    runs: list[PiecewiseUniformHypothesis]
    winner_index: int
    tournament_failed: bool


def birge_learn_amplified(
    oracle: SampleOracle,
    domain: tuple[int, int],
    eps: float,
    delta: float,
    c_b: float = 20.0,
    width_bound: int | None = None,
) -> AmplifiedResult:
    """``ceil(log2(3/delta))`` independent runs, then a tournament among them.

    ``width_bound`` sets the domain width used in the sample-size formula; passing an
    a-priori bound keeps the draw count independent of the realized domain.  Every
    competition consumes its full sample budget, so the total is data-independent too.
    """
    width = domain[1] - domain[0] if width_bound is None else width_bound
    m = birge_sample_size(width, eps, c_b)
    runs = []
    for _ in range(amplification_runs(delta)):
        runs.append(birge_learn(oracle.draw(m), domain, eps))
    winner, rec = tournament_select(oracle, runs, eps, delta / 2, fixed_draws=True)
    failed = winner is None
    if failed:
        idx = int(np.argmin(rec.losses))
    else:
        idx = rec.winner_index
    return AmplifiedResult(runs[idx], runs, idx, failed)
