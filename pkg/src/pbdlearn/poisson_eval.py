"""Additive-error Poisson and translated-Poisson pmf evaluation.

The evaluator follows a fixed pipeline: an exact-rational Stirling series (or an exact
log-factorial for small ``k``) gives the log-pmf ``E_k = -lam + k ln lam - ln k!`` to within
``1/(4t)``, and a binary search over the grid ``{i/(4t)}`` exponentiates it to within
``1/(2t)``.  The returned value is within ``1/t`` of the true pmf.

Bit counts use base-2 logarithms.  Working precision is carried by ``mpmath``.
"""

from __future__ import annotations

import math
import threading
from dataclasses import dataclass
from fractions import Fraction
from math import comb

import mpmath
import numpy as np
from scipy import stats

EXACT_LOG_FACTORIAL_MAX_K = 20

_bernoulli_cache: list[Fraction] = [Fraction(1)]
_bernoulli_lock = threading.Lock()


def bernoulli_number(j: int) -> Fraction:
    """Exact ``B_j`` with ``B_1 = -1/2``, from ``sum_{i<=m} C(m+1, i) B_i = 0``."""
    if j < 0:
        raise ValueError("Bernoulli index must be nonnegative")
    with _bernoulli_lock:
        while len(_bernoulli_cache) <= j:
            m = len(_bernoulli_cache)
            acc = sum(comb(m + 1, i) * _bernoulli_cache[i] for i in range(m))
            _bernoulli_cache.append(-acc / (m + 1))
        return _bernoulli_cache[j]


def bit_size(x: int) -> int:
    """``ceil(log2 x)``, floored at 1 so it can be used as a divisor."""
    return max(1, (int(x) - 1).bit_length())


def stirling_terms(k: int, t: int) -> int:
    """Truncation index ``m0 = ceil(|t|/|k|) + 1`` of the Stirling series."""
    return -(-bit_size(t) // bit_size(k)) + 1


def working_precision(k: int, t: int, lam_num: int = 1, lam_den: int = 1) -> int:
    """Bits ``L = ceil(log2(12 (3k+1) t^2 k lam_num lam_den))``."""
    val = 12 * (3 * k + 1) * t * t * max(k, 1) * lam_num * lam_den
    return max(53, (val - 1).bit_length())


def two_pi_estimate(t: int) -> mpmath.mpf:
    """``2 pi`` truncated to ``ceil(log2(12 t log2 t))`` fractional bits."""
    frac_bits = (max(1, math.ceil(12 * t * max(math.log2(t), 1.0))) - 1).bit_length()
    with mpmath.workprec(frac_bits + 16):
        scaled = int(mpmath.floor(2 * mpmath.pi * (mpmath.mpf(2) ** frac_bits)))
    return mpmath.mpf(scaled) / (mpmath.mpf(2) ** frac_bits)


def stirling_log_factorial(k: int, t: int, prec: int | None = None) -> mpmath.mpf:
    """``ln k!`` to within ``1/(10t)``.

    For ``k <= 20`` the value comes from the exact integer factorial; beyond that the
    truncated Stirling series with exact Bernoulli coefficients is used.
    """
    if k < 0 or t < 1:
        raise ValueError("need k >= 0 and t >= 1")
    prec = prec or working_precision(k, t)
    with mpmath.workprec(prec):
        if k <= EXACT_LOG_FACTORIAL_MAX_K:
            return mpmath.log(mpmath.mpf(math.factorial(k)))
        ln_k = mpmath.log(k)
        total = k * ln_k - k + (mpmath.log(two_pi_estimate(t)) + ln_k) / 2
        for j in range(2, stirling_terms(k, t) + 1):
            b = bernoulli_number(j)
            if b == 0:
                continue
            sign = 1 if j % 2 == 0 else -1
            total += sign * mpmath.mpf(b.numerator) / mpmath.mpf(j * (j - 1) * b.denominator * k ** (j - 1))
        return +total


def grid_exp(alpha, t: int) -> float:
    """``i*/(4t)`` with ``|i*/(4t) - exp(alpha)| <= 1/(2t)`` for ``alpha <= 0``.

    Binary search over ``i`` in ``1..4t`` against ``ln(i/(4t))`` computed to ``1/(16t)``.
    """
    if t < 1:
        raise ValueError("t must be a positive integer")
    alpha = mpmath.mpf(alpha)
    if alpha > 0:
        raise ValueError("alpha must be nonpositive")
    size = 4 * t
    prec = (320 * t).bit_length() + 4

    def grid_log(i: int):
        with mpmath.workprec(prec):
            return mpmath.log(mpmath.mpf(i) / size)

    # largest i whose rounded grid log is <= alpha
    lo, hi = 1, size
    if grid_log(1) > alpha:
        best = 1
    else:
        while lo < hi:
            mid = (lo + hi + 1) // 2
            if grid_log(mid) <= alpha:
                lo = mid
            else:
                hi = mid - 1
        best = lo
        if best < size and abs(grid_log(best + 1) - alpha) < abs(alpha - grid_log(best)):
            best += 1
    return best / size


@dataclass(frozen=True)
class PoissonEvalRequest:
    lam: Fraction
    k: int
    t: int

    def __post_init__(self):
        lam = Fraction(self.lam)
        if lam <= 0:
            raise ValueError("lambda must be positive")
        if self.k < 0 or self.t < 1:
            raise ValueError("need k >= 0 and t >= 1")
        object.__setattr__(self, "lam", lam)


def log_pmf_estimate(req: PoissonEvalRequest) -> mpmath.mpf:
    """``E_k = -lam + k ln lam - ln k!`` to within ``1/(4t)``."""
    num, den, k, t = req.lam.numerator, req.lam.denominator, req.k, req.t
    prec = working_precision(k, t, num, den)
    with mpmath.workprec(prec):
        lam = mpmath.mpf(num) / den
        total = -lam
        if k > 0:
            total += k * (mpmath.log(num) - mpmath.log(den))
            total -= stirling_log_factorial(k, t, prec)
        return +total


def poisson_pmf_approx(req: PoissonEvalRequest) -> float:
    """Estimate of ``lam^k e^-lam / k!`` with additive error at most ``1/t``."""
    exponent = log_pmf_estimate(req)
    if exponent >= 0:
        return 1.0
    return grid_exp(exponent, req.t)


@dataclass(frozen=True)
class TranslatedPoissonParams:
    mu: float
    sigma2: float

    def __post_init__(self):
        if not self.sigma2 > 0:
            raise ValueError("translated Poisson needs positive variance")

    def shift_and_rate(self) -> tuple[int, Fraction]:
        """``(floor(mu - sigma2), sigma2 + frac(mu - sigma2))`` in exact arithmetic."""
        diff = Fraction(self.mu) - Fraction(self.sigma2)
        shift = math.floor(diff)
        return shift, Fraction(self.sigma2) + (diff - shift)


def tp_pmf(params: TranslatedPoissonParams, i: int, t: int) -> float:
    """``Pr[TP(mu, sigma2) = i]`` to within ``1/t``."""
    shift, rate = params.shift_and_rate()
    if i < shift:
        return 0.0
    return poisson_pmf_approx(PoissonEvalRequest(rate, int(i) - shift, t))


def tp_window(params: TranslatedPoissonParams, width: float = 12.0) -> tuple[int, int]:
    """Integer range ``shift + rate -/+ width*sqrt(rate)`` (clipped at the shift)."""
    shift, rate = params.shift_and_rate()
    lam = float(rate)
    half = width * math.sqrt(lam) + 10
    return shift + max(0, math.floor(lam - half)), shift + math.ceil(lam + half)


def tp_pmf_array(params: TranslatedPoissonParams, lo: int, hi: int) -> np.ndarray:
    """Double-precision pmf of the translated Poisson law over ``lo..hi``."""
    shift, rate = params.shift_and_rate()
    k = np.arange(lo, hi + 1) - shift
    return stats.poisson.pmf(k, float(rate))


def tp_mass_outside(params: TranslatedPoissonParams, lo: int, hi: int) -> float:
    shift, rate = params.shift_and_rate()
    lam = float(rate)
    below = stats.poisson.cdf(lo - 1 - shift, lam) if lo - 1 >= shift else 0.0
    above = stats.poisson.sf(hi - shift, lam)
    return float(below + above)


def poisson_tail_bound(lam: float, dev: float) -> float:
    """Bernstein bound on ``Pr[|Poisson(lam) - lam| >= dev]``."""
    if dev <= 0:
        return 1.0
    return min(1.0, 2.0 * math.exp(-dev * dev / (2.0 * (lam + dev / 3.0))))
