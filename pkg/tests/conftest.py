"""Independent reference computations used as test oracles.

None of these call into the package: they enumerate outcomes, work in exact rationals,
or evaluate at 200-bit precision.
"""

import itertools
import math
from fractions import Fraction

import mpmath
import numpy as np
import pytest


def enumerate_pbd(probs) -> np.ndarray:
    """Pmf of a Bernoulli sum by summing the probability of each of the 2^n outcomes."""
    p = np.asarray(probs, dtype=float)
    n = p.size
    bits = (np.arange(2**n)[:, None] >> np.arange(n)[None, :]) & 1
    weight = np.where(bits == 1, p[None, :], 1.0 - p[None, :]).prod(axis=1)
    return np.bincount(bits.sum(axis=1), weights=weight, minlength=n + 1)


def enumerate_weighted(classes) -> dict:
    """Pmf of ``sum_j b_j S_j`` by summing over all k-tuples ``(m_1..m_k)``.

    ``classes`` is a list of ``(weight, probs)``; each per-class law is itself obtained by
    outcome enumeration.
    """
    per_class = [(Fraction(w), enumerate_pbd(list(p))) for w, p in classes]
    out: dict = {}
    for combo in itertools.product(*[range(len(pm)) for _, pm in per_class]):
        value = sum(w * m for (w, _), m in zip(per_class, combo))
        prob = math.prod(pm[m] for (_, pm), m in zip(per_class, combo))
        out[value] = out.get(value, 0.0) + prob
    return out


def poisson_oracle(lam, k: int) -> mpmath.mpf:
    """``lam^k e^-lam / k!`` at 200 bits with exact rational powering."""
    lam = Fraction(lam)
    with mpmath.workprec(200):
        power = Fraction(lam.numerator**k, lam.denominator**k)
        return mpmath.mpf(power.numerator) / power.denominator * mpmath.exp(
            -mpmath.mpf(lam.numerator) / lam.denominator
        ) / mpmath.factorial(k)


def log_factorial_oracle(k: int) -> mpmath.mpf:
    with mpmath.workprec(200):
        return mpmath.log(mpmath.mpf(math.factorial(k)))


def bernoulli_by_recurrence(count: int) -> list:
    b = [Fraction(1)]
    for m in range(1, count):
        b.append(-sum(math.comb(m + 1, i) * b[i] for i in range(m)) / (m + 1))
    return b


def dense_tv(p_origin, p_mass, q_origin, q_mass) -> float:
    lo = min(p_origin, q_origin)
    hi = max(p_origin + len(p_mass), q_origin + len(q_mass))
    a = np.zeros(hi - lo)
    b = np.zeros(hi - lo)
    a[p_origin - lo : p_origin - lo + len(p_mass)] = p_mass
    b[q_origin - lo : q_origin - lo + len(q_mass)] = q_mass
    return 0.5 * float(np.abs(a - b).sum())


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
