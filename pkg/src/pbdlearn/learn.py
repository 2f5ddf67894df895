"""Sample-based PBD learner: sparse branch, translated-Poisson branch, and the final
competition between them.

All sample-size formulas use natural logarithms.  Every draw count is a function of the
accuracy, confidence and configuration only, so the total number of samples a run uses
is the same for any target and any ``n``.
"""

from __future__ import annotations

import json
import math
import os
from dataclasses import asdict, dataclass, field, fields

import numpy as np

from .birge import birge_learn_amplified
from .core import point_mass
from .hypotheses import (
    DiscretizedTpHypothesis,
    Hypothesis,
    SparseIntervalHypothesis,
    TranslatedPoissonHypothesis,
)
from .oracle import ConditionalOracle, SampleOracle
from .poisson_eval import TranslatedPoissonParams, tp_pmf
from .selection import CompetitionRecord, choose_hypothesis

CONFIG_ENV_VAR = "PBDLEARN_CONFIG"


@dataclass(frozen=True)
class LearnConfig:
    eps: float = 0.15
    delta: float = 0.1
    c1: float = 2.0
    c2: float = 2.0
    C: float = 2.0
    theta: float = 1.0
    c_B: float = 20.0
    # Birge accuracy inside the sparse branch is birge_eps_scale * eps' (capped at 1/2)
    birge_eps_scale: float = 24.0
    variance_floor: float = 0.25
    locate_budget: int = 200_000
    locate_seed_evals: int = 4000
    locate_seed_width: int = 64
    weighted_distinct_cap: int = 1
    candidate_budget: int = 1_000_000

    def __post_init__(self):
        if not (0 < self.eps < 1 and 0 < self.delta < 1):
            raise ValueError("eps and delta must lie in (0, 1)")
        for f in fields(self):
            if getattr(self, f.name) <= 0:
                raise ValueError(f"{f.name} must be positive")

    def with_accuracy(self, eps: float | None = None, delta: float | None = None) -> "LearnConfig":
        data = asdict(self)
        if eps is not None:
            data["eps"] = eps
        if delta is not None:
            data["delta"] = delta
        return LearnConfig(**data)

    @property
    def eps_prime(self) -> float:
        return self.eps / (12.0 * max(self.c1, self.c2))

    @property
    def delta_prime(self) -> float:
        return self.delta / 3.0

    def to_document(self) -> dict:
        return asdict(self)


def load_config(path: str | None = None) -> LearnConfig:
    """Read a JSON config; falls back to the path in ``PBDLEARN_CONFIG`` and then to defaults."""
    path = path or os.environ.get(CONFIG_ENV_VAR)
    if not path:
        return LearnConfig()
    with open(path) as fh:
        data = json.load(fh)
    known = {f.name for f in fields(LearnConfig)}
    unknown = set(data) - known
    if unknown:
        raise ValueError(f"unknown config keys: {sorted(unknown)}")
    return LearnConfig(**data)


# ---------------------------------------------------------------- sparse branch


def sparse_sample_size(eps_p: float, delta_p: float) -> int:
    return math.ceil(32.0 * math.log(8.0 / delta_p) / eps_p**2)


def sparse_width_bound(eps_p: float, config: LearnConfig) -> int:
    return math.floor((config.C / eps_p) ** 3)


def quantile_anchors(samples: np.ndarray, eps_p: float) -> tuple[int, int]:
    """Order statistics ``s_ceil(2 eps' M)`` and ``s_floor((1 - 2 eps') M)`` (1-based)."""
    m = samples.size
    i = min(m, max(1, math.ceil(2 * eps_p * m))) - 1
    j = min(m, max(1, math.floor((1 - 2 * eps_p) * m))) - 1
    part = np.partition(samples, [i, j])
    return int(part[i]), int(part[j])


def birge_accuracy(eps_p: float, config: LearnConfig) -> float:
    return min(0.5, config.birge_eps_scale * eps_p)


def learn_sparse(
    oracle: SampleOracle, n: int, eps_p: float, delta_p: float, config: LearnConfig
) -> SparseIntervalHypothesis:
    """Explicit pmf on a quantile-anchored interval, or the flagged point mass at 0
    when the interval is too wide for a sparse target."""
    samples = oracle.draw(sparse_sample_size(eps_p, delta_p))
    a, b = quantile_anchors(samples, eps_p)
    width_bound = sparse_width_bound(eps_p, config)
    eps_b = birge_accuracy(eps_p, config)
    if b - a > width_bound:
        return SparseIntervalHypothesis(point_mass(0), failed=True)
    conditional = ConditionalOracle(oracle, a, b, min_accept=1.0 - 5.0 * eps_p)
    result = birge_learn_amplified(
        conditional, (a, b), eps_b, delta_p / 2, c_b=config.c_B, width_bound=width_bound
    )
    return SparseIntervalHypothesis(result.hypothesis.as_pmf())


# ---------------------------------------------------------------- Poisson branch


def weak_sample_size(eps: float) -> int:
    return math.ceil(3.0 / eps**2)


def median_repetitions(delta: float) -> int:
    """Each weak estimate is off with probability at most 1/3; the median of ``r`` is off
    only if half of them are, which Hoeffding bounds by ``exp(-r/18) <= delta/2``."""
    return math.ceil(18.0 * math.log(2.0 / delta))


def estimate_mean_variance(oracle: SampleOracle, eps: float, delta: float) -> tuple[float, float]:
    """Median of weak sample-mean and unbiased sample-variance estimates."""
    if not (0 < eps < 1 and 0 < delta < 1):
        raise ValueError("eps and delta must lie in (0, 1)")
    m = max(2, weak_sample_size(eps))
    r = median_repetitions(delta)
    means = np.empty(r)
    variances = np.empty(r)
    for i in range(r):
        x = oracle.draw(m).astype(float)
        means[i] = x.mean()
        variances[i] = x.var(ddof=1)
    return float(np.median(means)), float(np.median(variances))


@dataclass
class PoissonBranchResult:
    params: TranslatedPoissonParams
    mu_hat: float
    sigma2_hat: float
    clamped: bool


def learn_poisson(
    oracle: SampleOracle, n: int, eps_p: float, delta_p: float, config: LearnConfig
) -> PoissonBranchResult:
    inner = eps_p / math.sqrt(4.0 + 1.0 / config.theta**2)
    mu, s2 = estimate_mean_variance(oracle, inner, delta_p)
    clamped = not s2 > 0
    params = TranslatedPoissonParams(mu, config.variance_floor if clamped else s2)
    return PoissonBranchResult(params, mu, s2, clamped)


def discretize_tp(
    params: TranslatedPoissonParams, support, eps: float
) -> DiscretizedTpHypothesis:
    """Evaluate the translated Poisson law on ``support`` to within ``eps/(24 s)`` per point."""
    points = sorted({int(x) for x in support})
    s = len(points)
    t = math.ceil(24 * max(s, 1) / eps)
    table = {i: tp_pmf(params, i, t) for i in points}
    return DiscretizedTpHypothesis(params, t, table)


# ---------------------------------------------------------------- assembly

SPARSE_BRANCH = "sparse"
POISSON_BRANCH = "poisson"


@dataclass
class LearnResult:
    hypothesis: Hypothesis
    branch: str
    sparse: SparseIntervalHypothesis
    poisson: PoissonBranchResult
    record: CompetitionRecord
    samples_used: int
    flags: list[str] = field(default_factory=list)

    def metrics(self) -> dict:
        return {
            "branch": self.branch,
            "samples_used": self.samples_used,
            "flags": list(self.flags),
            "sparse_interval": [self.sparse.a, self.sparse.b],
            "mu_hat": self.poisson.mu_hat,
            "sigma2_hat": self.poisson.sigma2_hat,
            "competition": self.record.to_document(),
        }


def learn_pbd(
    oracle: SampleOracle, n: int, eps: float, delta: float, config: LearnConfig | None = None
) -> LearnResult:
    """Learn an ``n``-term PBD to total variation ``eps`` with confidence ``1 - delta``."""
    config = (config or LearnConfig()).with_accuracy(eps, delta)
    start = oracle.used
    eps_p, delta_p = config.eps_prime, config.delta_prime
    flags: list[str] = []

    h_s = learn_sparse(oracle, n, eps_p, delta_p, config)
    if h_s.failed:
        flags.append("sparse-failed")
    pois = learn_poisson(oracle, n, eps_p, delta_p, config)
    if pois.clamped:
        flags.append("variance-clamped")

    support = range(h_s.a, h_s.b + 1)
    h_p_hat = discretize_tp(pois.params, support, eps)
    winner, record = choose_hypothesis(
        oracle, h_s, h_p_hat, eps / 8, delta / 3, fixed_draws=True
    )
    if winner is h_s or pois.clamped:
        hyp, branch = h_s, SPARSE_BRANCH
    else:
        hyp, branch = TranslatedPoissonHypothesis(pois.params), POISSON_BRANCH
    return LearnResult(hyp, branch, h_s, pois, record, oracle.used - start, flags)
