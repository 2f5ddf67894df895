"""Learning Poisson binomial distributions and weighted Bernoulli sums from samples."""

from .birge import birge_learn, birge_learn_amplified, birge_sample_size
from .core import (
    DensePmf,
    EmptyConditioningError,
    MomentSummary,
    PbdSpec,
    SampleBatch,
    conditional_restrict,
    moments,
    pbd_pmf,
    pbd_sample,
    tv_distance,
)
from .learn import LearnConfig, learn_pbd, load_config
from .oracle import OracleExhausted, PmfOracle, RecordedOracle, pbd_oracle
from .poisson_eval import (
    PoissonEvalRequest,
    TranslatedPoissonParams,
    poisson_pmf_approx,
    tp_pmf,
)
from .proper import locate_binomial, locate_sparse, proper_learn_pbd
from .selection import choose_hypothesis, tournament_select
from .weighted import WeightedSumSpec, learn_weighted, weighted_pmf

__all__ = [
    "DensePmf",
    "EmptyConditioningError",
    "LearnConfig",
    "MomentSummary",
    "OracleExhausted",
    "PbdSpec",
    "PmfOracle",
    "PoissonEvalRequest",
    "RecordedOracle",
    "SampleBatch",
    "TranslatedPoissonParams",
    "WeightedSumSpec",
    "birge_learn",
    "birge_learn_amplified",
    "birge_sample_size",
    "choose_hypothesis",
    "conditional_restrict",
    "learn_pbd",
    "learn_weighted",
    "load_config",
    "locate_binomial",
    "locate_sparse",
    "moments",
    "pbd_oracle",
    "pbd_pmf",
    "pbd_sample",
    "poisson_pmf_approx",
    "proper_learn_pbd",
    "tournament_select",
    "tp_pmf",
    "tv_distance",
    "weighted_pmf",
]
