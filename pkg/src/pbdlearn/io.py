"""JSON documents for specs, pmfs and hypotheses; newline-delimited sample files."""

from __future__ import annotations

import json
from fractions import Fraction
from pathlib import Path

import numpy as np

from .core import DensePmf, PbdSpec
from .hypotheses import (
    DiscretizedTpHypothesis,
    Hypothesis,
    PbdHypothesis,
    PiecewiseUniformHypothesis,
    PmfHypothesis,
    SparseIntervalHypothesis,
    TranslatedPoissonHypothesis,
)
from .poisson_eval import TranslatedPoissonParams
from .weighted import WeightClass, WeightedSumSpec


def dumps(doc) -> str:
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def write_json(path: str | Path, doc) -> None:
    Path(path).write_text(dumps(doc))


def read_json(path: str | Path):
    return json.loads(Path(path).read_text())


def spec_to_document(spec) -> dict:
    if isinstance(spec, PbdSpec):
        return {"type": "pbd", "p": spec.probs.tolist()}
    if isinstance(spec, WeightedSumSpec):
        return spec.to_document()
    raise TypeError(f"not a spec: {type(spec).__name__}")


def spec_from_document(doc: dict):
    kind = doc.get("type")
    if kind == "pbd":
        return PbdSpec(np.asarray(doc["p"], dtype=float))
    if kind == "weighted":
        return WeightedSumSpec(
            tuple(WeightClass(Fraction(c["weight"]), np.asarray(c["p"], dtype=float)) for c in doc["classes"])
        )
    raise ValueError(f"unknown spec type {kind!r}")


def pmf_to_document(pmf: DensePmf) -> dict:
    return {"type": "pmf", "origin": pmf.origin, "mass": pmf.mass.tolist()}


def hypothesis_from_document(doc: dict) -> Hypothesis:
    kind = doc.get("type")
    if kind == "pmf":
        return PmfHypothesis(DensePmf(int(doc["origin"]), np.asarray(doc["mass"], dtype=float)))
    if kind == "sparse":
        return SparseIntervalHypothesis(
            DensePmf(int(doc["a"]), np.asarray(doc["mass"], dtype=float)), failed=bool(doc["failed"])
        )
    if kind == "pbd":
        return PbdHypothesis.from_spec(PbdSpec(np.asarray(doc["p"], dtype=float)))
    if kind == "translated-poisson":
        return TranslatedPoissonHypothesis(TranslatedPoissonParams(doc["mu"], doc["sigma2"]))
    if kind == "discretized-tp":
        params = TranslatedPoissonParams(doc["mu"], doc["sigma2"])
        return DiscretizedTpHypothesis(params, int(doc["t"]), {int(i): float(v) for i, v in doc["table"]})
    if kind == "piecewise-uniform":
        rows = doc["intervals"]
        return PiecewiseUniformHypothesis(
            [(int(a), int(b)) for a, b, _ in rows],
            np.array([w for _, _, w in rows], dtype=float),
            (int(doc["domain"][0]), int(doc["domain"][1])),
        )
    raise ValueError(f"unknown hypothesis type {kind!r}")


def write_samples(path: str | Path, values) -> None:
    Path(path).write_text("".join(f"{int(v)}\n" for v in np.asarray(values)))


def read_samples(path: str | Path) -> np.ndarray:
    text = Path(path).read_text().split()
    return np.array([int(t) for t in text], dtype=np.int64)
