"""Command line harness: generate targets, sample, learn, evaluate and benchmark.

Exit codes: 0 success, 1 unexpected failure, 2 usage error, 3 sample source exhausted,
4 candidate budget refused.
"""

from __future__ import annotations

import argparse
import csv
import io as _stdio
import json
import sys
import time
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import io
from .core import PbdSpec, derive_seed, make_rng, pbd_pmf, pbd_sample, tv_distance
from .hypotheses import PbdHypothesis, tv_to
from .learn import load_config, learn_pbd
from .oracle import OracleExhausted, RecordedOracle, pbd_oracle
from .poisson_eval import PoissonEvalRequest, poisson_pmf_approx
from .proper import proper_learn_pbd
from .selection import tournament_select
from .weighted import (
    CandidateBudgetExceeded,
    WeightClass,
    WeightedSumSpec,
    learn_weighted,
    weighted_dense_pmf,
    weighted_oracle,
    weighted_tv,
)

EXIT_OK, EXIT_FAILURE, EXIT_USAGE, EXIT_EXHAUSTED, EXIT_BUDGET = 0, 1, 2, 3, 4

GEN_KINDS = ("binomial", "uniform-p", "random", "sparse", "weighted")


class UsageError(Exception):
    pass


# ---------------------------------------------------------------- helpers


def _emit(doc, out: str | None) -> None:
    text = io.dumps(doc)
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _int_list(text: str) -> list[int]:
    try:
        return [int(float(x)) for x in text.split(",") if x.strip()]
    except ValueError as exc:
        raise UsageError(f"expected a comma-separated list of integers, got {text!r}") from exc


def _float_list(text: str) -> list[float]:
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError as exc:
        raise UsageError(f"expected a comma-separated list of numbers, got {text!r}") from exc


def _fraction_list(text: str) -> list[Fraction]:
    try:
        return [Fraction(x.strip()) for x in text.split(",") if x.strip()]
    except (ValueError, ZeroDivisionError) as exc:
        raise UsageError(f"expected comma-separated rationals, got {text!r}") from exc


def _config(args):
    return load_config(getattr(args, "config", None))


def _load_spec(path: str):
    try:
        return io.spec_from_document(io.read_json(path))
    except (OSError, KeyError, ValueError) as exc:
        raise UsageError(f"cannot read spec {path}: {exc}") from exc


def _check_prob(p: float, name: str = "p") -> float:
    if not 0.0 <= p <= 1.0:
        raise UsageError(f"{name} must lie in [0, 1]")
    return p


def generate(kind: str, n: int, seed: int, p: float = 0.5, ell: int = 5,
             weights: list[Fraction] | None = None):
    """Target spec of the requested family; deterministic per seed."""
    if n < 1:
        raise UsageError("n must be positive")
    rng = make_rng(seed)
    if kind == "binomial":
        return PbdSpec(np.full(n, _check_prob(p)))
    if kind == "uniform-p":
        return PbdSpec(np.full(n, rng.uniform(0.0, 1.0)))
    if kind == "random":
        return PbdSpec(rng.uniform(0.0, 1.0, n))
    if kind == "sparse":
        if not 0 <= ell <= n:
            raise UsageError("ell must lie in 0..n")
        probs = np.zeros(n)
        ones = int(rng.integers(0, n - ell + 1))
        probs[:ell] = rng.uniform(0.05, 0.95, ell)
        probs[ell : ell + ones] = 1.0
        return PbdSpec(probs)
    if kind == "weighted":
        weights = weights or [Fraction(1), Fraction(3)]
        if len(set(weights)) != len(weights):
            raise UsageError("weights must be distinct")
        k = len(weights)
        counts = [n // k + (1 if j < n % k else 0) for j in range(k)]
        if min(counts) < 1:
            raise UsageError("need at least one indicator per weight")
        return WeightedSumSpec(
            tuple(WeightClass(w, rng.uniform(0.0, 1.0, c)) for w, c in zip(weights, counts))
        )
    raise UsageError(f"unknown kind {kind!r}; choose from {', '.join(GEN_KINDS)}")


def _target_pmf(spec):
    if isinstance(spec, WeightedSumSpec):
        return weighted_dense_pmf(spec)
    return pbd_pmf(spec).trimmed()


# ---------------------------------------------------------------- commands


def cmd_gen(args) -> int:
    weights = _fraction_list(args.weights) if args.weights else None
    spec = generate(args.kind, args.n, args.seed, p=args.p, ell=args.ell, weights=weights)
    _emit(io.spec_to_document(spec), args.out)
    return EXIT_OK


def cmd_sample(args) -> int:
    spec = _load_spec(args.spec)
    if args.m < 1:
        raise UsageError("m must be positive")
    if isinstance(spec, WeightedSumSpec):
        values = weighted_oracle(spec, args.seed).draw(args.m)
    else:
        values = pbd_sample(spec, args.m, args.seed).values
    if args.out:
        io.write_samples(args.out, values)
    else:
        sys.stdout.write("".join(f"{int(v)}\n" for v in values))
    return EXIT_OK


def _oracle_for(args, spec):
    if args.samples:
        return RecordedOracle(io.read_samples(args.samples))
    if spec is None:
        raise UsageError("need --spec or --samples")
    if isinstance(spec, WeightedSumSpec):
        return weighted_oracle(spec, args.seed)
    return pbd_oracle(spec, args.seed)


def cmd_learn(args) -> int:
    config = _config(args)
    spec = _load_spec(args.spec) if args.spec else None
    if isinstance(spec, WeightedSumSpec):
        raise UsageError("use learn-weighted for weighted targets")
    truth = _load_spec(args.truth) if args.truth else spec
    n = args.n if args.n is not None else (spec.n if spec is not None else None)
    if n is None or n < 1:
        raise UsageError("--n is required when learning from a sample file")
    eps = args.eps if args.eps is not None else config.eps
    delta = args.delta if args.delta is not None else config.delta
    oracle = _oracle_for(args, spec)
    started = time.perf_counter()
    if args.mode == "proper":
        res = proper_learn_pbd(oracle, n, eps, delta, config)
        hyp_doc = io.spec_to_document(res.spec)
        metrics = res.metrics()
        hyp = PbdHypothesis.from_spec(res.spec)
    else:
        res = learn_pbd(oracle, n, eps, delta, config)
        hyp = res.hypothesis
        hyp_doc = hyp.to_document()
        metrics = res.metrics()
    metrics.update(mode=args.mode, n=n, eps=eps, delta=delta, total_draws=oracle.used)
    if truth is not None:
        metrics["tv"] = tv_to(_target_pmf(truth), hyp)
    if args.timing:
        metrics["seconds"] = time.perf_counter() - started
    _emit(hyp_doc, args.out)
    if args.metrics:
        Path(args.metrics).write_text(io.dumps(metrics))
    elif args.out:
        sys.stdout.write(io.dumps(metrics))
    return EXIT_OK


def cmd_eval(args) -> int:
    truth = _load_spec(args.truth)
    doc = io.read_json(args.hypothesis)
    target = _target_pmf(truth)
    if doc.get("type") in ("pbd", "weighted"):
        other = io.spec_from_document(doc)
        if isinstance(other, WeightedSumSpec):
            if not isinstance(truth, WeightedSumSpec):
                raise UsageError("weighted hypothesis needs a weighted truth")
            tv = weighted_tv(truth, other)
        else:
            tv = tv_distance(target, pbd_pmf(other))
    else:
        tv = tv_to(target, io.hypothesis_from_document(doc))
    _emit({"tv": tv}, args.out)
    return EXIT_OK


def cmd_tournament(args) -> int:
    docs = io.read_json(args.candidates)
    if isinstance(docs, dict):
        docs = docs.get("candidates", [])
    if not docs:
        raise UsageError("candidate file holds no hypotheses")
    candidates = [io.hypothesis_from_document(d) for d in docs]
    spec = _load_spec(args.spec) if args.spec else None
    oracle = _oracle_for(args, spec)
    winner, rec = tournament_select(oracle, candidates, args.eps, args.delta)
    doc = rec.to_document()
    doc["verdict_matrix"] = rec.verdict_matrix().tolist()
    doc["failed"] = winner is None
    _emit(doc, args.out)
    return EXIT_OK


def cmd_learn_weighted(args) -> int:
    config = _config(args)
    spec = _load_spec(args.spec) if args.spec else None
    if spec is not None and not isinstance(spec, WeightedSumSpec):
        raise UsageError("learn-weighted needs a weighted spec")
    if spec is not None:
        shape = spec.shape()
    else:
        if not (args.weights and args.counts):
            raise UsageError("give --spec, or --weights and --counts with --samples")
        weights, counts = _fraction_list(args.weights), _int_list(args.counts)
        if len(weights) != len(counts):
            raise UsageError("one count per weight")
        shape = list(zip(weights, counts))
    truth = _load_spec(args.truth) if args.truth else spec
    eps = args.eps if args.eps is not None else config.eps
    delta = args.delta if args.delta is not None else config.delta
    oracle = _oracle_for(args, spec)
    started = time.perf_counter()
    res = learn_weighted(oracle, shape, eps, delta, config)
    metrics = res.metrics()
    metrics.update(eps=eps, delta=delta)
    if truth is not None:
        metrics["tv"] = weighted_tv(truth, res.spec)
    if args.timing:
        metrics["seconds"] = time.perf_counter() - started
    _emit(res.spec.to_document(), args.out)
    if args.metrics:
        Path(args.metrics).write_text(io.dumps(metrics))
    elif args.out:
        sys.stdout.write(io.dumps(metrics))
    return EXIT_OK


BENCH_COLUMNS = ["n", "eps", "trials", "median_tv", "p90_tv", "samples_used", "seconds"]


def run_bench(ns, epss, trials, seed, kind="binomial", p=0.5, mode="nonproper",
              delta=0.1, config=None, timing=False) -> list[dict]:
    """One row per ``(n, eps)`` cell; the target spec of each cell is generated from the seed."""
    rows = []
    for n in ns:
        spec = generate(kind, n, derive_seed(seed, n), p=p)
        target = pbd_pmf(spec).trimmed()
        for eps in epss:
            tvs, used = [], set()
            started = time.perf_counter()
            for trial in range(trials):
                oracle = pbd_oracle(spec, derive_seed(seed, n, trial))
                if mode == "proper":
                    res = proper_learn_pbd(oracle, n, eps, delta, config)
                    tvs.append(tv_distance(target, pbd_pmf(res.spec)))
                    used.add(res.learn.samples_used)
                else:
                    res = learn_pbd(oracle, n, eps, delta, config)
                    tvs.append(tv_to(target, res.hypothesis))
                    used.add(res.samples_used)
            rows.append(
                {
                    "n": n,
                    "eps": eps,
                    "trials": trials,
                    "median_tv": float(np.median(tvs)),
                    "p90_tv": float(np.quantile(tvs, 0.9)),
                    "samples_used": max(used),
                    "seconds": f"{time.perf_counter() - started:.3f}" if timing else "",
                }
            )
    return rows


def bench_csv(rows: list[dict]) -> str:
    buf = _stdio.StringIO()
    writer = csv.DictWriter(buf, fieldnames=BENCH_COLUMNS, lineterminator="\n")
    writer.writeheader()
    for row in rows:
        writer.writerow({k: (f"{v:.6g}" if isinstance(v, float) else v) for k, v in row.items()})
    return buf.getvalue()


def cmd_bench(args) -> int:
    ns = _int_list(args.n)
    epss = _float_list(args.eps)
    if not ns or not epss or args.trials < 1:
        raise UsageError("bench needs at least one n, one eps and one trial")
    rows = run_bench(ns, epss, args.trials, args.seed, kind=args.kind, p=args.p, mode=args.mode,
                     delta=args.delta, config=_config(args), timing=args.timing)
    text = bench_csv(rows)
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def cmd_poisson_pmf(args) -> int:
    try:
        lam = Fraction(args.lam)
    except (ValueError, ZeroDivisionError) as exc:
        raise UsageError(f"bad --lambda {args.lam!r}") from exc
    try:
        req = PoissonEvalRequest(lam, args.k, args.t)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    sys.stdout.write(f"{poisson_pmf_approx(req):.12g}\n")
    return EXIT_OK


# ---------------------------------------------------------------- parser


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="pbdlearn", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, seed=True):
        p.add_argument("--config", help="JSON learner config (overrides $PBDLEARN_CONFIG)")
        if seed:
            p.add_argument("--seed", type=int, default=0)
        p.add_argument("--out")

    g = sub.add_parser("gen", help="write a target spec")
    common(g)
    g.add_argument("--kind", required=True, choices=GEN_KINDS)
    g.add_argument("--n", type=int, required=True)
    g.add_argument("--p", type=float, default=0.5)
    g.add_argument("--ell", type=int, default=5)
    g.add_argument("--weights", help="comma-separated distinct weights (kind=weighted)")
    g.set_defaults(func=cmd_gen)

    s = sub.add_parser("sample", help="draw samples from a spec")
    common(s)
    s.add_argument("--spec", required=True)
    s.add_argument("--m", type=int, required=True)
    s.set_defaults(func=cmd_sample)

    lrn = sub.add_parser("learn", help="learn a PBD from a live spec or a sample file")
    common(lrn)
    lrn.add_argument("--spec")
    lrn.add_argument("--samples")
    lrn.add_argument("--truth")
    lrn.add_argument("--n", type=int)
    lrn.add_argument("--eps", type=float)
    lrn.add_argument("--delta", type=float)
    lrn.add_argument("--mode", choices=("nonproper", "proper"), default="nonproper")
    lrn.add_argument("--metrics")
    lrn.add_argument("--timing", action="store_true", help="record wall time in metrics")
    lrn.set_defaults(func=cmd_learn)

    e = sub.add_parser("eval", help="exact TV between a hypothesis and a truth spec")
    common(e, seed=False)
    e.add_argument("--hypothesis", required=True)
    e.add_argument("--truth", required=True)
    e.set_defaults(func=cmd_eval)

    t = sub.add_parser("tournament", help="select among candidate hypotheses")
    common(t)
    t.add_argument("--candidates", required=True)
    t.add_argument("--spec")
    t.add_argument("--samples")
    t.add_argument("--eps", type=float, required=True)
    t.add_argument("--delta", type=float, default=0.1)
    t.set_defaults(func=cmd_tournament)

    w = sub.add_parser("learn-weighted", help="learn a weighted Bernoulli sum")
    common(w)
    w.add_argument("--spec")
    w.add_argument("--samples")
    w.add_argument("--truth")
    w.add_argument("--weights")
    w.add_argument("--counts")
    w.add_argument("--eps", type=float)
    w.add_argument("--delta", type=float)
    w.add_argument("--metrics")
    w.add_argument("--timing", action="store_true")
    w.set_defaults(func=cmd_learn_weighted)

    b = sub.add_parser("bench", help="sample-complexity sweep written as CSV")
    common(b)
    b.add_argument("--n", required=True, help="comma-separated list")
    b.add_argument("--eps", required=True, help="comma-separated list")
    b.add_argument("--delta", type=float, default=0.1)
    b.add_argument("--trials", type=int, default=3)
    b.add_argument("--kind", choices=GEN_KINDS[:4], default="binomial")
    b.add_argument("--p", type=float, default=0.5)
    b.add_argument("--mode", choices=("nonproper", "proper"), default="nonproper")
    b.add_argument("--timing", action="store_true", help="fill the seconds column")
    b.set_defaults(func=cmd_bench)

    pp = sub.add_parser("poisson-pmf", help="additive-error Poisson pmf")
    pp.add_argument("--lambda", dest="lam", required=True, help="rational NUM/DEN")
    pp.add_argument("--k", type=int, required=True)
    pp.add_argument("--t", type=int, required=True)
    pp.set_defaults(func=cmd_poisson_pmf)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OracleExhausted as exc:
        print(f"error: sample source exhausted: {exc}", file=sys.stderr)
        return EXIT_EXHAUSTED
    except CandidateBudgetExceeded as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_BUDGET
    except (ValueError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except Exception as exc:  # noqa: BLE001
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_FAILURE


if __name__ == "__main__":
    sys.exit(main())
