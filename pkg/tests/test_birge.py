import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pbdlearn.birge import (
    EmpiricalCdf,
    amplification_runs,
    birge_learn,
    birge_learn_amplified,
    birge_sample_size,
    concave_majorant,
    convex_minorant,
    deviation_minus,
    deviation_plus,
    locate_mode,
    mode_distance,
)
from pbdlearn.core import DensePmf, PbdSpec, pbd_pmf, tv_distance
from pbdlearn.oracle import PmfOracle, RecordedOracle


# brute-force oracles: cdf on every integer, hulls as min/max over straddling chords


def cdf_table(samples, lo, hi):
    xs = np.arange(lo - 1, hi + 1)
    s = np.sort(np.asarray(samples))
    return xs, np.array([np.sum(s <= x) for x in xs], dtype=float) / len(s)


def chord_envelope(xs, ys, lower):
    out = np.empty(len(xs))
    for t in range(len(xs)):
        best = ys[t]
        for a in range(t + 1):
            for b in range(t, len(xs)):
                if a == b:
                    val = ys[a]
                else:
                    val = ys[a] + (ys[b] - ys[a]) * (xs[t] - xs[a]) / (xs[b] - xs[a])
                best = min(best, val) if lower else max(best, val)
        out[t] = best
    return out


def brute_dminus(samples, lo, hi, j):
    xs, ys = cdf_table(samples, lo, hi)
    keep = xs <= j
    env = chord_envelope(xs[keep], ys[keep], lower=True)
    return float(np.max(ys[keep] - env))


def brute_dplus(samples, lo, hi, j):
    xs, ys = cdf_table(samples, lo, hi)
    keep = xs >= j
    env = chord_envelope(xs[keep], ys[keep], lower=False)
    return float(np.max(env - ys[keep]))


small_samples = st.lists(st.integers(0, 30), min_size=1, max_size=40)


def test_two_point_minorant_is_a_segment():
    cdf = EmpiricalCdf.from_samples([5], (0, 9))
    hx, hy = convex_minorant(cdf, 9)
    # flat at zero up to 4, then one chord to the top right corner
    assert list(hx) == [-1, 4, 9]
    assert list(hy) == [0, 0, 1]


def test_convex_steps_are_all_hull_vertices():
    # counts 1, 3, 6, 10 at 0..3: increments 1,2,3,4 make a convex staircase
    samples = [0] + [1] * 2 + [2] * 3 + [3] * 4
    cdf = EmpiricalCdf.from_samples(samples, (0, 3))
    hx, _ = convex_minorant(cdf, 3)
    assert list(hx) == [-1, 0, 1, 2, 3]
    assert deviation_minus(cdf, 3) == 0


def test_concave_steps_are_all_hull_vertices():
    samples = [0] * 4 + [1] * 3 + [2] * 2 + [3]
    cdf = EmpiricalCdf.from_samples(samples, (0, 3))
    hx, _ = concave_majorant(cdf, 0)
    assert list(hx) == [0, 1, 2, 3]
    assert deviation_plus(cdf, 0) == 0


def test_single_midpoint_step_deviation_is_half():
    # domain [0, 2], jump of height 1 at 1: the minorant is the chord from (0, 0) to (2, 1)
    cdf = EmpiricalCdf.from_samples([1], (0, 2))
    assert deviation_minus(cdf, 2) == pytest.approx(0.5)
    # a wider flat stretch before the step pulls the chord lower
    assert deviation_minus(EmpiricalCdf.from_samples([4], (0, 9)), 9) == pytest.approx(5 / 6)


@pytest.mark.parametrize("seed", range(5))
def test_random_hulls_dominate_pointwise(seed):
    rng = np.random.default_rng(seed)
    samples = rng.integers(0, 60, size=50)
    cdf = EmpiricalCdf.from_samples(samples, (0, 59))
    xs = np.arange(-1, 60)
    hx, hy = convex_minorant(cdf, 59)
    assert np.all(np.interp(xs, hx, hy) <= cdf(xs) + 1e-12)
    hx, hy = concave_majorant(cdf, 10)
    assert np.all(np.interp(xs[11:], hx, hy) >= cdf(xs[11:]) - 1e-12)


def test_empty_samples_rejected():
    with pytest.raises(ValueError):
        EmpiricalCdf.from_samples([], (0, 3))


def test_out_of_domain_rejected():
    with pytest.raises(ValueError):
        EmpiricalCdf.from_samples([5], (0, 3))


@settings(max_examples=60, deadline=None)
@given(small_samples, st.integers(-1, 30))
def test_deviations_match_brute_force(samples, j):
    cdf = EmpiricalCdf.from_samples(samples, (0, 30))
    assert deviation_minus(cdf, j) == pytest.approx(brute_dminus(samples, 0, 30, j), abs=1e-12)
    if j >= 0:
        assert deviation_plus(cdf, j) == pytest.approx(brute_dplus(samples, 0, 30, j), abs=1e-12)


@settings(max_examples=40, deadline=None)
@given(small_samples, st.sampled_from([0.01, 0.05, 0.2]))
def test_locate_mode_within_eta_of_exhaustive_minimum(samples, eta):
    cdf = EmpiricalCdf.from_samples(samples, (0, 30))
    exhaustive = min(
        max(brute_dminus(samples, 0, 30, r), brute_dplus(samples, 0, 30, r)) for r in range(0, 31)
    )
    r = locate_mode(cdf, eta)
    assert 0 <= r <= 30
    assert mode_distance(cdf, r) <= exhaustive + eta + 1e-12


def test_locate_mode_constant_sample():
    cdf = EmpiricalCdf.from_samples([17] * 30, (0, 40))
    assert locate_mode(cdf, 0.05) == 17


@pytest.mark.parametrize("seed", range(3))
def test_locate_mode_decreasing_target(seed):
    mass = np.linspace(1.0, 0.01, 150)
    mass /= mass.sum()
    samples = PmfOracle(DensePmf(0, mass), seed).draw(2000)
    cdf = EmpiricalCdf.from_samples(samples, (0, 149))
    exhaustive = min(mode_distance(cdf, r) for r in range(150))
    assert mode_distance(cdf, locate_mode(cdf, 0.02)) <= exhaustive + 0.02


def test_locate_mode_known_mode_binomial():
    target = pbd_pmf(PbdSpec(np.full(200, 0.5)))
    samples = PmfOracle(target, 9).draw(10_000)
    cdf = EmpiricalCdf.from_samples(samples, (0, 200))
    r = locate_mode(cdf, 0.01)
    assert mode_distance(cdf, r) <= mode_distance(cdf, 100) + 0.01


def test_constant_sample_gives_point_mass():
    h = birge_learn([6] * 20, (0, 10), 0.1)
    dense = h.to_dense()
    assert dense.prob(6) == pytest.approx(1.0)


@settings(max_examples=60, deadline=None)
@given(st.lists(st.integers(0, 80), min_size=1, max_size=300), st.sampled_from([0.02, 0.1, 0.3]))
def test_output_is_unimodal_distribution(samples, eps):
    h = birge_learn(samples, (0, 80), eps)
    assert np.all(h.masses >= 0)
    assert abs(h.masses.sum() - 1) <= 1e-9
    starts = [a for a, _ in h.intervals]
    assert starts[0] == 0 and h.intervals[-1][1] == 80
    assert all(h.intervals[i][1] + 1 == h.intervals[i + 1][0] for i in range(len(h.intervals) - 1))
    dens = h.as_pmf().mass
    peak = int(np.argmax(dens))
    assert np.all(np.diff(dens[: peak + 1]) >= -1e-12)
    assert np.all(np.diff(dens[peak:]) <= 1e-12)


def test_deterministic_output():
    samples = np.random.default_rng(1).integers(0, 50, 500)
    a = birge_learn(samples, (0, 49), 0.1)
    b = birge_learn(samples, (0, 49), 0.1)
    assert a.intervals == b.intervals and np.array_equal(a.masses, b.masses)


@pytest.mark.parametrize(
    "name, target, domain",
    [
        ("uniform", DensePmf(0, np.full(100, 0.01)), (0, 99)),
        ("binomial", pbd_pmf(PbdSpec(np.full(200, 0.5))), (0, 200)),
    ],
)
def test_single_run_accuracy(name, target, domain):
    eps = 0.2
    m = birge_sample_size(domain[1] - domain[0], eps)
    good = 0
    for seed in range(50):
        samples = PmfOracle(target, seed).draw(m)
        h = birge_learn(samples, domain, eps)
        good += tv_distance(h.as_pmf(), target) <= eps
    assert good >= 40


def test_sample_size_formula():
    assert birge_sample_size(99, 0.2) == int(np.ceil(20 * np.log(101) / 0.008))
    assert amplification_runs(0.1) == 5
    assert amplification_runs(0.75) == 2


def test_amplified_runs_and_draw_count():
    target = pbd_pmf(PbdSpec(np.full(60, 0.3)))
    counts = []
    for seed in range(3):
        oracle = PmfOracle(target, seed)
        res = birge_learn_amplified(oracle, (0, 60), 0.25, 0.2, width_bound=100)
        assert len(res.runs) == amplification_runs(0.2)
        assert tv_distance(res.hypothesis.as_pmf(), target) <= 0.25
        counts.append(oracle.used)
    assert len(set(counts)) == 1


def test_amplified_replays_identically():
    target = DensePmf(0, np.full(40, 1 / 40))
    stream = PmfOracle(target, 3).draw(400_000)
    a = birge_learn_amplified(RecordedOracle(stream), (0, 39), 0.3, 0.3)
    b = birge_learn_amplified(RecordedOracle(stream), (0, 39), 0.3, 0.3)
    assert a.winner_index == b.winner_index
    assert np.array_equal(a.hypothesis.masses, b.hypothesis.masses)


def test_one_point_domain_hulls_are_single_segments():
    cdf = EmpiricalCdf.from_samples([0, 0], (0, 0))
    hx, hy = convex_minorant(cdf, 0)
    assert list(hx) == [-1, 0] and list(hy) == [0, 1]
    hx, hy = concave_majorant(cdf, -1)
    assert list(hx) == [-1, 0] and list(hy) == [0, 1]
