import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pbdlearn.core import (
    DensePmf,
    EmptyConditioningError,
    PbdSpec,
    SampleBatch,
    conditional_restrict,
    derive_seed,
    moments,
    pbd_pmf,
    pbd_sample,
    point_mass,
    tv_distance,
)

from conftest import enumerate_pbd

prob_lists = st.lists(st.floats(0.0, 1.0), min_size=1, max_size=12)


def test_single_fair_bernoulli():
    assert np.allclose(pbd_pmf(PbdSpec([0.5])).mass, [0.5, 0.5])


def test_sure_indicators_give_point_mass():
    pm = pbd_pmf(PbdSpec([1.0, 1.0]))
    assert np.allclose(pm.mass, [0.0, 0.0, 1.0])


def test_three_indicator_enumeration():
    p = [0.3, 0.7, 0.5]
    assert np.max(np.abs(pbd_pmf(PbdSpec(p)).mass - enumerate_pbd(p))) <= 1e-12


@pytest.mark.parametrize(
    "probs",
    [np.full(300, 0.37), np.r_[np.full(100, 0.2), np.full(100, 0.9), np.linspace(0, 1, 50)]],
)
def test_grouped_binomial_path_matches_plain_dp(probs):
    # identical means trigger the closed-form binomial path; compare with a naive DP
    ref = np.array([1.0])
    for p in probs:
        ref = np.convolve(ref, [1 - p, p])
    assert np.max(np.abs(pbd_pmf(PbdSpec(probs)).mass - ref)) < 1e-12


def test_large_n_fft_path_normalized():
    rng = np.random.default_rng(3)
    pm = pbd_pmf(PbdSpec(rng.uniform(size=5000)))
    assert pm.mass.size == 5001
    assert abs(pm.mass.sum() - 1) < 1e-12
    assert pm.mass.min() >= 0


@pytest.mark.parametrize("bad", [[], [1.2], [-0.1], [np.nan]])
def test_spec_validation(bad):
    with pytest.raises(ValueError):
        PbdSpec(bad)


def test_dense_pmf_validation():
    with pytest.raises(ValueError):
        DensePmf(0, [0.5, 0.4])
    with pytest.raises(ValueError):
        DensePmf(0, [1.5, -0.5])


def test_sampling_deterministic_spec():
    batch = pbd_sample(PbdSpec([1, 0, 1]), 50, seed=1)
    assert np.all(batch.values == 2)


def test_sampling_mean_clt():
    batch = pbd_sample(PbdSpec(np.full(100, 0.5)), 100_000, seed=7)
    assert abs(batch.values.mean() - 50) <= 3 * np.sqrt(25 / 100_000)


@pytest.mark.parametrize("method", ["auto", "indicator", "inverse-cdf"])
def test_sampling_reproducible(method):
    spec = PbdSpec(np.linspace(0.1, 0.9, 30))
    a = pbd_sample(spec, 1000, seed=42, method=method)
    b = pbd_sample(spec, 1000, seed=42, method=method)
    assert np.array_equal(a.values, b.values)


@pytest.mark.parametrize("method", ["indicator", "inverse-cdf"])
def test_sampling_methods_agree_in_distribution(method):
    spec = PbdSpec(np.random.default_rng(0).uniform(size=60))
    vals = pbd_sample(spec, 100_000, seed=5, method=method).values
    emp = np.bincount(vals, minlength=61) / vals.size
    assert 0.5 * np.abs(emp - pbd_pmf(spec).mass).sum() <= 0.02


def test_sample_batch_domain_check():
    with pytest.raises(ValueError):
        SampleBatch(np.array([0, 5]), 0, (0, 3))


def test_tv_identity_and_disjoint():
    p = pbd_pmf(PbdSpec([0.2, 0.6]))
    assert tv_distance(p, p) == 0
    assert tv_distance(point_mass(0), point_mass(1)) == 1


def test_tv_equals_best_event(rng):
    for _ in range(20):
        a = rng.dirichlet(np.ones(8))
        b = rng.dirichlet(np.ones(6))
        p, q = DensePmf(0, a), DensePmf(2, b)
        pa = np.zeros(10)
        qa = np.zeros(10)
        pa[:8] = a
        qa[2:8] = b
        event = pa > qa
        assert abs(tv_distance(p, q) - (pa[event].sum() - qa[event].sum())) < 1e-12


def test_moments_examples():
    m = moments(PbdSpec([0.5, 0.5]))
    assert (m.mean, m.variance) == (1.0, 0.5)
    m = moments(PbdSpec([1, 1, 1]))
    assert (m.mean, m.variance) == (3.0, 0.0)


def test_moments_match_pmf(rng):
    spec = PbdSpec(rng.uniform(size=200))
    m = moments(spec)
    pm = pbd_pmf(spec)
    assert abs(m.mean - pm.mean()) < 1e-9
    assert abs(m.variance - pm.variance()) < 1e-9


def test_conditional_restrict():
    u = DensePmf(0, np.full(4, 0.25))
    assert tv_distance(conditional_restrict(u, 0, 3), u) == 0
    r = conditional_restrict(u, 1, 2)
    assert r.origin == 1 and np.allclose(r.mass, [0.5, 0.5])


def test_conditional_restrict_preserves_ratios(rng):
    p = DensePmf(3, rng.dirichlet(np.ones(10)))
    r = conditional_restrict(p, 5, 9)
    assert abs(r.mass.sum() - 1) < 1e-12
    inside = p.on(5, 9)
    assert np.allclose(r.mass / r.mass[0], inside / inside[0])


def test_conditional_restrict_empty():
    with pytest.raises(EmptyConditioningError):
        conditional_restrict(point_mass(0), 1, 3)


def test_derive_seed_distinct():
    assert derive_seed(1, 2) != derive_seed(1, 3)
    assert derive_seed(1, 2) == derive_seed(1, 2)


@settings(max_examples=60, deadline=None)
@given(prob_lists)
def test_pmf_matches_enumeration(p):
    assert np.max(np.abs(pbd_pmf(PbdSpec(p)).mass - enumerate_pbd(p))) <= 1e-12


@settings(max_examples=60, deadline=None)
@given(st.lists(st.floats(0.0, 1.0), min_size=1, max_size=500))
def test_pmf_unimodal(p):
    mass = pbd_pmf(PbdSpec(p)).mass
    peak = int(np.argmax(mass))
    tol = 1e-15
    assert np.all(np.diff(mass[: peak + 1]) >= -tol)
    assert np.all(np.diff(mass[peak:]) <= tol)


@settings(max_examples=100, deadline=None)
@given(st.lists(st.floats(0.0, 1.0), min_size=1, max_size=500))
def test_cauchy_schwarz_moment_inequality(p):
    m = moments(PbdSpec(p))
    n = len(p)
    assert m.mean * (n - m.mean) / n >= m.variance - 1e-9
    assert 0 <= m.variance <= n / 4 + 1e-12


@settings(max_examples=60, deadline=None)
@given(st.lists(st.floats(0.0, 1.0), min_size=1, max_size=8),
       st.lists(st.floats(0.0, 1.0), min_size=1, max_size=8),
       st.lists(st.floats(0.0, 1.0), min_size=1, max_size=8))
def test_tv_is_metric(a, b, c):
    pa, pb, pc = (pbd_pmf(PbdSpec(x)) for x in (a, b, c))
    assert abs(tv_distance(pa, pb) - tv_distance(pb, pa)) <= 1e-12
    assert tv_distance(pa, pa) <= 1e-12
    assert tv_distance(pa, pc) <= tv_distance(pa, pb) + tv_distance(pb, pc) + 1e-12


@pytest.mark.parametrize("n", [5, 40, 100])
def test_empirical_frequencies_converge(n):
    spec = PbdSpec(np.random.default_rng(n).uniform(size=n))
    vals = pbd_sample(spec, 100_000, seed=n).values
    emp = DensePmf(0, np.bincount(vals, minlength=n + 1) / vals.size)
    assert tv_distance(emp, pbd_pmf(spec)) <= 0.02
