"""Finite-size oracles: enumeration exactness, chain correctness,
derivative identities."""

import math

import numpy as np
import pytest

from rsbsolve import (
    HopfieldParams,
    InterpolationPoint,
    RangeViolation,
    SkParams,
    enumerate_hopfield_pressure,
    enumerate_sk_pressure,
    hopfield_disorder_sample,
    interpolation_derivative_check,
    metropolis_run,
    metropolis_state_trace,
    overlap_histogram,
    sk_disorder_sample,
    substream,
)


def spins(n):
    idx = np.arange(2 ** n)
    return ((idx[:, None] >> np.arange(n)) & 1) * 2.0 - 1.0


def direct_sk_pressure(j, beta):
    s = spins(j.shape[0])
    e = -0.5 * np.einsum("si,ij,sj->s", s, j, s)
    z = np.exp(-beta * e).sum()
    return math.log(z) / j.shape[0]


def test_single_site_values():
    assert enumerate_sk_pressure(SkParams(beta=1.7, j0=0.4, j=1.0),
                                 1).value == pytest.approx(math.log(2.0),
                                                           abs=1e-14)
    got = enumerate_hopfield_pressure(HopfieldParams(beta=1.3, alpha=1.0), 1)
    assert got.value == pytest.approx(math.log(2.0) + 1.3 / 2.0, abs=1e-12)


def test_two_site_against_direct_sum():
    params = SkParams(beta=0.9, j0=0.5, j=1.0)
    got = enumerate_sk_pressure(params, 2, samples=3, seed=9)
    direct = np.mean([
        direct_sk_pressure(sk_disorder_sample(params, 2,
                                              substream(9, 0, s)).matrix,
                           params.beta)
        for s in range(3)])
    assert got.value == pytest.approx(float(direct), abs=1e-12)


def test_gray_walk_matches_direct_n4():
    params = SkParams(beta=1.1, j0=0.2, j=1.0)
    got = enumerate_sk_pressure(params, 4, samples=2, seed=4)
    direct = np.mean([
        direct_sk_pressure(sk_disorder_sample(params, 4,
                                              substream(4, 0, s)).matrix,
                           params.beta)
        for s in range(2)])
    assert got.value == pytest.approx(float(direct), abs=1e-12)


def test_enumeration_bit_determinism():
    params = SkParams(beta=0.7, j0=0.1, j=1.0)
    a = enumerate_sk_pressure(params, 6, samples=4, seed=11)
    b = enumerate_sk_pressure(params, 6, samples=4, seed=11)
    assert a.value == b.value and a.stderr == b.stderr
    c = enumerate_sk_pressure(params, 6, samples=4, seed=12)
    assert c.value != a.value


def test_sample_prefix_stability():
    # widening the disorder average keeps earlier samples untouched, so
    # the two-sample pieces can be reconstructed from single-sample runs
    params = SkParams(beta=0.8, j0=0.3, j=1.0)
    one = enumerate_sk_pressure(params, 5, samples=1, seed=2)
    two = enumerate_sk_pressure(params, 5, samples=2, seed=2)
    v2 = 2.0 * two.value - one.value
    assert two.stderr == pytest.approx(abs(v2 - one.value) / 2.0, abs=1e-12)


def test_enumeration_size_guard():
    with pytest.raises(RangeViolation):
        enumerate_sk_pressure(SkParams(beta=1.0, j0=0.0, j=1.0), 21)
    with pytest.raises(RangeViolation):
        enumerate_hopfield_pressure(HopfieldParams(beta=1.0, alpha=0.1), 0)


def test_single_pattern_gauge_invariance():
    # one binary pattern is gauge-equivalent to the uniform ferromagnet,
    # so the quenched average carries no disorder at all
    params = HopfieldParams(beta=1.1, alpha=0.1)
    got = enumerate_hopfield_pressure(params, 8, samples=4, seed=3, p=1)
    assert got.stderr <= 1e-13
    k = np.arange(9)
    tot = (8 - 2 * k) ** 2
    z = (np.exp(params.beta * tot / 16.0)
         * np.array([math.comb(8, int(i)) for i in k])).sum()
    assert got.value == pytest.approx(math.log(z) / 8.0, abs=1e-12)


def test_pattern_layout():
    sample = hopfield_disorder_sample(HopfieldParams(beta=1.0, alpha=0.5), 10,
                                      substream(0, 1, 0))
    assert sample.p == 5
    assert set(np.unique(sample.patterns[0])) <= {-1.0, 1.0}


def test_detailed_balance_two_site():
    j = np.array([[0.0, 0.9], [0.9, 0.0]])
    beta = 0.7
    states = metropolis_state_trace(SkParams(beta=beta, j0=0.0, j=1.0), 2,
                                    60000, seed=1, couplings=j)
    s = spins(2)
    e = -0.5 * np.einsum("si,ij,sj->s", s, j, s)
    boltz = np.exp(-beta * e)
    boltz /= boltz.sum()
    for state in range(4):
        ind = (states == state).astype(float)
        batches = np.array([b.mean() for b in np.array_split(ind, 20)])
        se = batches.std(ddof=1) / math.sqrt(20)
        assert abs(ind.mean() - boltz[state]) <= 3.0 * se + 0.01


def test_histogram_free_chain():
    hist = overlap_histogram(SkParams(beta=0.0, j0=0.0, j=1.0), 300, 800,
                             seed=0, disorder_samples=1)
    half_bin = 0.5 * float(hist.edges[1] - hist.edges[0])
    assert abs(hist.mode_center) <= half_bin
    assert 0.8 <= hist.std * math.sqrt(300) <= 1.2
    assert abs(hist.mean) <= 0.02


def test_histogram_aligned_chain():
    hist = overlap_histogram(SkParams(beta=2.0, j0=3.0, j=0.0), 150, 400,
                             seed=0, disorder_samples=1)
    width = float(hist.edges[1] - hist.edges[0])
    assert 1.0 - hist.mode_center <= 2.0 * width


def test_histogram_glass_broadening():
    base = overlap_histogram(SkParams(beta=0.0, j0=0.0, j=1.0), 250, 700,
                             seed=0, disorder_samples=2)
    glass = overlap_histogram(SkParams(beta=2.0, j0=0.0, j=1.0), 250, 700,
                              seed=0, disorder_samples=2)
    assert glass.std >= 3.0 * base.std


def test_histogram_csv_shape():
    hist = overlap_histogram(SkParams(beta=0.0, j0=0.0, j=1.0), 60, 80,
                             seed=0, disorder_samples=1)
    lines = hist.to_csv().strip().split("\n")
    assert lines[0] == "bin_lo,bin_hi,count"
    assert len(lines) == len(hist.counts) + 1
    assert int(sum(int(l.split(",")[2]) for l in lines[1:])) == hist.n_samples


def test_metropolis_free_overlap():
    res = metropolis_run(HopfieldParams(beta=0.0, alpha=0.02), 200, 400,
                         seed=0)
    assert abs(res.overlap.value) <= 3.0 * res.overlap.stderr + 0.05


def test_metropolis_one_body_magnet():
    # one stored pattern at low temperature: the chain must track the
    # deterministic one-body magnetization
    res = metropolis_run(HopfieldParams(beta=1.8, alpha=0.01), 500, 300,
                         seed=0, p=1)
    m = 0.5
    for _ in range(200):
        m = math.tanh(1.8 * m)
    assert res.overlap.value == pytest.approx(m, abs=0.02)


def test_decoupled_interpolation_exact():
    check = interpolation_derivative_check(
        "sk", "w", InterpolationPoint(t=0.0, x=(0.0,), w=0.3),
        SkParams(beta=1.0, j0=0.8, j=1.0), n=4, samples=8, seed=0)
    assert check.abs_diff <= 1e-10


def test_path_weight_identity_exact():
    check = interpolation_derivative_check(
        "sk", "w", InterpolationPoint(t=0.5, x=(0.4,), w=0.3),
        SkParams(beta=1.0, j0=0.8, j=1.0), n=5, samples=32, seed=0)
    assert check.abs_diff <= 1e-8


def test_flat_interpolation_identities_statistical():
    params = SkParams(beta=1.0, j0=0.8, j=1.0)
    pt = InterpolationPoint(t=0.5, x=(0.4,), w=0.3)
    for target in ("t", "x"):
        check = interpolation_derivative_check("sk", target, pt, params, n=6,
                                               samples=1000, seed=0)
        denom = max(abs(check.fd_lhs), abs(check.bracket_rhs))
        assert check.abs_diff <= max(1e-2 * denom, 4.0 * check.stderr)


def test_pattern_interpolation_identity_statistical():
    check = interpolation_derivative_check(
        "hopfield", "x",
        InterpolationPoint(t=0.5, x=(0.5,), y=(0.6,), z=0.3, w=0.3),
        HopfieldParams(beta=0.6, alpha=0.5), n=6, samples=1000, seed=0, p=3)
    denom = max(abs(check.fd_lhs), abs(check.bracket_rhs))
    assert check.abs_diff <= max(1e-2 * denom, 4.0 * check.stderr)


def test_substream_reproducible_and_disjoint():
    a = substream(7, 2, 5).random(4)
    b = substream(7, 2, 5).random(4)
    c = substream(7, 2, 6).random(4)
    assert np.array_equal(a, b)
    assert not np.array_equal(a, c)
