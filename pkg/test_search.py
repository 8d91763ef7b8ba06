"""
Tests for Hochberg's procedure, the inchworm band search and the stationarity test
"""
import time
from dataclasses import replace

import numpy as np
import pytest
from scipy import stats

from bandscan.core import FunctionalTimeSeries, fourier_grid, make_block_plan
from bandscan.errors import ConfigError, InvalidPartitionError, InvalidWindowError
from bandscan.inchworm import BandPartition, hochberg, inchworm_search
from bandscan.multitaper import (
    DemeanedSpectrum,
    demean_spectrum,
    frequency_correlation,
    multitaper_spectrum,
    tapers_for_bandwidth,
)
from bandscan.simgen import SETTINGS, get_setting, rand_index, simulate_fts
from bandscan.stationarity import _correlation_inflation, stationarity_statistic, stationarity_test

pytestmark = pytest.mark.unit


def white_noise_spectrum(T=256, B=4, R=3, K=3, seed=0):
    rng = np.random.default_rng(seed)
    X = FunctionalTimeSeries(values=rng.standard_normal((T, R)), grid=np.linspace(0.0, 1.0, R))
    return multitaper_spectrum(X, make_block_plan(T, B), K=K)


def zero_like(S):
    return DemeanedSpectrum(kernels=np.zeros_like(S.kernels), plan=S.plan, grid=S.grid, K=S.K)


def scalar_demeaned(values, T_B):
    values = np.asarray(values, dtype=complex)
    B = values.shape[0]
    return DemeanedSpectrum(kernels=values[:, :, None, None], plan=make_block_plan(B * T_B, B),
                            grid=fourier_grid(T_B), K=1)


def step_up(pvalues, alpha):
    """Hochberg by hand: reject the k smallest for the largest k with p_(k) <= alpha/(m-k+1)."""
    order = np.argsort(pvalues)
    m = len(pvalues)
    k = 0
    for i in range(1, m + 1):
        if pvalues[order[i - 1]] <= alpha / (m - i + 1):
            k = i
    return {int(j) for j in order[:k]}

# ============= HOCHBERG TESTS =============

def test_hochberg_nothing_significant():
    """Test all p-values of 1 reject nothing"""
    assert hochberg([1.0] * 5, 0.05) == set()

def test_hochberg_single_test():
    """Test a single small p-value is rejected"""
    assert hochberg([0.001], 0.05) == {0}

def test_hochberg_example():
    """Test (0.01, 0.04, 0.30) at 0.05 rejects only the first"""
    assert hochberg([0.01, 0.04, 0.30], 0.05) == {0}

def test_hochberg_step_up():
    """Test a large last p-value under alpha rejects everything"""
    assert hochberg([0.04, 0.03, 0.045], 0.05) == {0, 1, 2}

def test_hochberg_empty():
    """Test an empty family rejects nothing"""
    assert hochberg([], 0.05) == set()

@pytest.mark.parametrize("seed", range(20))
def test_hochberg_matches_hand_procedure(seed):
    """Test rejections agree with an explicit step-up loop"""
    rng = np.random.default_rng(seed)
    m = int(rng.integers(1, 13))
    pvalues = rng.uniform(0.0, 0.1, m)
    assert hochberg(pvalues, 0.05) == step_up(pvalues, 0.05)

def test_hochberg_rejects_bad_input():
    """Test p-values and alpha outside their ranges are rejected"""
    with pytest.raises(ConfigError):
        hochberg([0.5, 1.2], 0.05)
    with pytest.raises(ConfigError):
        hochberg([0.5], 0.0)

# ============= PARTITION TESTS =============

def test_partition_bands_and_labels():
    """Test bands run between the outer edges and the cuts"""
    partition = BandPartition((0.15, 0.35))
    assert partition.p_hat == 3
    assert partition.bands() == [(0.0, 0.15), (0.15, 0.35), (0.35, 0.5)]
    np.testing.assert_array_equal(partition.labels(np.array([0.1, 0.15, 0.2, 0.35, 0.4])), [0, 1, 1, 2, 2])

def test_empty_partition():
    """Test no cuts means one band"""
    assert BandPartition().p_hat == 1
    assert BandPartition().bands() == [(0.0, 0.5)]

@pytest.mark.parametrize("cuts", [(0.0,), (0.5,), (0.3, 0.2), (0.2, 0.2)])
def test_invalid_partition(cuts):
    """Test cuts must be increasing inside (0, 0.5)"""
    with pytest.raises(InvalidPartitionError):
        BandPartition(cuts)

# ============= INCHWORM TESTS =============

def test_search_on_zero_spectrum_finds_one_band():
    """Test an all-zero demeaned spectrum is never cut"""
    S = white_noise_spectrum()
    partition, trace = inchworm_search(zero_like(S), S, n_max=5, d0=1000)
    assert partition.p_hat == 1
    assert [p.k0 for p in trace.passes] == [4, 12, 20]
    assert trace.passes[-1].widths == [4, 5, 6, 7]
    for search_pass in trace.passes:
        assert search_pass.action == "advance"
        assert all(p == 1.0 for p in search_pass.pvalues)
        assert search_pass.rejected == []

def test_search_on_degenerate_grid_runs_no_passes():
    """Test a grid too small for the bandwidth returns one band with a note"""
    S = white_noise_spectrum(T=20, B=2, R=2, K=3)
    partition, trace = inchworm_search(demean_spectrum(S), S, d0=1000)
    assert partition.p_hat == 1
    assert trace.passes == []
    assert trace.note.startswith("zero passes")

def test_search_is_reproducible():
    """Test the same seed gives the same partition and trace"""
    S = white_noise_spectrum(seed=3)
    G = demean_spectrum(S)
    first = inchworm_search(G, S, n_max=5, d0=1000, seed=7)
    second = inchworm_search(G, S, n_max=5, d0=1000, seed=7)
    assert first == second

def test_search_respects_margins():
    """Test cuts lie on the grid, clear the edges and stay apart"""
    X = simulate_fts("linear", 2048, 3, seed=1)
    S = multitaper_spectrum(X, make_block_plan(2048, 8), K=11)
    G = demean_spectrum(S)
    partition, trace = inchworm_search(G, S, n_max=10, d0=1000, seed=1)
    T_B, N_B = S.grid.T_B, S.grid.N_B
    eps = trace.epsilon
    assert eps == pytest.approx(12 / 257)
    for cut in partition.cuts:
        assert cut * T_B == pytest.approx(round(cut * T_B))
        assert 2 * eps - 1e-12 <= cut <= (N_B - T_B * eps) / T_B + 1e-12
    assert all(b - a >= eps for a, b in zip(partition.cuts, partition.cuts[1:]))
    k0s = [p.k0 for p in trace.passes]
    assert k0s == sorted(set(k0s))
    for search_pass in trace.passes:
        if search_pass.action == "cut":
            assert search_pass.cut == min(search_pass.rejected)

def test_search_rejects_bad_nmax():
    """Test n_max must be positive"""
    S = white_noise_spectrum()
    with pytest.raises(ConfigError):
        inchworm_search(demean_spectrum(S), S, n_max=0, d0=1000)

# ============= STATIONARITY TESTS =============

def test_stationarity_statistic_example():
    """Test one frequency with values +1, -1 over a band of width 0.1 gives 0.1"""
    values = np.zeros((2, 4))
    values[:, 1] = [1.0, -1.0]
    assert stationarity_statistic(scalar_demeaned(values, 10), 0.2, 0.3) == pytest.approx(0.1)

def test_stationarity_statistic_of_zero_spectrum():
    """Test a zero demeaned spectrum gives 0"""
    assert stationarity_statistic(zero_like(white_noise_spectrum()), 0.1, 0.3) == 0.0

def test_stationarity_statistic_scales_quadratically():
    """Test Q0(c G) = c^2 Q0(G)"""
    G = demean_spectrum(white_noise_spectrum(seed=2))
    scaled = DemeanedSpectrum(kernels=3.0 * G.kernels, plan=G.plan, grid=G.grid, K=G.K)
    assert stationarity_statistic(scaled, 0.1, 0.3) == pytest.approx(9.0 * stationarity_statistic(G, 0.1, 0.3))

def test_stationarity_statistic_is_additive_over_grid_bands():
    """Test splitting a band at a grid frequency splits Q0"""
    values = np.random.default_rng(4).standard_normal((3, 4))
    G = scalar_demeaned(values, 10)
    whole = stationarity_statistic(G, 0.1, 0.4)
    parts = stationarity_statistic(G, 0.1, 0.2) + stationarity_statistic(G, 0.2, 0.4)
    assert whole == pytest.approx(parts, rel=1e-12)

def test_stationarity_statistic_of_replicated_blocks():
    """Test doubling B by repeating a fixed pattern leaves the block-averaged Q0 unchanged"""
    values = np.random.default_rng(5).standard_normal((3, 4))
    once = stationarity_statistic(scalar_demeaned(values, 10), 0.1, 0.4)
    twice = stationarity_statistic(scalar_demeaned(np.vstack([values, values]), 10), 0.1, 0.4)
    assert twice == pytest.approx(once, rel=1e-12)

def test_correlation_inflation():
    """Test one frequency needs no inflation and a band sums the squared taper correlations"""
    S = white_noise_spectrum()
    assert _correlation_inflation(S, 1) == pytest.approx(1.0)
    rho = frequency_correlation(S.grid.T_B, S.K)
    expected = sum(rho[abs(i - j)] ** 2 for i in range(10) for j in range(10)) / 10
    assert _correlation_inflation(S, 10) == pytest.approx(expected)
    assert expected > 1.0

@pytest.mark.parametrize("omega1,omega2", [(0.21, 0.29), (0.3, 0.2), (-0.1, 0.2), (0.2, 0.6)])
def test_stationarity_rejects_bad_band(omega1, omega2):
    """Test empty or out-of-range bands are rejected"""
    with pytest.raises(InvalidWindowError):
        stationarity_statistic(scalar_demeaned(np.zeros((2, 4)), 10), omega1, omega2)

def test_stationarity_of_zero_spectrum_is_not_rejected():
    """Test a zero demeaned spectrum gives p = 1"""
    S = white_noise_spectrum()
    result = stationarity_test(zero_like(S), S, 0.1, 0.3, d0=1000)
    assert result.p_value == 1.0
    assert not result.reject

def test_stationarity_of_large_spectrum_is_rejected():
    """Test a demeaned spectrum far above the null scale is rejected"""
    S = white_noise_spectrum()
    kernels = np.zeros_like(S.kernels)
    kernels[0::2] = 50.0 * np.eye(3)
    kernels[1::2] = -50.0 * np.eye(3)
    G = DemeanedSpectrum(kernels=kernels, plan=S.plan, grid=S.grid, K=S.K)
    result = stationarity_test(G, S, 0.1, 0.3, d0=1000)
    assert result.p_value == 0.0
    assert result.reject

def test_stationarity_result_fields():
    """Test the scaled statistic is K Q0 and wide bands subsample the null"""
    S = white_noise_spectrum()
    G = demean_spectrum(S)
    result = stationarity_test(G, S, 0.0, 0.5, d0=1000)
    assert result.scaled_statistic == pytest.approx(S.K * result.Q0)
    assert result.n_frequencies == 31
    assert result.null_frequencies == 16
    assert 0.0 <= result.p_value <= 1.0

def test_stationarity_is_reproducible():
    """Test the same seed gives the same p-value"""
    S = white_noise_spectrum(seed=5)
    G = demean_spectrum(S)
    assert stationarity_test(G, S, 0.1, 0.3, d0=2000, seed=3) == stationarity_test(G, S, 0.1, 0.3, d0=2000, seed=3)

def test_stationarity_with_joint_null():
    """Test the joint cross-block null runs and gives a valid p-value"""
    S = white_noise_spectrum()
    G = demean_spectrum(S)
    result = stationarity_test(G, S, 0.1, 0.2, d0=1000, test_grid=[0, 2], block_diagonal=False, coupling="full")
    assert result.n_frequencies == 6
    assert 0.0 <= result.p_value <= 1.0

# ============= MONTE-CARLO ACCEPTANCE =============

def search_runs(setting, T_B, B, reps, d0=20000, R=5):
    """Partition, bandwidth and Rand index of the default search over seeded replications."""
    setting = get_setting(setting)
    K = tapers_for_bandwidth(0.05, T_B)
    runs = []
    for seed in range(reps):
        X = simulate_fts(setting, B * T_B, R, seed=seed)
        S = multitaper_spectrum(X, make_block_plan(B * T_B, B), K=K)
        partition, _ = inchworm_search(demean_spectrum(S), S, d0=d0, seed=seed)
        score = rand_index(partition, setting.partition, S.grid.N_B, S.grid.T_B)
        runs.append((partition, S.bandwidth, score))
    return runs


def cuts_found(partition, truth, bandwidth):
    """Whether every true cut has an estimated cut within one bandwidth."""
    return all(any(abs(c - t) <= bandwidth for c in partition.cuts) for t in truth)


@pytest.mark.slow
def test_white_noise_is_not_split():
    """Test functional white noise yields a single band in nearly every replication"""
    runs = search_runs("white-noise", 200, 10, 20)
    assert 1.0 <= np.mean([p.p_hat for p, _, _ in runs]) <= 1.15
    assert np.mean([score for _, _, score in runs]) >= 0.95

@pytest.mark.slow
def test_linear_setting_is_recovered():
    """Test the two-cut linear setting is found with both cuts within a bandwidth"""
    runs = search_runs("linear", 500, 10, 20)
    assert 2.6 <= np.mean([p.p_hat for p, _, _ in runs]) <= 3.5
    assert np.mean([score for _, _, score in runs]) >= 0.85
    assert sum(cuts_found(p, (0.15, 0.35), bw) for p, bw, _ in runs) >= 14

@pytest.mark.slow
def test_sinusoidal_setting_is_recovered():
    """Test the sinusoidal setting is recovered over 20 blocks"""
    runs = search_runs("sinusoidal", 500, 20, 20)
    assert 2.5 <= np.mean([p.p_hat for p, _, _ in runs]) <= 3.5
    assert np.mean([score for _, _, score in runs]) >= 0.80

@pytest.mark.slow
def test_two_band_detection_grows_with_jump():
    """Test a single cut at 0.25 is found more often, never less, when the trend doubles"""
    detections = []
    for jump in (2.0, 4.0):
        runs = search_runs(replace(SETTINGS["two-band"], jump=jump), 500, 10, 20)
        detections.append(sum(p.p_hat == 2 and cuts_found(p, (0.25,), bw) for p, bw, _ in runs))
    assert detections[1] >= detections[0]
    assert detections[1] >= 16

@pytest.mark.slow
def test_search_timing():
    """Test a T=2000, R=5, B=5, K=15, n_max=40 search with 100000 draws runs within ten minutes"""
    X = simulate_fts("linear", 2000, 5, seed=0)
    started = time.perf_counter()
    S = multitaper_spectrum(X, make_block_plan(2000, 5), K=15)
    inchworm_search(demean_spectrum(S), S, n_max=40, d0=100000, seed=0)
    assert time.perf_counter() - started <= 600

@pytest.mark.slow
def test_stationarity_size_on_white_noise():
    """Test the stationarity test rejects white noise at the nominal rate over 200 replications"""
    rejections = 0
    for seed in range(200):
        X = simulate_fts("white-noise", 5000, 5, seed=seed)
        S = multitaper_spectrum(X, make_block_plan(5000, 10), K=24)
        rejections += stationarity_test(demean_spectrum(S), S, 0.1, 0.3, d0=5000, seed=seed).reject
    low, high = stats.binom.interval(0.95, 200, 0.05)
    assert low <= rejections <= high

@pytest.mark.slow
def test_stationarity_power_on_linear_band():
    """Test the trending band (0, 0.15) of the linear setting is rejected in at least 18 of 20 runs"""
    rejections = 0
    for seed in range(20):
        X = simulate_fts("linear", 5000, 5, seed=seed)
        S = multitaper_spectrum(X, make_block_plan(5000, 10), K=24)
        rejections += stationarity_test(demean_spectrum(S), S, 0.0, 0.15, d0=5000, seed=seed).reject
    assert rejections >= 18
