"""
Tests for sine tapers, functional DFTs and the multitaper spectral estimator
"""
import numpy as np
import pytest

from bandscan import config
from bandscan.core import FunctionalTimeSeries, fourier_grid, make_block_plan
from bandscan.errors import DegenerateDemeanError, IndexOutOfRangeError, TooManyTapersError
from bandscan.multitaper import (
    SpectralEstimate,
    demean_spectrum,
    fdft,
    frequency_correlation,
    multitaper_spectrum,
    sine_taper_matrix,
    tapers_for_bandwidth,
)

pytestmark = pytest.mark.unit


def white_noise(T, R, seed=0):
    rng = np.random.default_rng(seed)
    return FunctionalTimeSeries(values=rng.standard_normal((T, R)), grid=np.linspace(0.0, 1.0, R))


def scalar_spectrum(values):
    """SpectralEstimate with R=1 kernels from a B x N_B array."""
    values = np.asarray(values, dtype=complex)
    B, N_B = values.shape
    T_B = 2 * (N_B + 1)
    return SpectralEstimate(kernels=values[:, :, None, None], plan=make_block_plan(B * T_B, B),
                            grid=fourier_grid(T_B), K=1)

# ============= TAPER TESTS =============

@pytest.mark.parametrize("T_B,K", [(3, 1), (10, 3), (64, 8), (400, 19)])
def test_tapers_are_orthonormal(T_B, K):
    """Test sine tapers are orthonormal over a block"""
    V = sine_taper_matrix(T_B, K)
    np.testing.assert_allclose(V.T @ V, np.eye(K), atol=1e-12)

def test_single_taper_on_three_samples():
    """Test T_B=3, K=1 gives (1/2, sqrt(2)/2, 1/2)"""
    np.testing.assert_allclose(sine_taper_matrix(3, 1)[:, 0], [0.5, np.sqrt(2) / 2, 0.5], atol=1e-15)

def test_tapers_do_not_depend_on_block():
    """Test every block shares the same taper matrix"""
    np.testing.assert_array_equal(sine_taper_matrix(20, 3, b=1), sine_taper_matrix(20, 3, b=4))

@pytest.mark.parametrize("T_B,K", [(5, 5), (5, 9), (10, 0)])
def test_too_many_tapers(T_B, K):
    """Test K must lie in 1..T_B-1"""
    with pytest.raises(TooManyTapersError):
        sine_taper_matrix(T_B, K)

@pytest.mark.parametrize("bw,T_B,expected", [(0.05, 320, 15), (0.05, 319, 15), (2 / 11, 10, 1), (0.001, 100, 1)])
def test_tapers_for_bandwidth(bw, T_B, expected):
    """Test K = max(1, floor(bw (T_B + 1)) - 1)"""
    assert tapers_for_bandwidth(bw, T_B) == expected

# ============= FDFT TESTS =============

def test_fdft_of_zero_series():
    """Test a zero series has a zero DFT"""
    X = FunctionalTimeSeries(values=np.zeros((20, 3)), grid=np.array([0.0, 0.5, 1.0]))
    np.testing.assert_array_equal(fdft(X, make_block_plan(20, 2), 1, 1, 0.2), np.zeros(3))

def test_fdft_of_single_nonzero_row():
    """Test one nonzero row t0 gives v_k(t0 - (b-1) T_B) exp(-i 2 pi omega t0)"""
    values = np.zeros((20, 2))
    values[12] = [1.0, -2.0]  # t0 = 13, second block
    X = FunctionalTimeSeries(values=values, grid=np.array([0.0, 1.0]))
    plan = make_block_plan(20, 2)
    taper = sine_taper_matrix(10, 2)[:, 1]
    expected = taper[2] * np.exp(-2j * np.pi * 0.2 * 13) * np.array([1.0, -2.0])
    np.testing.assert_allclose(fdft(X, plan, 2, 2, 0.2), expected, atol=1e-14)

def test_fdft_is_linear():
    """Test the DFT of c X + Y is c DFT(X) + DFT(Y)"""
    X, Y = white_noise(40, 3, seed=1), white_noise(40, 3, seed=2)
    combined = FunctionalTimeSeries(values=2.5 * X.values + Y.values, grid=X.grid)
    plan = make_block_plan(40, 4)
    np.testing.assert_allclose(
        fdft(combined, plan, 3, 1, 0.3),
        2.5 * fdft(X, plan, 3, 1, 0.3) + fdft(Y, plan, 3, 1, 0.3),
        atol=1e-12,
    )

@pytest.mark.parametrize("b,k,omega", [(0, 1, 0.2), (3, 1, 0.2), (1, 0, 0.2), (1, 1, 0.0), (1, 1, 0.5)])
def test_fdft_rejects_out_of_range(b, k, omega):
    """Test block, taper and frequency must be in range"""
    with pytest.raises(IndexOutOfRangeError):
        fdft(white_noise(20, 2), make_block_plan(20, 2), b, k, omega)

def test_fdft_satisfies_parseval():
    """Test interior DFT energies plus the two real bins add up to the tapered energy"""
    X = white_noise(32, 1, seed=5)
    plan = make_block_plan(32, 1)
    v = sine_taper_matrix(32, 3)[:, 2]
    tapered = v * X.values[:, 0]
    interior = sum(abs(fdft(X, plan, 1, 3, k / 32)[0]) ** 2 for k in range(1, 16))
    edges = tapered.sum() ** 2 + (tapered * (-1.0) ** np.arange(32)).sum() ** 2
    assert (edges + 2 * interior) / 32 == pytest.approx(np.sum(tapered**2), rel=1e-10)

# ============= MULTITAPER TESTS =============

def test_kernels_match_direct_dfts():
    """Test the FFT path equals the mean of DFT outer products"""
    X = white_noise(64, 3, seed=3)
    plan = make_block_plan(64, 2)
    S = multitaper_spectrum(X, plan, K=3)
    for b, k in [(1, 1), (2, 7), (2, 15)]:
        d = [fdft(X, plan, b, j, k / 32) for j in range(1, 4)]
        expected = sum(np.outer(dj, np.conj(dj)) for dj in d) / 3
        np.testing.assert_allclose(S.kernel(b, k), expected, atol=1e-10)

def test_kernels_are_hermitian_with_nonnegative_diagonal():
    """Test every kernel is Hermitian with a real nonnegative diagonal"""
    S = multitaper_spectrum(white_noise(200, 4, seed=4), make_block_plan(200, 4), K=5)
    np.testing.assert_array_equal(S.kernels, np.conj(np.swapaxes(S.kernels, -1, -2)))
    diag = np.diagonal(S.kernels, axis1=-2, axis2=-1)
    assert np.all(diag.imag == 0)
    assert np.all(diag.real >= -1e-12)

def test_zero_series_gives_zero_spectrum():
    """Test a zero series has zero kernels"""
    X = FunctionalTimeSeries(values=np.zeros((40, 2)), grid=np.array([0.0, 1.0]))
    S = multitaper_spectrum(X, make_block_plan(40, 2), K=2)
    assert not np.any(S.kernels)
    assert S.kernels.shape == (2, 9, 2, 2)

def test_centering_removes_constant():
    """Test centering turns a constant series into a zero spectrum"""
    X = FunctionalTimeSeries(values=np.full((40, 2), 5.0), grid=np.array([0.0, 1.0]))
    plan = make_block_plan(40, 2)
    assert np.any(multitaper_spectrum(X, plan, K=2).kernels)
    np.testing.assert_allclose(multitaper_spectrum(X, plan, K=2, center=True).kernels, 0.0, atol=1e-20)

def test_truncated_samples_are_ignored():
    """Test trailing samples beyond B T_B do not change the estimate"""
    X = white_noise(107, 2, seed=6)
    trimmed = FunctionalTimeSeries(values=X.values[:105], grid=X.grid)
    S = multitaper_spectrum(X, make_block_plan(107, 5), K=2)
    S_trim = multitaper_spectrum(trimmed, make_block_plan(105, 5), K=2)
    np.testing.assert_array_equal(S.kernels, S_trim.kernels)

def test_worker_count_does_not_change_estimate(monkeypatch):
    """Test the estimate is bit-identical for any FFT worker count"""
    X = white_noise(256, 3, seed=7)
    plan = make_block_plan(256, 4)
    monkeypatch.setattr(config, "WORKERS", 1)
    single = multitaper_spectrum(X, plan, K=4).kernels
    monkeypatch.setattr(config, "WORKERS", 4)
    np.testing.assert_array_equal(single, multitaper_spectrum(X, plan, K=4).kernels)

def test_bandwidth_property():
    """Test the smoothing bandwidth is (K+1)/(T_B+1)"""
    S = multitaper_spectrum(white_noise(100, 2), make_block_plan(100, 2), K=4)
    assert S.bandwidth == pytest.approx(5 / 51)

# ============= WHITE NOISE STATISTICS =============

@pytest.fixture(scope="module")
def many_blocks():
    """1000 independent white-noise blocks of length 128"""
    X = white_noise(128 * 1000, 1, seed=11)
    return X, make_block_plan(X.T, 1000)

def test_white_noise_estimate_is_unbiased(many_blocks):
    """Test the mean estimate of unit white noise is 1"""
    X, plan = many_blocks
    spectra = multitaper_spectrum(X, plan, K=8).autospectra()[:, 31, 0]
    assert abs(spectra.mean() - 1.0) < 0.06

def test_variance_falls_with_taper_count(many_blocks):
    """Test doubling K roughly halves the variance"""
    X, plan = many_blocks
    v8 = multitaper_spectrum(X, plan, K=8).autospectra()[:, 31, 0].var()
    v16 = multitaper_spectrum(X, plan, K=16).autospectra()[:, 31, 0].var()
    assert 0.38 < v16 / v8 < 0.62

def test_distant_frequencies_are_uncorrelated(many_blocks):
    """Test estimates more than a bandwidth apart are nearly uncorrelated"""
    X, plan = many_blocks
    spectra = multitaper_spectrum(X, plan, K=8).autospectra()[:, :, 0]
    assert abs(np.corrcoef(spectra[:, 19], spectra[:, 43])[0, 1]) < 0.15

def test_neighbour_correlation_matches_taper_overlap(many_blocks):
    """Test the empirical correlation of nearby estimates follows the taper overlap"""
    X, plan = many_blocks
    spectra = multitaper_spectrum(X, plan, K=8).autospectra()[:, :, 0]
    rho = frequency_correlation(128, 8)
    for lag in (1, 2):
        observed = np.corrcoef(spectra[:, 31], spectra[:, 31 + lag])[0, 1]
        assert abs(observed - rho[lag]) < 0.12

# ============= FREQUENCY CORRELATION TESTS =============

def test_frequency_correlation_at_zero_lag():
    """Test an estimate is fully correlated with itself"""
    rho = frequency_correlation(500, 24)
    assert rho.shape == (251,)
    assert rho[0] == pytest.approx(1.0)

def test_frequency_correlation_matches_direct_dft():
    """Test a lag equals the mean squared overlap of taper products"""
    T_B, K, m = 64, 5, 3
    h = sine_taper_matrix(T_B, K)
    phase = np.exp(-2j * np.pi * m * np.arange(T_B) / T_B)
    expected = sum(abs(np.sum(h[:, k] * h[:, l] * phase)) ** 2 for k in range(K) for l in range(K)) / K
    assert frequency_correlation(T_B, K)[m] == pytest.approx(expected)

def test_frequency_correlation_decays_within_bandwidth():
    """Test correlation is about one half at the next frequency and vanishes beyond twice the taper count"""
    K = 24
    rho = frequency_correlation(500, K)
    assert 0.3 < rho[1] < 0.6
    assert np.all(rho[1:K] < 1.0)
    assert rho[2 * K:].max() < 0.05

# ============= DEMEAN TESTS =============

def test_demean_identical_blocks_is_zero():
    """Test identical blocks demean to zero"""
    S = scalar_spectrum(np.tile([1.0, 2.0, 3.0, 4.0], (3, 1)))
    assert not np.any(demean_spectrum(S).kernels)

def test_demean_two_blocks():
    """Test scalar blocks 3 and 1 demean to +1 and -1"""
    S = scalar_spectrum([[3.0] * 4, [1.0] * 4])
    G = demean_spectrum(S)
    np.testing.assert_allclose(G.kernels[:, 0, 0, 0], [1.0, -1.0])

def test_demeaned_blocks_sum_to_zero():
    """Test demeaned kernels sum to zero over blocks"""
    S = multitaper_spectrum(white_noise(300, 3, seed=8), make_block_plan(300, 6), K=3)
    G = demean_spectrum(S)
    np.testing.assert_allclose(G.kernels.sum(axis=0), 0.0, atol=1e-10)

def test_demean_single_block_fails():
    """Test demeaning one block is rejected"""
    with pytest.raises(DegenerateDemeanError):
        demean_spectrum(scalar_spectrum([[1.0, 2.0]]))
