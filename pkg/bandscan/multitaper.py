"""
Sine-taper functional DFTs and the local multitaper estimator of the
time-varying spectral kernel.
"""
import logging
import math
from dataclasses import dataclass

import numpy as np
from scipy import fft as sp_fft

from bandscan import config
from bandscan.core import BlockPlan, FrequencyGrid, FunctionalTimeSeries, fourier_grid, floor_index
from bandscan.errors import (
    DegenerateDemeanError,
    IndexOutOfRangeError,
    InvalidPlanError,
    TooManyTapersError,
)

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class SpectralEstimate:
    """B x N_B array of R x R Hermitian kernels, position [b-1, k-1] for block b and frequency k/T_B."""

    kernels: np.ndarray
    plan: BlockPlan
    grid: FrequencyGrid
    K: int
    centered: bool = False

    @property
    def B(self) -> int:
        return self.plan.B

    @property
    def R(self) -> int:
        return self.kernels.shape[-1]

    @property
    def bandwidth(self) -> float:
        return (self.K + 1) / (self.grid.T_B + 1)

    def kernel(self, b: int, k: int) -> np.ndarray:
        return self.kernels[b - 1, k - 1]

    def autospectra(self) -> np.ndarray:
        """B x N_B x R real diagonal of every kernel."""
        return np.real(np.diagonal(self.kernels, axis1=-2, axis2=-1))


@dataclass(frozen=True)
class DemeanedSpectrum:
    kernels: np.ndarray
    plan: BlockPlan
    grid: FrequencyGrid
    K: int

    @property
    def B(self) -> int:
        return self.plan.B

    @property
    def R(self) -> int:
        return self.kernels.shape[-1]

    def kernel(self, b: int, k: int) -> np.ndarray:
        return self.kernels[b - 1, k - 1]


def sine_taper_matrix(T_B: int, K: int, b: int = 1) -> np.ndarray:
    """
    T_B x K matrix whose column k is the k-th sine taper on block b.

    The taper only depends on the position inside the block, so every block
    shares the same matrix.
    """
    if K < 1:
        raise TooManyTapersError(f"need at least one taper, got K={K}", K=K)
    if K >= T_B:
        raise TooManyTapersError(f"K={K} tapers need blocks longer than T_B={T_B}", K=K, T_B=T_B)
    if b < 1:
        raise IndexOutOfRangeError(f"block index must be >= 1, got {b}", b=b)
    s = np.arange(1, T_B + 1)[:, None]
    k = np.arange(1, K + 1)[None, :]
    return math.sqrt(2.0 / (T_B + 1)) * np.sin(np.pi * k * s / (T_B + 1))


def tapers_for_bandwidth(bw: float, T_B: int) -> int:
    if not 0.0 < bw < 0.5:
        raise InvalidPlanError(f"bandwidth must lie in (0, 0.5), got {bw}", bw=bw)
    return max(1, floor_index(bw * (T_B + 1)) - 1)


def frequency_correlation(T_B: int, K: int) -> np.ndarray:
    """
    Correlation of multitaper estimates m Fourier frequencies apart under a
    locally flat spectrum, for m = 0..T_B//2: (1/K) sum_kl |H_kl(m / T_B)|^2
    where H_kl is the DFT of the taper product h_k h_l.
    """
    h = sine_taper_matrix(T_B, K)
    products = h[:, :, None] * h[:, None, :]
    H = sp_fft.fft(products, axis=0)[: T_B // 2 + 1]
    return np.sum(np.abs(H) ** 2, axis=(1, 2)) / K


def fdft(X: FunctionalTimeSeries, plan: BlockPlan, b: int, k: int, omega: float, K: int = None) -> np.ndarray:
    """Functional DFT of block b under taper k at frequency omega, using absolute time t."""
    if not 1 <= b <= plan.B:
        raise IndexOutOfRangeError(f"block {b} outside 1..{plan.B}", b=b, B=plan.B)
    if k < 1 or (K is not None and k > K):
        raise IndexOutOfRangeError(f"taper {k} outside 1..{K}", k=k, K=K)
    if not 0.0 < omega < 0.5:
        raise IndexOutOfRangeError(f"frequency {omega} outside (0, 0.5)", omega=omega)
    taper = sine_taper_matrix(plan.T_B, k, b)[:, k - 1]
    rows = plan.block_slice(b)
    t = np.arange(rows.start + 1, rows.stop + 1)
    weights = taper * np.exp(-2j * np.pi * omega * t)
    return weights @ X.values[rows]


def _block_fdfts(X: FunctionalTimeSeries, plan: BlockPlan, K: int, center: bool) -> np.ndarray:
    """B x K x N_B x R tapered DFTs at every Fourier frequency."""
    values = X.values[: plan.effective_T]
    if center:
        values = values - values.mean(axis=0, keepdims=True)
    blocks = values.reshape(plan.B, plan.T_B, X.R)
    tapers = sine_taper_matrix(plan.T_B, K)
    tapered = blocks[:, None, :, :] * tapers.T[None, :, :, None]
    spectrum = sp_fft.fft(tapered, axis=2, workers=config.WORKERS)
    grid = fourier_grid(plan.T_B)
    k = np.arange(1, grid.N_B + 1)
    # block-local FFT starts at s=1, absolute t differs by a multiple of T_B
    phase = np.exp(-2j * np.pi * k / plan.T_B)
    return spectrum[:, :, 1 : grid.N_B + 1, :] * phase[None, None, :, None]


def multitaper_spectrum(X: FunctionalTimeSeries, plan: BlockPlan, K: int, center: bool = False) -> SpectralEstimate:
    if plan.T != X.T:
        raise InvalidPlanError(f"plan is for T={plan.T} but the series has T={X.T}", T=X.T)
    grid = fourier_grid(plan.T_B)
    d = _block_fdfts(X, plan, K, center)
    kernels = np.einsum("bkwi,bkwj->bwij", d, np.conj(d)) / K
    kernels = 0.5 * (kernels + np.conj(np.swapaxes(kernels, -1, -2)))
    if plan.truncated:
        logger.info("dropped %d trailing samples to fit %d blocks of %d", plan.truncated, plan.B, plan.T_B)
    logger.debug("multitaper kernels: B=%d N_B=%d R=%d K=%d", plan.B, grid.N_B, X.R, K)
    return SpectralEstimate(kernels=kernels, plan=plan, grid=grid, K=K, centered=center)


def demean_spectrum(S: SpectralEstimate) -> DemeanedSpectrum:
    if S.B < 2:
        raise DegenerateDemeanError("demeaning over a single block leaves an identically zero spectrum", B=S.B)
    kernels = S.kernels - S.kernels.mean(axis=0, keepdims=True)
    return DemeanedSpectrum(kernels=kernels, plan=S.plan, grid=S.grid, K=S.K)
