"""
Within-band stationarity test: is the demeaned spectrum zero over a band?
"""
import logging
from dataclasses import dataclass
from typing import Optional, Sequence, Tuple

import numpy as np

from bandscan import config
from bandscan.errors import ConfigError, InvalidWindowError
from bandscan.multitaper import DemeanedSpectrum, SpectralEstimate, frequency_correlation
from bandscan.nullsim import draw_chisquare_mix, p_value, quadratic_form_weights
from bandscan.scan import (
    COUPLINGS,
    check_test_grid,
    choose_test_grid,
    covariance_from_kernel,
    f_tensor,
    hermitian_tensor,
    pseudo_tensor,
)

logger = logging.getLogger(__name__)

STATIONARITY_STREAM = 1
MAX_NULL_FREQUENCIES = 16


@dataclass(frozen=True)
class StationarityResult:
    omega1: float
    omega2: float
    Q0: float
    scaled_statistic: float
    p_value: float
    reject: bool
    alpha: float
    n_frequencies: int
    null_frequencies: int


def band_indices(G: DemeanedSpectrum, omega1: float, omega2: float) -> np.ndarray:
    if not 0.0 <= omega1 < omega2 <= 0.5:
        raise InvalidWindowError(f"band ({omega1}, {omega2}) must satisfy 0 <= omega1 < omega2 <= 0.5",
                                 omega1=omega1, omega2=omega2)
    indices = G.grid.indices_between(omega1, omega2)
    if indices.size == 0:
        raise InvalidWindowError(f"band ({omega1}, {omega2}) holds no Fourier frequency",
                                 omega1=omega1, omega2=omega2)
    return indices


def stationarity_statistic(G: DemeanedSpectrum, omega1: float, omega2: float) -> float:
    indices = band_indices(G, omega1, omega2)
    g = G.kernels[:, indices - 1]
    per_block = (omega2 - omega1) * np.mean(np.abs(g) ** 2, axis=(1, 2, 3))
    return float(per_block.mean())


def _representatives(indices: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """At most MAX_NULL_FREQUENCIES evenly spread band frequencies, and how many band frequencies each stands for."""
    n = indices.size
    if n <= MAX_NULL_FREQUENCIES:
        return indices, np.ones(n, dtype=int)
    picks = np.unique(np.round(np.linspace(0, n - 1, MAX_NULL_FREQUENCIES)).astype(int))
    owner = np.abs(np.arange(n)[:, None] - picks[None, :]).argmin(axis=1)
    return indices[picks], np.bincount(owner, minlength=picks.size)


def _flatten(W: np.ndarray) -> np.ndarray:
    B, r = W.shape[0], W.shape[1]
    return W.reshape(B, r * r, r * r)


def _band_kernels(S: SpectralEstimate, indices: np.ndarray, test_grid: np.ndarray,
                  cross_term: str) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """B x (J r^2) x (J r^2) F, Hermitian and pseudo kernels of the band process over (frequency, tau, sigma)."""
    A = S.kernels[:, indices - 1][:, :, test_grid][:, :, :, test_grid]
    B, J, r = A.shape[0], A.shape[1], A.shape[2]
    n = r * r
    kernels = [np.zeros((B, J, n, J, n), dtype=complex) for _ in range(3)]
    for j in range(J):
        for k in range(J):
            parts = (f_tensor(A[:, j], A[:, k], cross_term), hermitian_tensor(A[:, j], A[:, k]),
                     pseudo_tensor(A[:, j], A[:, k], cross_term))
            for out, part in zip(kernels, parts):
                out[:, j, :, k, :] = _flatten(part)
    return tuple(out.reshape(B, J * n, J * n) for out in kernels)


def _correlation_inflation(S: SpectralEstimate, n: int) -> float:
    """Variance factor of the mean of |g|^2 over n neighbouring frequencies relative to independent ones."""
    rho = frequency_correlation(S.grid.T_B, S.K)[:n]
    lags = np.arange(rho.size)
    return float(np.sum((n - lags) * rho**2 * np.where(lags == 0, 1.0, 2.0)) / n)


def _null_weights(S: SpectralEstimate, indices: np.ndarray, counts: np.ndarray, test_grid: np.ndarray,
                  block_diagonal: bool, coupling: str, cross_term: str) -> Tuple[np.ndarray, np.ndarray]:
    """
    Chi-square weights and degrees of freedom of sum_b sum_freq mean_ij |G_b|^2.

    With diagonal coupling each representative contributes its eigenvalues
    with one degree of freedom per band frequency it stands for, shrunk and
    rescaled by the taper correlation between neighbouring frequencies so the
    band mean keeps its variance. Full coupling samples the representatives
    jointly and lets their average stand for the band.
    """
    if coupling == "diagonal":
        inflation = _correlation_inflation(S, int(counts.sum()))
        groups = [(indices[j:j + 1], counts[j] / inflation) for j in range(indices.size)]
        scale = inflation / counts.sum()
    else:
        groups = [(indices, 1)]
        scale = 1.0 / indices.size
    weights, dof = [], []
    for group, count in groups:
        W, hermitian, pseudo = _band_kernels(S, group, test_grid, cross_term)
        cov = covariance_from_kernel(W, test_grid, include_offdiag=not block_diagonal,
                                     hermitian=hermitian, pseudo=pseudo)
        blocks = cov.sampled if block_diagonal else cov.sampled_full[None]
        for block in blocks:
            w = quadratic_form_weights(block)
            weights.append(w * scale / len(test_grid) ** 2)
            dof.append(np.full(w.size, float(count)))
    return np.concatenate(weights), np.concatenate(dof)


def stationarity_test(
    G: DemeanedSpectrum,
    S: SpectralEstimate,
    omega1: float,
    omega2: float,
    d0: int = config.DEFAULT_D0,
    test_grid: Optional[Sequence[int]] = None,
    alpha: float = 0.05,
    seed: int = 0,
    block_diagonal: bool = True,
    coupling: str = "diagonal",
    cross_term: str = "printed",
    workers: Optional[int] = None,
) -> StationarityResult:
    """
    Compare K * Q0 with simulated draws of the block-averaged squared norm of
    the band process; reject when the p-value is at most alpha.
    """
    if coupling not in COUPLINGS:
        raise ValueError(f"coupling must be one of {COUPLINGS}, got {coupling!r}")
    if not 0.0 < alpha < 1.0:
        raise ConfigError(f"alpha must lie in (0, 1), got {alpha}", alpha=alpha)
    if test_grid is None:
        test_grid = choose_test_grid(S.R, 4)
    test_grid = check_test_grid(test_grid, S.R)

    indices = band_indices(G, omega1, omega2)
    Q0 = stationarity_statistic(G, omega1, omega2)
    scaled = S.K * Q0

    null_indices, counts = _representatives(indices)
    weights, dof = _null_weights(S, null_indices, counts, test_grid, block_diagonal, coupling, cross_term)
    key = (STATIONARITY_STREAM, int(indices[0]), int(indices[-1]))
    null = draw_chisquare_mix(weights * (omega2 - omega1) / S.B, dof, d0, seed, key=key,
                              block_diagonal=block_diagonal, workers=workers)
    p = p_value(null, scaled)
    logger.info("stationarity on [%.4f, %.4f): K*Q0=%.6g p=%.4f", omega1, omega2, scaled, p)
    return StationarityResult(
        omega1=float(omega1),
        omega2=float(omega2),
        Q0=Q0,
        scaled_statistic=scaled,
        p_value=p,
        reject=p <= alpha,
        alpha=alpha,
        n_frequencies=int(indices.size),
        null_frequencies=int(null_indices.size),
    )
