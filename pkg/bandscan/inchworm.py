"""
Inchworm frequency band search: walk the Fourier grid from low to high
frequency, test a batch of window widths from the current start, and cut at the
lowest frequency whose scan test survives Hochberg's step-up procedure.
"""
import logging
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Set, Tuple

import numpy as np
from statsmodels.stats.multitest import multipletests

from bandscan import config
from bandscan.core import ceil_index, floor_index
from bandscan.errors import ConfigError, InvalidPartitionError
from bandscan.multitaper import DemeanedSpectrum, SpectralEstimate
from bandscan.nullsim import draw_null_scan, p_value
from bandscan.scan import ScanWindow, WindowAccumulator, choose_test_grid, scan_statistic

logger = logging.getLogger(__name__)

# first element of every scan-test substream key
SCAN_STREAM = 0


def hochberg(pvalues: Sequence[float], alpha: float) -> Set[int]:
    """Indices rejected by Hochberg's step-up procedure at family-wise level alpha."""
    if not 0.0 < alpha < 1.0:
        raise ConfigError(f"alpha must lie in (0, 1), got {alpha}", alpha=alpha)
    pvalues = np.asarray(pvalues, dtype=float)
    if pvalues.size == 0:
        return set()
    if np.any(~np.isfinite(pvalues)) or np.any(pvalues < 0.0) or np.any(pvalues > 1.0):
        raise ConfigError("p-values must lie in [0, 1]")
    reject, *_ = multipletests(pvalues, alpha=alpha, method="simes-hochberg")
    return {int(i) for i in np.flatnonzero(reject)}


@dataclass(frozen=True)
class BandPartition:
    """Cut frequencies; band i is [cut_{i-1}, cut_i) with 0 and 0.5 as outer edges."""

    cuts: Tuple[float, ...] = ()

    def __post_init__(self):
        cuts = tuple(float(c) for c in self.cuts)
        if any(not 0.0 < c < 0.5 for c in cuts):
            raise InvalidPartitionError("cuts must lie in (0, 0.5)", cuts=list(cuts))
        if any(b <= a for a, b in zip(cuts, cuts[1:])):
            raise InvalidPartitionError("cuts must be strictly increasing", cuts=list(cuts))
        object.__setattr__(self, "cuts", cuts)

    @property
    def p_hat(self) -> int:
        return len(self.cuts) + 1

    def bands(self) -> List[Tuple[float, float]]:
        edges = (0.0,) + self.cuts + (0.5,)
        return list(zip(edges[:-1], edges[1:]))

    def labels(self, frequencies: np.ndarray) -> np.ndarray:
        """Band number of each frequency."""
        return np.searchsorted(np.asarray(self.cuts), np.asarray(frequencies), side="right")


@dataclass
class SearchPass:
    k0: int
    omega0: float
    widths: List[int]
    targets: List[float]
    statistics: List[float]
    pvalues: List[float]
    rejected: List[float]
    action: str
    cut: Optional[float] = None


@dataclass
class SearchTrace:
    epsilon: float
    passes: List[SearchPass] = field(default_factory=list)
    note: Optional[str] = None


def inchworm_search(
    G: DemeanedSpectrum,
    S: SpectralEstimate,
    alpha: float = 0.05,
    n_max: int = 30,
    d0: int = config.DEFAULT_D0,
    test_grid: Optional[Sequence[int]] = None,
    seed: int = 0,
    block_diagonal: bool = True,
    coupling: str = "diagonal",
    cross_term: str = "printed",
    workers: Optional[int] = None,
) -> Tuple[BandPartition, SearchTrace]:
    if n_max < 1:
        raise ConfigError(f"n_max must be at least 1, got {n_max}", n_max=n_max)
    grid = S.grid
    T_B, N_B = grid.T_B, grid.N_B
    if test_grid is None:
        test_grid = choose_test_grid(S.R, 4)
    epsilon = (S.K + 1) / (T_B + 1)
    margin = T_B * epsilon
    k_min = ceil_index(margin)
    k_star = ceil_index(margin)

    trace = SearchTrace(epsilon=epsilon)
    cuts: List[float] = []
    while k_star / T_B <= N_B / T_B - 2 * epsilon:
        k_max = min(k_min + n_max - 1, floor_index(N_B - k_star - margin))
        if k_max < k_min:
            break
        omega0 = k_star / T_B
        accumulator = WindowAccumulator(S, k_star, test_grid, coupling=coupling, cross_term=cross_term)
        widths = list(range(k_min, k_max + 1))
        statistics, pvalues = [], []
        for k in widths:
            window = ScanWindow(k0=k_star, k=k, grid=grid)
            Q = scan_statistic(G, window)
            cov = accumulator.covariance(k, include_offdiag=not block_diagonal)
            draws = draw_null_scan(cov, d0, S.K, seed, block_diagonal=block_diagonal,
                                   key=(SCAN_STREAM, k_star, k), workers=workers)
            p = p_value(draws, Q)
            statistics.append(Q)
            pvalues.append(p)
            logger.debug("omega0=%.4f target=%.4f Q=%.6g p=%.4f", omega0, window.target, Q, p)

        targets = [(k_star + k) / T_B for k in widths]
        hits = sorted(k_star + widths[i] for i in hochberg(pvalues, alpha))
        rejected = [k / T_B for k in hits]
        if hits:
            cut = hits[0] / T_B
            cuts.append(cut)
            action = "cut"
            next_k = ceil_index(hits[0] + margin)
            logger.info("pass at omega0=%.4f: cut at %.4f (%d of %d rejected)", omega0, cut,
                        len(rejected), len(widths))
        else:
            cut = None
            action = "advance"
            next_k = k_star + k_max
            logger.info("pass at omega0=%.4f: no rejection over %d widths", omega0, len(widths))
        trace.passes.append(SearchPass(
            k0=k_star, omega0=omega0, widths=widths, targets=targets, statistics=statistics,
            pvalues=pvalues, rejected=rejected, action=action, cut=cut,
        ))
        k_star = next_k

    if not trace.passes:
        trace.note = "zero passes: the grid has no testable frequency for this bandwidth"
        logger.warning("inchworm search ran zero passes (T_B=%d, K=%d)", T_B, S.K)
    return BandPartition(tuple(cuts)), trace
