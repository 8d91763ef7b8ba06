"""
Monte-Carlo draws from the limiting null of the scan statistic: squared norms
of zero-mean Gaussian vectors with a given covariance, sampled either through
a Cholesky factor or as a mix of weighted chi-square variables.

Every (key, part, chunk) triple owns its own counter-based random stream, so
the draws do not depend on how many worker threads produce them.
"""
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np

from bandscan import config
from bandscan.errors import ConfigError, FactorizationError
from bandscan.scan import NullCovariance

logger = logging.getLogger(__name__)

CHUNK_ROWS = 20000
MIN_DRAWS = 1000
JITTER_STEPS = 7  # jitter, 10*jitter, ..., 1e6*jitter
# relative variance below which a coordinate or eigenvalue is treated as zero
SUPPORT_TOL = 1e-12
WEIGHT_SLICE = 128


@dataclass(frozen=True)
class PSDFactor:
    L: np.ndarray
    jitter: float


@dataclass(frozen=True)
class NullDraws:
    draws: np.ndarray
    d0: int
    seed: int
    block_diagonal: bool
    jitter: float = 0.0


def substream(seed: int, key: Sequence[int]) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed, spawn_key=tuple(key))))


def psd_factorize(M: np.ndarray, jitter: Optional[float] = None) -> PSDFactor:
    """Cholesky factor of M + j*I for the smallest j on the jitter ladder that works."""
    M = np.asarray(M, dtype=float)
    n = M.shape[0]
    if not np.any(M):
        return PSDFactor(L=np.zeros_like(M), jitter=0.0)
    if jitter is None:
        jitter = 1e-8 * float(np.mean(np.diag(M)))
        if jitter <= 0:
            jitter = 1e-12
    ladder = [0.0] + [jitter * 10.0**step for step in range(JITTER_STEPS)]
    for j in ladder:
        try:
            L = np.linalg.cholesky(M + j * np.eye(n))
        except np.linalg.LinAlgError:
            continue
        if j > 0:
            logger.debug("cholesky needed jitter %.3g", j)
        return PSDFactor(L=L, jitter=j)
    raise FactorizationError(
        f"matrix is still indefinite after jitter {ladder[-1]:.3g}", n=n, max_jitter=ladder[-1]
    )


def _chunks(d0: int) -> List[Tuple[int, int]]:
    return [(start, min(start + CHUNK_ROWS, d0)) for start in range(0, d0, CHUNK_ROWS)]


def _support(M: np.ndarray) -> np.ndarray:
    """Drop coordinates with no variance (imaginary parts of real entries)."""
    d = np.diag(M)
    keep = d > SUPPORT_TOL * float(d.max(initial=0.0))
    return M[np.ix_(keep, keep)]


def _quadratic_chunk(L: np.ndarray, seed: int, key: Tuple[int, ...], rows: int) -> np.ndarray:
    """Per-row sum of squared Gaussian entries."""
    Z = substream(seed, key).standard_normal((rows, L.shape[0]))
    G = Z @ L.T
    return (G**2).sum(axis=1)


def _run_chunks(d0: int, parts: int, job, workers: Optional[int]) -> np.ndarray:
    """Sum ``job(part, chunk, rows)`` over parts for every chunk of d0 rows, in a fixed order."""
    chunks = _chunks(d0)
    tasks = [(p, c) for p in range(parts) for c in range(len(chunks))]

    def run(task):
        p, c = task
        start, stop = chunks[c]
        return job(p, c, stop - start)

    with ThreadPoolExecutor(max_workers=workers or config.WORKERS) as pool:
        results = list(pool.map(run, tasks))

    total = np.zeros(d0)
    for (p, c), values in zip(tasks, results):
        start, stop = chunks[c]
        total[start:stop] += values
    return total


def draw_null_scan(
    C: NullCovariance,
    d0: int,
    K: int,
    seed: int,
    block_diagonal: bool = True,
    key: Sequence[int] = (),
    workers: Optional[int] = None,
) -> NullDraws:
    """
    d0 draws of (1/K) sum_b mean_{ij} |G_b(tau_i, sigma_j)|^2.

    Under ``block_diagonal`` each block is sampled independently from its own
    covariance; otherwise all blocks are sampled jointly. The real and
    imaginary parts are sampled together when ``C`` carries their covariance.
    """
    if d0 < MIN_DRAWS:
        raise ConfigError(f"need at least {MIN_DRAWS} null draws, got {d0}", d0=d0)
    if not block_diagonal and C.full is None:
        raise ConfigError("joint null draws need the full covariance (include_offdiag)")
    key = tuple(key)

    if block_diagonal:
        blocks = C.sampled if C.sampled is not None else C.diagonal
        factors = [psd_factorize(_support(blocks[b])) for b in range(C.B)]
    else:
        joint = C.sampled_full if C.sampled_full is not None else C.full
        factors = [psd_factorize(_support(joint))]
    jitter = max(f.jitter for f in factors)
    if jitter > 0:
        logger.debug("null covariance needed jitter %.3g to factorize", jitter)

    def job(b, c, rows):
        return _quadratic_chunk(factors[b].L, seed, key + (b, c), rows)

    draws = _run_chunks(d0, len(factors), job, workers)
    draws /= K * C.entries
    return NullDraws(draws=draws, d0=d0, seed=seed, block_diagonal=block_diagonal, jitter=jitter)


def quadratic_form_weights(M: np.ndarray) -> np.ndarray:
    """Eigenvalues of a covariance that carry mass; a Gaussian quadratic form is their chi-square mix."""
    eigvals = np.linalg.eigvalsh(M)
    return eigvals[eigvals > SUPPORT_TOL * float(eigvals.max(initial=0.0))]


def draw_chisquare_mix(
    weights: np.ndarray,
    dof: np.ndarray,
    d0: int,
    seed: int,
    key: Sequence[int] = (),
    block_diagonal: bool = True,
    workers: Optional[int] = None,
) -> NullDraws:
    """d0 draws of sum_i weights[i] * chi2(dof[i]), with independent terms."""
    if d0 < MIN_DRAWS:
        raise ConfigError(f"need at least {MIN_DRAWS} null draws, got {d0}", d0=d0)
    weights = np.asarray(weights, dtype=float)
    dof = np.asarray(dof, dtype=float)
    if weights.ndim != 1 or weights.shape != dof.shape or np.any(dof <= 0):
        raise ConfigError("chi-square weights and positive degrees of freedom must pair up")
    key = tuple(key)
    slices = [slice(start, start + WEIGHT_SLICE) for start in range(0, weights.size, WEIGHT_SLICE)]

    def job(p, c, rows):
        part = slices[p]
        return substream(seed, key + (p, c)).chisquare(dof[part], size=(rows, dof[part].size)) @ weights[part]

    draws = _run_chunks(d0, len(slices), job, workers)
    return NullDraws(draws=draws, d0=d0, seed=seed, block_diagonal=block_diagonal)


def p_value(N: NullDraws, observed: float) -> float:
    """Fraction of null draws strictly above ``observed``; a zero statistic gives 1."""
    if observed <= 0.0:
        return 1.0
    return float(np.count_nonzero(N.draws > observed)) / N.d0
