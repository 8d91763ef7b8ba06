"""
Integrated scan statistic and the covariance kernels that describe its
Gaussian null.

Kernel tensors are indexed [tau1, sigma1, tau2, sigma2] over the test grid and
flattened to (r*r) x (r*r) matrices with rows (tau1, sigma1) and columns
(tau2, sigma2).
"""
import logging
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from bandscan.core import FrequencyGrid
from bandscan.errors import InvalidWindowError, TestGridError
from bandscan.multitaper import DemeanedSpectrum, SpectralEstimate

logger = logging.getLogger(__name__)

CROSS_TERMS = ("printed", "symmetric")
COUPLINGS = ("full", "diagonal")

# relative size of a clipped eigenvalue worth a warning
CLIP_WARN_RATIO = 1e-8


@dataclass(frozen=True)
class ScanWindow:
    """
    Window [omega0, omega0 + delta) on the Fourier grid, scanned against the
    target frequency omega0 + delta.

    ``k0`` is the grid index of omega0 and ``k`` the index width of delta, so
    the window holds indices k0..k0+k-1 (L = k) and the target is k0+k.
    """

    k0: int
    k: int
    grid: FrequencyGrid

    def __post_init__(self):
        if self.k < 1:
            raise InvalidWindowError(f"window must hold at least one frequency, got width {self.k}", k=self.k)
        if self.k0 < 1 or self.k0 + self.k > self.grid.N_B:
            raise InvalidWindowError(
                f"window k0={self.k0}, k={self.k} leaves the grid 1..{self.grid.N_B}",
                k0=self.k0, k=self.k, N_B=self.grid.N_B,
            )

    @classmethod
    def from_frequencies(cls, grid: FrequencyGrid, omega0: float, delta: float) -> "ScanWindow":
        k0 = grid.index_of(omega0)
        target = grid.index_of(omega0 + delta)
        return cls(k0=k0, k=target - k0, grid=grid)

    @property
    def L(self) -> int:
        return self.k

    @property
    def omega0(self) -> float:
        return self.grid.frequency(self.k0)

    @property
    def delta(self) -> float:
        return self.k / self.grid.T_B

    @property
    def target_index(self) -> int:
        return self.k0 + self.k

    @property
    def target(self) -> float:
        return self.grid.frequency(self.target_index)

    @property
    def positions(self) -> slice:
        """Array positions of the window frequencies."""
        return slice(self.k0 - 1, self.k0 - 1 + self.k)


def _check_window(grid: FrequencyGrid, w: ScanWindow) -> None:
    if w.grid.T_B != grid.T_B:
        raise InvalidWindowError(f"window built for T_B={w.grid.T_B}, spectrum has T_B={grid.T_B}")


def band_average(G: DemeanedSpectrum, w: ScanWindow) -> np.ndarray:
    _check_window(G.grid, w)
    return G.kernels[:, w.positions].mean(axis=1)


def scan_statistic(G: DemeanedSpectrum, w: ScanWindow) -> float:
    g_tilde = band_average(G, w)
    target = G.kernels[:, w.target_index - 1]
    return float(np.sum(np.mean(np.abs(target - g_tilde) ** 2, axis=(-2, -1))))


# ============= F / C KERNELS =============

def _t1(X: np.ndarray, Y: np.ndarray) -> np.ndarray:
    return np.einsum("...ac,...bd->...abcd", X, Y)


def _t2(X: np.ndarray, Y: np.ndarray) -> np.ndarray:
    return np.einsum("...ad,...cb->...abcd", X, Y)


def _check_cross_term(cross_term: str) -> None:
    if cross_term not in CROSS_TERMS:
        raise ValueError(f"cross_term must be one of {CROSS_TERMS}, got {cross_term!r}")


def hermitian_tensor(A1: np.ndarray, A2: np.ndarray) -> np.ndarray:
    """E[g(tau1, sigma1) conj g(tau2, sigma2)] for kernel estimates at two frequencies."""
    return _t1(A1, np.conj(A2))


def pseudo_tensor(A1: np.ndarray, A2: np.ndarray, cross_term: str) -> np.ndarray:
    """E[g(tau1, sigma1) g(tau2, sigma2)]: the second F product."""
    Ax = A2 if cross_term == "printed" else A1
    return _t2(Ax, A2)


def f_tensor(A1: np.ndarray, A2: np.ndarray, cross_term: str) -> np.ndarray:
    return _t1(A1, A2) + pseudo_tensor(A1, A2, cross_term)


def F_kernel(
    S: SpectralEstimate,
    b: int,
    omega1: float,
    omega2: float,
    i1: int,
    j1: int,
    i2: int,
    j2: int,
    cross_term: str = "printed",
) -> complex:
    """
    F at block b for grid positions (tau1, sigma1, tau2, sigma2) = (i1, j1, i2, j2).

    ``cross_term="printed"`` evaluates the second product at omega2 twice;
    ``"symmetric"`` uses omega1 for its first factor.
    """
    _check_cross_term(cross_term)
    A1 = S.kernel(b, S.grid.index_of(omega1))
    A2 = S.kernel(b, S.grid.index_of(omega2))
    Ax = A2 if cross_term == "printed" else A1
    return complex(A1[i1, i2] * A2[j1, j2] + Ax[i1, j2] * A2[i2, j1])


def C_kernel(
    S: SpectralEstimate,
    b1: int,
    b2: int,
    omega1: float,
    omega2: float,
    i1: int,
    j1: int,
    i2: int,
    j2: int,
    cross_term: str = "printed",
) -> complex:
    B = S.B
    F = np.array([F_kernel(S, l, omega1, omega2, i1, j1, i2, j2, cross_term) for l in range(1, B + 1)])
    shared = F.sum() / B**2
    if b1 == b2:
        return complex((1.0 - 2.0 / B) * F[b1 - 1] + shared)
    return complex(-(F[b1 - 1] + F[b2 - 1]) / B + shared)


# ============= NULL COVARIANCE =============

@dataclass(frozen=True)
class NullCovariance:
    """
    Covariance of the limiting Gaussian scan process on the (tau, sigma) test grid.

    ``diagonal`` holds one projected r^2 x r^2 block per temporal block and is
    the same whether or not the full matrix was requested. ``full`` is the
    (B r^2) x (B r^2) matrix with the cross-block terms, projected as a whole.

    The process is complex off the kernel diagonal. ``sampled`` holds, per
    block, the 2 r^2 x 2 r^2 covariance of its stacked real and imaginary
    parts, and ``sampled_full`` the joint version over all blocks. Null draws
    use these when present and treat ``diagonal``/``full`` as the covariance
    of a real process otherwise.
    """

    diagonal: np.ndarray
    test_grid: np.ndarray
    full: Optional[np.ndarray] = None
    clipped: float = 0.0
    sampled: Optional[np.ndarray] = None
    sampled_full: Optional[np.ndarray] = None

    @property
    def B(self) -> int:
        return self.diagonal.shape[0]

    @property
    def entries(self) -> int:
        """Number of kernel entries per block the squared norm is averaged over."""
        return self.diagonal.shape[-1]

    @property
    def R_test(self) -> int:
        return len(self.test_grid)

    @property
    def block_diagonal(self) -> bool:
        return self.full is None


def choose_test_grid(R: int, rtest: int) -> np.ndarray:
    """Approximately equally spaced positions into an R-point grid."""
    if R == 1:
        return np.array([0])
    if rtest < 2:
        raise TestGridError(f"need at least 2 test grid points, got {rtest}", rtest=rtest)
    rtest = min(rtest, R)
    return np.unique(np.round(np.linspace(0, R - 1, rtest)).astype(int))


def check_test_grid(test_grid: Sequence[int], R: int) -> np.ndarray:
    positions = np.asarray(test_grid)
    if positions.ndim != 1 or not np.issubdtype(positions.dtype, np.integer):
        raise TestGridError("test grid must be a 1-d sequence of integer grid positions")
    if np.any(positions < 0) or np.any(positions >= R) or np.any(np.diff(positions) <= 0):
        raise TestGridError(f"test grid must be increasing positions within 0..{R - 1}",
                            test_grid=positions.tolist())
    minimum = 1 if R == 1 else 2
    if not minimum <= len(positions) <= R:
        raise TestGridError(f"test grid needs between {minimum} and {R} points, got {len(positions)}")
    return positions


def _project_psd(M: np.ndarray) -> tuple:
    """Real part, symmetrized, with negative eigenvalues clipped at zero."""
    M = np.real(M)
    M = 0.5 * (M + np.swapaxes(M, -1, -2))
    eigvals, eigvecs = np.linalg.eigh(M)
    clipped = float(np.max(np.maximum(-eigvals, 0.0), initial=0.0))
    scale = float(np.max(np.abs(eigvals), initial=0.0))
    if scale > 0 and clipped > CLIP_WARN_RATIO * scale:
        logger.warning("PSD projection clipped eigenvalues down to %.3g (largest %.3g)", -clipped, scale)
    projected = (eigvecs * np.maximum(eigvals, 0.0)[..., None, :]) @ np.swapaxes(eigvecs, -1, -2)
    projected = 0.5 * (projected + np.swapaxes(projected, -1, -2))
    return projected, clipped


class WindowAccumulator:
    """
    Running window sums for a fixed omega0, so the window kernel can be read
    off for each width k while k grows through a batch.
    """

    def __init__(
        self,
        S: SpectralEstimate,
        k0: int,
        test_grid: Sequence[int],
        coupling: str = "full",
        cross_term: str = "printed",
    ):
        if coupling not in COUPLINGS:
            raise ValueError(f"coupling must be one of {COUPLINGS}, got {coupling!r}")
        _check_cross_term(cross_term)
        self.test_grid = check_test_grid(test_grid, S.R)
        self.grid = S.grid
        self.k0 = k0
        self.coupling = coupling
        self.cross_term = cross_term
        tg = self.test_grid
        self._A = S.kernels[:, :, tg][:, :, :, tg]
        r = len(tg)
        shape = (S.B, r, r, r, r)
        self._L = 0
        self._S = np.zeros((S.B, r, r), dtype=complex)
        self._P = np.zeros(shape, dtype=complex)
        self._D = np.zeros(shape, dtype=complex)
        self._H = np.zeros(shape, dtype=complex)

    def _extend(self, k: int) -> None:
        if k < self._L:
            raise InvalidWindowError(f"window width can only grow, asked for {k} after {self._L}")
        new = self._A[:, self.k0 - 1 + self._L : self.k0 - 1 + k]
        self._S += new.sum(axis=1)
        self._P += np.einsum("nlad,nlcb->nabcd", new, new)
        if self.coupling == "diagonal":
            self._D += np.einsum("nlac,nlbd->nabcd", new, new)
            self._H += np.einsum("nlac,nlbd->nabcd", new, np.conj(new))
        self._L = k

    def _first(self, At: np.ndarray, L: float, product, diagonal_sum: np.ndarray) -> np.ndarray:
        """Window combination of the first F product."""
        if self.coupling == "diagonal":
            return product(At, At) + diagonal_sum / L**2
        S = self._S
        return product(At, At) + product(S, S) / L**2 - product(At, S) / L - product(S, At) / L

    def _second(self, At: np.ndarray, L: float) -> np.ndarray:
        """Window combination of the second F product."""
        W = _t2(At, At)
        if self.coupling == "diagonal":
            return W + self._P / L**2
        if self.cross_term == "printed":
            # the later frequency appears in both factors, so the window terms cancel
            return W + L * self._P / L**2 - self._P / L - L * _t2(At, At) / L
        S = self._S
        return W + _t2(S, S) / L**2 - _t2(At, S) / L - _t2(S, At) / L

    def _target(self, k: int):
        w = ScanWindow(k0=self.k0, k=k, grid=self.grid)
        self._extend(k)
        return self._A[:, w.target_index - 1], float(w.L)

    @staticmethod
    def _flatten(W: np.ndarray) -> np.ndarray:
        B, r = W.shape[0], W.shape[1]
        return W.reshape(B, r * r, r * r)

    def window_kernel(self, k: int) -> np.ndarray:
        """B x r^2 x r^2 complex kernel of the window of width k (before the C combination)."""
        At, L = self._target(k)
        W = self._first(At, L, _t1, self._D) + self._second(At, L)
        return self._flatten(W)

    def window_parts(self, k: int) -> tuple:
        """Hermitian and pseudo covariance kernels of the window of width k."""
        At, L = self._target(k)
        hermitian = self._first(At, L, hermitian_tensor, self._H)
        return self._flatten(hermitian), self._flatten(self._second(At, L))

    def covariance(self, k: int, include_offdiag: bool = False) -> NullCovariance:
        W = self.window_kernel(k)
        hermitian, pseudo = self.window_parts(k)
        return covariance_from_kernel(W, self.test_grid, include_offdiag, hermitian=hermitian, pseudo=pseudo)


def _combine(W: np.ndarray, include_offdiag: bool) -> tuple:
    """Same-block C combination and, on request, the full cross-block matrix."""
    B = W.shape[0]
    total = W.sum(axis=0) / B**2
    diag_raw = (1.0 - 2.0 / B) * W + total[None]
    full_raw = None
    if include_offdiag:
        n = W.shape[1]
        blocks = -(W[:, None] + W[None, :]) / B + total[None, None]
        idx = np.arange(B)
        blocks[idx, idx] = diag_raw
        full_raw = blocks.transpose(0, 2, 1, 3).reshape(B * n, B * n)
    return diag_raw, full_raw


def real_imag_covariance(hermitian: np.ndarray, pseudo: np.ndarray) -> np.ndarray:
    """Covariance of (Re g, Im g) from E[g g^H] and E[g g^T]."""
    top = np.concatenate([np.real(hermitian + pseudo), np.imag(pseudo - hermitian)], axis=-1)
    bottom = np.concatenate([np.imag(pseudo + hermitian), np.real(hermitian - pseudo)], axis=-1)
    return 0.5 * np.concatenate([top, bottom], axis=-2)


def covariance_from_kernel(
    W: np.ndarray,
    test_grid: np.ndarray,
    include_offdiag: bool,
    hermitian: Optional[np.ndarray] = None,
    pseudo: Optional[np.ndarray] = None,
) -> NullCovariance:
    """
    Apply the same-block and cross-block C combinations to per-block kernels W.

    With ``hermitian`` and ``pseudo`` kernels the same combinations give the
    covariance of the real and imaginary parts the null draws sample from.
    """
    diag_raw, full_raw = _combine(W, include_offdiag)
    diagonal, clipped = _project_psd(diag_raw)
    full = None
    if full_raw is not None:
        full, full_clipped = _project_psd(full_raw)
        clipped = max(clipped, full_clipped)
    sampled = sampled_full = None
    if hermitian is not None:
        h_diag, h_full = _combine(hermitian, include_offdiag)
        p_diag, p_full = _combine(pseudo, include_offdiag)
        sampled, _ = _project_psd(real_imag_covariance(h_diag, p_diag))
        if include_offdiag:
            sampled_full, _ = _project_psd(real_imag_covariance(h_full, p_full))
    return NullCovariance(diagonal=diagonal, test_grid=test_grid, full=full, clipped=clipped,
                          sampled=sampled, sampled_full=sampled_full)


def null_covariance(
    S: SpectralEstimate,
    w: ScanWindow,
    test_grid: Sequence[int],
    include_offdiag: bool = False,
    coupling: str = "full",
    cross_term: str = "printed",
) -> NullCovariance:
    """
    Null covariance of the scan process for window ``w`` on the test grid.

    ``coupling="full"`` sums over every pair of window frequencies;
    ``"diagonal"`` keeps only equal-frequency pairs.
    """
    _check_window(S.grid, w)
    accumulator = WindowAccumulator(S, w.k0, test_grid, coupling=coupling, cross_term=cross_term)
    return accumulator.covariance(w.k, include_offdiag=include_offdiag)
