"""
Core data model: functional time series, temporal block plans and Fourier
frequency grids shared by every other module.
"""
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence, Tuple

import numpy as np

from bandscan.errors import GridTooSmallError, InvalidPlanError, InvalidSeriesError

# Tolerance for deciding whether a frequency sits on the Fourier grid
GRID_TOL = 1e-9


def _frozen(array: np.ndarray) -> np.ndarray:
    array = np.array(array, dtype=float, copy=True)
    array.setflags(write=False)
    return array


@dataclass(frozen=True)
class FunctionalTimeSeries:
    """T x R real matrix of a series observed at R functional grid points."""

    values: np.ndarray
    grid: np.ndarray
    sample_rate_hz: Optional[float] = None
    labels: Optional[Tuple[str, ...]] = None

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if values.ndim == 1:
            values = values[:, None]
        if values.ndim != 2:
            raise InvalidSeriesError("values must be a T x R matrix", shape=list(values.shape))
        T, R = values.shape
        if T < 2 or R < 1:
            raise InvalidSeriesError(f"need T >= 2 and R >= 1, got T={T}, R={R}", T=T, R=R)
        if not np.all(np.isfinite(values)):
            raise InvalidSeriesError("values contain non-finite entries")

        grid = np.asarray(self.grid, dtype=float).ravel()
        if grid.shape[0] != R:
            raise InvalidSeriesError(f"grid has {grid.shape[0]} points but values have {R} columns")
        if np.any(grid < 0.0) or np.any(grid > 1.0) or np.any(np.diff(grid) <= 0.0):
            raise InvalidSeriesError("grid must be strictly increasing within [0, 1]")

        if self.sample_rate_hz is not None and not self.sample_rate_hz > 0:
            raise InvalidSeriesError("sample_rate_hz must be positive")
        labels = None
        if self.labels is not None:
            labels = tuple(str(label) for label in self.labels)
            if len(labels) != R:
                raise InvalidSeriesError(f"{len(labels)} labels for {R} grid points")

        object.__setattr__(self, "values", _frozen(values))
        object.__setattr__(self, "grid", _frozen(grid))
        object.__setattr__(self, "labels", labels)

    @property
    def T(self) -> int:
        return self.values.shape[0]

    @property
    def R(self) -> int:
        return self.values.shape[1]

    @classmethod
    def from_channels(
        cls,
        values: np.ndarray,
        labels: Sequence[str],
        sample_rate_hz: Optional[float] = None,
    ) -> "FunctionalTimeSeries":
        """Map labelled channels, in order, to equally spaced grid points."""
        return cls(values=values, grid=channel_grid(len(labels)), sample_rate_hz=sample_rate_hz,
                   labels=tuple(labels))

    def channel_labels(self) -> Tuple[str, ...]:
        if self.labels is not None:
            return self.labels
        return tuple(f"{point:.6g}" for point in self.grid)

    def select(self, channels: Sequence[str]) -> "FunctionalTimeSeries":
        """Restrict the series to a group of channels, re-spacing the grid."""
        known = self.channel_labels()
        missing = [name for name in channels if name not in known]
        if missing:
            raise InvalidSeriesError(f"unknown channels: {', '.join(missing)}", missing=missing)
        columns = [known.index(name) for name in channels]
        return FunctionalTimeSeries.from_channels(
            self.values[:, columns], list(channels), sample_rate_hz=self.sample_rate_hz
        )


def channel_grid(R: int) -> np.ndarray:
    if R == 1:
        return np.array([0.5])
    return np.linspace(0.0, 1.0, R)


@dataclass(frozen=True)
class BlockPlan:
    """B equal, non-overlapping temporal blocks of T_B observations."""

    T: int
    B: int
    T_B: int
    truncated: int = 0

    @property
    def effective_T(self) -> int:
        return self.B * self.T_B

    @property
    def midpoints(self) -> np.ndarray:
        return (np.arange(1, self.B + 1) - 0.5) / self.B

    def block_slice(self, b: int) -> slice:
        """Rows of block b (1-based) in the series."""
        return slice((b - 1) * self.T_B, b * self.T_B)


def make_block_plan(T: int, B: int) -> BlockPlan:
    if B < 1:
        raise InvalidPlanError(f"B must be at least 1, got {B}", T=T, B=B)
    if T < 2 * B:
        raise InvalidPlanError(f"T={T} is too short for B={B} blocks (need T >= 2B)", T=T, B=B)
    T_B = T // B
    return BlockPlan(T=T, B=B, T_B=T_B, truncated=T - B * T_B)


@dataclass(frozen=True)
class FrequencyGrid:
    """Fourier frequencies k/T_B, k = 1..N_B, strictly inside (0, 0.5)."""

    T_B: int
    N_B: int = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "N_B", self.T_B // 2 - 1)

    @property
    def frequencies(self) -> np.ndarray:
        return np.arange(1, self.N_B + 1) / self.T_B

    def frequency(self, k: int) -> float:
        return k / self.T_B

    def index_of(self, omega: float) -> int:
        """Grid index k (1-based) of a frequency that lies on the grid."""
        k = int(round(omega * self.T_B))
        if abs(k / self.T_B - omega) > GRID_TOL or not 1 <= k <= self.N_B:
            raise GridTooSmallError(f"frequency {omega} is not on the Fourier grid of T_B={self.T_B}",
                                    omega=omega)
        return k

    def indices_between(self, omega1: float, omega2: float) -> np.ndarray:
        """Grid indices k with omega1 <= k/T_B < omega2."""
        k = np.arange(1, self.N_B + 1)
        freqs = k / self.T_B
        return k[(freqs >= omega1 - GRID_TOL) & (freqs < omega2 - GRID_TOL)]


def fourier_grid(T_B: int) -> FrequencyGrid:
    if T_B < 6:
        raise GridTooSmallError(f"T_B={T_B} leaves no interior Fourier frequency (need T_B >= 6)",
                                T_B=T_B)
    return FrequencyGrid(T_B=T_B)


def recommended_blocks(T: int) -> int:
    """The factor of T closest to sqrt(T)."""
    root = math.sqrt(T)
    factors = [d for d in range(1, T + 1) if T % d == 0 and T >= 2 * d]
    return min(factors, key=lambda d: (abs(d - root), d))


def recommended_tapers(T_B: int, B: int) -> int:
    return max(1, int(math.isqrt(min(T_B, B))))


def ceil_index(x: float) -> int:
    """Ceiling that ignores floating-point noise just above an integer."""
    return int(math.ceil(x - GRID_TOL))


def floor_index(x: float) -> int:
    return int(math.floor(x + GRID_TOL))
