"""
Synthetic functional time series with product-form spectra
phi(u, omega) * f(tau, sigma), and the Rand index for scoring estimated band
partitions against the truth.
"""
from dataclasses import dataclass
from typing import Dict, Optional, Tuple, Union

import numpy as np
from scipy import fft as sp_fft
from scipy.interpolate import BSpline
from sklearn.metrics import rand_score

from bandscan.core import FunctionalTimeSeries
from bandscan.errors import ConfigError, GridTooSmallError, InvalidSeriesError
from bandscan.inchworm import BandPartition

N_BASIS = 15


@dataclass(frozen=True)
class SimSetting:
    id: str
    cuts: Tuple[float, ...]
    right_closed: bool
    description: str
    jump: float = 0.0

    @property
    def partition(self) -> BandPartition:
        return BandPartition(self.cuts)

    def band_index(self, omega):
        """Band number of omega, honouring which side of each cut is closed."""
        side = "left" if self.right_closed else "right"
        return np.searchsorted(np.asarray(self.cuts), omega, side=side)


SETTINGS: Dict[str, SimSetting] = {
    "white-noise": SimSetting("white-noise", (), False, "functional white noise, phi = 1"),
    "linear": SimSetting("linear", (0.15, 0.35), False, "linear trends in the outer bands"),
    "sinusoidal": SimSetting("sinusoidal", (0.15, 0.35), True, "sinusoidal dynamics in every band"),
    "two-band": SimSetting("two-band", (0.25,), False, "linear trend of size jump below 0.25", jump=4.0),
}


def get_setting(setting: Union[str, SimSetting]) -> SimSetting:
    if isinstance(setting, SimSetting):
        return setting
    try:
        return SETTINGS[setting]
    except KeyError:
        raise ConfigError(f"unknown setting {setting!r}; choose from {', '.join(SETTINGS)}",
                          setting=setting) from None


def _band_phi(setting: SimSetting, band: int, u):
    setting_id = setting.id
    if setting_id == "linear":
        return (10.0 - 9.0 * u, 5.0 + 0.0 * u, 1.0 + 9.0 * u)[band]
    if setting_id == "sinusoidal":
        return (
            2.0 + np.sin(8 * np.pi * u - np.pi / 2),
            2.0 + np.cos(8 * np.pi * u),
            2.0 + np.cos(16 * np.pi * u),
        )[band]
    if setting_id == "two-band":
        return (1.0 + setting.jump * (1.0 - u), 1.0 + 0.0 * u)[band]
    return 1.0 + 0.0 * u


def phi(setting: Union[str, SimSetting], u, omega: float):
    """Time-frequency modulation of the setting at rescaled time u."""
    setting = get_setting(setting)
    u = np.asarray(u, dtype=float)
    value = _band_phi(setting, int(setting.band_index(omega)), u)
    return float(value) if np.ndim(value) == 0 else value


def bspline_basis(grid: np.ndarray, n_basis: int = N_BASIS) -> np.ndarray:
    """R x n_basis cubic B-spline design matrix on clamped uniform knots over [0, 1]."""
    grid = np.asarray(grid, dtype=float)
    if n_basis < 4:
        raise ConfigError(f"a cubic basis needs at least 4 functions, got {n_basis}", n_basis=n_basis)
    if grid.size < 2:
        raise InvalidSeriesError(f"need at least 2 grid points, got {grid.size}")
    knots = np.concatenate([[0.0] * 3, np.linspace(0.0, 1.0, n_basis - 2), [1.0] * 3])
    return BSpline.design_matrix(grid, knots, 3).toarray()


def simulate_fts(setting: Union[str, SimSetting], T: int, R: int, seed: int) -> FunctionalTimeSeries:
    """
    Band-pass B-spline functional white noise through DFT masks, one component
    per true band, and modulate each component by sqrt(phi) over time.
    """
    setting = get_setting(setting)
    if T < 2 or T % 2:
        raise InvalidSeriesError(f"T must be even and at least 2, got {T}", T=T)
    if R < 2:
        raise InvalidSeriesError(f"R must be at least 2, got {R}", R=R)

    grid = np.linspace(0.0, 1.0, R)
    rng = np.random.default_rng(seed)
    noise = rng.standard_normal((T, N_BASIS)) @ bspline_basis(grid).T
    if not setting.cuts:
        return FunctionalTimeSeries(values=noise, grid=grid)

    spectrum = sp_fft.rfft(noise, axis=0)
    freqs = np.arange(spectrum.shape[0]) / T
    labels = setting.band_index(freqs)
    u = np.arange(1, T + 1) / T
    values = np.zeros((T, R))
    for band in range(setting.partition.p_hat):
        mask = (labels == band)[:, None]
        component = sp_fft.irfft(spectrum * mask, n=T, axis=0)
        amplitude = np.sqrt(_band_phi(setting, band, u))
        values += amplitude[:, None] * component
    return FunctionalTimeSeries(values=values, grid=grid)


def rand_index(estimated: BandPartition, truth: BandPartition, N_B: int, T_B: Optional[int] = None) -> float:
    """
    Share of Fourier-frequency pairs on which two partitions agree.

    Frequencies are k / T_B for k = 1..N_B; T_B defaults to 2 (N_B + 1).
    """
    if N_B < 2:
        raise GridTooSmallError(f"need at least 2 Fourier frequencies, got N_B={N_B}", N_B=N_B)
    T_B = T_B or 2 * (N_B + 1)
    freqs = np.arange(1, N_B + 1) / T_B
    return float(rand_score(truth.labels(freqs), estimated.labels(freqs)))
