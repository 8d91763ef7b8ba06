"""Adaptive frequency band estimation for nonstationary functional time series."""
from bandscan.core import (
    BlockPlan,
    FrequencyGrid,
    FunctionalTimeSeries,
    fourier_grid,
    make_block_plan,
    recommended_blocks,
    recommended_tapers,
)
from bandscan.errors import BandscanError
from bandscan.inchworm import BandPartition, SearchTrace, hochberg, inchworm_search
from bandscan.multitaper import (
    DemeanedSpectrum,
    SpectralEstimate,
    demean_spectrum,
    fdft,
    frequency_correlation,
    multitaper_spectrum,
    sine_taper_matrix,
    tapers_for_bandwidth,
)
from bandscan.nullsim import NullDraws, draw_chisquare_mix, draw_null_scan, p_value, psd_factorize
from bandscan.scan import (
    C_kernel,
    F_kernel,
    NullCovariance,
    ScanWindow,
    band_average,
    null_covariance,
    scan_statistic,
)
from bandscan.simgen import SETTINGS, SimSetting, bspline_basis, phi, rand_index, simulate_fts
from bandscan.stationarity import StationarityResult, stationarity_statistic, stationarity_test

__version__ = "1.0.0"
