"""
Static SVG figures: log autospectra over time and frequency with the
estimated band cuts, and spline-smoothed band-specific demeaned spectra.
"""
import logging
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence, Tuple, Union

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402
from scipy.interpolate import BSpline, make_lsq_spline  # noqa: E402

from bandscan.errors import StorageError, UnderdeterminedFitError  # noqa: E402
from bandscan.inchworm import BandPartition  # noqa: E402
from bandscan.multitaper import DemeanedSpectrum, SpectralEstimate  # noqa: E402
from bandscan.stationarity import band_indices  # noqa: E402

logger = logging.getLogger(__name__)

# fixed salt keeps SVG element ids identical between runs
plt.rcParams["svg.hashsalt"] = "bandscan"

EEG_BAND_EDGES_HZ = (4.0, 7.0, 12.0, 30.0)
MAX_PANELS = 16


@dataclass(frozen=True)
class SmoothedBand:
    band: Tuple[float, float]
    u: np.ndarray
    raw: np.ndarray
    spline: BSpline

    def __call__(self, u) -> np.ndarray:
        """Fitted curves at rescaled times u, one column per grid point."""
        return self.spline(np.asarray(u, dtype=float))


def smooth_band_g(G: DemeanedSpectrum, band: Tuple[float, float], knots: int = 4) -> SmoothedBand:
    """Least-squares cubic spline in u through the band-averaged diagonal of the demeaned spectrum."""
    indices = band_indices(G, band[0], band[1])
    B = G.B
    if B < knots + 4:
        raise UnderdeterminedFitError(f"a cubic spline with {knots} interior knots needs B >= {knots + 4}, got B={B}",
                                      B=B, knots=knots)
    diag = np.real(np.diagonal(G.kernels[:, indices - 1], axis1=-2, axis2=-1))
    raw = diag.mean(axis=1)
    u = G.plan.midpoints
    interior = np.linspace(0.0, 1.0, knots + 2)[1:-1]
    t = np.concatenate([[0.0] * 4, interior, [1.0] * 4])
    try:
        spline = make_lsq_spline(u, raw, t, k=3)
    except (ValueError, np.linalg.LinAlgError) as e:
        raise UnderdeterminedFitError(f"spline fit failed: {e}", B=B, knots=knots) from e
    return SmoothedBand(band=(float(band[0]), float(band[1])), u=u, raw=raw, spline=spline)


def _save(fig, path: Union[str, Path]) -> None:
    try:
        fig.savefig(path, format="svg", metadata={"Date": None}, bbox_inches="tight")
    except OSError as e:
        raise StorageError(f"cannot write {path}: {e.strerror or e}", path=str(path)) from e
    finally:
        plt.close(fig)
    logger.info("wrote %s", path)


def _panels(n: int) -> Tuple[int, int]:
    cols = min(n, 4)
    return math.ceil(n / cols), cols


def plot_autospectra(
    S: SpectralEstimate,
    partition: BandPartition,
    path: Union[str, Path],
    labels: Optional[Sequence[str]] = None,
    sample_rate_hz: Optional[float] = None,
    eeg_bands: bool = False,
) -> None:
    """One time x frequency heatmap of log10 autospectra per grid point, cuts as solid green lines."""
    spectra = S.autospectra()
    R = spectra.shape[-1]
    columns = list(range(min(R, MAX_PANELS)))
    labels = list(labels) if labels is not None else [str(i + 1) for i in range(R)]
    scale = sample_rate_hz or 1.0
    unit = "Hz" if sample_rate_hz else "cycles/sample"
    freqs = S.grid.frequencies * scale
    u = S.plan.midpoints

    rows, cols = _panels(len(columns))
    fig, axes = plt.subplots(rows, cols, figsize=(4 * cols, 3 * rows), squeeze=False, sharey=True)
    floor = np.max(spectra) * 1e-12 if np.max(spectra) > 0 else 1.0
    for ax, r in zip(axes.flat, columns):
        image = np.log10(np.maximum(spectra[:, :, r], floor))
        mesh = ax.pcolormesh(freqs, u, image, shading="nearest", cmap="viridis")
        for cut in partition.cuts:
            ax.axvline(cut * scale, color="green", linewidth=1.5)
        if eeg_bands and sample_rate_hz:
            for edge in EEG_BAND_EDGES_HZ:
                if freqs[0] <= edge <= freqs[-1]:
                    ax.axvline(edge, color="blue", linestyle="--", linewidth=1.0)
        ax.set_title(labels[r])
        ax.set_xlabel(f"frequency ({unit})")
        fig.colorbar(mesh, ax=ax, label="log10 power")
    for ax in axes.flat[len(columns):]:
        ax.set_visible(False)
    for ax in axes[:, 0]:
        ax.set_ylabel("rescaled time u")
    _save(fig, path)


def plot_band_g(
    G: DemeanedSpectrum,
    partition: BandPartition,
    path: Union[str, Path],
    labels: Optional[Sequence[str]] = None,
    knots: int = 4,
    sample_rate_hz: Optional[float] = None,
) -> None:
    """Smoothed band-averaged demeaned autospectra over time, one panel per band."""
    bands = [band for band in partition.bands() if G.grid.indices_between(*band).size]
    labels = list(labels) if labels is not None else [str(i + 1) for i in range(G.R)]
    scale = sample_rate_hz or 1.0
    unit = " Hz" if sample_rate_hz else ""
    fine = np.linspace(0.0, 1.0, 200)

    rows, cols = _panels(len(bands))
    fig, axes = plt.subplots(rows, cols, figsize=(4 * cols, 3 * rows), squeeze=False, sharex=True)
    for ax, band in zip(axes.flat, bands):
        smooth = smooth_band_g(G, band, knots=knots)
        curves = smooth(fine)
        for r in range(min(G.R, MAX_PANELS)):
            ax.plot(fine, curves[:, r], linewidth=1.0, label=labels[r])
        ax.axhline(0.0, color="grey", linewidth=0.5)
        ax.set_title(f"[{band[0] * scale:.3g}, {band[1] * scale:.3g}){unit}")
        ax.set_xlabel("rescaled time u")
    for ax in axes.flat[len(bands):]:
        ax.set_visible(False)
    axes.flat[0].legend(fontsize="small")
    _save(fig, path)
