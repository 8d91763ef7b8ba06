"""
End-to-end analysis: multitaper -> demean -> inchworm search -> per-band
stationarity tests, packaged as an ``AnalysisReport``.
"""
import logging
import time
from contextlib import contextmanager
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, Iterator, List, Optional, Sequence, Tuple, Union

from bandscan.core import (
    BlockPlan,
    FunctionalTimeSeries,
    make_block_plan,
    recommended_blocks,
    recommended_tapers,
)
from bandscan.dataio import ingest_csv
from bandscan.errors import BandscanError, StageError
from bandscan.inchworm import BandPartition, SearchTrace, inchworm_search
from bandscan.multitaper import (
    DemeanedSpectrum,
    SpectralEstimate,
    demean_spectrum,
    multitaper_spectrum,
    tapers_for_bandwidth,
)
from bandscan.scan import choose_test_grid
from bandscan.schemas import (
    AnalysisConfig,
    AnalysisReport,
    DataSummary,
    EvaluationSummary,
    PartitionRecord,
    StationarityRecord,
    TraceRecord,
)
from bandscan.simgen import rand_index
from bandscan.stationarity import StationarityResult, stationarity_test

logger = logging.getLogger(__name__)


@contextmanager
def stage(name: str, timings: Optional[Dict[str, float]] = None) -> Iterator[None]:
    """Attribute any library error raised inside the block to pipeline stage ``name``."""
    start = time.perf_counter()
    try:
        yield
    except StageError:
        raise
    except BandscanError as e:
        logger.error("stage %s failed: %s", name, e.detail)
        raise StageError(name, e) from e
    finally:
        if timings is not None:
            timings[name] = round(time.perf_counter() - start, 3)


@dataclass
class AnalysisRun:
    report: AnalysisReport
    series: FunctionalTimeSeries
    spectrum: SpectralEstimate
    demeaned: DemeanedSpectrum
    partition: BandPartition
    trace: SearchTrace


def load_series(path: Union[str, Path], cfg: AnalysisConfig) -> FunctionalTimeSeries:
    with stage("ingest"):
        X = ingest_csv(path, decimate=cfg.decimate, anti_alias=cfg.anti_alias,
                       sample_rate_hz=cfg.sample_rate_hz)
        if cfg.channels:
            X = X.select(cfg.channels)
    return X


def resolve_plan(X: FunctionalTimeSeries, cfg: AnalysisConfig) -> Tuple[BlockPlan, int]:
    """Block plan and taper count, filling in ``auto`` choices."""
    B = recommended_blocks(X.T) if cfg.B == "auto" else cfg.B
    plan = make_block_plan(X.T, B)
    if cfg.tapers == "auto":
        K = recommended_tapers(plan.T_B, plan.B)
    elif cfg.tapers is not None:
        K = cfg.tapers
    else:
        K = tapers_for_bandwidth(cfg.bw, plan.T_B)
    return plan, K


def _hz(values: Sequence[float], rate: Optional[float]) -> Optional[List[float]]:
    if rate is None:
        return None
    return [v * rate for v in values]


def _stationarity_record(result: StationarityResult, rate: Optional[float]) -> StationarityRecord:
    record = StationarityRecord.model_validate(result)
    record.band_hz = _hz([result.omega1, result.omega2], rate)
    return record


def run_analysis(
    X: FunctionalTimeSeries,
    cfg: AnalysisConfig,
    workers: Optional[int] = None,
    record_timings: bool = False,
) -> AnalysisRun:
    timings: Optional[Dict[str, float]] = {} if record_timings else None
    notes: List[str] = []

    with stage("multitaper", timings):
        plan, K = resolve_plan(X, cfg)
        S = multitaper_spectrum(X, plan, K, center=cfg.center)
        test_grid = choose_test_grid(X.R, cfg.rtest)
    if plan.truncated:
        notes.append(f"truncated {plan.truncated} trailing samples to fit {plan.B} blocks of {plan.T_B}")
    if cfg.decimate > 1:
        notes.append(f"decimated by {cfg.decimate}" + (" with moving-average pre-filter" if cfg.anti_alias else ""))

    with stage("demean", timings):
        G = demean_spectrum(S)

    logger.info("searching T_B=%d B=%d K=%d R=%d (test grid %s)", plan.T_B, plan.B, K, X.R, test_grid.tolist())
    with stage("inchworm", timings):
        partition, trace = inchworm_search(
            G, S, alpha=cfg.alpha, n_max=cfg.n_max, d0=cfg.d0, test_grid=test_grid, seed=cfg.seed,
            block_diagonal=cfg.block_diagonal, coupling=cfg.frequency_coupling, cross_term=cfg.cross_term,
            workers=workers,
        )
    if trace.note:
        notes.append(trace.note)

    results: List[StationarityResult] = []
    if cfg.stationarity:
        with stage("stationarity", timings):
            for omega1, omega2 in partition.bands():
                if not S.grid.indices_between(omega1, omega2).size:
                    continue
                results.append(stationarity_test(
                    G, S, omega1, omega2, d0=cfg.d0, test_grid=test_grid, alpha=cfg.alpha, seed=cfg.seed,
                    block_diagonal=cfg.block_diagonal, coupling=cfg.frequency_coupling,
                    cross_term=cfg.cross_term, workers=workers,
                ))

    with stage("report", timings):
        rate = X.sample_rate_hz
        report = AnalysisReport(
            config=cfg,
            data=DataSummary(
                T=X.T, R=X.R, effective_T=plan.effective_T, truncated=plan.truncated, decimate=cfg.decimate,
                sample_rate_hz=rate, channels=list(X.channel_labels()), B=plan.B, T_B=plan.T_B,
                N_B=S.grid.N_B, K=K, bandwidth=S.bandwidth, test_grid=test_grid.tolist(),
            ),
            partition=PartitionRecord(p_hat=partition.p_hat, cuts=list(partition.cuts),
                                      cuts_hz=_hz(partition.cuts, rate)),
            trace=TraceRecord.model_validate(trace),
            stationarity=[_stationarity_record(r, rate) for r in results],
            notes=notes,
        )
    if timings is not None:
        report = report.model_copy(update={"timings": dict(timings)})
    logger.info("estimated %d band(s), cuts %s", partition.p_hat, [round(c, 4) for c in partition.cuts])
    return AnalysisRun(report=report, series=X, spectrum=S, demeaned=G, partition=partition, trace=trace)


def evaluate(report: AnalysisReport, truth_cuts: Sequence[float]) -> EvaluationSummary:
    """Score a report's partition against known cuts with the Rand index."""
    estimated = BandPartition(tuple(report.partition.cuts))
    truth = BandPartition(tuple(truth_cuts))
    score = rand_index(estimated, truth, report.data.N_B, T_B=report.data.T_B)
    return EvaluationSummary(
        rand_index=score,
        p_hat=estimated.p_hat,
        truth_p_hat=truth.p_hat,
        cuts=list(estimated.cuts),
        truth_cuts=list(truth.cuts),
        N_B=report.data.N_B,
    )
