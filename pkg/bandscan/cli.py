"""
Command-line interface.

    python -m bandscan simulate --setting linear --T 5000 --R 5 --seed 1 --out linear.csv
    python -m bandscan analyze linear.csv --B 10 --out report.json --plot spectra.svg
    python -m bandscan evaluate report.json --truth 0.15,0.35
    python -m bandscan serve --port 8000
"""
import argparse
import json
import sys
from typing import List, Optional, Sequence, Union

from pydantic import ValidationError

from bandscan import config
from bandscan.dataio import parse_cuts, read_report, write_csv, write_report
from bandscan.errors import BandscanError, ConfigError, StorageError
from bandscan.pipeline import evaluate, load_series, run_analysis, stage
from bandscan.plotting import plot_autospectra, plot_band_g
from bandscan.schemas import AnalysisConfig, AnalysisReport, EvaluationSummary
from bandscan.simgen import SETTINGS, get_setting, simulate_fts


def _status(message: str) -> None:
    print(message, file=sys.stderr)


def _int_or_auto(value: str) -> Union[int, str]:
    if value == "auto":
        return value
    try:
        return int(value)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer or 'auto', got {value!r}") from None


# ============= COMMANDS =============

def cmd_simulate(setting: str, T: int, R: int, seed: int, out: str) -> None:
    X = simulate_fts(get_setting(setting), T, R, seed)
    write_csv(X, out)
    _status(f"✅ Wrote {T}x{R} {setting} series to {out}")


def cmd_analyze(
    in_path: str,
    cfg: AnalysisConfig,
    out: Optional[str] = None,
    plot: Optional[str] = None,
    band_plot: Optional[str] = None,
    eeg_bands: bool = False,
    timings: bool = False,
    workers: Optional[int] = None,
) -> AnalysisReport:
    X = load_series(in_path, cfg)
    _status(f"🔄 Analyzing {X.T} samples x {X.R} grid points from {in_path}")
    run = run_analysis(X, cfg, workers=workers, record_timings=timings)
    report = run.report
    with stage("report"):
        if out:
            write_report(report, out)
        else:
            print(report.model_dump_json(indent=2))
    labels = report.data.channels
    with stage("plot"):
        if plot:
            plot_autospectra(run.spectrum, run.partition, plot, labels=labels,
                             sample_rate_hz=X.sample_rate_hz, eeg_bands=eeg_bands)
        if band_plot:
            plot_band_g(run.demeaned, run.partition, band_plot, labels=labels, sample_rate_hz=X.sample_rate_hz)
    _status(f"✅ Estimated {report.partition.p_hat} band(s); cuts {report.partition.cuts}")
    return report


def cmd_evaluate(report_path: str, truth_cuts: Sequence[float]) -> EvaluationSummary:
    report = read_report(report_path)
    summary = evaluate(report, truth_cuts)
    print(summary.model_dump_json())
    return summary


# ============= PARSER =============

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="bandscan", description="Adaptive frequency band estimation for "
                                     "nonstationary functional time series")
    parser.add_argument("--log-level", default=config.LOG_LEVEL, help="logging level (default: %(default)s)")
    parser.add_argument("--workers", type=int, default=None, help="threads for null simulation")
    sub = parser.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="write a synthetic series as CSV")
    sim.add_argument("--setting", choices=sorted(SETTINGS), default="white-noise")
    sim.add_argument("--T", type=int, default=1000)
    sim.add_argument("--R", type=int, default=5)
    sim.add_argument("--seed", type=int, default=0)
    sim.add_argument("--out", required=True)

    ana = sub.add_parser("analyze", help="estimate frequency bands of a CSV series")
    ana.add_argument("input")
    input_group = ana.add_argument_group("Input Options")
    input_group.add_argument("--decimate", type=int, default=1, help="keep every d-th row")
    input_group.add_argument("--anti-alias", action="store_true", help="moving-average filter before decimating")
    input_group.add_argument("--center", action="store_true", help="remove each column's mean")
    input_group.add_argument("--channels", help="comma-separated channel group to analyze")
    input_group.add_argument("--sample-rate", type=float, help="sampling rate in Hz before decimation")

    analysis_group = ana.add_argument_group("Analysis Options")
    analysis_group.add_argument("--B", type=_int_or_auto, default=10, help="temporal blocks, or 'auto'")
    tapers = analysis_group.add_mutually_exclusive_group()
    tapers.add_argument("--bw", type=float, help="multitaper bandwidth (default 0.05)")
    tapers.add_argument("--tapers", type=_int_or_auto, help="taper count, or 'auto'")
    analysis_group.add_argument("--alpha", type=float, default=0.05)
    analysis_group.add_argument("--nmax", type=int, default=30, help="widths tested per pass")
    analysis_group.add_argument("--d0", type=int, default=config.DEFAULT_D0, help="null draws per test")
    analysis_group.add_argument("--rtest", type=int, default=4, help="functional test grid size")
    analysis_group.add_argument("--seed", type=int, default=0)
    analysis_group.add_argument("--full-covariance", action="store_true",
                                help="simulate nulls jointly across blocks instead of block by block")
    analysis_group.add_argument("--coupling", choices=("diagonal", "full"), default="diagonal",
                                help="frequency pairs kept in the null covariance")
    analysis_group.add_argument("--cross-term", choices=("printed", "symmetric"), default="printed")
    analysis_group.add_argument("--no-stationarity", action="store_true", help="skip per-band stationarity tests")

    output_group = ana.add_argument_group("Output Options")
    output_group.add_argument("--out", help="JSON report path (default: stdout)")
    output_group.add_argument("--plot", help="SVG of log autospectra with estimated cuts")
    output_group.add_argument("--band-plot", help="SVG of smoothed band-specific demeaned spectra")
    output_group.add_argument("--eeg-bands", action="store_true", help="draw 4/7/12/30 Hz reference lines")
    output_group.add_argument("--timings", action="store_true", help="record stage timings in the report")

    ev = sub.add_parser("evaluate", help="Rand index of a report against known cuts")
    ev.add_argument("report")
    truth = ev.add_mutually_exclusive_group()
    truth.add_argument("--truth", default="", help="comma-separated true cuts")
    truth.add_argument("--setting", choices=sorted(SETTINGS), help="take true cuts from a simulation setting")

    srv = sub.add_parser("serve", help="run the HTTP API")
    srv.add_argument("--host", default="0.0.0.0")
    srv.add_argument("--port", type=int, default=8000)
    return parser


def config_from_args(args: argparse.Namespace) -> AnalysisConfig:
    fields = dict(
        B=args.B, alpha=args.alpha, n_max=args.nmax, d0=args.d0, rtest=args.rtest, seed=args.seed,
        block_diagonal=not args.full_covariance, decimate=args.decimate, anti_alias=args.anti_alias,
        center=args.center, frequency_coupling=args.coupling, cross_term=args.cross_term,
        stationarity=not args.no_stationarity, sample_rate_hz=args.sample_rate,
    )
    if args.tapers is not None:
        fields["tapers"] = args.tapers
    if args.bw is not None:
        fields["bw"] = args.bw
    if args.channels:
        fields["channels"] = [name.strip() for name in args.channels.split(",") if name.strip()]
    try:
        return AnalysisConfig(**fields)
    except ValidationError as e:
        problems = "; ".join(f"{'.'.join(map(str, err['loc'])) or 'config'}: {err['msg']}" for err in e.errors())
        raise ConfigError(f"invalid configuration: {problems}") from e


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        config.configure_logging(args.log_level)
        if args.command == "simulate":
            cmd_simulate(args.setting, args.T, args.R, args.seed, args.out)
        elif args.command == "analyze":
            cmd_analyze(args.input, config_from_args(args), out=args.out, plot=args.plot,
                        band_plot=args.band_plot, eeg_bands=args.eeg_bands, timings=args.timings,
                        workers=args.workers)
        elif args.command == "evaluate":
            cuts = list(SETTINGS[args.setting].cuts) if args.setting else parse_cuts(args.truth)
            cmd_evaluate(args.report, cuts)
        elif args.command == "serve":
            import uvicorn

            uvicorn.run("bandscan.main:app", host=args.host, port=args.port)
    except BandscanError as e:
        _status(f"❌ {e.detail}")
        if e.context:
            _status(f"   {json.dumps(e.to_dict(), default=str)}")
        return e.exit_code
    except OSError as e:
        _status(f"❌ {e}")
        return StorageError.exit_code
    return 0
