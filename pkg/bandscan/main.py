import asyncio
import json
from contextlib import asynccontextmanager
from functools import partial
from typing import Optional

from fastapi import FastAPI, File, Form, HTTPException, Request, UploadFile, status
from fastapi.responses import JSONResponse, PlainTextResponse
from pydantic import ValidationError

from bandscan import config
from bandscan.dataio import format_csv, parse_csv_text
from bandscan.errors import BandscanError, ParseError
from bandscan.pipeline import evaluate, run_analysis, stage
from bandscan.schemas import AnalysisConfig, AnalysisReport, EvaluateRequest, EvaluationSummary, SimulateRequest
from bandscan.simgen import simulate_fts


@asynccontextmanager
async def lifespan(app: FastAPI):
    config.configure_logging()
    print(f"🚀 bandscan API ready ({config.WORKERS} simulation workers)")
    yield


app = FastAPI(
    title="Frequency Band Estimation API",
    version="1.0.0",
    description="Data-adaptive frequency bands for nonstationary functional time series",
    lifespan=lifespan,
)


@app.exception_handler(BandscanError)
async def bandscan_error_handler(request: Request, exc: BandscanError):
    return JSONResponse(status_code=exc.status_code, content=json.loads(json.dumps(exc.to_dict(), default=str)))


async def run_blocking(func, *args, **kwargs):
    """Run CPU-heavy work in the default executor so the event loop stays responsive"""
    loop = asyncio.get_running_loop()
    return await loop.run_in_executor(None, partial(func, *args, **kwargs))


@app.get("/health")
async def health_check():
    return {"status": "healthy"}


@app.post("/api/v1/simulate", response_class=PlainTextResponse)
async def simulate(request: SimulateRequest):
    X = await run_blocking(simulate_fts, request.setting, request.T, request.R, request.seed)
    return PlainTextResponse(format_csv(X), media_type="text/csv")


def _parse_config(raw: Optional[str]) -> AnalysisConfig:
    try:
        return AnalysisConfig.model_validate_json(raw) if raw else AnalysisConfig()
    except ValidationError as e:
        raise HTTPException(status_code=status.HTTP_422_UNPROCESSABLE_ENTITY,
                            detail=json.loads(e.json(include_url=False)))


def _analyze_upload(text: str, cfg: AnalysisConfig) -> AnalysisReport:
    with stage("ingest"):
        X = parse_csv_text(text, decimate=cfg.decimate, anti_alias=cfg.anti_alias,
                           sample_rate_hz=cfg.sample_rate_hz, max_rows=config.MAX_UPLOAD_ROWS)
        if cfg.channels:
            X = X.select(cfg.channels)
    return run_analysis(X, cfg).report


@app.post("/api/v1/analyze", response_model=AnalysisReport)
async def analyze(file: UploadFile = File(...), config_json: Optional[str] = Form(None, alias="config")):
    """Estimate the band partition of an uploaded CSV series"""
    cfg = _parse_config(config_json)
    payload = await file.read()
    try:
        text = payload.decode("utf-8")
    except UnicodeDecodeError:
        raise ParseError("upload is not UTF-8 text", filename=file.filename)
    return await run_blocking(_analyze_upload, text, cfg)


@app.post("/api/v1/evaluate", response_model=EvaluationSummary)
async def evaluate_report(request: EvaluateRequest):
    return evaluate(request.report, request.truth_cuts)
