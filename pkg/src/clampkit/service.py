"""HTTP facade over datasets, models, metrics, diagrams, and fitting.

The store is in-memory: datasets, models, and calibrators are immutable once
registered, ids are opaque strings, and fit jobs run on a bounded worker pool.
GET endpoints never mutate the store, every response body is produced by the
deterministic serializer, and error bodies are always ``{"error": message}``.
"""

from __future__ import annotations

import hashlib
import itertools
import json
import math
import threading
from concurrent.futures import ThreadPoolExecutor
from contextlib import asynccontextmanager
from dataclasses import dataclass
from pathlib import Path

from fastapi import FastAPI, Request, Response
from fastapi.exceptions import HTTPException, RequestValidationError
from fastapi.responses import HTMLResponse
from fastapi.staticfiles import StaticFiles

from . import jsonio
from .calibrate import Calibrator, TrainConfig, apply, fit_neural_clamping, fit_temperature
from .dataset import (
    InputDataset,
    LogitDataset,
    features_csv_text,
    logits_csv_text,
    parse_features_csv,
    parse_logits_csv,
)
from .diagram import build_diagram
from .errors import ValidationError
from .metrics import compute_report
from .model import MlpModel, model_from_dict, model_to_dict

DEFAULT_PORT = 8080
DEFAULT_MAX_UPLOAD_MB = 64
DEFAULT_WORKERS = 2
MAX_BINS = 100


class ApiError(Exception):
    def __init__(self, status: int, message: str):
        super().__init__(message)
        self.status = status
        self.message = message


@dataclass
class CalibratorRecord:
    calibrator: Calibrator
    model_id: str | None = None


class SessionStore:
    """Registered artifacts plus fit-job statuses; writes are exclusive."""

    def __init__(self):
        self._lock = threading.RLock()
        self._counter = itertools.count(1)
        self.datasets: dict[str, LogitDataset | InputDataset] = {}
        self.models: dict[str, MlpModel] = {}
        self.calibrators: dict[str, CalibratorRecord] = {}
        self.jobs: dict[str, dict] = {}

    def _next_id(self, prefix: str) -> str:
        return f"{prefix}{next(self._counter)}"

    def add_dataset(self, ds) -> str:
        with self._lock:
            ds_id = self._next_id("ds")
            self.datasets[ds_id] = ds
            return ds_id

    def add_model(self, model: MlpModel) -> str:
        with self._lock:
            model_id = self._next_id("mdl")
            self.models[model_id] = model
            return model_id

    def add_calibrator(self, calibrator: Calibrator, model_id: str | None = None) -> str:
        with self._lock:
            cal_id = self._next_id("cal")
            self.calibrators[cal_id] = CalibratorRecord(calibrator, model_id)
            return cal_id

    def dataset(self, ds_id: str):
        ds = self.datasets.get(ds_id)
        if ds is None:
            raise ApiError(404, f"unknown dataset '{ds_id}'")
        return ds

    def model(self, model_id: str) -> MlpModel:
        model = self.models.get(model_id)
        if model is None:
            raise ApiError(404, f"unknown model '{model_id}'")
        return model

    def calibrator(self, cal_id: str) -> CalibratorRecord:
        record = self.calibrators.get(cal_id)
        if record is None:
            raise ApiError(404, f"unknown calibrator '{cal_id}'")
        return record

    def new_job(self) -> str:
        with self._lock:
            job_id = self._next_id("job")
            self.jobs[job_id] = {"status": "queued"}
            return job_id

    def set_job(self, job_id: str, payload: dict) -> None:
        with self._lock:
            self.jobs[job_id] = payload

    def job(self, job_id: str) -> dict:
        with self._lock:
            payload = self.jobs.get(job_id)
            if payload is None:
                raise ApiError(404, f"unknown job '{job_id}'")
            return dict(payload)

    # -- snapshotting -------------------------------------------------------

    def save(self, path) -> None:
        with self._lock:
            payload = {
                "datasets": {
                    ds_id: {
                        "type": "logits" if isinstance(ds, LogitDataset) else "inputs",
                        "csv": logits_csv_text(ds) if isinstance(ds, LogitDataset)
                        else features_csv_text(ds),
                        "name": ds.name,
                    }
                    for ds_id, ds in self.datasets.items()
                },
                "models": {mid: model_to_dict(m) for mid, m in self.models.items()},
                "calibrators": {
                    cid: {"calibrator": rec.calibrator.to_dict(),
                          "model_id": rec.model_id}
                    for cid, rec in self.calibrators.items()
                },
            }
        Path(path).write_text(jsonio.dumps(payload), encoding="utf-8")

    def load(self, path) -> None:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
        with self._lock:
            for ds_id, entry in data.get("datasets", {}).items():
                if entry["type"] == "logits":
                    self.datasets[ds_id] = parse_logits_csv(entry["csv"], entry.get("name", ""))
                else:
                    self.datasets[ds_id] = parse_features_csv(entry["csv"], entry.get("name", ""))
            for model_id, model_data in data.get("models", {}).items():
                self.models[model_id] = model_from_dict(model_data)
            for cal_id, entry in data.get("calibrators", {}).items():
                self.calibrators[cal_id] = CalibratorRecord(
                    Calibrator.from_dict(entry["calibrator"]), entry.get("model_id")
                )
            numeric = []
            for mapping, prefix in ((self.datasets, "ds"), (self.models, "mdl"),
                                    (self.calibrators, "cal")):
                for key in mapping:
                    if key.startswith(prefix) and key[len(prefix):].isdigit():
                        numeric.append(int(key[len(prefix):]))
            start = max(numeric, default=0) + 1
            self._counter = itertools.count(start)


def _json_response(payload, status: int = 200, headers: dict | None = None) -> Response:
    return Response(
        content=jsonio.dumps(payload),
        status_code=status,
        media_type="application/json",
        headers=headers or {},
    )


def _parse_int(raw: str | None, name: str, default: int, low: int, high: int) -> int:
    if raw is None:
        return default
    try:
        value = int(raw)
    except ValueError:
        raise ApiError(400, f"{name} must be an integer") from None
    if not low <= value <= high:
        raise ApiError(400, f"{name} must be in [{low},{high}]")
    return value


def _resolve_calibrator(store: SessionStore, spec: str | None):
    """Parse the calibrator grammar: none | T:<value> | <calibrator id>."""
    if spec is None or spec == "" or spec == "none":
        return Calibrator("none"), None
    if spec.startswith("T:"):
        try:
            t = float(spec[2:])
        except ValueError:
            raise ApiError(400, f"bad temperature in '{spec}'") from None
        if not math.isfinite(t) or t <= 0:
            raise ApiError(400, "temperature must be a positive finite number")
        return Calibrator("temperature", temperature=t), None
    record = store.calibrator(spec)
    return record.calibrator, record.model_id


def _calibrated_probs(store: SessionStore, ds, calibrator_spec: str | None,
                      model_param: str | None):
    calibrator, recorded_model_id = _resolve_calibrator(store, calibrator_spec)
    model_id = model_param or recorded_model_id
    model = store.model(model_id) if model_id else None
    if isinstance(ds, InputDataset) and model is None:
        raise ApiError(400, "an inputs dataset needs a model: pass ?model=<id> "
                            "or a clamping calibrator id")
    try:
        return apply(calibrator, model, ds)
    except ValidationError as exc:
        raise ApiError(400, str(exc)) from None


async def _read_body(request: Request, max_upload_bytes: int) -> bytes:
    body = await request.body()
    if len(body) > max_upload_bytes:
        raise ApiError(413, f"upload exceeds {max_upload_bytes // (1024 * 1024)} MB limit")
    return body


def create_app(max_upload_mb: int = DEFAULT_MAX_UPLOAD_MB,
               workers: int = DEFAULT_WORKERS,
               static_dir: str | None = None,
               snapshot_path: str | None = None) -> FastAPI:
    store = SessionStore()
    max_upload_bytes = max_upload_mb * 1024 * 1024

    @asynccontextmanager
    async def lifespan(app: FastAPI):
        if snapshot_path and Path(snapshot_path).is_file():
            store.load(snapshot_path)
        app.state.executor = ThreadPoolExecutor(max_workers=max(1, workers))
        yield
        app.state.executor.shutdown(wait=True)
        if snapshot_path:
            store.save(snapshot_path)

    app = FastAPI(title="clampkit", lifespan=lifespan)
    app.state.store = store

    @app.exception_handler(ApiError)
    async def _api_error(request: Request, exc: ApiError):
        return _json_response({"error": exc.message}, status=exc.status)

    @app.exception_handler(ValidationError)
    async def _validation_error(request: Request, exc: ValidationError):
        return _json_response({"error": str(exc)}, status=400)

    @app.exception_handler(RequestValidationError)
    async def _request_error(request: Request, exc: RequestValidationError):
        return _json_response({"error": "invalid request"}, status=400)

    @app.exception_handler(HTTPException)
    async def _http_error(request: Request, exc: HTTPException):
        return _json_response({"error": str(exc.detail)}, status=exc.status_code)

    @app.exception_handler(Exception)
    async def _unhandled(request: Request, exc: Exception):
        return _json_response({"error": "internal error"}, status=500)

    # -- datasets -----------------------------------------------------------

    @app.post("/api/datasets")
    async def upload_dataset(request: Request, type: str = "logits", name: str = ""):
        body = await _read_body(request, max_upload_bytes)
        text = body.decode("utf-8", errors="replace")
        if not text.strip():
            raise ApiError(400, "empty body")
        if type == "logits":
            ds = parse_logits_csv(text, name=name)
            ds_id = store.add_dataset(ds)
            return _json_response({"id": ds_id, "n": ds.num_samples, "k": ds.num_classes})
        if type == "inputs":
            ds = parse_features_csv(text, name=name)
            ds_id = store.add_dataset(ds)
            return _json_response({"id": ds_id, "n": ds.num_samples, "d_in": ds.input_dim})
        raise ApiError(400, "type must be 'logits' or 'inputs'")

    @app.get("/api/datasets")
    async def list_datasets():
        items = []
        for ds_id, ds in store.datasets.items():
            entry = {"id": ds_id, "name": ds.name, "n": ds.num_samples}
            if isinstance(ds, LogitDataset):
                entry["type"] = "logits"
                entry["k"] = ds.num_classes
            else:
                entry["type"] = "inputs"
                entry["d_in"] = ds.input_dim
            items.append(entry)
        return _json_response({"datasets": items})

    @app.get("/api/datasets/{ds_id}/diagram")
    async def dataset_diagram(ds_id: str, request: Request, bins: str | None = None,
                              calibrator: str | None = None, model: str | None = None):
        ds = store.dataset(ds_id)
        num_bins = _parse_int(bins, "bins", 15, 1, MAX_BINS)
        probs = _calibrated_probs(store, ds, calibrator, model)
        diagram = build_diagram(probs, ds.labels, num_bins)
        tag = hashlib.sha256(
            f"{ds_id}|{calibrator or 'none'}|{num_bins}|{model or ''}".encode()
        ).hexdigest()[:32]
        etag = f'"{tag}"'
        if request.headers.get("if-none-match") == etag:
            return Response(status_code=304, headers={"ETag": etag})
        return _json_response(diagram.to_dict(), headers={"ETag": etag})

    @app.get("/api/datasets/{ds_id}/metrics")
    async def dataset_metrics(ds_id: str, bins: str | None = None,
                              ranges: str | None = None,
                              calibrator: str | None = None,
                              model: str | None = None):
        ds = store.dataset(ds_id)
        num_bins = _parse_int(bins, "bins", 15, 1, MAX_BINS)
        num_ranges = _parse_int(ranges, "ranges", 15, 1, 10**9)
        probs = _calibrated_probs(store, ds, calibrator, model)
        report = compute_report(probs, ds.labels, num_bins=num_bins,
                                num_ranges=min(num_ranges, ds.num_samples))
        return _json_response(report.to_dict())

    # -- models -------------------------------------------------------------

    @app.post("/api/models")
    async def upload_model(request: Request, name: str = ""):
        body = await _read_body(request, max_upload_bytes)
        try:
            data = json.loads(body)
        except json.JSONDecodeError as exc:
            raise ApiError(400, f"malformed model JSON: {exc}") from None
        model = model_from_dict(data, name=name)
        model_id = store.add_model(model)
        return _json_response({
            "id": model_id,
            "input_dim": model.input_dim,
            "output_dim": model.output_dim,
        })

    # -- calibrators --------------------------------------------------------

    @app.get("/api/calibrators")
    async def list_calibrators():
        items = []
        for cal_id, record in store.calibrators.items():
            entry = {"id": cal_id}
            entry.update(record.calibrator.to_dict())
            if record.model_id:
                entry["model_id"] = record.model_id
            items.append(entry)
        return _json_response({"calibrators": items})

    @app.get("/api/calibrators/{cal_id}")
    async def get_calibrator(cal_id: str):
        record = store.calibrator(cal_id)
        payload = record.calibrator.to_dict()
        if record.model_id:
            payload["model_id"] = record.model_id
        return _json_response(payload)

    # -- fitting jobs -------------------------------------------------------

    async def _fit_request(request: Request) -> dict:
        body = await _read_body(request, max_upload_bytes)
        try:
            data = json.loads(body) if body else {}
        except json.JSONDecodeError as exc:
            raise ApiError(400, f"malformed JSON body: {exc}") from None
        if not isinstance(data, dict):
            raise ApiError(400, "body must be a JSON object")
        return data

    def _parse_config(data: dict) -> TrainConfig:
        raw = data.get("config", {})
        try:
            return TrainConfig.from_dict(raw)
        except ValidationError as exc:
            raise ApiError(400, str(exc)) from None

    def _run_job(job_id: str, work):
        store.set_job(job_id, {"status": "running"})
        try:
            report, model_id = work()
            cal_id = store.add_calibrator(report.calibrator, model_id)
            payload = report.to_dict()
            payload["calibrator_id"] = cal_id
            store.set_job(job_id, {"status": "done", "report": payload})
        except Exception as exc:  # surfaced verbatim to the poller
            store.set_job(job_id, {"status": "failed", "error": str(exc)})

    @app.post("/api/fit/temperature")
    async def fit_temperature_job(request: Request):
        data = await _fit_request(request)
        ds_id = data.get("dataset_id")
        if not ds_id:
            raise ApiError(400, "dataset_id is required")
        ds = store.dataset(ds_id)
        if not isinstance(ds, LogitDataset):
            raise ApiError(400, "temperature fitting needs a logits dataset")
        config = _parse_config(data)
        job_id = store.new_job()
        app.state.executor.submit(
            _run_job, job_id, lambda: (fit_temperature(ds, config), None)
        )
        return _json_response({"job_id": job_id})

    @app.post("/api/fit/clamping")
    async def fit_clamping_job(request: Request):
        data = await _fit_request(request)
        ds_id = data.get("dataset_id")
        model_id = data.get("model_id")
        if not ds_id or not model_id:
            raise ApiError(400, "dataset_id and model_id are required")
        ds = store.dataset(ds_id)
        model = store.model(model_id)
        if not isinstance(ds, InputDataset):
            raise ApiError(400, "clamping fits an inputs dataset through a model")
        config = _parse_config(data)
        job_id = store.new_job()
        app.state.executor.submit(
            _run_job, job_id,
            lambda: (fit_neural_clamping(model, ds, config), model_id),
        )
        return _json_response({"job_id": job_id})

    @app.get("/api/jobs/{job_id}")
    async def job_status(job_id: str):
        return _json_response(store.job(job_id))

    # -- static panel -------------------------------------------------------

    if static_dir and Path(static_dir).is_dir():
        app.mount("/", StaticFiles(directory=static_dir, html=True), name="panel")
    else:
        @app.get("/", response_class=HTMLResponse)
        async def index():
            return (
                "<!doctype html><title>clampkit</title>"
                "<h1>clampkit service</h1>"
                "<p>The API lives under <code>/api</code>. Build the panel in "
                "<code>frontend/</code> and restart with <code>--static "
                "frontend/dist</code> to serve it here.</p>"
            )

    return app


def run_server(port: int = DEFAULT_PORT, max_upload_mb: int = DEFAULT_MAX_UPLOAD_MB,
               workers: int = DEFAULT_WORKERS, static_dir: str | None = None,
               snapshot_path: str | None = None, host: str = "127.0.0.1") -> None:
    import uvicorn

    app = create_app(max_upload_mb=max_upload_mb, workers=workers,
                     static_dir=static_dir, snapshot_path=snapshot_path)
    uvicorn.run(app, host=host, port=port, log_level="info")
