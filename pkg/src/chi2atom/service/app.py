"""FastAPI application exposing the named experiments.

POST /run executes one experiment synchronously and returns the artifacts
inline together with a manifest (config echo, version, timings, checksums).
Validation failures surface as 422 with the offending key named; numerical
failures (integration or steady-state convergence) as 500 with
``detail.type == "numerical"`` so clients can distinguish them.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import time

from fastapi import FastAPI, HTTPException

from .. import __version__, experiments
from ..config import ExperimentConfig
from ..dynamics import ConvergenceError, IntegrationError
from ..presets import get_preset, preset_names
from .schemas import (Artifact, FileRecord, HealthResponse, PresetList,
                      RunManifest, RunRequest, RunResponse)


def _csv_to_json_records(body: str) -> str:
    rows = list(csv.reader(io.StringIO(body)))
    header = rows[0]
    records = [dict(zip(header, row)) for row in rows[1:]]
    return json.dumps(records, indent=2) + "\n"


def _render(artifacts: dict[str, str], fmt: str) -> dict[str, str]:
    if fmt == "csv":
        return artifacts
    out = {}
    for name, content in artifacts.items():
        if name.endswith(".csv"):
            out[name[:-4] + ".json"] = _csv_to_json_records(content)
        else:
            out[name] = content
    return out


def execute_run(request: RunRequest) -> RunResponse:
    conf = ExperimentConfig(experiment=request.experiment, params=request.params)
    resolved = conf.resolved()
    start = time.perf_counter()
    try:
        artifacts, summary = experiments.run_experiment(resolved)
    except (IntegrationError, ConvergenceError) as exc:
        raise HTTPException(status_code=500, detail={
            "type": "numerical", "experiment": request.experiment, "message": str(exc),
            "params": resolved.params}) from exc
    except ValueError as exc:
        raise HTTPException(status_code=400, detail={
            "type": "config", "experiment": request.experiment, "message": str(exc)}) from exc
    wall = time.perf_counter() - start
    rendered = _render(artifacts, request.format)
    files = [FileRecord(name=name, sha256=hashlib.sha256(content.encode()).hexdigest(),
                        bytes=len(content.encode()))
             for name, content in sorted(rendered.items())]
    manifest = RunManifest(tool_version=__version__, experiment=request.experiment,
                           config=resolved.params, format=request.format,
                           wall_seconds=wall, files=files, summary=summary)
    return RunResponse(manifest=manifest,
                       artifacts=[Artifact(name=n, content=c) for n, c in sorted(rendered.items())])


def create_app() -> FastAPI:
    app = FastAPI(title="chi2atom", version=__version__,
                  description="Simulation service for the chi(2) artificial atom")

    @app.get("/health", response_model=HealthResponse)
    def health() -> HealthResponse:
        return HealthResponse(status="ok", version=__version__)

    @app.get("/presets", response_model=PresetList)
    def presets() -> PresetList:
        return PresetList(presets=preset_names())

    @app.get("/presets/{name}", response_model=ExperimentConfig)
    def preset(name: str) -> ExperimentConfig:
        try:
            return get_preset(name).resolved()
        except KeyError as exc:
            raise HTTPException(status_code=404, detail=str(exc)) from exc

    @app.post("/run", response_model=RunResponse)
    def run(request: RunRequest) -> RunResponse:
        return execute_run(request)

    return app


app = create_app()
