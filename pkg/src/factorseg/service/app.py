"""HTTP surface wrapping the library.

Compute endpoints are synchronous wrappers over the core functions; the
detect endpoint also exists in a streaming flavor that emits NDJSON progress
events while the search runs, then the final result.
"""
from __future__ import annotations

import json
import queue
import threading

import numpy as np
from fastapi import FastAPI, HTTPException
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import StreamingResponse

from .. import __version__
from ..data import AtlasTable, SimulationSpec, export_network_json, simulate_dataset
from ..detect import DetectionConfig, detect_cps
from ..errors import FactorsegError
from ..matrix import TimeSeriesMatrix
from ..network import AdjacencyMatrix, est_net, segments_between
from ..nmf import NmfConfig, opt_rank_search
from . import schemas

app = FastAPI(
    title="factorseg",
    description="Change point detection and network estimation for positive multivariate time series",
    version=__version__,
)

app.add_middleware(
    CORSMiddleware,
    allow_origins=["*"],
    allow_methods=["*"],
    allow_headers=["*"],
)


def _matrix(data: list[list[float]]) -> TimeSeriesMatrix:
    try:
        return TimeSeriesMatrix(np.asarray(data, dtype=np.float64))
    except (FactorsegError, ValueError) as exc:
        raise HTTPException(status_code=422, detail=str(exc)) from exc


def _run(fn, *args, **kwargs):
    try:
        return fn(*args, **kwargs)
    except FactorsegError as exc:
        raise HTTPException(status_code=422, detail=str(exc)) from exc


@app.get("/health", response_model=schemas.HealthResponse)
def health() -> schemas.HealthResponse:
    return schemas.HealthResponse(status="ok", version=__version__)


@app.post("/rank", response_model=schemas.RankResponse)
def rank(req: schemas.RankRequest) -> schemas.RankResponse:
    Y = _matrix(req.data)
    config = NmfConfig(
        nruns=req.options.nruns,
        max_iterations=req.options.max_iterations,
        tolerance=req.options.tolerance,
        master_seed=req.options.seed,
    )
    result = _run(opt_rank_search, Y, config, n_jobs=max(1, req.n_jobs))
    return schemas.RankResponse(
        rank=result.rank,
        saturated=result.saturated,
        diagnostics=[
            schemas.RankDiagnosticsRow(
                rank=d.rank,
                loss=d.loss,
                loss_permuted=d.loss_permuted,
                decrement=d.decrement,
                decrement_permuted=d.decrement_permuted,
            )
            for d in result.diagnostics
        ],
    )


def _detection_config(req: schemas.DetectRequest) -> DetectionConfig:
    return DetectionConfig(
        mindist=req.mindist,
        nruns=req.nruns,
        nreps=req.nreps,
        alpha=req.alpha,
        rank=req.rank,
        testtype=req.testtype,
        master_seed=req.seed,
        max_iterations=req.max_iterations,
        tolerance=req.tolerance,
    )


def _detect_response(report, log: list[str]) -> schemas.DetectResponse:
    return schemas.DetectResponse(
        rank=report.rank_used,
        change_points=[
            schemas.ChangePointOut(T=r.index, stat_test=r.stat_test) for r in report.rows
        ],
        alpha=report.alpha,
        testtype=report.testtype,
        compute_time_seconds=report.compute_time,
        log=log,
    )


@app.post("/detect", response_model=schemas.DetectResponse)
def detect(req: schemas.DetectRequest) -> schemas.DetectResponse:
    Y = _matrix(req.data)
    log: list[str] = []
    report = _run(detect_cps, Y, _detection_config(req), progress=log.append, n_jobs=max(1, req.n_jobs))
    return _detect_response(report, log)


@app.post("/detect/stream")
def detect_stream(req: schemas.DetectRequest) -> StreamingResponse:
    Y = _matrix(req.data)
    config = _detection_config(req)

    def generate():
        events: queue.Queue = queue.Queue()
        log: list[str] = []

        def progress(msg: str) -> None:
            log.append(msg)
            events.put(("progress", msg))

        def work() -> None:
            try:
                report = detect_cps(Y, config, progress=progress, n_jobs=max(1, req.n_jobs))
                events.put(("result", _detect_response(report, log).model_dump()))
            except FactorsegError as exc:
                events.put(("error", str(exc)))

        worker = threading.Thread(target=work, daemon=True)
        worker.start()
        while True:
            kind, payload = events.get()
            if kind == "progress":
                yield json.dumps({"event": "progress", "message": payload}) + "\n"
            elif kind == "error":
                yield json.dumps({"event": "error", "detail": payload}) + "\n"
                return
            else:
                yield json.dumps({"event": "result", "payload": payload}) + "\n"
                return

    return StreamingResponse(generate(), media_type="application/x-ndjson")


@app.post("/network", response_model=schemas.NetworkResponse)
def network(req: schemas.NetworkRequest) -> schemas.NetworkResponse:
    Y = _matrix(req.data)
    nmf = NmfConfig(
        nruns=req.nruns,
        max_iterations=req.max_iterations,
        tolerance=req.tolerance,
        master_seed=req.seed,
    )
    nets = _run(
        est_net,
        Y,
        req.lambda_spec,
        rank=req.rank,
        nruns=req.nruns,
        changepoints=req.changepoints,
        master_seed=req.seed,
        nmf=nmf,
        n_jobs=max(1, req.n_jobs),
    )
    bounds = segments_between(req.changepoints, Y.T)
    segments = []
    for (start, end), item in zip(bounds, nets):
        per = item if isinstance(item, list) else [item]
        segments.append(
            schemas.SegmentNetworks(
                start=start,
                end=end,
                adjacencies=[
                    schemas.AdjacencyOut(mode=a.mode, matrix=a.values.tolist()) for a in per
                ],
            )
        )
    return schemas.NetworkResponse(segments=segments)


@app.post("/simulate", response_model=schemas.SimulateResponse)
def simulate(req: schemas.SimulateRequest) -> schemas.SimulateResponse:
    try:
        spec = SimulationSpec(
            p=req.p,
            T=req.T,
            changepoints=tuple(req.changepoints),
            clusters=req.clusters,
            within_corr=req.within_corr,
            between_corr=req.between_corr,
            master_seed=req.seed,
            reshuffle=req.reshuffle,
        )
    except FactorsegError as exc:
        raise HTTPException(status_code=422, detail=str(exc)) from exc
    sim = _run(simulate_dataset, spec)
    return schemas.SimulateResponse(
        data=sim.data.values.tolist(),
        changepoints=list(sim.changepoints),
        labels=[list(l) for l in sim.labels],
    )


@app.post("/export", response_model=schemas.ExportResponse)
def export(req: schemas.ExportRequest) -> schemas.ExportResponse:
    try:
        adjacency = AdjacencyMatrix(values=np.asarray(req.adjacency), mode="request")
        atlas = AtlasTable(
            communities=tuple(r.community for r in req.atlas),
            xyz=np.array([[r.x, r.y, r.z] for r in req.atlas]),
        )
    except FactorsegError as exc:
        raise HTTPException(status_code=422, detail=str(exc)) from exc
    result = _run(
        export_network_json,
        adjacency,
        atlas,
        communities=req.communities,
        node_ids=req.node_ids,
        colors=req.colors,
        metadata=req.metadata,
    )
    return schemas.ExportResponse(**result.to_dict())
