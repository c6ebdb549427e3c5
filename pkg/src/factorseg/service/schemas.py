"""Request/response models for the HTTP service.

Matrices travel inline as row-major lists of lists (rows = time points);
the service itself never touches the filesystem.
"""
from __future__ import annotations

from typing import Literal, Optional, Union

from pydantic import BaseModel, Field


class NmfOptions(BaseModel):
    nruns: int = 50
    max_iterations: int = 2000
    tolerance: float = 1e-6
    seed: int = 0


class RankRequest(BaseModel):
    data: list[list[float]]
    options: NmfOptions = NmfOptions()
    n_jobs: int = 1


class RankDiagnosticsRow(BaseModel):
    rank: int
    loss: float
    loss_permuted: float
    decrement: float
    decrement_permuted: float


class RankResponse(BaseModel):
    rank: int
    saturated: bool
    diagnostics: list[RankDiagnosticsRow]


class DetectRequest(BaseModel):
    data: list[list[float]]
    mindist: int = 35
    nruns: int = 50
    nreps: int = 100
    alpha: Optional[float] = None
    rank: Optional[int] = None
    testtype: Literal["welch_t", "wilcoxon", "ks"] = "welch_t"
    seed: int = 0
    max_iterations: int = 2000
    tolerance: float = 1e-6
    n_jobs: int = 1


class ChangePointOut(BaseModel):
    T: int
    stat_test: Union[bool, float]


class DetectResponse(BaseModel):
    rank: int
    change_points: list[ChangePointOut]
    alpha: Optional[float]
    testtype: str
    compute_time_seconds: float
    log: list[str] = Field(default_factory=list)


class NetworkRequest(BaseModel):
    data: list[list[float]]
    lambda_spec: Union[int, float, list[Union[int, float]]]
    rank: Optional[int] = None
    nruns: int = 50
    changepoints: Optional[list[int]] = None
    seed: int = 0
    max_iterations: int = 2000
    tolerance: float = 1e-6
    n_jobs: int = 1


class SegmentNetworks(BaseModel):
    start: int
    end: int
    adjacencies: list["AdjacencyOut"]


class AdjacencyOut(BaseModel):
    mode: str
    matrix: list[list[int]]


class NetworkResponse(BaseModel):
    segments: list[SegmentNetworks]


class SimulateRequest(BaseModel):
    p: int
    T: int
    changepoints: list[int] = Field(default_factory=list)
    clusters: int = 2
    within_corr: float = 0.75
    between_corr: float = 0.20
    seed: int = 0
    reshuffle: bool = True


class SimulateResponse(BaseModel):
    data: list[list[float]]
    changepoints: list[int]
    labels: list[list[int]]


class AtlasRowIn(BaseModel):
    community: Optional[str] = None
    x: float
    y: float
    z: float


class ExportRequest(BaseModel):
    adjacency: list[list[int]]
    atlas: list[AtlasRowIn]
    communities: Optional[list[str]] = None
    node_ids: Optional[list[int]] = None
    colors: Optional[list[str]] = None
    metadata: dict = Field(default_factory=dict)


class NodeOut(BaseModel):
    id: int
    community: Optional[str]
    x: float
    y: float
    z: float
    color: str


class ExportResponse(BaseModel):
    schema_version: int
    nodes: list[NodeOut]
    edges: list[list[int]]
    metadata: dict


class HealthResponse(BaseModel):
    status: str
    version: str


SegmentNetworks.model_rebuild()
