"""Data ingestion, rescaling, simulation, and viewer export.

File formats:
  * input matrices: CSV/TSV, rows = time points, columns = variables,
    optional header row of column labels;
  * atlas: CSV with header ``community,x,y,z``; an empty community field
    means "no community"; row order defines node ids 1..p;
  * network export: a single self-describing JSON document (see
    NetworkExport.to_dict for the schema).
"""
from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import AtlasMismatchError, DataError, ParameterError, RescaleError
from .matrix import TimeSeriesMatrix
from .network import AdjacencyMatrix
from .seeding import CTX_SIMULATE, child_seed, rng_from

SCHEMA_VERSION = 1

DEFAULT_PALETTE = (
    "#e41a1c", "#377eb8", "#4daf4a", "#984ea3", "#ff7f00", "#ffff33",
    "#a65628", "#f781bf", "#999999", "#66c2a5", "#fc8d62", "#8da0cb",
    "#e78ac3",
)


def _read_rows(path, fmt: str) -> list[list[str]]:
    delim = {"csv": ",", "tsv": "\t"}.get(fmt)
    if delim is None:
        raise ParameterError(f"format must be 'csv' or 'tsv', got {fmt!r}")
    with open(path, newline="") as fh:
        return [row for row in csv.reader(fh, delimiter=delim) if row]


def load_matrix(path, fmt: str = "csv", has_header: bool = False) -> TimeSeriesMatrix:
    """Read a strictly positive time-by-variable matrix from a delimited file."""
    rows = _read_rows(path, fmt)
    if not rows:
        raise DataError(f"{path}: file is empty")
    labels = None
    if has_header:
        labels = tuple(x.strip() for x in rows[0])
        rows = rows[1:]
        if not rows:
            raise DataError(f"{path}: no data rows after header")
    width = len(rows[0])
    values = np.empty((len(rows), width))
    for r, row in enumerate(rows):
        if len(row) != width:
            raise DataError(f"{path}: row {r + 1} has {len(row)} cells, expected {width}")
        for c, cell in enumerate(row):
            try:
                v = float(cell)
            except ValueError:
                raise DataError(f"{path}: non-numeric cell at row {r + 1}, column {c + 1}: {cell!r}") from None
            if not np.isfinite(v):
                raise DataError(f"{path}: non-finite cell at row {r + 1}, column {c + 1}")
            if v <= 0:
                raise DataError(f"{path}: non-positive cell at row {r + 1}, column {c + 1}: {cell!r}")
            values[r, c] = v
    return TimeSeriesMatrix(values, labels=labels)


def save_matrix(m: TimeSeriesMatrix, path, fmt: str = "csv") -> None:
    delim = {"csv": ",", "tsv": "\t"}[fmt]
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, delimiter=delim)
        if m.labels is not None:
            writer.writerow(m.labels)
        for row in m.values:
            writer.writerow([repr(float(v)) for v in row])


def rescale(Y_raw, target_mean: float = 100.0, min_sd: float = 2.0) -> TimeSeriesMatrix:
    """Make a matrix factorization-ready: scale so every column has spread,
    then shift the level up to target_mean.

    Already-positive data whose columns all have sd >= min_sd and whose grand
    mean is within 5% of target_mean is returned unchanged. Otherwise every
    entry is multiplied by one global factor bringing the smallest per-column
    sd up to min_sd, and target_mean is added.
    """
    arr = np.asarray(Y_raw, dtype=np.float64)
    if arr.ndim != 2:
        raise DataError("expected a 2-D matrix")
    if not np.isfinite(arr).all():
        raise DataError("matrix contains non-finite entries")
    sds = arr.std(axis=0, ddof=1)
    if (arr > 0).all() and (sds >= min_sd).all() and abs(arr.mean() - target_mean) <= 0.05 * abs(target_mean):
        return TimeSeriesMatrix(arr)
    min_col_sd = sds.min()
    if min_col_sd == 0:
        raise RescaleError("a column is constant; cannot reach the target spread by scaling")
    factor = min_sd / min_col_sd
    out = arr * factor + target_mean
    if (out <= 0).any():
        t, j = np.argwhere(out <= 0)[0]
        raise RescaleError(
            f"rescaled entry at row {t + 1}, column {j + 1} is non-positive "
            f"(factor {factor:.4g}); use a smaller min_sd or a larger target_mean"
        )
    return TimeSeriesMatrix(out)


@dataclass(frozen=True)
class SimulationSpec:
    """Blocked-covariance Gaussian regimes with label reshuffles at change points."""

    p: int
    T: int
    changepoints: tuple[int, ...] = ()
    clusters: int = 2
    within_corr: float = 0.75
    between_corr: float = 0.20
    master_seed: int = 0
    reshuffle: bool = True
    target_mean: float = 100.0
    min_sd: float = 2.0

    def __post_init__(self) -> None:
        object.__setattr__(self, "changepoints", tuple(int(c) for c in self.changepoints))
        if self.p < 2 or self.T < 2:
            raise ParameterError("need p >= 2 and T >= 2")
        if not (1 <= self.clusters <= self.p):
            raise ParameterError("clusters must lie in 1..p")
        if abs(self.within_corr) >= 1 or abs(self.between_corr) >= 1:
            raise ParameterError("correlations must have magnitude < 1")
        cps = self.changepoints
        if any(b <= a for a, b in zip(cps, cps[1:])):
            raise ParameterError("changepoints must be strictly increasing")
        if cps and not (1 <= cps[0] and cps[-1] < self.T):
            raise ParameterError(f"changepoints must lie in [1, {self.T - 1}]")


@dataclass(frozen=True)
class SimulatedDataset:
    data: TimeSeriesMatrix
    changepoints: tuple[int, ...]
    labels: tuple[tuple[int, ...], ...]  # per-regime cluster labels, length p each


def _covariance(labels: np.ndarray, within: float, between: float) -> np.ndarray:
    same = labels[:, None] == labels[None, :]
    S = np.where(same, within, between)
    np.fill_diagonal(S, 1.0)
    return S


def _regime_labels(rng: np.random.Generator, p: int, clusters: int) -> np.ndarray:
    # Fresh uniform assignment; re-draw the rare degenerate case where a
    # cluster comes out empty so the regime really has `clusters` groups.
    while True:
        labels = rng.integers(0, clusters, size=p)
        if len(np.unique(labels)) == clusters:
            return labels


def simulate_dataset(spec: SimulationSpec) -> SimulatedDataset:
    """Draw T rows of N(0, Sigma) per regime and rescale for factorization.

    Sigma has within_corr inside clusters, between_corr across, unit
    diagonal. At each change point the node labels are redrawn (reshuffle),
    so the clustering structure changes while the marginals do not.
    """
    bounds = [0, *spec.changepoints, spec.T]
    raw = np.empty((spec.T, spec.p))
    labels_per_regime: list[tuple[int, ...]] = []
    labels = None
    for regime, (s, e) in enumerate(zip(bounds, bounds[1:])):
        rng = rng_from(child_seed(spec.master_seed, CTX_SIMULATE, regime))
        if labels is None or spec.reshuffle:
            labels = _regime_labels(rng, spec.p, spec.clusters)
        labels_per_regime.append(tuple(int(x) for x in labels))
        S = _covariance(labels, spec.within_corr, spec.between_corr)
        try:
            L = np.linalg.cholesky(S)
        except np.linalg.LinAlgError:
            raise ParameterError(
                f"covariance for within={spec.within_corr}, between={spec.between_corr} "
                "is not positive definite"
            ) from None
        raw[s:e] = rng.standard_normal((e - s, spec.p)) @ L.T
    data = rescale(raw, target_mean=spec.target_mean, min_sd=spec.min_sd)
    return SimulatedDataset(data=data, changepoints=spec.changepoints, labels=tuple(labels_per_regime))


@dataclass(frozen=True)
class AtlasTable:
    """Node coordinates in MNI millimeters with optional community labels."""

    communities: tuple[str | None, ...]
    xyz: np.ndarray  # (p, 3)

    def __post_init__(self) -> None:
        arr = np.asarray(self.xyz, dtype=np.float64)
        if arr.ndim != 2 or arr.shape[1] != 3:
            raise DataError("atlas coordinates must be (p, 3)")
        if not np.isfinite(arr).all():
            raise DataError("atlas coordinates must be finite")
        if len(self.communities) != arr.shape[0]:
            raise DataError("one community entry per atlas row required")
        arr.setflags(write=False)
        object.__setattr__(self, "xyz", arr)
        object.__setattr__(self, "communities", tuple(self.communities))

    @property
    def p(self) -> int:
        return self.xyz.shape[0]


def load_atlas(path) -> AtlasTable:
    """Read an atlas CSV with header community,x,y,z; row order = node id."""
    rows = _read_rows(path, "csv")
    if not rows:
        raise DataError(f"{path}: atlas file is empty")
    header = [h.strip().lower() for h in rows[0]]
    if header[:4] != ["community", "x", "y", "z"]:
        raise DataError(f"{path}: expected header community,x,y,z, got {rows[0]!r}")
    communities: list[str | None] = []
    coords: list[list[float]] = []
    for r, row in enumerate(rows[1:], start=2):
        if len(row) != 4:
            raise DataError(f"{path}: row {r} has {len(row)} cells, expected 4")
        name = row[0].strip()
        communities.append(name if name else None)
        try:
            coords.append([float(row[1]), float(row[2]), float(row[3])])
        except ValueError:
            raise DataError(f"{path}: non-numeric coordinate in row {r}") from None
    return AtlasTable(communities=tuple(communities), xyz=np.array(coords))


@dataclass(frozen=True)
class NetworkExport:
    """Serializable network: positioned, colored nodes plus undirected edges."""

    nodes: tuple[dict, ...]
    edges: tuple[tuple[int, int], ...]
    metadata: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "schema_version": SCHEMA_VERSION,
            "nodes": list(self.nodes),
            "edges": [list(e) for e in self.edges],
            "metadata": dict(self.metadata),
        }

    def write(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=2) + "\n", encoding="utf-8")


def export_network_json(
    A: AdjacencyMatrix,
    atlas: AtlasTable,
    communities: list[str] | None = None,
    node_ids: list[int] | None = None,
    colors: list[str] | None = None,
    metadata: dict | None = None,
) -> NetworkExport:
    """Join an adjacency matrix with atlas rows and filter for the viewer.

    Nodes keep 1-based ids from atlas row order. Communities are colored by
    first-appearance order: the n-th distinct community gets the n-th color.
    Filtering keeps the named communities, or the listed node ids; edges
    survive only if both endpoints do.
    """
    if A.p != atlas.p:
        raise AtlasMismatchError(f"adjacency is {A.p}x{A.p} but the atlas has {atlas.p} rows")
    if communities is not None and node_ids is not None:
        raise ParameterError("filter by communities or by node ids, not both")

    palette = list(colors) if colors else list(DEFAULT_PALETTE)
    ordered_communities: list[str | None] = []
    for name in atlas.communities:
        if name not in ordered_communities:
            ordered_communities.append(name)
    color_of = {
        name: palette[i % len(palette)] for i, name in enumerate(ordered_communities)
    }

    keep = np.ones(atlas.p, dtype=bool)
    if communities is not None:
        wanted = {c if c is not None else None for c in communities}
        keep = np.array([c in wanted for c in atlas.communities])
    elif node_ids is not None:
        ids = set(int(i) for i in node_ids)
        bad = [i for i in ids if not (1 <= i <= atlas.p)]
        if bad:
            raise ParameterError(f"node ids outside 1..{atlas.p}: {sorted(bad)}")
        keep = np.array([i in ids for i in range(1, atlas.p + 1)])

    nodes = tuple(
        {
            "id": i + 1,
            "community": atlas.communities[i],
            "x": float(atlas.xyz[i, 0]),
            "y": float(atlas.xyz[i, 1]),
            "z": float(atlas.xyz[i, 2]),
            "color": color_of[atlas.communities[i]],
        }
        for i in range(atlas.p)
        if keep[i]
    )
    kept_ids = {n["id"] for n in nodes}
    edges = tuple((i, j) for i, j in A.edges() if i in kept_ids and j in kept_ids)
    return NetworkExport(nodes=nodes, edges=edges, metadata=dict(metadata or {}))


def save_adjacency_csv(A: AdjacencyMatrix, path) -> None:
    """Dense 0/1 integers, comma-separated, no header."""
    np.savetxt(path, A.values, fmt="%d", delimiter=",")


def load_adjacency_csv(path) -> AdjacencyMatrix:
    arr = np.loadtxt(path, delimiter=",", dtype=np.int64, ndmin=2)
    return AdjacencyMatrix(values=arr, mode="loaded")
