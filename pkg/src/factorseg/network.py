"""Stationary network estimation between change points.

Repeated seeded factorizations of a segment give cluster labelings whose
co-membership frequencies form a consensus matrix; an adjacency matrix is
cut from it either by thresholding or by average-linkage hierarchical
clustering.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.cluster.hierarchy import fcluster, linkage
from scipy.spatial.distance import squareform

from .errors import DegenerateSegmentError, ParameterError
from .matrix import ensure_matrix
from .nmf import NmfConfig, cluster_assign, nmf_fit_single, opt_rank_search
from .seeding import CTX_CONSENSUS, child_seed


@dataclass(frozen=True)
class ConsensusMatrix:
    """p x p co-clustering frequencies in [0, 1]; symmetric, unit diagonal."""

    values: np.ndarray
    nruns_used: int

    def __post_init__(self) -> None:
        arr = np.asarray(self.values, dtype=np.float64)
        if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
            raise ParameterError("consensus matrix must be square")
        if not np.allclose(arr, arr.T):
            raise ParameterError("consensus matrix must be symmetric")
        if (arr < 0).any() or (arr > 1).any():
            raise ParameterError("consensus entries must lie in [0, 1]")
        if not np.allclose(np.diag(arr), 1.0):
            raise ParameterError("consensus diagonal must be 1")
        arr.setflags(write=False)
        object.__setattr__(self, "values", arr)

    @property
    def p(self) -> int:
        return self.values.shape[0]


@dataclass(frozen=True)
class AdjacencyMatrix:
    """Binary undirected graph: symmetric 0/1 values, empty diagonal."""

    values: np.ndarray
    mode: str  # "threshold(<lambda>)" or "clusters(<k>)"

    def __post_init__(self) -> None:
        arr = np.asarray(self.values)
        if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
            raise ParameterError("adjacency matrix must be square")
        if not np.array_equal(arr, arr.T):
            raise ParameterError("adjacency matrix must be symmetric")
        if not np.isin(arr, (0, 1)).all():
            raise ParameterError("adjacency entries must be 0 or 1")
        if np.diag(arr).any():
            raise ParameterError("adjacency diagonal must be 0 (no self-loops)")
        arr = arr.astype(np.int8)
        arr.setflags(write=False)
        object.__setattr__(self, "values", arr)

    @property
    def p(self) -> int:
        return self.values.shape[0]

    def edges(self) -> list[tuple[int, int]]:
        """Undirected edge list with 1-based node ids, i < j."""
        ii, jj = np.nonzero(np.triu(self.values, k=1))
        return [(int(i) + 1, int(j) + 1) for i, j in zip(ii, jj)]


def consensus_matrix(Y_segment, rank: int, nruns: int = 50, master_seed: int = 0, nmf: NmfConfig | None = None, n_jobs: int = 1) -> ConsensusMatrix:
    """Average co-membership over nruns seeded factorizations of one segment."""
    X = ensure_matrix(Y_segment).values
    if X.shape[0] < 2:
        raise DegenerateSegmentError("segment must have at least 2 rows")
    nmf = nmf or NmfConfig()
    p = X.shape[1]

    def labels_for(run: int) -> np.ndarray:
        fit = nmf_fit_single(X, rank, child_seed(master_seed, CTX_CONSENSUS, run), nmf)
        return cluster_assign(fit.h)

    if n_jobs == 1:
        all_labels = [labels_for(run) for run in range(nruns)]
    else:
        from joblib import Parallel, delayed

        all_labels = Parallel(n_jobs=n_jobs)(delayed(labels_for)(run) for run in range(nruns))
    counts = np.zeros((p, p))
    for labels in all_labels:
        counts += labels[:, None] == labels[None, :]
    return ConsensusMatrix(values=counts / nruns, nruns_used=nruns)


def adjacency_from_threshold(C: ConsensusMatrix, lam: float) -> AdjacencyMatrix:
    """Edge wherever the consensus strictly exceeds lam (diagonal excluded)."""
    if not (0.0 < lam < 1.0):
        raise ParameterError(f"lambda must lie in (0, 1), got {lam}")
    A = (C.values > lam).astype(np.int8)
    np.fill_diagonal(A, 0)
    return AdjacencyMatrix(values=A, mode=f"threshold({lam:g})")


def adjacency_from_clustering(C: ConsensusMatrix, k: int) -> AdjacencyMatrix:
    """Average-linkage clustering of 1 - C cut at k groups; cliques become edges."""
    if not (1 <= k <= C.p):
        raise ParameterError(f"cluster count {k} outside 1..{C.p}")
    D = 1.0 - C.values
    np.fill_diagonal(D, 0.0)
    # squareform needs exact symmetry; consensus construction already is,
    # but float averaging can leave dust after 1 - C.
    D = (D + D.T) / 2.0
    Z = linkage(squareform(D, checks=False), method="average")
    labels = fcluster(Z, t=k, criterion="maxclust")
    A = (labels[:, None] == labels[None, :]).astype(np.int8)
    np.fill_diagonal(A, 0)
    return AdjacencyMatrix(values=A, mode=f"clusters({k})")


def segments_between(changepoints, T: int) -> list[tuple[int, int]]:
    """Stationary blocks for ordered change points: a point q ends its block."""
    cps = list(changepoints or [])
    if any(b <= a for a, b in zip(cps, cps[1:])):
        raise ParameterError("changepoints must be strictly increasing")
    if cps and not (1 < cps[0] and cps[-1] < T):
        raise ParameterError(f"changepoints must lie strictly inside (1, {T})")
    bounds = [0, *cps, T]
    return [(s + 1, e) for s, e in zip(bounds, bounds[1:])]


def _adjacency_for(C: ConsensusMatrix, lam) -> AdjacencyMatrix:
    # Positive integer -> cluster count; real below 1 -> consensus threshold.
    if isinstance(lam, (bool, np.bool_)):
        raise ParameterError("lambda must be a number")
    if isinstance(lam, (int, np.integer)) or (isinstance(lam, float) and lam.is_integer() and lam >= 1):
        return adjacency_from_clustering(C, int(lam))
    if isinstance(lam, (float, np.floating)) and lam < 1:
        return adjacency_from_threshold(C, float(lam))
    raise ParameterError(f"lambda {lam!r} is neither a cluster count nor a threshold in (0, 1)")


def est_net(
    Y,
    lambda_spec,
    rank: int | None = None,
    nruns: int = 50,
    changepoints=None,
    master_seed: int = 0,
    nmf: NmfConfig | None = None,
    n_jobs: int = 1,
):
    """Per-segment adjacency matrices.

    lambda_spec is a cluster count (integer), a threshold in (0, 1), or a
    sequence of either (one adjacency per value, in the given order). With
    changepoints given, Y splits into stationary blocks and each gets its own
    consensus. Returns a list over segments; each element is an
    AdjacencyMatrix, or a list of them when lambda_spec is a sequence.
    """
    Y = ensure_matrix(Y)
    segments = segments_between(changepoints, Y.T)
    fan_out = isinstance(lambda_spec, (list, tuple, np.ndarray))
    lams = list(lambda_spec) if fan_out else [lambda_spec]
    if not lams:
        raise ParameterError("lambda_spec must contain at least one value")

    results = []
    for seg_idx, (start, stop) in enumerate(segments):
        if stop - start + 1 < 2:
            raise DegenerateSegmentError(f"segment {start}:{stop} too short")
        seg = Y.rows(start, stop)
        seg_seed = child_seed(master_seed, CTX_CONSENSUS, seg_idx)
        seg_rank = rank
        if seg_rank is None:
            seg_rank = opt_rank_search(seg, (nmf or NmfConfig()), n_jobs=n_jobs).rank
        C = consensus_matrix(seg, seg_rank, nruns, master_seed=seg_seed, nmf=nmf, n_jobs=n_jobs)
        per_seg = [_adjacency_for(C, lam) for lam in lams]
        results.append(per_seg if fan_out else per_seg[0])
    return results
