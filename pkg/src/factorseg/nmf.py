"""Non-negative matrix factorization with KL-divergence loss.

Multiplicative updates, deterministic seeded restarts, cluster assignment
from the coefficient matrix, and data-driven rank selection by comparing
marginal loss decrements against a row+column permuted baseline.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field, replace

import numpy as np
from joblib import Parallel, delayed

from .errors import ConformanceError, DataError, RankError, SingularReconstructionError
from .matrix import TimeSeriesMatrix, ensure_matrix
from .seeding import CTX_MATRIX_PERMUTE, CTX_RANK_FIT, CTX_RANK_PERMUTE, CTX_RUN, child_seed, rng_from

EPS = 1e-12


@dataclass(frozen=True)
class NmfConfig:
    """Knobs for a factorization: restarts, stopping rule, seed, algorithm."""

    nruns: int = 50
    max_iterations: int = 2000
    tolerance: float = 1e-6
    master_seed: int = 0
    algorithm: str = "multiplicative_kl"

    def __post_init__(self) -> None:
        if self.nruns < 1:
            raise ValueError("nruns must be >= 1")
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be >= 1")
        if self.tolerance <= 0:
            raise ValueError("tolerance must be > 0")
        if self.algorithm != "multiplicative_kl":
            raise ValueError(f"unknown algorithm {self.algorithm!r}")


@dataclass(frozen=True)
class NmfFit:
    """One factorization: factors, final loss, and the seed that made it."""

    w: np.ndarray
    h: np.ndarray
    rank: int
    loss: float
    seed: int
    iterations: int
    loss_trace: np.ndarray = field(repr=False, default=None)

    def __post_init__(self) -> None:
        for name in ("w", "h", "loss_trace"):
            arr = getattr(self, name)
            if arr is not None:
                arr = np.asarray(arr, dtype=np.float64)
                arr.setflags(write=False)
                object.__setattr__(self, name, arr)


def _as_2d(X, name: str) -> np.ndarray:
    arr = np.asarray(X, dtype=np.float64)
    if arr.ndim != 2:
        raise ConformanceError(f"{name} must be 2-D, got ndim={arr.ndim}")
    return arr


def _kld_from_wh(X: np.ndarray, WHc: np.ndarray, xlogx: float, xsum: float, logbuf: np.ndarray | None = None) -> float:
    # Sum of X*log(X/WH) - X + WH with 0*log(0/y) := 0. WHc must already be
    # floored at EPS (guards the log against a vanishing reconstruction).
    # Each exact term is nonnegative, so a negative total can only be float
    # rounding: clamp it. The same arithmetic is used by the fit loop and by
    # the public kld_loss so stored losses replay exactly.
    logwh = np.log(WHc, out=logbuf)
    total = xlogx - np.dot(X.ravel(), logwh.ravel()) - xsum + WHc.sum()
    return float(max(total, 0.0))


def _xlogx_sum(X: np.ndarray) -> float:
    pos = X > 0
    return float(np.sum(X[pos] * np.log(X[pos])))


def kld_loss(X, W, H) -> float:
    """Generalized Kullback-Leibler divergence between X and the product WH."""
    X = _as_2d(X, "X")
    W = _as_2d(W, "W")
    H = _as_2d(H, "H")
    if W.shape[1] != H.shape[0]:
        raise ConformanceError(f"W is {W.shape} but H is {H.shape}")
    if X.shape != (W.shape[0], H.shape[1]):
        raise ConformanceError(f"X is {X.shape}, WH would be {(W.shape[0], H.shape[1])}")
    if (X < 0).any():
        raise DataError("X must be nonnegative")
    WH = W @ H
    if np.any((WH == 0) & (X > 0)):
        raise SingularReconstructionError("WH is zero where X is positive")
    np.maximum(WH, EPS, out=WH)
    return _kld_from_wh(X, WH, _xlogx_sum(X), float(X.sum()))


def _check_fit_input(X: np.ndarray, rank: int) -> None:
    if not np.isfinite(X).all():
        raise DataError("matrix contains non-finite entries")
    if (X < 0).any():
        raise DataError("matrix contains negative entries")
    n, p = X.shape
    if not (1 <= rank < min(n, p)):
        raise RankError(f"rank {rank} infeasible for a {n}x{p} matrix (need 1 <= r < {min(n, p)})")


def nmf_fit_single(X, rank: int, seed: int, config: NmfConfig = NmfConfig()) -> NmfFit:
    """One multiplicative-update KL factorization from a seeded random start.

    W and H are initialized i.i.d. uniform on (0, max(X)]; updates run until
    the relative loss change drops below config.tolerance or
    config.max_iterations is hit.
    """
    if isinstance(X, TimeSeriesMatrix):
        X = X.values
    X = _as_2d(X, "X")
    _check_fit_input(X, rank)
    n, p = X.shape

    rng = rng_from(seed)
    xmax = float(X.max())
    # (1 - U[0,1)) * max lands in (0, max]
    W = (1.0 - rng.random((n, rank))) * xmax
    H = (1.0 - rng.random((rank, p))) * xmax

    X = np.ascontiguousarray(X)
    xlogx = _xlogx_sum(X)
    xsum = float(X.sum())

    # Scratch buffers reused across iterations; WH stays floored at EPS.
    WH = np.empty((n, p))
    R = np.empty((n, p))
    np.matmul(W, H, out=WH)
    np.maximum(WH, EPS, out=WH)

    trace = []
    prev = None
    iterations = 0
    for _ in range(config.max_iterations):
        np.divide(X, WH, out=R)
        W *= (R @ H.T) / np.maximum(H.sum(axis=1), EPS)
        np.matmul(W, H, out=WH)
        np.maximum(WH, EPS, out=WH)
        np.divide(X, WH, out=R)
        H *= (W.T @ R) / np.maximum(W.sum(axis=0), EPS)[:, None]
        np.matmul(W, H, out=WH)
        np.maximum(WH, EPS, out=WH)
        loss = _kld_from_wh(X, WH, xlogx, xsum, logbuf=R)
        iterations += 1
        trace.append(loss)
        if prev is not None and abs(prev - loss) <= config.tolerance * max(prev, EPS):
            break
        prev = loss

    return NmfFit(
        w=W,
        h=H,
        rank=rank,
        loss=trace[-1],
        seed=int(seed),
        iterations=iterations,
        loss_trace=np.asarray(trace),
    )


def run_seeds(master_seed: int, nruns: int) -> list[int]:
    """Per-run seeds for nruns restarts; a prefix-stable stream."""
    return [child_seed(master_seed, CTX_RUN, i) for i in range(nruns)]


def nmf_fit_best(
    X,
    rank: int,
    config: NmfConfig = NmfConfig(),
    master_seed: int | None = None,
    n_jobs: int = 1,
) -> NmfFit:
    """Best-of-nruns factorization; minimum loss, ties to the lowest run index.

    Per-run seeds are derived from (master_seed, run index), so the selected
    fit does not depend on execution order or on n_jobs.
    """
    master = config.master_seed if master_seed is None else master_seed
    seeds = run_seeds(master, config.nruns)
    if n_jobs == 1 or config.nruns == 1:
        fits = [nmf_fit_single(X, rank, s, config) for s in seeds]
    else:
        fits = Parallel(n_jobs=n_jobs, prefer="threads")(
            delayed(nmf_fit_single)(X, rank, s, config) for s in seeds
        )
    best = min(range(len(fits)), key=lambda i: (fits[i].loss, i))
    return fits[best]


def cluster_assign(H) -> np.ndarray:
    """Label each column by the row with the largest coefficient (ties: lowest row)."""
    H = _as_2d(H, "H")
    if H.size == 0:
        raise DataError("H is empty")
    return np.argmax(H, axis=0)


def permute_matrix(Y, seed: int):
    """Scramble the matrix over both rows and columns; preserves the entry multiset.

    Entries are permuted independently within every column, then within every
    row. This destroys the dependence structure (a reordering of whole rows
    or whole columns would leave the factorization loss unchanged), which is
    what makes the result usable as a null reference for rank selection.
    TimeSeriesMatrix in, TimeSeriesMatrix out (labels dropped: entries no
    longer belong to their variables); plain arrays pass through as arrays.
    """
    rng = rng_from(seed)
    arr = Y.values if isinstance(Y, TimeSeriesMatrix) else _as_2d(Y, "Y")
    out = rng.permuted(arr, axis=0)
    out = rng.permuted(out, axis=1)
    if isinstance(Y, TimeSeriesMatrix):
        return TimeSeriesMatrix(out)
    return out


@dataclass(frozen=True)
class RankDiagnostics:
    """Per-rank losses and decrements for the original and permuted series."""

    rank: int
    loss: float
    loss_permuted: float
    decrement: float
    decrement_permuted: float


@dataclass(frozen=True)
class OptRankResult:
    rank: int
    saturated: bool
    diagnostics: tuple[RankDiagnostics, ...]


def opt_rank_search(
    Y,
    config: NmfConfig = NmfConfig(),
    n_jobs: int = 1,
    progress=None,
) -> OptRankResult:
    """Scan ranks upward until the loss decrement falls below the permuted baseline.

    For each candidate rank k the best-of-nruns loss is computed on Y and on a
    fixed row+column permutation Y*. The selected rank is one less than the
    first k whose decrement on Y drops below the decrement on Y*, floored at
    2. If the rule never fires the scan saturates at min(T, p) - 1.
    """
    Y = ensure_matrix(Y)
    master = config.master_seed
    r_max = min(Y.T, Y.p) - 1
    if r_max < 2:
        raise DataError(f"matrix {Y.T}x{Y.p} too small for a rank-2 search")
    Ystar = permute_matrix(Y, child_seed(master, CTX_RANK_PERMUTE))

    def loss_at(rank: int) -> tuple[float, float]:
        ly = nmf_fit_best(Y, rank, config, master_seed=child_seed(master, CTX_RANK_FIT, rank, 0), n_jobs=n_jobs).loss
        ls = nmf_fit_best(Ystar, rank, config, master_seed=child_seed(master, CTX_RANK_FIT, rank, 1), n_jobs=n_jobs).loss
        return ly, ls

    prev_y, prev_s = loss_at(1)
    diagnostics: list[RankDiagnostics] = []
    for k in range(2, r_max + 1):
        ly, ls = loss_at(k)
        dec_y = prev_y - ly
        dec_s = prev_s - ls
        diagnostics.append(RankDiagnostics(k, ly, ls, dec_y, dec_s))
        if progress is not None:
            progress(f"rank {k}: decrement {dec_y:.6g} vs permuted {dec_s:.6g}")
        if dec_y < dec_s:
            return OptRankResult(max(k - 1, 2), False, tuple(diagnostics))
        prev_y, prev_s = ly, ls
    return OptRankResult(r_max, True, tuple(diagnostics))


def opt_rank(Y, config: NmfConfig = NmfConfig(), n_jobs: int = 1) -> int:
    """Data-driven factorization rank (see opt_rank_search)."""
    result = opt_rank_search(Y, config, n_jobs=n_jobs)
    if result.saturated:
        warnings.warn(
            f"rank search hit the upper bound {result.rank} without triggering "
            "the stopping rule; the returned rank may be an underestimate",
            stacklevel=2,
        )
    return result.rank
