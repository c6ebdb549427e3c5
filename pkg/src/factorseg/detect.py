"""Change point detection in the clustering structure of a positive series.

Candidate locations come from a loss-guided binary search over split points
(with an exhaustive grid baseline); candidates are then pruned by comparing
refit loss distributions against time-permuted references with a one-sided
two-sample test and Benjamini-Hochberg adjustment.

Public time indices are 1-based and inclusive: a change point q means the
series splits into rows 1..q and q+1..T.
"""
from __future__ import annotations

import time
from dataclasses import dataclass, replace

import numpy as np
from joblib import Parallel, delayed
from scipy import stats as sps

from .errors import DegenerateSegmentError, ParameterError, RangeError
from .matrix import TimeSeriesMatrix, ensure_matrix
from .nmf import NmfConfig, nmf_fit_best, nmf_fit_single, opt_rank_search
from .seeding import CTX_DELTA, CTX_PERMUTE, CTX_REFIT, CTX_SEARCH, child_seed, rng_from

TEST_TYPES = ("welch_t", "wilcoxon", "ks")


@dataclass(frozen=True)
class DetectionConfig:
    """Detection parameters; defaults follow the library's standard surface."""

    mindist: int = 35
    nruns: int = 50
    nreps: int = 100
    alpha: float | None = None
    rank: int | None = None
    testtype: str = "welch_t"
    master_seed: int = 0
    max_iterations: int = 2000
    tolerance: float = 1e-6

    def __post_init__(self) -> None:
        if self.mindist < 2:
            raise ParameterError("mindist must be >= 2")
        if self.nreps < 2:
            raise ParameterError("nreps must be >= 2")
        if self.alpha is not None and not (0.0 < self.alpha < 1.0):
            raise ParameterError("alpha must lie in (0, 1)")
        if self.rank is not None and self.rank < 1:
            raise ParameterError("rank must be a positive integer")
        if self.testtype not in TEST_TYPES:
            raise ParameterError(f"testtype must be one of {TEST_TYPES}")

    def nmf_config(self, nruns: int | None = None) -> NmfConfig:
        return NmfConfig(
            nruns=self.nruns if nruns is None else nruns,
            max_iterations=self.max_iterations,
            tolerance=self.tolerance,
            master_seed=self.master_seed,
        )


@dataclass(frozen=True)
class Candidate:
    index: int
    delta_loss: float


@dataclass(frozen=True)
class CandidateSet:
    """Accepted candidates in ascending order with their split diagnostics."""

    candidates: tuple[Candidate, ...]

    def __post_init__(self) -> None:
        idx = [c.index for c in self.candidates]
        if any(b <= a for a, b in zip(idx, idx[1:])):
            raise ParameterError("candidates must be strictly increasing")

    @property
    def indices(self) -> tuple[int, ...]:
        return tuple(c.index for c in self.candidates)

    def __len__(self) -> int:
        return len(self.candidates)


@dataclass(frozen=True)
class SegmentBoundaries:
    """Ordered boundary set {1, q_1..q_k, T} with per-candidate flanking blocks."""

    boundaries: tuple[int, ...]

    def __post_init__(self) -> None:
        w = self.boundaries
        if len(w) < 3:
            raise ParameterError("need at least one candidate between 1 and T")
        if w[0] != 1:
            raise ParameterError("boundary set must start at 1")
        if any(b <= a for a, b in zip(w, w[1:])):
            raise ParameterError("boundaries must be strictly increasing")

    @classmethod
    def from_candidates(cls, candidates, T: int) -> "SegmentBoundaries":
        return cls((1, *candidates, T))

    @property
    def n_candidates(self) -> int:
        return len(self.boundaries) - 2

    def left_block(self, i: int) -> tuple[int, int]:
        """Rows (w_i : w_{i+1}) for 1-based candidate ordinal i."""
        self._check(i)
        return self.boundaries[i - 1], self.boundaries[i]

    def right_block(self, i: int) -> tuple[int, int]:
        """Rows (w_{i+1}+1 : w_{i+2}) for 1-based candidate ordinal i."""
        self._check(i)
        return self.boundaries[i] + 1, self.boundaries[i + 1]

    def _check(self, i: int) -> None:
        if not (1 <= i <= self.n_candidates):
            raise ParameterError(f"candidate ordinal {i} outside 1..{self.n_candidates}")


@dataclass(frozen=True)
class LossDistributions:
    """Refit losses and their time-permuted reference, one entry per repetition."""

    refit: np.ndarray
    reference: np.ndarray

    def __post_init__(self) -> None:
        refit = np.asarray(self.refit, dtype=np.float64)
        reference = np.asarray(self.reference, dtype=np.float64)
        if refit.shape != reference.shape or refit.ndim != 1:
            raise ParameterError("refit and reference must be 1-D and equally long")
        if not (np.isfinite(refit).all() and np.isfinite(reference).all()):
            raise ParameterError("loss distributions must be finite")
        if (refit < 0).any() or (reference < 0).any():
            raise ParameterError("losses must be nonnegative")
        refit.setflags(write=False)
        reference.setflags(write=False)
        object.__setattr__(self, "refit", refit)
        object.__setattr__(self, "reference", reference)


@dataclass(frozen=True)
class ChangePointRow:
    index: int
    p_value: float
    significant: bool | None

    @property
    def stat_test(self):
        """Adjusted p-value, or the significance verdict when alpha was given."""
        return self.p_value if self.significant is None else self.significant


@dataclass(frozen=True)
class ChangePointReport:
    rank_used: int
    rows: tuple[ChangePointRow, ...]
    compute_time: float
    alpha: float | None = None
    testtype: str = "welch_t"

    def to_dict(self) -> dict:
        return {
            "rank": self.rank_used,
            "change_points": [{"T": r.index, "stat_test": r.stat_test} for r in self.rows],
            "alpha": self.alpha,
            "testtype": self.testtype,
            "compute_time_seconds": self.compute_time,
        }

    def to_table(self) -> str:
        lines = [f"rank: {self.rank_used}", "    T    stat_test"]
        for n, r in enumerate(self.rows, start=1):
            val = r.stat_test
            shown = f"{val:.6e}" if isinstance(val, float) else str(val)
            lines.append(f"{n:>3} {r.index:>4} {shown}")
        if not self.rows:
            lines.append("(no change points)")
        lines.append(f"compute time: {self.compute_time:.2f} s")
        return "\n".join(lines)


def _noop(_msg: str) -> None:
    return None


def _fit_window(Y: TimeSeriesMatrix, start: int, stop: int, rank: int, config: DetectionConfig, key: tuple[int, ...], n_jobs: int = 1):
    master = child_seed(config.master_seed, *key)
    return nmf_fit_best(Y.rows(start, stop), rank, config.nmf_config(), master_seed=master, n_jobs=n_jobs)


def _check_interval(Y: TimeSeriesMatrix, lo: int, hi: int, delta: int) -> None:
    if hi < lo:
        raise RangeError(f"empty interval {lo}:{hi}")
    if lo < delta or hi > Y.T - delta:
        raise RangeError(f"interval {lo}:{hi} outside [{delta}, {Y.T - delta}]")


def binary_search_candidate(Y, lo: int, hi: int, rank: int, config: DetectionConfig, progress=None) -> int:
    """Locate one candidate split in [lo, hi] by loss-guided bisection.

    Each step splits the data window spanned by the current interval (the
    interval padded by mindist on both sides) at its midpoint, fits both
    halves, and keeps the half with the higher loss; ties go left. The
    surviving single index is the candidate.
    """
    Y = ensure_matrix(Y)
    progress = progress or _noop
    delta = config.mindist
    _check_interval(Y, lo, hi, delta)
    while hi > lo:
        progress(f"{lo} : {hi}")
        m = (lo + hi + 1) // 2
        a, b = lo - delta + 1, hi + delta
        left = _fit_window(Y, a, m, rank, config, (CTX_SEARCH, 0, a, m))
        right = _fit_window(Y, m + 1, b, rank, config, (CTX_SEARCH, 1, m + 1, b))
        if left.loss >= right.loss:
            hi = min(m, hi - 1)
        else:
            lo = max(m - 1, lo + 1)
    return lo


def grid_search_candidate(Y, lo: int, hi: int, rank: int, config: DetectionConfig, progress=None) -> int:
    """Exhaustive baseline: evaluate every split in [lo, hi], minimize total loss."""
    Y = ensure_matrix(Y)
    progress = progress or _noop
    delta = config.mindist
    _check_interval(Y, lo, hi, delta)
    if hi == lo:
        return lo
    a, b = lo - delta + 1, hi + delta
    best_t, best_loss = lo, np.inf
    for t in range(lo, hi + 1):
        progress(f"split {t}")
        left = _fit_window(Y, a, t, rank, config, (CTX_SEARCH, 0, a, t))
        right = _fit_window(Y, t + 1, b, rank, config, (CTX_SEARCH, 1, t + 1, b))
        total = left.loss + right.loss
        if total < best_loss:
            best_t, best_loss = t, total
    return best_t


def split_delta_loss(Y, start: int, split: int, stop: int, rank: int, config: DetectionConfig) -> float:
    """Loss decrease from splitting rows start..stop at `split`: split sum minus unsplit."""
    Y = ensure_matrix(Y)
    left = _fit_window(Y, start, split, rank, config, (CTX_DELTA, start, split))
    right = _fit_window(Y, split + 1, stop, rank, config, (CTX_DELTA, split + 1, stop))
    whole = _fit_window(Y, start, stop, rank, config, (CTX_DELTA, start, stop))
    return (left.loss + right.loss) - whole.loss


def detect_candidates(Y, rank: int, config: DetectionConfig, progress=None) -> CandidateSet:
    """Recursively harvest candidates; a branch stops when too short or when
    splitting no longer reduces loss."""
    Y = ensure_matrix(Y)
    progress = progress or _noop
    delta = config.mindist
    found: list[Candidate] = []

    def walk(start: int, stop: int) -> None:
        if stop - start + 1 < 2 * delta:
            return
        lo, hi = start + delta - 1, stop - delta
        q = binary_search_candidate(Y, lo, hi, rank, config, progress)
        d = split_delta_loss(Y, start, q, stop, rank, config)
        progress(f"Change Point At: {q} , Delta Loss: {d}")
        if d >= 0:
            return
        found.append(Candidate(q, d))
        walk(start, q)
        walk(q + 1, stop)

    walk(1, Y.T)
    return CandidateSet(tuple(sorted(found, key=lambda c: c.index)))


def _single_loss(X: np.ndarray, rank: int, seed: int, config: DetectionConfig) -> float:
    return nmf_fit_single(X, rank, seed, config.nmf_config(nruns=1)).loss


def _refit_losses(Y, boundaries: SegmentBoundaries, i: int, nreps: int, rank: int, config: DetectionConfig, n_jobs: int = 1) -> np.ndarray:
    Y = ensure_matrix(Y)
    ls, le = boundaries.left_block(i)
    rs, re = boundaries.right_block(i)
    if le - ls + 1 < 2 or re - rs + 1 < 2:
        raise DegenerateSegmentError(f"blocks {ls}:{le} / {rs}:{re} too short to refit")
    ZL, ZR = Y.rows(ls, le), Y.rows(rs, re)
    q = boundaries.boundaries[i]
    master = config.master_seed

    def one(j: int) -> float:
        left = _single_loss(ZL, rank, child_seed(master, CTX_REFIT, q, j, 0), config)
        right = _single_loss(ZR, rank, child_seed(master, CTX_REFIT, q, j, 1), config)
        return left + right

    if n_jobs == 1:
        return np.array([one(j) for j in range(nreps)])
    return np.array(Parallel(n_jobs=n_jobs)(delayed(one)(j) for j in range(nreps)))


def _reference_losses(Y, boundaries: SegmentBoundaries, i: int, nreps: int, rank: int, config: DetectionConfig, n_jobs: int = 1) -> np.ndarray:
    Y = ensure_matrix(Y)
    ls, le = boundaries.left_block(i)
    rs, re = boundaries.right_block(i)
    if le - ls + 1 < 2 or re - rs + 1 < 2:
        raise DegenerateSegmentError(f"blocks {ls}:{le} / {rs}:{re} too short to refit")
    Z = Y.rows(ls, re)
    split = le - ls + 1
    q = boundaries.boundaries[i]
    master = config.master_seed

    def one(j: int) -> float:
        perm = rng_from(child_seed(master, CTX_PERMUTE, q, j)).permutation(Z.shape[0])
        Zp = Z[perm]
        left = _single_loss(Zp[:split], rank, child_seed(master, CTX_PERMUTE, q, j, 0), config)
        right = _single_loss(Zp[split:], rank, child_seed(master, CTX_PERMUTE, q, j, 1), config)
        return left + right

    if n_jobs == 1:
        return np.array([one(j) for j in range(nreps)])
    return np.array(Parallel(n_jobs=n_jobs)(delayed(one)(j) for j in range(nreps)))


def refit_and_permute(Y, boundaries: SegmentBoundaries, i: int, nreps: int, rank: int, config: DetectionConfig, n_jobs: int = 1) -> LossDistributions:
    """Refit losses around candidate i and the reference from time-permuted data.

    Refit: nreps independent single-run fits to the left and right blocks,
    summed. Reference: same, after uniformly permuting the rows of the joined
    block and splitting at the same relative position.
    """
    refit = _refit_losses(Y, boundaries, i, nreps, rank, config, n_jobs)
    reference = _reference_losses(Y, boundaries, i, nreps, rank, config, n_jobs)
    return LossDistributions(refit=refit, reference=reference)


def _both_constant(a: np.ndarray, b: np.ndarray) -> bool:
    return np.ptp(a) == 0.0 and np.ptp(b) == 0.0


def stat_test(dist: LossDistributions, testtype: str = "welch_t") -> float:
    """One-sided p-value for H0: refit losses are not smaller than the reference.

    welch_t uses the unequal-variance t statistic with Welch-Satterthwaite
    degrees of freedom; wilcoxon is the two-sample rank test with the 'less'
    alternative (normal approximation with tie correction for n >= 20, exact
    otherwise); ks tests whether the refit CDF lies above the reference CDF.
    """
    if testtype not in TEST_TYPES:
        raise ParameterError(f"testtype must be one of {TEST_TYPES}")
    l, ref = dist.refit, dist.reference
    min_len = min(len(l), len(ref))
    if testtype == "ks":
        if min_len < 1:
            raise ParameterError("ks needs at least one observation per sample")
    elif min_len < 2:
        raise ParameterError(f"{testtype} needs at least two observations per sample")

    if _both_constant(l, ref):
        if l[0] == ref[0]:
            return 1.0  # no evidence either way; documented convention
        if testtype == "welch_t":
            return 0.0 if l[0] < ref[0] else 1.0

    if testtype == "welch_t":
        res = sps.ttest_ind(l, ref, equal_var=False, alternative="less")
        return float(res.pvalue)
    if testtype == "wilcoxon":
        method = "asymptotic" if min_len >= 20 else "exact"
        res = sps.mannwhitneyu(l, ref, alternative="less", method=method)
        return float(res.pvalue)
    res = sps.ks_2samp(l, ref, alternative="greater", method="auto")
    return float(res.pvalue)


def bh_adjust(pvals) -> np.ndarray:
    """Benjamini-Hochberg step-up adjusted p-values, original order preserved."""
    p = np.asarray(pvals, dtype=np.float64)
    if p.ndim != 1:
        raise ParameterError("pvals must be 1-D")
    if p.size == 0:
        return p.copy()
    if (p < 0).any() or (p > 1).any():
        raise ParameterError("p-values must lie in [0, 1]")
    m = p.size
    order = np.argsort(p, kind="stable")
    scaled = p[order] * (m / np.arange(1, m + 1))
    adjusted = np.minimum.accumulate(scaled[::-1])[::-1]
    np.minimum(adjusted, 1.0, out=adjusted)
    out = np.empty(m)
    out[order] = adjusted
    return out


def detect_cps(Y, config: DetectionConfig = DetectionConfig(), progress=None, n_jobs: int = 1) -> ChangePointReport:
    """Full pipeline: rank selection, candidate search, inference, adjustment."""
    Y = ensure_matrix(Y)
    progress = progress or _noop
    t0 = time.perf_counter()

    if config.rank is None:
        progress("Finding optimal rank")
        rank = opt_rank_search(Y, config.nmf_config(), n_jobs=n_jobs).rank
        progress(f"Optimal rank: {rank}")
    else:
        rank = config.rank

    candidates = detect_candidates(Y, rank, config, progress)
    if len(candidates) == 0:
        return ChangePointReport(rank, (), time.perf_counter() - t0, config.alpha, config.testtype)

    boundaries = SegmentBoundaries.from_candidates(candidates.indices, Y.T)
    refits = []
    for i, q in enumerate(candidates.indices, start=1):
        progress(f"Refitting split at {q}")
        refits.append(_refit_losses(Y, boundaries, i, config.nreps, rank, config, n_jobs))
    references = []
    for i, q in enumerate(candidates.indices, start=1):
        progress(f"Permuting split at {q}")
        references.append(_reference_losses(Y, boundaries, i, config.nreps, rank, config, n_jobs))

    pvals = [
        stat_test(LossDistributions(refit=r, reference=s), config.testtype)
        for r, s in zip(refits, references)
    ]
    adjusted = bh_adjust(pvals)
    rows = tuple(
        ChangePointRow(
            index=q,
            p_value=float(adj),
            significant=None if config.alpha is None else bool(adj < config.alpha),
        )
        for q, adj in zip(candidates.indices, adjusted)
    )
    return ChangePointReport(rank, rows, time.perf_counter() - t0, config.alpha, config.testtype)
