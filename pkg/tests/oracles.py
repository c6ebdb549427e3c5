"""Independent oracles the test suite checks library results against.

Everything here is deliberately brute force: enumeration, quadrature, and
direct transcriptions of definitions. None of it shares code with the
library paths it verifies.
"""
from __future__ import annotations

import itertools
import math

import numpy as np


def welch_stat_df(x, y) -> tuple[float, float]:
    """Welch t statistic and Welch-Satterthwaite degrees of freedom, by hand."""
    x = np.asarray(x, float)
    y = np.asarray(y, float)
    n, m = len(x), len(y)
    vx, vy = x.var(ddof=1), y.var(ddof=1)
    se2 = vx / n + vy / m
    t = (x.mean() - y.mean()) / math.sqrt(se2)
    df = se2**2 / ((vx / n) ** 2 / (n - 1) + (vy / m) ** 2 / (m - 1))
    return t, df


def t_cdf_quadrature(t: float, df: float) -> float:
    """Student-t CDF via direct quadrature of the density (mpmath)."""
    import mpmath as mp

    df_ = mp.mpf(df)
    norm = mp.gamma((df_ + 1) / 2) / (mp.sqrt(df_ * mp.pi) * mp.gamma(df_ / 2))

    def density(u):
        return norm * (1 + u**2 / df_) ** (-(df_ + 1) / 2)

    return float(mp.quad(density, [-mp.inf, mp.mpf(t)]))


def welch_p_less(x, y) -> float:
    """One-sided Welch p-value for H0: mean(x) >= mean(y), independent route."""
    t, df = welch_stat_df(x, y)
    return t_cdf_quadrature(t, df)


def mwu_p_less_enumeration(x, y) -> float:
    """Exact Mann-Whitney 'less' p-value by enumerating all group assignments."""
    pooled = np.concatenate([x, y])
    n = len(x)

    def u_stat(xs, ys):
        u = 0.0
        for a in xs:
            for b in ys:
                u += (a > b) + 0.5 * (a == b)
        return u

    u_obs = u_stat(np.asarray(x), np.asarray(y))
    hits = total = 0
    for comb in itertools.combinations(range(len(pooled)), n):
        mask = np.zeros(len(pooled), bool)
        mask[list(comb)] = True
        hits += u_stat(pooled[mask], pooled[~mask]) <= u_obs + 1e-12
        total += 1
    return hits / total


def ks_p_greater_enumeration(x, y) -> float:
    """Exact one-sided KS p-value (CDF of x above y) by enumeration."""
    pooled = np.concatenate([x, y])
    n = len(x)

    def dplus(xs, ys):
        pts = pooled
        fx = np.searchsorted(np.sort(xs), pts, side="right") / len(xs)
        fy = np.searchsorted(np.sort(ys), pts, side="right") / len(ys)
        return np.max(fx - fy)

    d_obs = dplus(np.asarray(x), np.asarray(y))
    hits = total = 0
    for comb in itertools.combinations(range(len(pooled)), n):
        mask = np.zeros(len(pooled), bool)
        mask[list(comb)] = True
        hits += dplus(pooled[mask], pooled[~mask]) >= d_obs - 1e-12
        total += 1
    return hits / total


def bh_stepup_bruteforce(pvals) -> np.ndarray:
    """Benjamini-Hochberg adjusted p-values straight from the definition:
    adjusted p for hypothesis i is min over j with p_j >= p_i (in sorted
    order, j at or after i) of m * p_(j) / rank(j), capped at 1."""
    p = np.asarray(pvals, float)
    m = len(p)
    order = np.argsort(p, kind="stable")
    adjusted = np.empty(m)
    for pos, idx in enumerate(order):
        candidates = [m * p[order[j]] / (j + 1) for j in range(pos, m)]
        adjusted[idx] = min(1.0, min(candidates))
    return adjusted


def bh_stepup_bruteforce_batch(P: np.ndarray) -> np.ndarray:
    """Vectorized transcription of the same definition for a batch of rows."""
    B, m = P.shape
    order = np.argsort(P, axis=1, kind="stable")
    sorted_p = np.take_along_axis(P, order, axis=1)
    scaled = sorted_p * (m / np.arange(1, m + 1))
    # min over j >= i: reverse cumulative minimum
    tail_min = np.minimum.accumulate(scaled[:, ::-1], axis=1)[:, ::-1]
    tail_min = np.minimum(tail_min, 1.0)
    out = np.empty_like(P)
    np.put_along_axis(out, order, tail_min, axis=1)
    return out


def best_two_partition_score(C: np.ndarray) -> tuple[float, np.ndarray]:
    """Exhaustive best 2-partition of a consensus matrix by within-minus-between
    mean consensus. Returns (score, labels)."""
    p = C.shape[0]
    iu = np.triu_indices(p, k=1)
    best_score, best_labels = -np.inf, None
    for bits in range(1, 2 ** (p - 1)):  # node 0 fixed in group 0; skip empty split
        labels = np.array([0] + [(bits >> i) & 1 for i in range(p - 1)])
        same = labels[iu[0]] == labels[iu[1]]
        if same.all() or (~same).all():
            continue
        score = C[iu][same].mean() - C[iu][~same].mean()
        if score > best_score:
            best_score, best_labels = score, labels
    return best_score, best_labels


def partition_to_adjacency(labels: np.ndarray) -> np.ndarray:
    A = (labels[:, None] == labels[None, :]).astype(int)
    np.fill_diagonal(A, 0)
    return A
