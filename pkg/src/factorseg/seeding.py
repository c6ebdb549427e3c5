"""Deterministic seed derivation.

Every stochastic step in the library draws from a generator whose seed is a
pure function of the user's master seed and a structural key describing the
step (context tag, data window, run index, ...). Results are therefore
bit-reproducible and independent of execution order, which makes parallel
restarts safe.
"""
from __future__ import annotations

import numpy as np

# Context tags, one per independent stream of randomness. Values are frozen:
# changing them changes every derived seed.
CTX_RUN = 1          # restart runs inside nmf_fit_best
CTX_RANK_PERMUTE = 2  # the fixed permutation used by opt_rank
CTX_RANK_FIT = 3     # per-rank fits inside opt_rank
CTX_SEARCH = 4       # segment fits inside the binary/grid candidate search
CTX_DELTA = 5        # split-vs-unsplit diagnostic fits
CTX_REFIT = 6        # refit repetitions
CTX_PERMUTE = 7      # permutation repetitions (shuffle + fits)
CTX_CONSENSUS = 8    # per-run fits inside consensus_matrix
CTX_SIMULATE = 9     # simulation draws and label assignments
CTX_MATRIX_PERMUTE = 10  # permute_matrix

_MASK64 = (1 << 64) - 1


def child_seed(master_seed: int, *key: int) -> int:
    """Derive a 64-bit seed from a master seed and a structural key."""
    ss = np.random.SeedSequence([int(master_seed) & _MASK64, *(int(k) & _MASK64 for k in key)])
    return int(ss.generate_state(1, np.uint64)[0])


def rng_from(seed: int) -> np.random.Generator:
    """Generator for a derived 64-bit seed."""
    return np.random.default_rng(int(seed) & _MASK64)
