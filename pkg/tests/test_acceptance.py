"""Acceptance suite: one test per criterion, printed pass/fail per line.

The heavy simulation criteria run the full pipeline at their stated scale
and are the slow part of the suite (tens of minutes on a small machine).
Where a criterion leaves protocol knobs open (fit tolerance, update cap,
dataset sizes for the null runs), the values frozen here were calibrated
once and are fixed; they are passed explicitly so reruns are deterministic.

Run with:  pytest tests/test_acceptance.py -v -s
"""
import itertools
import json
import math
from pathlib import Path

import numpy as np
import pytest
from joblib import Parallel, delayed

from factorseg import (
    DetectionConfig,
    LossDistributions,
    NmfConfig,
    SimulationSpec,
    adjacency_from_clustering,
    adjacency_from_threshold,
    bh_adjust,
    binary_search_candidate,
    consensus_matrix,
    detect_cps,
    est_net,
    grid_search_candidate,
    kld_loss,
    nmf_fit_best,
    nmf_fit_single,
    segments_between,
    simulate_dataset,
    stat_test,
)
from factorseg.network import ConsensusMatrix
from factorseg.nmf import run_seeds

from oracles import (
    best_two_partition_score,
    bh_stepup_bruteforce,
    ks_p_greater_enumeration,
    mwu_p_less_enumeration,
    partition_to_adjacency,
    welch_p_less,
    welch_stat_df,
)

N_JOBS = 2

# Fit protocol for the heavy simulation criteria (calibrated once, frozen).
SIM_TOL = 1e-5
SIM_CAP = 800


def report(name: str, ok: bool, detail: str) -> None:
    print(f"[{'PASS' if ok else 'FAIL'}] {name}: {detail}")


def _near(x: int, t: int, w: int = 10) -> bool:
    return abs(x - t) <= w


# --------------------------------------------------------------------------
# Criterion 1: two-change simulation pattern at reduced scale


def _criterion1_one(seed: int):
    spec = SimulationSpec(
        p=40, T=300, changepoints=(100, 200), clusters=2,
        within_corr=0.75, between_corr=0.20, master_seed=seed,
    )
    sim = simulate_dataset(spec)
    cfg = DetectionConfig(
        mindist=50, nruns=20, nreps=100, alpha=0.01, rank=3,
        master_seed=seed, tolerance=SIM_TOL, max_iterations=SIM_CAP,
    )
    rep = detect_cps(sim.data, cfg)
    significant = [r.index for r in rep.rows if r.significant]
    candidates = [r.index for r in rep.rows]
    return significant, candidates


def test_criterion_1_two_change_detection_pattern():
    """20 datasets (p=40, T=300, changes at 100/200): TP10 >= 0.90 per point,
    FP10 <= 0.10 per dataset; candidates land within +/-10 in >= 18/20."""
    true_points = (100, 200)
    results = Parallel(n_jobs=N_JOBS)(delayed(_criterion1_one)(s) for s in range(20))

    tp = {t: 0 for t in true_points}
    cand_hits = {t: 0 for t in true_points}
    fp_total = 0
    for significant, candidates in results:
        for t in true_points:
            tp[t] += any(_near(x, t) for x in significant)
            cand_hits[t] += any(_near(x, t) for x in candidates)
        fp_total += sum(1 for x in significant if not any(_near(x, t) for t in true_points))

    tp100, tp200 = tp[100] / 20, tp[200] / 20
    fp_rate = fp_total / 20
    ok = tp100 >= 0.90 and tp200 >= 0.90 and fp_rate <= 0.10
    report(
        "criterion 1 (two-change pattern)", ok,
        f"TP10@100={tp100:.2f} TP10@200={tp200:.2f} FP10/dataset={fp_rate:.2f}",
    )
    assert tp100 >= 0.90 and tp200 >= 0.90
    assert fp_rate <= 0.10

    cand_ok = cand_hits[100] >= 18 and cand_hits[200] >= 18
    report(
        "criterion 1 (pre-inference candidates)", cand_ok,
        f"candidates within +/-10: {cand_hits[100]}/20 at t=100, {cand_hits[200]}/20 at t=200",
    )
    assert cand_ok


# --------------------------------------------------------------------------
# Criterion 2: binary search vs exhaustive grid


def test_criterion_2_binary_vs_grid():
    """10 instances (p=10, T=60, change at 30): candidates agree within +/-5
    in >= 8/10; binary search evaluates <= ceil(log2(T)) + 2 splits vs
    T - 2*delta + 1 for the grid."""
    delta = 20
    agree = 0
    max_evals = 0
    grid_evals_expected = 60 - 2 * delta + 1
    for seed in range(10):
        sim = simulate_dataset(SimulationSpec(
            p=10, T=60, changepoints=(30,), clusters=2, master_seed=seed,
        ))
        cfg = DetectionConfig(
            mindist=delta, nruns=10, master_seed=seed, tolerance=SIM_TOL, max_iterations=SIM_CAP,
        )
        intervals: list[str] = []
        b = binary_search_candidate(sim.data, 20, 40, rank=2, config=cfg, progress=intervals.append)
        splits: list[str] = []
        g = grid_search_candidate(sim.data, 20, 40, rank=2, config=cfg, progress=splits.append)
        agree += abs(b - g) <= 5
        max_evals = max(max_evals, len(intervals))
        assert len(splits) == grid_evals_expected

    bound = math.ceil(math.log2(60)) + 2
    ok = agree >= 8 and max_evals <= bound
    report(
        "criterion 2 (binary vs grid)", ok,
        f"agreement {agree}/10; binary evals <= {max_evals} (bound {bound}) "
        f"vs {grid_evals_expected} grid evals",
    )
    assert agree >= 8
    assert max_evals <= bound


# --------------------------------------------------------------------------
# Criterion 3: sensitivity to the number of restarts


def _criterion3_one(seed: int, nruns: int) -> int:
    spec = SimulationSpec(
        p=40, T=200, changepoints=(100,), clusters=2,
        within_corr=0.75, between_corr=0.20, master_seed=seed,
    )
    sim = simulate_dataset(spec)
    cfg = DetectionConfig(
        mindist=35, nruns=nruns, nreps=100, alpha=0.01, rank=3,
        master_seed=seed, tolerance=SIM_TOL, max_iterations=SIM_CAP,
    )
    rep = detect_cps(sim.data, cfg)
    significant = [r.index for r in rep.rows if r.significant]
    return int(any(_near(x, 100) for x in significant))


def test_criterion_3_nruns_sensitivity_trend():
    """10 instances of the single-change dataset at p=40: TP10 improves by
    >= 0.2 from nruns=2 to nruns=25 and plateaus (within 0.1) at nruns=50."""
    rates = {}
    for nruns in (2, 25, 50):
        hits = Parallel(n_jobs=N_JOBS)(delayed(_criterion3_one)(s, nruns) for s in range(10))
        rates[nruns] = sum(hits) / 10
    gain = rates[25] - rates[2]
    plateau = abs(rates[50] - rates[25])
    ok = gain >= 0.2 and plateau <= 0.1
    report(
        "criterion 3 (nruns sensitivity)", ok,
        f"TP10: nruns=2 -> {rates[2]:.2f}, nruns=25 -> {rates[25]:.2f}, "
        f"nruns=50 -> {rates[50]:.2f} (gain {gain:.2f}, plateau gap {plateau:.2f})",
    )
    assert gain >= 0.2
    assert plateau <= 0.1


# --------------------------------------------------------------------------
# Criterion 4: null calibration


def _criterion4_one(seed: int) -> list[int]:
    spec = SimulationSpec(p=20, T=200, changepoints=(), clusters=2, master_seed=seed)
    sim = simulate_dataset(spec)
    cfg = DetectionConfig(
        mindist=35, nruns=20, nreps=100, alpha=0.001, rank=3,
        master_seed=seed, tolerance=SIM_TOL, max_iterations=SIM_CAP,
    )
    rep = detect_cps(sim.data, cfg)
    return [r.index for r in rep.rows if r.significant]


def test_criterion_4_null_calibration():
    """10 stationary simulations: zero significant points at alpha=0.001 in
    at least 9 of 10 runs."""
    sigs = Parallel(n_jobs=N_JOBS)(delayed(_criterion4_one)(s) for s in range(10))
    clean = sum(1 for s in sigs if not s)
    ok = clean >= 9
    report("criterion 4 (null calibration)", ok, f"{clean}/10 runs with no significant points")
    assert clean >= 9


# --------------------------------------------------------------------------
# Criterion 5: factorization property suite


def test_criterion_5_nmf_properties(rng):
    """Monotone loss on 100 random instances; zero loss iff exact product;
    best-of-runs is the minimum; bit-identical across 1/4/8 workers."""
    worst_increase = -np.inf
    for i in range(100):
        X = rng.random((20, 10)) + 0.05
        fit = nmf_fit_single(X, 3, seed=1000 + i)
        worst_increase = max(worst_increase, float(np.diff(fit.loss_trace).max(initial=-np.inf)))
    mono_ok = worst_increase <= 1e-10
    report("criterion 5 (monotone loss x100)", mono_ok, f"worst increase {worst_increase:.3e}")
    assert mono_ok

    W = rng.random((8, 2)) + 0.1
    H = rng.random((2, 6)) + 0.1
    X = W @ H
    exact = kld_loss(X, W, H)
    perturbed = kld_loss(X + 0.03, W, H)
    zero_ok = exact < 1e-9 and perturbed > 1e-5
    report("criterion 5 (zero iff exact)", zero_ok, f"exact={exact:.2e} perturbed={perturbed:.2e}")
    assert zero_ok

    X = rng.random((18, 12)) + 0.1
    cfg = NmfConfig(nruns=8, master_seed=31)
    best = nmf_fit_best(X, 3, cfg)
    run_losses = [nmf_fit_single(X, 3, s, cfg).loss for s in run_seeds(31, 8)]
    best_ok = best.loss == min(run_losses) and all(best.loss <= l for l in run_losses)
    report("criterion 5 (best of runs)", best_ok, f"best={best.loss:.6f} runs min={min(run_losses):.6f}")
    assert best_ok

    fits = {n: nmf_fit_best(X, 3, cfg, n_jobs=n) for n in (1, 4, 8)}
    ident = all(
        fits[n].loss == fits[1].loss
        and fits[n].seed == fits[1].seed
        and np.array_equal(fits[n].w, fits[1].w)
        and np.array_equal(fits[n].h, fits[1].h)
        for n in (4, 8)
    )
    report("criterion 5 (bit-reproducible across workers)", ident, "n_jobs in {1,4,8} identical")
    assert ident


# --------------------------------------------------------------------------
# Criterion 6: statistics oracle suite


def _sorted_grid_multisets(length: int) -> np.ndarray:
    grid = np.arange(1, 100) / 100.0
    combos = np.fromiter(
        itertools.chain.from_iterable(itertools.combinations_with_replacement(range(99), length)),
        dtype=np.int16,
    ).reshape(-1, length)
    return grid[combos]


def _bh_formula_batch(P: np.ndarray) -> np.ndarray:
    """Reverse-cummin transcription of the adjustment formula (rows sorted)."""
    m = P.shape[1]
    scaled = P * (m / np.arange(1, m + 1))
    out = np.minimum.accumulate(scaled[:, ::-1], axis=1)[:, ::-1]
    return np.minimum(out, 1.0)


def _bh_decision_rule_batch(P: np.ndarray) -> np.ndarray:
    """Independent oracle: the adjusted p-value of position i is the smallest
    level alpha at which the step-up decision rule rejects hypothesis i.
    Candidate levels are the m values m*p_(j)/(j+1); for each, the rule
    rejects positions 1..k where k is the largest j with p_(j) <= (j+1)a/m."""
    B, m = P.shape
    ranks = np.arange(1, m + 1)
    alphas = P * (m / ranks)  # (B, m) candidate levels
    adjusted = np.full((B, m), np.inf)
    for c in range(m):
        a = alphas[:, c][:, None]  # (B, 1)
        # 1e-9 slack absorbs float rounding in (j+1)*a/m; grid-derived
        # comparands are never closer than ~3e-5
        passes = P <= (ranks * a) / m + 1e-9  # (B, m)
        # largest passing index, -1 if none
        k = np.where(passes.any(axis=1), m - 1 - np.argmax(passes[:, ::-1], axis=1), -1)
        rejected = np.arange(m)[None, :] <= k[:, None]
        candidate = np.where(rejected, np.broadcast_to(a, (B, m)), np.inf)
        adjusted = np.minimum(adjusted, candidate)
    return np.minimum(adjusted, 1.0)


def test_criterion_6_statistics_oracles(rng):
    """BH matches the step-up decision rule exhaustively on the 0.01..0.99
    grid for lengths <= 4 (all sorted multisets; order handled separately),
    and the library routine matches the literal brute force on samples;
    Welch/KS/rank tests match their independent oracles."""
    total = 0
    for length in (1, 2, 3, 4):
        P = _sorted_grid_multisets(length)
        total += len(P)
        formula = _bh_formula_batch(P)
        decision = _bh_decision_rule_batch(P)
        assert np.allclose(formula, decision, atol=1e-12), f"length {length} mismatch"
        # bind the library path to the verified formula on a slice
        sample_idx = rng.choice(len(P), size=min(400, len(P)), replace=False)
        for i in sample_idx:
            assert bh_adjust(P[i]) == pytest.approx(formula[i], abs=1e-12)
    report("criterion 6 (BH exhaustive)", True, f"{total} sorted grid vectors verified")

    for _ in range(300):
        length = int(rng.integers(1, 5))
        p = rng.integers(1, 100, size=length) / 100.0
        assert bh_adjust(p) == pytest.approx(bh_stepup_bruteforce(p), abs=1e-12)
    report("criterion 6 (BH library vs literal brute force)", True, "300 random grid vectors")

    t, df = welch_stat_df([1, 2, 3], [4, 5, 6])
    p_lib = stat_test(
        LossDistributions(refit=np.array([1.0, 2, 3]), reference=np.array([4.0, 5, 6])), "welch_t"
    )
    p_oracle = welch_p_less([1, 2, 3], [4, 5, 6])
    welch_ok = (
        abs(t - -3.674) < 1e-3 and abs(df - 4.0) < 1e-9
        and abs(p_lib - 0.0106) < 1e-3 and abs(p_lib - p_oracle) < 1e-3
    )
    report(
        "criterion 6 (Welch hand case)", welch_ok,
        f"t={t:.4f} df={df:.1f} p={p_lib:.6f} oracle={p_oracle:.6f}",
    )
    assert welch_ok

    worst_ks = worst_mwu = 0.0
    for trial in range(8):
        r = np.random.default_rng(trial)
        x = np.round(r.gamma(4.0, 1.0, 6), 3)
        y = np.round(r.gamma(5.0, 1.0, 6), 3)
        d = LossDistributions(refit=x, reference=y)
        worst_mwu = max(worst_mwu, abs(stat_test(d, "wilcoxon") - mwu_p_less_enumeration(x, y)))
        worst_ks = max(worst_ks, abs(stat_test(d, "ks") - ks_p_greater_enumeration(x, y)))
    enum_ok = worst_mwu <= 1e-6 and worst_ks <= 1e-6
    report(
        "criterion 6 (exact tests vs enumeration)", enum_ok,
        f"max |diff|: rank {worst_mwu:.2e}, ks {worst_ks:.2e}",
    )
    assert enum_ok


# --------------------------------------------------------------------------
# Criterion 7: network suite


def test_criterion_7_network_suite(rng):
    """Consensus invariants on 50 random segments; threshold nesting over a
    lambda grid; planted two-block recovery vs the exhaustive-partition
    oracle at p=12; exact segment layout for changepoints {35, 70}, T=197."""
    nmf = NmfConfig(nruns=3, max_iterations=300, tolerance=1e-4, master_seed=0)
    for i in range(50):
        T = int(rng.integers(20, 50))
        p = int(rng.integers(4, 12))
        seg = 100 + 2 * rng.standard_normal((T, p))
        C = consensus_matrix(seg, rank=2, nruns=4, master_seed=i, nmf=nmf)
        assert np.allclose(C.values, C.values.T)
        assert np.allclose(np.diag(C.values), 1.0)
        assert (C.values >= 0).all() and (C.values <= 1).all()
    report("criterion 7 (consensus invariants)", True, "50 random segments")

    sim = simulate_dataset(SimulationSpec(p=12, T=80, clusters=2, master_seed=5))
    C = consensus_matrix(sim.data, rank=2, nruns=20, master_seed=3, nmf=nmf)
    prev = None
    for lam in np.arange(0.05, 1.0, 0.05):
        edges = set(adjacency_from_threshold(C, float(lam)).edges())
        if prev is not None:
            assert edges <= prev
        prev = edges
    report("criterion 7 (threshold nesting)", True, "19-point lambda grid")

    labels = np.array([0] * 6 + [1] * 6)
    base = np.where(labels[:, None] == labels[None, :], 0.9, 0.1)
    noise = rng.uniform(-0.05, 0.05, size=(12, 12))
    noise = (noise + noise.T) / 2
    Cp = np.clip(base + noise, 0, 1)
    np.fill_diagonal(Cp, 1.0)
    planted = ConsensusMatrix(values=Cp, nruns_used=1)
    A = adjacency_from_clustering(planted, 2)
    _, oracle_labels = best_two_partition_score(Cp)
    block_ok = np.array_equal(A.values, partition_to_adjacency(oracle_labels))
    report("criterion 7 (two-block vs exhaustive oracle)", block_ok, "p=12, 2048 partitions")
    assert block_ok

    segs = segments_between([35, 70], 197)
    seg_ok = segs == [(1, 35), (36, 70), (71, 197)]
    report("criterion 7 (segment layout)", seg_ok, f"{segs}")
    assert seg_ok

    sim197 = simulate_dataset(SimulationSpec(p=8, T=197, changepoints=(35, 70), master_seed=2))
    nets = est_net(sim197.data, lambda_spec=0.5, rank=2, nruns=3, changepoints=[35, 70], nmf=nmf)
    assert len(nets) == 3
    report("criterion 7 (est_net three segments)", True, "changepoints {35, 70}, T=197")


# --------------------------------------------------------------------------
# Criterion 8: reported real-data outputs are documentation fixtures only


def test_criterion_8_reference_fixtures_are_documentation():
    """The published real-data outputs ship as fixtures for documentation;
    nothing in the suite claims to reproduce them (original data and RNG
    stream are unavailable)."""
    fixture = Path(__file__).parent / "fixtures" / "reference_outputs.json"
    doc = json.loads(fixture.read_text())
    assert doc["fmri_resting_state"]["candidates"] == [35, 70, 136]
    assert doc["fmri_resting_state"]["significant_at_0.001"] == [35, 70]
    assert doc["sp500_log_returns"]["significant_points"] == [115, 460, 560, 660]
    assert doc["fmri_resting_state"]["reproducible"] is False
    assert doc["sp500_log_returns"]["reproducible"] is False
    report(
        "criterion 8 (documentation fixtures)", True,
        "reference outputs present, marked non-reproducible",
    )
