"""Acceptance criteria, one test each, each printing a single PASS/FAIL line.

All tolerances, sample sizes and seeds are fixed here in advance.
"""

import math
import time

import numpy as np
import pytest

from oracles import brute_cech_faces, brute_rips_faces
from vrpower.asymptotics import (
    covariance_matrix,
    expected_functional,
    family_sum,
)
from vrpower.complexes import build_neighbor_graph, enumerate_cech_faces, enumerate_rips_faces
from vrpower.experiments import (
    ExperimentConfig,
    correlation,
    covariance_compare,
    ks_to_normal,
    ratio_estimate,
    run_experiment,
    spectrum_rank,
)
from vrpower.geometry import make_rng, unit_ball_volume
from vrpower.moments import MomentTable, build_table, estimate_mu, moment_matrix, sample_rips_volumes

pytestmark = pytest.mark.slow

SE_MULT = 3.0
BIAS_SLACK = 2.0  # times delta, relative to the prediction

C1_CLOUDS, C1_NMAX, C1_KMAX, C1_SECONDS = 50, 25, 3, 30.0
C2_CLOUDS, C2_NMAX, C2_SECONDS = 100, 40, 30.0
C3_SAMPLES, C3_SECONDS = 1_000_000, 60.0
C4_T, C4_REPS, C4_SECONDS = 2000.0, 500, 120.0
C5_T, C5_DELTA, C5_REPS, C5_SECONDS = 500.0, 0.002, 5000, 180.0
C6_T, C6_C, C6_REPS, C6_SECONDS = 20000.0, 0.01, 3000, 180.0
C7_T, C7_C, C7_REPS, C7_SECONDS, C7_MIN_CORR = 5000.0, 50.0, 1000, 300.0, 0.9
C8_SAMPLES, C8_SECONDS = 1_000_000, 60.0
C9_TS, C9_REPS, C9_KS_MAX, C9_MIN_DROP, C9_SECONDS = (250.0, 1000.0, 4000.0), 2000, 0.05, 0.25, 600.0
C10_SAMPLES, C10_SECONDS = 100_000, 60.0
C11_T, C11_REPS, C11_SECONDS = 2000.0, 200, 120.0

SEED = 20240607


def report(capsys, number, title, ok, detail, seconds, limit):
    ok = bool(ok) and seconds < limit
    with capsys.disabled():
        print(f"\n[{'PASS' if ok else 'FAIL'}] criterion {number:>2} {title}: {detail} "
              f"({seconds:.1f} s, limit {limit:.0f} s)")
    return ok


def test_c01_oracle_equivalence(capsys):
    start = time.perf_counter()
    rng = make_rng([SEED, 1])
    mismatches = 0
    for _ in range(C1_CLOUDS):
        d = int(rng.integers(1, 4))
        n = int(rng.integers(2, C1_NMAX + 1))
        P = rng.random((n, d))
        delta = float(rng.uniform(0.1, 0.7))
        g = build_neighbor_graph(P, delta)
        rips = [s.as_set() for s in enumerate_rips_faces(g, C1_KMAX)]
        cech = [s.as_set() for s in enumerate_cech_faces(g, delta, C1_KMAX)]
        br = brute_rips_faces(P, delta, C1_KMAX)
        bc = brute_cech_faces(P, delta, C1_KMAX)
        mismatches += sum(len(a ^ b) for a, b in zip(rips, br))
        mismatches += sum(len(a ^ b) for a, b in zip(cech, bc))
    ok = report(capsys, 1, "oracle equivalence", mismatches == 0, f"{mismatches} mismatched faces",
                time.perf_counter() - start, C1_SECONDS)
    assert ok


def test_c02_sandwich_inclusion(capsys):
    start = time.perf_counter()
    rng = make_rng([SEED, 2])
    s = math.sqrt(4 / 3)
    violations = 0
    for _ in range(C2_CLOUDS):
        n = int(rng.integers(2, C2_NMAX + 1))
        P = rng.random((n, 2))
        delta = float(rng.uniform(0.05, 0.5))
        small = [x.as_set() for x in enumerate_cech_faces(P, delta, 3)]
        rips = [x.as_set() for x in enumerate_rips_faces(build_neighbor_graph(P, delta), 3)]
        big = [x.as_set() for x in enumerate_cech_faces(P, s * delta, 3)]
        violations += sum(len(a - b) + len(b - c) for a, b, c in zip(small, rips, big))
    ok = report(capsys, 2, "sandwich inclusion", violations == 0, f"{violations} violations",
                time.perf_counter() - start, C2_SECONDS)
    assert ok


def test_c03_analytic_constants(capsys):
    start = time.perf_counter()
    cases = []
    for d in (1, 2, 3):
        k = unit_ball_volume(d)
        cases.append((f"mu_1^0 d={d}", estimate_mu(1, 0.0, d, C3_SAMPLES, SEED + d), k))
        cases.append((f"mu_1^1 d={d}", estimate_mu(1, 1.0, d, C3_SAMPLES, SEED + 10 + d), d * k / (d + 1)))
    cases.append(("mu_2^0 d=1", estimate_mu(2, 0.0, 1, C3_SAMPLES, SEED + 20), 3.0))
    bad = [name for name, e, exact in cases if abs(e.value - exact) > SE_MULT * e.std_error]
    worst = max(abs(e.value - exact) / e.std_error if e.std_error else
                (0.0 if e.value == exact else math.inf) for _, e, exact in cases)
    ok = report(capsys, 3, "analytic constants", not bad,
                f"{len(cases) - len(bad)}/{len(cases)} within 3 SE (worst {worst:.2f} SE)",
                time.perf_counter() - start, C3_SECONDS)
    assert ok


def test_c04_expectation(capsys):
    start = time.perf_counter()
    cfg = ExperimentConfig(dim=2, t=C4_T, regime=(1.0, 0.5), seq="1:0", reps=C4_REPS, seed=SEED + 4)
    res = run_experiment(cfg, table=MomentTable())
    s = res.summaries["rips"]
    delta = cfg.scale()
    pred = expected_functional(C4_T, delta, 1, 0.0, MomentTable(), 2)
    cmp = covariance_compare(s.mean, [pred], s.mean_se, None,
                             cfg.policy, delta, "mean")[0]
    ok = report(capsys, 4, "expectation", cmp.passed and not res.failures,
                f"mean f_1 {cmp.empirical:.1f} vs {pred:.1f}, gap {cmp.gap:.1f} <= tol {cmp.tolerance:.1f}",
                time.perf_counter() - start, C4_SECONDS)
    assert ok


def test_c05_covariance(capsys):
    start = time.perf_counter()
    cfg = ExperimentConfig(dim=1, t=C5_T, delta=C5_DELTA, seq="1:0,1:1", reps=C5_REPS, seed=SEED + 5)
    table = MomentTable()  # every constant needed here is closed-form in d=1
    res = run_experiment(cfg, table=table)
    s = res.summaries["rips"]
    pred = covariance_matrix(C5_T, C5_DELTA, cfg.sequence, table, 1)
    cmps = covariance_compare(s.cov, pred.matrix, s.cov_se, pred.std_errors, cfg.policy, C5_DELTA, "cov")
    worst = max(cmps, key=lambda c: c.gap / c.tolerance)
    ok = report(capsys, 5, "covariance", all(c.passed for c in cmps) and not res.failures,
                f"{sum(c.passed for c in cmps)}/{len(cmps)} entries within tol; worst {worst.name} "
                f"{worst.empirical:.4g} vs {worst.predicted:.4g} (tol {worst.tolerance:.3g})",
                time.perf_counter() - start, C5_SECONDS)
    assert ok


def test_c06_sparse_decorrelation(capsys):
    start = time.perf_counter()
    delta = math.sqrt(C6_C / C6_T)
    cfg = ExperimentConfig(dim=2, t=C6_T, delta=delta, seq="1:0,2:0", reps=C6_REPS, seed=SEED + 6)
    res = run_experiment(cfg, compare=False)
    corr = correlation(res.summaries["rips"].cov)[0, 1]
    bound = 0.1 + 3 / math.sqrt(C6_REPS)
    ok = report(capsys, 6, "sparse decorrelation", abs(corr) <= bound and not res.failures,
                f"|corr| {abs(corr):.3f} vs bound {bound:.3f}",
                time.perf_counter() - start, C6_SECONDS)
    assert ok


def test_c07_dense_rank_collapse(capsys):
    start = time.perf_counter()
    delta = math.sqrt(C7_C / C7_T)
    cfg = ExperimentConfig(dim=2, t=C7_T, delta=delta, seq="1:0,2:0", reps=C7_REPS, seed=SEED + 7)
    res = run_experiment(cfg, compare=False)
    C = correlation(res.summaries["rips"].cov)
    rank = spectrum_rank(C)
    ok = report(capsys, 7, "dense rank collapse", C[0, 1] >= C7_MIN_CORR and rank == 1 and not res.failures,
                f"corr {C[0, 1]:.4f} (>= {C7_MIN_CORR}), spectrum rank {rank}",
                time.perf_counter() - start, C7_SECONDS)
    assert ok


def test_c08_c_equals_one_identity(capsys):
    start = time.perf_counter()
    seq = "1:0,2:0"
    t1 = build_table([(1, 0.0), (2, 0.0)], 2, n_samples=C8_SAMPLES, seed=SEED + 81)
    t2 = build_table([(1, 0.0), (2, 0.0)], 2, n_samples=C8_SAMPLES, seed=SEED + 82)
    lo, lo_se, _ = family_sum("lower", seq, 1.0, t1, 2)
    hi, hi_se, _ = family_sum("upper", seq, 1.0, t2, 2)
    tol = SE_MULT * np.hypot(lo_se, hi_se)
    gap = np.abs(lo - hi)
    ok = report(capsys, 8, "c=1 matrix identity", np.all(gap <= tol),
                f"max gap/tol {np.max(gap / np.where(tol > 0, tol, np.inf)):.2f} "
                f"(independent tables; same-table gap {np.max(np.abs(lo - family_sum('upper', seq, 1.0, t1, 2)[0])):.1e})",
                time.perf_counter() - start, C8_SECONDS)
    assert ok


def test_c09_univariate_clt(capsys):
    start = time.perf_counter()
    ks = {}
    failures = 0
    for t in C9_TS:
        cfg = ExperimentConfig(dim=2, t=t, regime=(1.0, 0.5), seq="1:1", reps=C9_REPS, seed=SEED + 9)
        res = run_experiment(cfg, compare=False)
        failures += len(res.failures)
        ks[t] = ks_to_normal(res.summaries["rips"].values[:, 0])
    lo, mid, hi = C9_TS
    drop = 1 - ks[hi] / ks[lo]
    ok = report(capsys, 9, "univariate CLT",
                ks[mid] <= C9_KS_MAX and drop >= C9_MIN_DROP and failures == 0,
                f"KS t={lo:g}: {ks[lo]:.4f}, t={mid:g}: {ks[mid]:.4f} (<= {C9_KS_MAX}), "
                f"t={hi:g}: {ks[hi]:.4f}; decrease {100 * drop:.0f}% (need >= {100 * C9_MIN_DROP:.0f}%)",
                time.perf_counter() - start, C9_SECONDS)
    assert ok


def test_c10_moment_matrix_full_rank(capsys):
    start = time.perf_counter()
    vols = sample_rips_volumes(2, 2, C10_SAMPLES, SEED + 10)
    M = moment_matrix(vols, [0.0, 1.0, 2.0])
    ok = report(capsys, 10, "moment matrix", M.min_eigenvalue > 0 and M.rank == 3,
                f"min eigenvalue {M.min_eigenvalue:.3e}, rank {M.rank} "
                f"(MC-scaled rank {M.mc_rank})",
                time.perf_counter() - start, C10_SECONDS)
    assert ok


def test_c11_typical_simplex_moment(capsys):
    start = time.perf_counter()
    cfg = ExperimentConfig(dim=2, t=C11_T, regime=(1.0, 0.5), seq="1:0,1:1", reps=C11_REPS, seed=SEED + 11)
    res = run_experiment(cfg, compare=False)
    delta = cfg.scale()
    vals = res.summaries["rips"].values
    r, se = ratio_estimate(vals[:, 1], vals[:, 0])
    est, est_se = r / delta, se / delta
    target = 2.0 / 3.0
    tol = SE_MULT * est_se + BIAS_SLACK * delta * target
    ok = report(capsys, 11, "typical-simplex moment", abs(est - target) <= tol and not res.failures,
                f"typical edge length / delta {est:.4f} vs {target:.4f} (tol {tol:.4f})",
                time.perf_counter() - start, C11_SECONDS)
    assert ok
