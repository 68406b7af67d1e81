import dataclasses
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from vrpower.errors import AdmissibilityError, DiagnosticError, ParameterError, ShapeMismatchError
from vrpower.experiments import (
    ExperimentConfig,
    TolerancePolicy,
    correlation,
    covariance_compare,
    dumps_report,
    empirical_moments,
    ks_to_normal,
    ratio_estimate,
    read_csv,
    read_report,
    result_report,
    run_experiment,
    sandwich_violations,
    spectrum_rank,
    write_csv,
)
from vrpower.geometry import Window, make_rng, sample_poisson, stream_seed


def cfg(**kw):
    base = dict(dim=2, t=30.0, delta=0.1, seq="1:0,1:1", reps=2, seed=3)
    base.update(kw)
    return ExperimentConfig(**base)


def test_config_validation_names_field():
    cases = [
        (dict(reps=1), "reps"),
        (dict(dim=0), "dim"),
        (dict(window="torus"), "window"),
        (dict(t=-1.0), "t"),
        (dict(delta=None), "delta/regime"),
        (dict(regime=(1.0, 0.5)), "delta/regime"),
        (dict(delta=3.0), "delta"),
        (dict(complex_kind="alpha"), "complex"),
    ]
    for kw, name in cases:
        with pytest.raises(ParameterError, match=name):
            cfg(**kw)
    with pytest.raises(AdmissibilityError):
        cfg(seq="3:1")


def test_smoke_two_reps():
    r = run_experiment(cfg(), compare=False)
    s = r.summaries["rips"]
    assert s.values.shape == (2, 2)
    assert np.all(np.isfinite(s.mean)) and np.all(np.isfinite(s.cov))
    assert r.failures == []


def test_deterministic_report():
    a = dumps_report(result_report(run_experiment(cfg(reps=60, complex_kind="both"))))
    b = dumps_report(result_report(run_experiment(cfg(reps=60, complex_kind="both"))))
    assert a == b


def test_workers_do_not_change_results():
    a = run_experiment(cfg(reps=12), compare=False)
    b = run_experiment(cfg(reps=12, workers=2), compare=False)
    assert np.array_equal(a.summaries["rips"].values, b.summaries["rips"].values)
    assert a.seeds == b.seeds == [stream_seed(3, r) for r in range(12)]


def test_failures_isolated(monkeypatch):
    import vrpower.experiments as ex

    real = ex.evaluate_sequence

    def flaky(cloud, *a, **k):
        if cloud.seed == stream_seed(3, 1):
            raise RuntimeError("boom")
        return real(cloud, *a, **k)

    monkeypatch.setattr(ex, "evaluate_sequence", flaky)
    r = run_experiment(cfg(reps=4), compare=False)
    assert r.failures == [{"rep_id": 1, "seed": stream_seed(3, 1), "error": "RuntimeError: boom"}]
    assert r.summaries["rips"].values.shape == (3, 2)
    assert not r.passed


def test_mean_of_edge_count_d1():
    c = ExperimentConfig(dim=1, t=200.0, delta=0.002, seq="1:0", reps=2000, seed=7)
    r = run_experiment(c)
    mean = [x for x in r.summaries["rips"].comparisons if x.name == "rips.mean[0]"][0]
    assert mean.predicted == pytest.approx(80.0)
    assert mean.passed


def test_empirical_moments_and_permutation_invariance():
    X = make_rng(1).normal(size=(500, 3))
    m, mse, C, cse = empirical_moments(X)
    np.testing.assert_allclose(C, np.cov(X.T), rtol=1e-12)
    assert np.array_equal(C, C.T)
    assert np.linalg.eigvalsh(C)[0] >= -1e-10 * np.trace(C)
    perm = make_rng(2).permutation(500)
    m2, _, C2, _ = empirical_moments(X[perm])
    np.testing.assert_allclose(m2, m, rtol=1e-12)
    np.testing.assert_allclose(C2, C, rtol=1e-12, atol=1e-15)


def test_decoupled_control_stream():
    c = cfg(dim=2, t=300.0, delta=0.08, seq="1:0", reps=400, seed=11)
    r = run_experiment(c, compare=False)
    x = r.summaries["rips"].values[:, 0]
    control = np.array([len(sample_poisson(Window.cube(2), 300.0, stream_seed(999, i)))
                        for i in range(400)], dtype=float)
    _, _, C, S = empirical_moments(np.column_stack([x, control]))
    assert abs(C[0, 1]) <= 3 * S[0, 1]


def test_ks_to_normal():
    x = make_rng(4).standard_normal(10_000)
    assert ks_to_normal(x) <= 0.02
    counts = make_rng(5).poisson(10_000, size=10_000)
    assert ks_to_normal(counts) <= 0.02
    with pytest.raises(DiagnosticError):
        ks_to_normal(np.ones(100))
    with pytest.raises(DiagnosticError):
        ks_to_normal(np.arange(10.0))
    assert 0.0 <= ks_to_normal(make_rng(6).exponential(size=200)) <= 1.0


def test_covariance_compare_policy():
    E = np.array([[2.0, 0.5], [0.5, 1.0]])
    assert all(c.passed for c in covariance_compare(E, E, np.zeros_like(E)))
    noisy = E + 0.01
    assert not any(c.passed for c in covariance_compare(noisy, E, np.zeros_like(E),
                                                        policy=TolerancePolicy(0.0, 0.0)))
    assert all(c.passed for c in covariance_compare(noisy, E, np.full_like(E, 0.01)))
    with pytest.raises(ShapeMismatchError):
        covariance_compare(E, E[:1], E)
    slack = covariance_compare([10.3], [10.0], [0.0], delta=0.02)[0]
    assert slack.tolerance == pytest.approx(0.4) and slack.passed


def test_spectrum_rank():
    assert spectrum_rank(np.eye(3)) == 3
    assert spectrum_rank(np.ones((3, 3))) == 1
    with pytest.raises(ParameterError):
        spectrum_rank(np.array([[1.0, 0.2], [0.0, 1.0]]))
    with pytest.raises(ShapeMismatchError):
        spectrum_rank(np.ones((2, 3)))


@settings(max_examples=50, deadline=None)
@given(st.integers(2, 5), st.integers(0, 10_000))
def test_spectrum_rank_bounds(n, seed):
    A = make_rng(seed).normal(size=(n, n + 2))
    C = correlation(A @ A.T)
    assert 1 <= spectrum_rank(C) <= n


def test_ratio_estimate():
    num = np.array([2.0, 4.0, 6.0])
    den = np.array([1.0, 2.0, 3.0])
    r, se = ratio_estimate(num, den)
    assert r == 2.0 and se == 0.0


def test_report_roundtrip_bytes(tmp_path):
    r = run_experiment(cfg(reps=5))
    text = dumps_report(result_report(r))
    path = tmp_path / "rep.json"
    path.write_text(text)
    assert dumps_report(read_report(str(path))) == text
    assert read_report(text)["config"]["seed"] == 3


def test_csv_rows():
    r = run_experiment(cfg(reps=3, complex_kind="both"), compare=False)
    text = write_csv(r)
    assert text.startswith("# config: ")
    rows = read_csv(text)
    assert len(rows) == 3 * 2 * 2
    assert list(rows[0]) == ["rep_id", "complex", "k", "alpha", "value", "f_k", "t", "delta", "seed"]
    assert {row["complex"] for row in rows} == {"rips", "cech"}
    for row in rows:
        if row["alpha"] == "0.0":
            assert float(row["value"]) == int(row["f_k"])


def test_regime_schedule_config():
    c = cfg(delta=None, regime=(1.0, 0.5), t=400.0)
    assert c.scale() == pytest.approx(0.05)
    assert c.regime_spec().mode == "thermodynamic"
    assert dataclasses.asdict(c)["regime"] == (1.0, 0.5)


def test_sandwich_violations_zero():
    rng = make_rng(8)
    for _ in range(5):
        P = rng.random((25, 2))
        assert sandwich_violations(P, float(rng.uniform(0.1, 0.5)), 3) == 0
    assert math.isfinite(sandwich_violations(sample_poisson(Window.ball(3), 40, 1), 0.3, 2))
