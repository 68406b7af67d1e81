"""Replication engine, statistical diagnostics and report I/O."""

from __future__ import annotations

import csv
import io
import json
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy import stats

from .asymptotics import (
    RegimeSpec,
    clt_rate_bound,
    covariance_matrix,
    expected_functional,
    expected_functional_se,
    sandwich_factor,
)
from .complexes import build_neighbor_graph, enumerate_cech_faces, enumerate_rips_faces
from .errors import (
    DiagnosticError,
    ParameterError,
    ShapeMismatchError,
    TableMissError,
)
from .functionals import AdmissibleSequence, evaluate_sequence
from .geometry import Window, sample_poisson, stream_seed
from .moments import MomentTable, build_table

CSV_FIELDS = ("rep_id", "complex", "k", "alpha", "value", "f_k", "t", "delta", "seed")


@dataclass(frozen=True)
class TolerancePolicy:
    se_multiplier: float = 3.0
    bias_slack: float = 2.0  # times delta, relative to the prediction


@dataclass(frozen=True)
class ExperimentConfig:
    dim: int
    t: float
    seq: str
    reps: int
    seed: int = 0
    window: str = "cube"
    delta: float | None = None
    regime: tuple[float, float] | None = None
    complex_kind: str = "rips"
    moments_cache: str | None = None
    moment_samples: int = 1_000_000
    policy: TolerancePolicy = field(default_factory=TolerancePolicy)
    standardize: str = "empirical"
    workers: int = 1

    def __post_init__(self):
        if isinstance(self.policy, dict):
            object.__setattr__(self, "policy", TolerancePolicy(**self.policy))
        if self.regime is not None:
            object.__setattr__(self, "regime", tuple(float(x) for x in self.regime))
        self.validate()

    @property
    def sequence(self) -> AdmissibleSequence:
        return AdmissibleSequence.parse(self.seq)

    @property
    def kinds(self) -> tuple[str, ...]:
        return ("rips", "cech") if self.complex_kind == "both" else (self.complex_kind,)

    def window_obj(self) -> Window:
        return Window(self.window, self.dim)

    def scale(self) -> float:
        if self.delta is not None:
            return float(self.delta)
        a, beta = self.regime
        return a * self.t ** (-beta)

    def regime_spec(self) -> RegimeSpec | None:
        if self.regime is None:
            return None
        return RegimeSpec.from_schedule(self.regime[0], self.regime[1], self.dim)

    def validate(self) -> None:
        if int(self.dim) != self.dim or self.dim < 1:
            raise ParameterError(f"dim: must be a positive integer, got {self.dim}")
        if self.window not in ("cube", "ball"):
            raise ParameterError(f"window: must be cube or ball, got {self.window!r}")
        if not self.t > 0:
            raise ParameterError(f"t: must be positive, got {self.t}")
        if (self.delta is None) == (self.regime is None):
            raise ParameterError("delta/regime: give exactly one of them")
        if self.regime is not None and len(self.regime) != 2:
            raise ParameterError("regime: expected (a, beta)")
        delta = self.scale()
        if not delta > 0:
            raise ParameterError(f"delta: must be positive, got {delta}")
        if delta >= self.window_obj().diameter:
            raise ParameterError(f"delta: {delta} is not below the window diameter")
        if self.complex_kind not in ("rips", "cech", "both"):
            raise ParameterError(f"complex: must be rips, cech or both, got {self.complex_kind!r}")
        if int(self.reps) != self.reps or self.reps < 2:
            raise ParameterError(f"reps: need at least 2 replications, got {self.reps}")
        if self.standardize not in ("empirical", "predicted"):
            raise ParameterError(f"standardize: must be empirical or predicted, got {self.standardize!r}")
        self.sequence.check(self.dim)

    def to_dict(self) -> dict:
        out = asdict(self)
        out["regime"] = list(self.regime) if self.regime is not None else None
        return out


@dataclass(frozen=True)
class Comparison:
    name: str
    empirical: float
    predicted: float
    tolerance: float
    passed: bool

    @property
    def gap(self) -> float:
        return abs(self.empirical - self.predicted)


@dataclass
class KindSummary:
    values: np.ndarray          # (R, n)
    face_counts: np.ndarray     # (R, n)
    mean: np.ndarray
    mean_se: np.ndarray
    cov: np.ndarray
    cov_se: np.ndarray
    ks: list
    spectrum: np.ndarray
    comparisons: list = field(default_factory=list)
    notes: list = field(default_factory=list)


@dataclass
class ExperimentResult:
    config: ExperimentConfig
    delta: float
    seeds: list
    summaries: dict
    failures: list

    @property
    def passed(self) -> bool:
        return not self.failures and all(
            c.passed for s in self.summaries.values() for c in s.comparisons)

    def rows(self):
        seq = self.config.sequence
        for kind, s in self.summaries.items():
            for r, seed in enumerate(self.seeds):
                for i, spec in enumerate(seq):
                    yield {
                        "rep_id": r, "complex": kind, "k": spec.k, "alpha": spec.alpha,
                        "value": float(s.values[r, i]), "f_k": int(s.face_counts[r, i]),
                        "t": self.config.t, "delta": self.delta, "seed": seed,
                    }


# -- statistics ----------------------------------------------------------------

def empirical_moments(values):
    """Mean, covariance and their standard errors for an (R, n) sample.

    Covariance SEs come from the sample variance of the centred products.
    """
    X = np.asarray(values, dtype=np.float64)
    if X.ndim != 2 or X.shape[0] < 2:
        raise ParameterError("need an (R, n) array with R >= 2")
    R = X.shape[0]
    mean = X.mean(axis=0)
    mean_se = X.std(axis=0, ddof=1) / math.sqrt(R)
    Z = X - mean
    cov = Z.T @ Z / (R - 1)
    cov = 0.5 * (cov + cov.T)
    prod = Z[:, :, None] * Z[:, None, :]
    cov_se = prod.std(axis=0, ddof=1) / math.sqrt(R)
    return mean, mean_se, cov, cov_se


def correlation(cov) -> np.ndarray:
    sd = np.sqrt(np.diag(cov))
    if np.any(sd == 0):
        raise DiagnosticError("zero variance; correlation undefined")
    return cov / np.outer(sd, sd)


def ks_to_normal(samples, mean=None, sd=None) -> float:
    """Kolmogorov distance between the standardised sample and N(0, 1).

    Standardises by the sample mean and sample SD unless given.
    """
    x = np.asarray(samples, dtype=np.float64).ravel()
    if x.size < 50:
        raise DiagnosticError(f"need at least 50 samples, got {x.size}")
    mu = float(np.mean(x)) if mean is None else float(mean)
    s = float(np.std(x, ddof=1)) if sd is None else float(sd)
    if not s > 0:
        raise DiagnosticError("zero-variance sample")
    return float(stats.kstest((x - mu) / s, "norm").statistic)


def covariance_compare(empirical, predicted, empirical_se, predicted_se=None,
                       policy: TolerancePolicy = TolerancePolicy(), delta: float = 0.0,
                       name: str = "cov") -> list[Comparison]:
    """Entrywise check ``|emp - pred| <= m * combined SE + slack * delta * |pred|``."""
    E = np.atleast_1d(np.asarray(empirical, dtype=np.float64))
    P = np.atleast_1d(np.asarray(predicted, dtype=np.float64))
    S = np.atleast_1d(np.asarray(empirical_se, dtype=np.float64))
    T = np.zeros_like(P) if predicted_se is None else np.atleast_1d(np.asarray(predicted_se, float))
    if not (E.shape == P.shape == S.shape == T.shape):
        raise ShapeMismatchError(f"shapes differ: {E.shape}, {P.shape}, {S.shape}, {T.shape}")
    out = []
    for idx in np.ndindex(E.shape):
        tol = policy.se_multiplier * math.hypot(S[idx], T[idx]) + policy.bias_slack * delta * abs(P[idx])
        label = f"{name}[{','.join(map(str, idx))}]"
        out.append(Comparison(label, float(E[idx]), float(P[idx]), float(tol),
                              bool(abs(E[idx] - P[idx]) <= tol)))
    return out


def spectrum_rank(matrix, threshold: float = 0.05) -> int:
    """Number of eigenvalues above ``threshold * lambda_max``."""
    M = np.asarray(matrix, dtype=np.float64)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise ShapeMismatchError(f"need a square matrix, got shape {M.shape}")
    if not np.allclose(M, M.T, rtol=0, atol=1e-12 * max(1.0, float(np.abs(M).max()))):
        raise ParameterError("matrix is not symmetric")
    ev = np.linalg.eigvalsh(M)
    return int(np.sum(ev > threshold * ev[-1]))


def ratio_estimate(num, den):
    """Ratio of means with its delta-method standard error."""
    a = np.asarray(num, dtype=np.float64)
    b = np.asarray(den, dtype=np.float64)
    R = len(a)
    ma, mb = a.mean(), b.mean()
    if mb == 0:
        raise DiagnosticError("denominator has zero mean")
    r = ma / mb
    resid = (a - r * b) / mb
    return float(r), float(resid.std(ddof=1) / math.sqrt(R))


# -- replication engine --------------------------------------------------------

def _replicate(args):
    config, rep = args
    seed = stream_seed(config.seed, rep)
    try:
        cloud = sample_poisson(config.window_obj(), config.t, seed)
        delta = config.scale()
        out = {}
        for kind in config.kinds:
            res = evaluate_sequence(cloud, delta, config.sequence, kind)
            out[kind] = ([r.value for r in res], [r.face_count for r in res])
        return rep, seed, out, None
    except Exception as exc:  # isolated per replication, reported with its seed
        return rep, seed, None, f"{type(exc).__name__}: {exc}"


def load_or_build_table(config: ExperimentConfig, build: bool = True) -> MomentTable:
    table = MomentTable.load(config.moments_cache)
    if build:
        before = len(table)
        for kind in config.kinds:
            build_table(config.sequence, config.dim, kind == "cech",
                        config.moment_samples, config.seed, table)
        if config.moments_cache and len(table) != before:
            table.save(config.moments_cache)
    return table


def _summarize(config, kind, values, counts, table, delta):
    seq = config.sequence
    mean, mean_se, cov, cov_se = empirical_moments(values)
    spectrum = np.zeros(len(seq))
    notes = []
    try:
        spectrum = np.linalg.eigvalsh(correlation(cov))[::-1]
    except DiagnosticError as exc:
        notes.append(f"spectrum: {exc}")
    summary = KindSummary(values, counts, mean, mean_se, cov, cov_se, [], spectrum, [], notes)
    cech = kind == "cech"
    d = config.dim
    if table is not None:
        try:
            pred = [expected_functional(config.t, delta, s.k, s.alpha, table, d, cech) for s in seq]
            pse = [expected_functional_se(config.t, delta, s.k, s.alpha, table, d, cech) for s in seq]
            summary.comparisons += covariance_compare(mean, pred, mean_se, pse, config.policy,
                                                      delta, f"{kind}.mean")
            cp = covariance_matrix(config.t, delta, seq, table, d, cech)
            summary.comparisons += covariance_compare(cov, cp.matrix, cov_se, cp.std_errors,
                                                      config.policy, delta, f"{kind}.cov")
        except TableMissError as exc:
            notes.append(f"comparison skipped: {exc}")
    pred_var = None
    if config.standardize == "predicted" and table is not None:
        pred_var = np.diag(covariance_matrix(config.t, delta, seq, table, d, cech).matrix)
    for i in range(len(seq)):
        try:
            if pred_var is not None:
                summary.ks.append(ks_to_normal(values[:, i], None, math.sqrt(pred_var[i])))
            else:
                summary.ks.append(ks_to_normal(values[:, i]))
        except DiagnosticError as exc:
            summary.ks.append(None)
            notes.append(f"ks[{i}]: {exc}")
    return summary


def run_experiment(config: ExperimentConfig, table: MomentTable | None = None,
                   compare: bool = True) -> ExperimentResult:
    """Run ``config.reps`` replications and compare them with the predictions.

    Replication r uses the stream seeded by ``(config.seed, r)``; results are
    ordered by r whatever the worker count, so the outcome is deterministic.
    """
    delta = config.scale()
    jobs = [(config, r) for r in range(config.reps)]
    if config.workers > 1:
        with ProcessPoolExecutor(config.workers) as pool:
            raw = list(pool.map(_replicate, jobs, chunksize=max(1, len(jobs) // (4 * config.workers))))
    else:
        raw = [_replicate(j) for j in jobs]
    raw.sort(key=lambda x: x[0])
    failures = [{"rep_id": r, "seed": s, "error": e} for r, s, _, e in raw if e is not None]
    good = [(r, s, o) for r, s, o, e in raw if e is None]
    if compare and table is None:
        table = load_or_build_table(config)
    summaries = {}
    if len(good) >= 2:
        for kind in config.kinds:
            values = np.array([o[kind][0] for _, _, o in good], dtype=np.float64)
            counts = np.array([o[kind][1] for _, _, o in good], dtype=np.int64)
            summaries[kind] = _summarize(config, kind, values, counts,
                                         table if compare else None, delta)
    return ExperimentResult(config, delta, [s for _, s, _ in good], summaries, failures)


# -- sweeps and comparisons -------------------------------------------------------

def clt_sweep(config: ExperimentConfig, ts) -> list[dict]:
    """KS distance per spec along a sequence of intensities.

    The scale follows ``config.regime`` when present, else stays fixed.
    Multivariate normality is probed coordinatewise.
    """
    out = []
    k_n = config.sequence.k_max
    for t in ts:
        cfg = ExperimentConfig(**{**config.__dict__, "t": float(t)})
        res = run_experiment(cfg, compare=False)
        delta = cfg.scale()
        for kind, s in res.summaries.items():
            out.append({"t": float(t), "delta": delta, "complex": kind, "ks": s.ks,
                        "rate_shape": clt_rate_bound(t, delta, k_n, cfg.dim),
                        "failures": len(res.failures)})
    return out


def face_sets(cloud, delta, k_max):
    graph = build_neighbor_graph(cloud, delta)
    rips = [s.as_set() for s in enumerate_rips_faces(graph, k_max)]
    cech = [s.as_set() for s in enumerate_cech_faces(graph, delta, k_max)]
    return rips, cech


def sandwich_violations(cloud, delta: float, k_max: int = 3) -> int:
    """Faces breaking Čech(delta) ⊆ Rips(delta) ⊆ Čech(s * delta)."""
    d = cloud.points.shape[1] if hasattr(cloud, "points") else np.asarray(cloud).shape[1]
    rips, cech = face_sets(cloud, delta, k_max)
    _, cech_big = face_sets(cloud, sandwich_factor(d) * delta, k_max)
    bad = 0
    for k in range(k_max + 1):
        bad += len(cech[k] - rips[k]) + len(rips[k] - cech_big[k])
    return bad


# -- I/O -------------------------------------------------------------------------

def _jsonable(x):
    if isinstance(x, np.ndarray):
        return [_jsonable(v) for v in x.tolist()]
    if isinstance(x, (np.floating, float)):
        return float(x) if math.isfinite(x) else str(x)
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    return x


def result_report(result: ExperimentResult) -> dict:
    rep = {
        "config": result.config.to_dict(),
        "delta": result.delta,
        "failures": result.failures,
        "passed": result.passed,
        "complexes": {},
    }
    for kind, s in result.summaries.items():
        rep["complexes"][kind] = {
            "mean": s.mean, "mean_se": s.mean_se, "cov": s.cov, "cov_se": s.cov_se,
            "ks": s.ks, "spectrum": s.spectrum, "notes": s.notes,
            "comparisons": [asdict(c) for c in s.comparisons],
        }
    return _jsonable(rep)


def dumps_report(report: dict) -> str:
    return json.dumps(_jsonable(report), indent=2, sort_keys=True) + "\n"


def write_report(report: dict, path=None) -> str:
    text = dumps_report(report)
    if path:
        with open(path, "w") as fh:
            fh.write(text)
    return text


def read_report(path_or_text: str) -> dict:
    if os.path.exists(path_or_text):
        with open(path_or_text) as fh:
            return json.load(fh)
    return json.loads(path_or_text)


def write_csv(result: ExperimentResult, path=None) -> str:
    buf = io.StringIO()
    buf.write("# config: " + json.dumps(_jsonable(result.config.to_dict()), sort_keys=True) + "\n")
    w = csv.DictWriter(buf, fieldnames=CSV_FIELDS, lineterminator="\n")
    w.writeheader()
    for row in result.rows():
        w.writerow(row)
    text = buf.getvalue()
    if path:
        with open(path, "w") as fh:
            fh.write(text)
    return text


def read_csv(text: str) -> list[dict]:
    lines = [ln for ln in text.splitlines() if not ln.startswith("#")]
    return list(csv.DictReader(lines))
