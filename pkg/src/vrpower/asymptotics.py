"""Leading-order predictions: expectations, covariances, normalisers and limits.

Everything here is arithmetic on constants looked up in a MomentTable. The
``cech`` flag swaps every Rips constant for its Čech counterpart; the
formulas are otherwise the same.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ParameterError
from .functionals import AdmissibleSequence, FunctionalSpec
from .moments import MomentTable

MODES = ("sparse", "thermodynamic", "dense")


@dataclass(frozen=True)
class RegimeSpec:
    """Scaling regime, optionally with the schedule delta_t = a * t**(-beta)."""

    mode: str
    c: float | None = None
    a: float | None = None
    beta: float | None = None

    def __post_init__(self):
        if self.mode not in MODES:
            raise ParameterError(f"regime must be one of {MODES}, got {self.mode!r}")
        if self.mode == "thermodynamic" and not (self.c is not None and self.c > 0):
            raise ParameterError("thermodynamic regime needs c > 0")

    @classmethod
    def from_schedule(cls, a: float, beta: float, d: int) -> "RegimeSpec":
        if not a > 0:
            raise ParameterError(f"amplitude must be positive, got {a}")
        if math.isclose(beta * d, 1.0, rel_tol=0, abs_tol=1e-12):
            return cls("thermodynamic", float(a) ** d, a, beta)
        return cls("sparse" if beta * d > 1 else "dense", None, a, beta)

    @classmethod
    def thermodynamic(cls, c: float) -> "RegimeSpec":
        return cls("thermodynamic", float(c))

    def delta(self, t: float) -> float:
        if self.a is None or self.beta is None:
            raise ParameterError("regime carries no delta schedule")
        return self.a * t ** (-self.beta)


def _spec(s) -> FunctionalSpec:
    return s if isinstance(s, FunctionalSpec) else FunctionalSpec(*s)


def _seq(seq) -> AdmissibleSequence:
    if isinstance(seq, AdmissibleSequence):
        return seq
    if isinstance(seq, str):
        return AdmissibleSequence.parse(seq)
    return AdmissibleSequence(tuple(seq))


def expected_functional(t: float, delta: float, k: int, alpha: float,
                        moments: MomentTable, d: int, cech: bool = False) -> float:
    """Leading term of the mean of the (k, alpha) functional."""
    spec = FunctionalSpec(k, alpha)
    spec.check(d)
    mu = moments.single(spec.k, spec.alpha, d, cech).value
    return mu / math.factorial(k + 1) * t ** (k + 1) * delta ** (k * (spec.alpha + d))


def expected_functional_se(t, delta, k, alpha, moments, d, cech=False) -> float:
    """Standard error inherited from the moment table."""
    spec = FunctionalSpec(k, alpha)
    se = moments.single(spec.k, spec.alpha, d, cech).std_error
    return se / math.factorial(k + 1) * t ** (k + 1) * delta ** (k * (spec.alpha + d))


@dataclass(frozen=True)
class CovarianceTerm:
    m: int
    constant: float
    std_error: float
    value: float


@dataclass(frozen=True)
class CovarianceEntry:
    value: float
    std_error: float
    terms: tuple[CovarianceTerm, ...]


def covariance_prediction(t: float, delta: float, spec_i, spec_j, moments: MomentTable,
                          d: int, cech: bool = False) -> CovarianceEntry:
    """Leading covariance of two functionals, split over the number m of shared points."""
    si, sj = _spec(spec_i), _spec(spec_j)
    AdmissibleSequence((si,) if si == sj else tuple(sorted((si, sj)))).check(d)
    if not (t > 0 and delta > 0):
        raise ParameterError("t and delta must be positive")
    k1, k2, a1, a2 = si.k, sj.k, si.alpha, sj.alpha
    terms = []
    for m in range(1, min(k1, k2) + 2):
        est = moments.mixed(k1, k2, m, a1, a2, d, cech)
        coef = 1.0 / (math.factorial(m) * math.factorial(k1 - m + 1) * math.factorial(k2 - m + 1))
        scale = coef * t ** (k1 + k2 - m + 2) * delta ** (
            (d + a1) * k1 + (d + a2) * k2 - d * (m - 1))
        terms.append(CovarianceTerm(m, est.value, est.std_error * scale, est.value * scale))
    value = math.fsum(term.value for term in terms)
    se = math.sqrt(sum(term.std_error ** 2 for term in terms))
    return CovarianceEntry(value, se, tuple(terms))


@dataclass(frozen=True)
class CovariancePrediction:
    specs: AdmissibleSequence
    t: float
    delta: float
    matrix: np.ndarray
    std_errors: np.ndarray
    breakdown: dict = field(default_factory=dict)


def covariance_matrix(t, delta, seq, moments, d, cech=False) -> CovariancePrediction:
    seq = _seq(seq)
    seq.check(d)
    n = len(seq)
    mat = np.zeros((n, n))
    ses = np.zeros((n, n))
    breakdown = {}
    for i in range(n):
        for j in range(i, n):
            e = covariance_prediction(t, delta, seq[i], seq[j], moments, d, cech)
            mat[i, j] = mat[j, i] = e.value
            ses[i, j] = ses[j, i] = e.std_error
            breakdown[(i, j)] = e.terms
    return CovariancePrediction(seq, t, delta, mat, ses, breakdown)


def normalizer_Q(t: float, delta: float, k: int, alpha: float, d: int) -> float:
    """Scale that makes the (k, alpha) functional order one in every regime."""
    if not (t > 0 and delta > 0):
        raise ParameterError("t and delta must be positive")
    x = t * delta ** d
    return math.sqrt(t) * delta ** (alpha * k) * max(x ** k, x ** (k / 2))


# -- limiting covariance -------------------------------------------------------

def _lower_entry(kl, kj, al, aj, m, moments, d, cech):
    """Entry (l, j) of A^{<1}_m as (value, std_error)."""
    diff = m - abs(kl - kj)
    if diff < 0 or diff % 2 or diff > 2 * min(kl, kj):
        return 0.0, 0.0
    shared = (kl + kj - m + 2) // 2
    assert 2 * shared == kl + kj - m + 2
    est = moments.mixed(kl, kj, shared, al, aj, d, cech)
    den = (math.factorial(shared) * math.factorial((m - kl + kj) // 2)
           * math.factorial((m + kl - kj) // 2))
    return est.value / den, est.std_error / den


def _upper_entry(kl, kj, al, aj, m, moments, d, cech):
    """Entry (l, j) of A^{>1}_m as (value, std_error)."""
    if m > min(kl, kj):
        return 0.0, 0.0
    est = moments.mixed(kl, kj, m + 1, al, aj, d, cech)
    den = math.factorial(m + 1) * math.factorial(kl - m) * math.factorial(kj - m)
    return est.value / den, est.std_error / den


def matrix_family(kind: str, seq, moments: MomentTable, d: int, cech: bool = False):
    """List of (value, std_error) matrices A_m for m = 0..top.

    ``kind`` is "lower" for A^{<1} (m up to 2*k_n) or "upper" for A^{>1}
    (m up to k_n).
    """
    seq = _seq(seq)
    entry = {"lower": _lower_entry, "upper": _upper_entry}[kind]
    top = 2 * seq.k_max if kind == "lower" else seq.k_max
    n = len(seq)
    out = []
    for m in range(top + 1):
        val = np.zeros((n, n))
        se = np.zeros((n, n))
        for i in range(n):
            for j in range(i, n):
                v, s = entry(seq[i].k, seq[j].k, seq[i].alpha, seq[j].alpha, m, moments, d, cech)
                val[i, j] = val[j, i] = v
                se[i, j] = se[j, i] = s
        out.append((val, se))
    return out


@dataclass(frozen=True)
class LimitSigma:
    regime: RegimeSpec
    matrix: np.ndarray
    std_errors: np.ndarray
    family: str
    components: tuple

    @property
    def rank(self) -> int:
        sv = np.linalg.svd(self.matrix, compute_uv=False)
        return int(np.sum(sv > sv[0] * len(sv) * 1e-12)) if sv.size and sv[0] > 0 else 0


def family_sum(kind, seq, c, moments, d, cech=False):
    """``sum_m A_m * w_m`` with w_m = c**(m/2) (lower) or c**(-m) (upper)."""
    fam = matrix_family(kind, seq, moments, d, cech)
    n = len(_seq(seq))
    val = np.zeros((n, n))
    var = np.zeros((n, n))
    for m, (A, S) in enumerate(fam):
        w = c ** (m / 2) if kind == "lower" else c ** (-m)
        val += w * A
        var += (w * S) ** 2
    return val, np.sqrt(var), fam


def limiting_sigma(regime: RegimeSpec, seq, moments: MomentTable, d: int,
                   cech: bool = False) -> LimitSigma:
    """Limit of Cov(V_i, V_j) / (Q_i Q_j) in the given regime."""
    seq = _seq(seq)
    seq.check(d)
    if regime.mode == "sparse":
        A, S = matrix_family("lower", seq, moments, d, cech)[0]
        return LimitSigma(regime, A, S, "lower", ((A, S),))
    if regime.mode == "dense":
        A, S = matrix_family("upper", seq, moments, d, cech)[0]
        return LimitSigma(regime, A, S, "upper", ((A, S),))
    kind = "lower" if regime.c <= 1.0 else "upper"
    val, se, fam = family_sum(kind, seq, regime.c, moments, d, cech)
    return LimitSigma(regime, val, se, kind, tuple(fam))


@dataclass(frozen=True)
class RankPrediction:
    rank: int
    generic: bool = False

    def __str__(self):
        return f"{self.rank} (generic)" if self.generic else str(self.rank)


def rank_prediction(regime: RegimeSpec, seq) -> RankPrediction:
    """Rank of the limiting covariance.

    In the thermodynamic regime the rank is n except at finitely many values
    of c, which are not located here; the result is flagged as generic.
    """
    n = len(_seq(seq))
    if regime.mode == "sparse":
        return RankPrediction(n)
    if regime.mode == "dense":
        return RankPrediction(1)
    return RankPrediction(n, generic=True)


def clt_rate_bound(t: float, delta: float, k: int, d: int) -> float:
    """Shape of the Kolmogorov-distance bound, without its unknown constant.

    For a sequence pass the largest face dimension as ``k``.
    """
    if not (t > 0 and delta > 0):
        raise ParameterError("t and delta must be positive")
    x = t * delta ** d
    return t ** -0.5 * max(x ** (-k / 2), 1.0)


def sandwich_factor(d: int) -> float:
    """Scale s with Rips(delta) contained in Čech(s * delta)."""
    return math.sqrt(2 * d / (d + 1))


def cech_predictions(t, delta, seq, moments, d, regime: RegimeSpec | None = None) -> dict:
    """Expectations, covariance and (optionally) limit for the Čech functionals."""
    seq = _seq(seq)
    out = {
        "expectations": [expected_functional(t, delta, s.k, s.alpha, moments, d, cech=True)
                         for s in seq],
        "covariance": covariance_matrix(t, delta, seq, moments, d, cech=True),
    }
    if regime is not None:
        out["limit"] = limiting_sigma(regime, seq, moments, d, cech=True)
    return out
