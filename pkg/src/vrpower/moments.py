"""Monte Carlo estimates of the geometric constants and moment matrices.

All constants are integrals over copies of the unit ball B^d of products of
``Delta_1[0, x_1..x_k]**alpha``: the volume of the simplex spanned by the
origin and the points, set to zero unless the Rips condition (all edges <= 1)
or, for the Čech constants, the miniball condition (radius <= 1/2) holds.
They are estimated as ``kappa_d**K * mean(integrand)`` with ``K`` uniform
points in B^d.
"""

from __future__ import annotations

import json
import math
import os
import zlib
from dataclasses import asdict, dataclass, field

import numpy as np

from . import kernels
from .functionals import FunctionalSpec
from .errors import AdmissibilityError, ParameterError, TableMissError
from .geometry import make_rng, stream_seed, unit_ball_volume

DEFAULT_SAMPLES = 1_000_000
BATCH = 100_000

KINDS = ("mu", "mu_mixed", "nu", "nu_mixed", "mu_10_jk")


@dataclass(frozen=True)
class MomentEstimate:
    value: float
    std_error: float
    n_samples: int
    kind: str
    indices: tuple
    alphas: tuple
    dim: int
    seed: int | None = None
    exact: bool = False

    @property
    def key(self) -> tuple:
        return (self.kind, tuple(self.indices), tuple(float(a) for a in self.alphas), self.dim)

    def to_dict(self) -> dict:
        out = asdict(self)
        out["indices"] = list(self.indices)
        out["alphas"] = list(self.alphas)
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "MomentEstimate":
        data = dict(data)
        data["indices"] = tuple(data["indices"])
        data["alphas"] = tuple(float(a) for a in data["alphas"])
        return cls(**data)


def _exact(value, kind, indices, alphas, d):
    return MomentEstimate(float(value), 0.0, 0, kind, tuple(indices),
                          tuple(float(a) for a in alphas), d, None, True)


# -- sampling -----------------------------------------------------------------

def sample_unit_ball(rng: np.random.Generator, shape, d: int) -> np.ndarray:
    """Uniform points in B^d with leading shape ``shape``."""
    g = rng.standard_normal((*shape, d))
    g /= np.linalg.norm(g, axis=-1, keepdims=True)
    r = rng.random(shape) ** (1.0 / d)
    return g * r[..., None]


def _simplex_factor(X: np.ndarray, alpha: float, cech: bool, d: int) -> np.ndarray:
    """``Delta_1[0, X]**alpha`` per sample; X has shape (n, k, d)."""
    n, k, _ = X.shape
    if k == 0:
        return np.ones(n)
    if cech:
        with_origin = np.concatenate([np.zeros((n, 1, d)), X], axis=1)
        ok = kernels.miniball_r2_batch(with_origin) <= 0.25
    else:
        ok = np.einsum("nkc,nkc->nk", X, X).max(axis=1) <= 1.0
        for i in range(k):
            for j in range(i + 1, k):
                diff = X[:, i] - X[:, j]
                ok &= np.einsum("nc,nc->n", diff, diff) <= 1.0
    if alpha == 0.0:
        return ok.astype(np.float64)
    gram = X @ np.swapaxes(X, 1, 2)
    vol = np.sqrt(np.clip(np.linalg.det(gram), 0.0, None)) / math.factorial(k)
    out = np.zeros(n)
    with np.errstate(divide="ignore"):
        out[ok] = vol[ok] ** alpha
    return out


def _layout(k1: int, k2: int, m: int):
    """Point index ranges of the two simplices sharing the origin and m-1 points."""
    first = slice(0, k1)
    second = slice(k1 - m + 1, k1 + k2 - m + 1)
    return k1 + k2 + 1 - m, first, second


def _run_mc(integrand, npoints: int, d: int, n_samples: int, seed: int, batch: int = BATCH):
    """Mean and standard error of ``kappa_d**npoints * integrand``.

    Batch b draws from the stream keyed by ``(seed, b)``; batch moments are
    merged with the pairwise (Chan) update.
    """
    if n_samples < 2:
        raise ParameterError("need at least two samples")
    count, total, mean, m2 = 0, 0.0, 0.0, 0.0
    b = 0
    while count < n_samples:
        nb = min(batch, n_samples - count)
        rng = make_rng([int(seed), b])
        g = integrand(sample_unit_ball(rng, (nb, npoints), d))
        bsum = float(np.sum(g))
        total += bsum
        bm = bsum / nb
        bm2 = float(np.sum((g - bm) ** 2))
        delta = bm - mean
        tot = count + nb
        mean += delta * nb / tot
        m2 += bm2 + delta * delta * count * nb / tot
        count = tot
        b += 1
    scale = unit_ball_volume(d) ** npoints
    var = m2 / (count - 1)
    # the plain sum keeps constant integrands exact; Chan's update is for m2
    return scale * (total / count), scale * math.sqrt(max(var, 0.0) / count)


def _check_single(k, alpha, d):
    if int(k) != k or k < 0:
        raise ParameterError(f"k must be a non-negative integer, got {k}")
    if int(d) != d or d < 1:
        raise ParameterError(f"d must be a positive integer, got {d}")
    if k > d and alpha != 0.0:
        raise AdmissibilityError(f"alpha must be 0 for k={k} > d={d}", "alpha=0 for k>d")
    if k <= d and not alpha > -d:
        raise AdmissibilityError(f"alpha={alpha} must exceed -d", "alpha>-d")


def _estimate_single(kind, k, alpha, d, n_samples, seed):
    _check_single(k, alpha, d)
    alpha = float(alpha)
    if k == 0:
        return _exact(1.0, kind, (k,), (alpha,), d)
    cech = kind == "nu"
    value, se = _run_mc(lambda X: _simplex_factor(X, alpha, cech, d), k, d, n_samples, seed)
    return MomentEstimate(value, se, n_samples, kind, (k,), (alpha,), d, seed)


def estimate_mu(k: int, alpha: float, d: int, n_samples: int = DEFAULT_SAMPLES,
                seed: int = 0) -> MomentEstimate:
    """Plain Monte Carlo estimate of the Rips constant for (k, alpha) in R^d."""
    return _estimate_single("mu", k, alpha, d, n_samples, seed)


def estimate_nu(k: int, alpha: float, d: int, n_samples: int = DEFAULT_SAMPLES,
                seed: int = 0) -> MomentEstimate:
    """Čech analogue of :func:`estimate_mu`."""
    return _estimate_single("nu", k, alpha, d, n_samples, seed)


def canonical_mixed(k1, k2, alpha1, alpha2):
    """Order the two (k, alpha) pairs so that the smaller one comes first."""
    a, b = (int(k1), float(alpha1)), (int(k2), float(alpha2))
    if b < a:
        a, b = b, a
    return a[0], b[0], a[1], b[1]


def _check_mixed(k1, k2, m, a1, a2, d):
    for k, a in ((k1, a1), (k2, a2)):
        if int(k) != k or k < 0:
            raise ParameterError(f"k must be a non-negative integer, got {k}")
        if k > d and a != 0.0:
            raise AdmissibilityError(f"alpha must be 0 for k={k} > d={d}", "alpha=0 for k>d")
    if not min(a1, a2, a1 + a2) > -d:
        raise AdmissibilityError("min(alpha1, alpha2, alpha1+alpha2) must exceed -d",
                                 "min{a_i,a_j,a_i+a_j}>-d")
    if int(m) != m or not 1 <= m <= min(k1, k2) + 1:
        raise ParameterError(f"m={m} outside 1..min(k1,k2)+1")


def _estimate_mixed(kind, k1, k2, m, alpha1, alpha2, d, n_samples, seed):
    k1, k2, alpha1, alpha2 = canonical_mixed(k1, k2, alpha1, alpha2)
    _check_mixed(k1, k2, m, alpha1, alpha2, d)
    cech = kind.startswith("nu")
    npoints, first, second = _layout(k1, k2, int(m))

    def integrand(X):
        return (_simplex_factor(X[:, first], alpha1, cech, d)
                * _simplex_factor(X[:, second], alpha2, cech, d))

    value, se = _run_mc(integrand, npoints, d, n_samples, seed)
    return MomentEstimate(value, se, n_samples, kind, (k1, k2, int(m)), (alpha1, alpha2), d, seed)


def estimate_mu_mixed(k1, k2, m, alpha1, alpha2, d, n_samples=DEFAULT_SAMPLES, seed=0):
    """Mixed moment of two Rips simplices sharing the origin and m-1 vertices."""
    return _estimate_mixed("mu_mixed", k1, k2, m, alpha1, alpha2, d, n_samples, seed)


def estimate_nu_mixed(k1, k2, m, alpha1, alpha2, d, n_samples=DEFAULT_SAMPLES, seed=0):
    return _estimate_mixed("nu_mixed", k1, k2, m, alpha1, alpha2, d, n_samples, seed)


def estimate_mu_10(j: int, k: int, d: int, n_samples: int = DEFAULT_SAMPLES,
                   seed: int = 0) -> MomentEstimate:
    """Integral of the j-volume of [0, x_1..x_j] over Rips-admissible (x_1..x_k)."""
    if not (int(j) == j and int(k) == k and 1 <= j < k <= d):
        raise ParameterError(f"need 1 <= j < k <= d, got j={j}, k={k}, d={d}")
    est = _estimate_mixed("mu_mixed", j, k, j + 1, 1.0, 0.0, d, n_samples, seed)
    return MomentEstimate(est.value, est.std_error, n_samples, "mu_10_jk", (j, k), (1.0, 0.0), d, seed)


# -- closed forms -------------------------------------------------------------

def exact_single(k: int, alpha: float, d: int) -> float | None:
    """Closed-form value of the single constant when one is known, else None.

    Identical for the Rips and Čech variants in every case covered here.
    """
    if k == 0:
        return 1.0
    if k == 1:
        return d * unit_ball_volume(d) / (alpha + d)
    if d == 1 and alpha == 0.0:
        return float(k + 1)
    return None


# -- tables -------------------------------------------------------------------

def _key_str(key) -> str:
    kind, idx, alphas, d = key
    return f"{kind}|{','.join(map(str, idx))}|{','.join(repr(float(a)) for a in alphas)}|{d}"


def _parse_key(text: str):
    kind, idx, alphas, d = text.split("|")
    return (kind, tuple(int(i) for i in idx.split(",") if i),
            tuple(float(a) for a in alphas.split(",") if a), int(d))


@dataclass
class MomentTable:
    """Constants keyed by (kind, indices, alphas, d), with exact identities on lookup."""

    entries: dict = field(default_factory=dict)

    def add(self, est: MomentEstimate) -> MomentEstimate:
        self.entries[est.key] = est
        return est

    def __len__(self):
        return len(self.entries)

    def __contains__(self, key):
        return key in self.entries

    # lookups

    def single(self, k: int, alpha: float, d: int, cech: bool = False) -> MomentEstimate:
        kind = "nu" if cech else "mu"
        alpha = float(alpha)
        if d == 1 and cech:
            # Čech and Rips coincide on the line.
            kind_lookup = "mu"
        else:
            kind_lookup = kind
        val = exact_single(k, alpha, d)
        if val is not None:
            return _exact(val, kind, (k,), (alpha,), d)
        for kk in {kind, kind_lookup}:
            key = (kk, (int(k),), (alpha,), d)
            if key in self.entries:
                return self.entries[key]
        raise TableMissError(_key_str((kind, (int(k),), (alpha,), d)))

    def mixed(self, k1, k2, m, alpha1, alpha2, d, cech: bool = False) -> MomentEstimate:
        kind = "nu_mixed" if cech else "mu_mixed"
        k1, k2, alpha1, alpha2 = canonical_mixed(k1, k2, alpha1, alpha2)
        m = int(m)
        key = (kind, (k1, k2, m), (alpha1, alpha2), d)
        if k1 == 0:
            return self.single(k2, alpha2, d, cech)
        if m == k1 + 1 and (k1 == k2 or alpha1 == 0.0):
            # first simplex is contained in the second one
            a = alpha1 + alpha2 if k1 == k2 else alpha2
            return self.single(k2, a, d, cech)
        if m == 1:
            a = self.single(k1, alpha1, d, cech)
            b = self.single(k2, alpha2, d, cech)
            se = math.hypot(a.value * b.std_error, b.value * a.std_error)
            return MomentEstimate(a.value * b.value, se, min(a.n_samples, b.n_samples) or 0,
                                  kind, (k1, k2, m), (alpha1, alpha2), d, None, a.exact and b.exact)
        if key in self.entries:
            return self.entries[key]
        if d == 1 and cech:
            alt = ("mu_mixed", (k1, k2, m), (alpha1, alpha2), d)
            if alt in self.entries:
                return self.entries[alt]
        raise TableMissError(_key_str(key))

    def mu_10(self, j, k, d) -> MomentEstimate:
        key = ("mu_10_jk", (int(j), int(k)), (1.0, 0.0), d)
        if key in self.entries:
            return self.entries[key]
        return self.mixed(j, k, j + 1, 1.0, 0.0, d)

    # persistence

    def to_json(self) -> str:
        data = {_key_str(k): v.to_dict() for k, v in sorted(self.entries.items(), key=lambda kv: _key_str(kv[0]))}
        return json.dumps(data, indent=2, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "MomentTable":
        table = cls()
        for key, rec in json.loads(text).items():
            est = MomentEstimate.from_dict(rec)
            table.entries[_parse_key(key)] = est
        return table

    def save(self, path) -> None:
        tmp = f"{path}.tmp"
        with open(tmp, "w") as fh:
            fh.write(self.to_json())
        os.replace(tmp, path)

    @classmethod
    def load(cls, path) -> "MomentTable":
        if not path or not os.path.exists(path):
            return cls()
        with open(path) as fh:
            return cls.from_json(fh.read())


def required_constants(seq, d: int, cech: bool = False):
    """Keys of every constant the predictions for ``seq`` may look up."""
    specs = [sp if isinstance(sp, FunctionalSpec) else FunctionalSpec(*sp) for sp in seq]
    single_kind = "nu" if cech else "mu"
    mixed_kind = "nu_mixed" if cech else "mu_mixed"
    keys = set()
    for s in specs:
        keys.add((single_kind, (s.k,), (s.alpha,), d))
    for a in specs:
        for b in specs:
            k1, k2, a1, a2 = canonical_mixed(a.k, b.k, a.alpha, b.alpha)
            for m in range(1, k1 + 2):
                keys.add((mixed_kind, (k1, k2, m), (a1, a2), d))
            if a.k == b.k:
                keys.add((single_kind, (a.k,), (a.alpha + b.alpha,), d))
    return keys


def _seed_for(key, seed: int) -> int:
    return stream_seed(seed, zlib.crc32(_key_str(key).encode()))


def build_table(seq, d: int, cech: bool = False, n_samples: int = DEFAULT_SAMPLES,
                seed: int = 0, table: MomentTable | None = None) -> MomentTable:
    """Fill ``table`` with every constant ``seq`` needs that no identity provides.

    Each missing constant gets its own seed derived from the key, so a table
    does not depend on which other constants were requested alongside it.
    """
    table = table if table is not None else MomentTable()
    singles = sorted(k for k in required_constants(seq, d, cech) if k[0] in ("mu", "nu"))
    mixed = sorted(k for k in required_constants(seq, d, cech) if k[0] not in ("mu", "nu"))
    for key in singles + mixed:
        kind, idx, alphas, _ = key
        try:
            if len(idx) == 1:
                table.single(idx[0], alphas[0], d, cech)
            else:
                table.mixed(*idx, *alphas, d, cech)
            continue
        except TableMissError:
            pass
        s = _seed_for(key, seed)
        if len(idx) == 1:
            est = (estimate_nu if cech else estimate_mu)(idx[0], alphas[0], d, n_samples, s)
        else:
            est = (estimate_nu_mixed if cech else estimate_mu_mixed)(*idx, *alphas, d, n_samples, s)
        table.add(est)
    return table


# -- moment matrices ----------------------------------------------------------

@dataclass(frozen=True)
class MomentMatrix:
    exponents: np.ndarray
    entries: np.ndarray
    std_errors: np.ndarray
    min_eigenvalue: float
    rank: int
    rank_threshold: float
    mc_rank: int
    mc_threshold: float

    def is_psd(self, tol: float = 1e-8) -> bool:
        return self.min_eigenvalue >= -tol * float(np.trace(self.entries))


def moment_matrix(samples, c) -> MomentMatrix:
    """Matrix of sample means of ``x**(c_i + c_j)``.

    ``rank`` treats the samples as an exact distribution (SVD cut at
    ``sigma_max * n * 1e-12``); ``mc_rank`` cuts at three times the spectral
    norm of the matrix of entrywise standard errors.
    """
    x = np.asarray(samples, dtype=np.float64).ravel()
    c = np.asarray(c, dtype=np.float64).ravel()
    if x.size == 0:
        raise ParameterError("no samples")
    n = len(c)
    expo = c[:, None] + c[None, :]
    if np.any(x < 0) and np.any(expo != np.round(expo)):
        raise ParameterError("negative samples with non-integer exponents")
    entries = np.empty((n, n))
    ses = np.zeros((n, n))
    for i in range(n):
        for j in range(i, n):
            with np.errstate(divide="ignore"):
                vals = np.ones_like(x) if expo[i, j] == 0 else x ** expo[i, j]
            if not np.all(np.isfinite(vals)):
                raise ParameterError(f"power {expo[i, j]} of the samples is not finite")
            entries[i, j] = entries[j, i] = float(np.mean(vals))
            if x.size > 1:
                ses[i, j] = ses[j, i] = float(np.std(vals, ddof=1) / math.sqrt(x.size))
    sv = np.linalg.svd(entries, compute_uv=False)
    thr = sv[0] * n * 1e-12
    mc_thr = 3.0 * float(np.linalg.norm(ses, 2))
    return MomentMatrix(
        exponents=c, entries=entries, std_errors=ses,
        min_eigenvalue=float(np.linalg.eigvalsh(entries)[0]),
        rank=int(np.sum(sv > thr)), rank_threshold=float(thr),
        mc_rank=int(np.sum(sv > mc_thr)), mc_threshold=mc_thr,
    )


def sample_rips_volumes(k: int, d: int, n_samples: int, seed: int = 0) -> np.ndarray:
    """Volumes of Rips-admissible simplices [0, X_1..X_k] with X_i uniform in B^d.

    Configurations violating the edge condition are dropped, so the result
    is a sample from the conditional volume law.
    """
    if not 1 <= k <= d:
        raise ParameterError(f"need 1 <= k <= d, got k={k}, d={d}")
    out, b = [], 0
    have = 0
    while have < n_samples:
        rng = make_rng([int(seed), b])
        X = sample_unit_ball(rng, (BATCH, k), d)
        ok = _simplex_factor(X, 0.0, False, d) > 0
        vol = np.sqrt(np.clip(np.linalg.det(X @ np.swapaxes(X, 1, 2)), 0, None)) / math.factorial(k)
        out.append(vol[ok])
        have += int(ok.sum())
        b += 1
    return np.concatenate(out)[:n_samples]
