"""Volume-power functionals, f-vectors and typical-simplex estimators.

The functional for a (k, alpha) spec is the plain face sum
``sum over k-faces F of vol_k(F)**alpha``; it equals the ordered-tuple sum
over distinct (k+1)-tuples divided by (k+1)!.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations

import numpy as np

from . import kernels
from .complexes import FaceStream, _points_of, build_neighbor_graph
from .errors import (
    AdmissibilityError,
    DegenerateFaceError,
    NumericalError,
    ParameterError,
    UndefinedEstimateError,
)
from .geometry import simplex_volume

COMPLEX_KINDS = ("rips", "cech")


@dataclass(frozen=True, order=True)
class FunctionalSpec:
    k: int
    alpha: float = 0.0

    def __post_init__(self):
        if int(self.k) != self.k or self.k < 0:
            raise ParameterError(f"face dimension must be a non-negative integer, got {self.k}")
        object.__setattr__(self, "k", int(self.k))
        object.__setattr__(self, "alpha", float(self.alpha))

    def check(self, d: int) -> None:
        """Raise AdmissibilityError unless the spec is integrable in dimension d."""
        if self.k > d and self.alpha != 0.0:
            raise AdmissibilityError(
                f"alpha must be 0 for k={self.k} > d={d}", "alpha=0 for k>d")
        if self.k <= d and not self.alpha > -d:
            raise AdmissibilityError(
                f"alpha={self.alpha} must exceed -d={-d}", "alpha>-d")

    def clt_ok(self, d: int) -> bool:
        return self.k > d or self.alpha > -d / 2

    def __str__(self):
        return f"{self.k}:{self.alpha:g}"

    @classmethod
    def parse(cls, text: str) -> "FunctionalSpec":
        k, _, a = text.strip().partition(":")
        return cls(int(k), float(a) if a else 0.0)


@dataclass(frozen=True)
class AdmissibleSequence:
    specs: tuple[FunctionalSpec, ...]

    def __post_init__(self):
        object.__setattr__(self, "specs", tuple(
            s if isinstance(s, FunctionalSpec) else FunctionalSpec(*s) for s in self.specs))
        if not self.specs:
            raise AdmissibilityError("empty sequence", "n>=1")

    def __len__(self):
        return len(self.specs)

    def __iter__(self):
        return iter(self.specs)

    def __getitem__(self, i):
        return self.specs[i]

    @property
    def ks(self) -> list[int]:
        return [s.k for s in self.specs]

    @property
    def alphas(self) -> list[float]:
        return [s.alpha for s in self.specs]

    @property
    def k_max(self) -> int:
        return max(self.ks)

    def check(self, d: int) -> None:
        ks = self.ks
        if any(a > b for a, b in zip(ks, ks[1:])):
            raise AdmissibilityError(f"face dimensions {ks} are not non-decreasing", "k_1<=...<=k_n")
        if len(set(self.specs)) != len(self.specs):
            raise AdmissibilityError("repeated (k, alpha) pair", "pairs distinct")
        for s in self.specs:
            if s.k > d and s.alpha != 0.0:
                raise AdmissibilityError(f"alpha must be 0 for k={s.k} > d={d}", "alpha=0 for k>d")
        for a in self.alphas:
            for b in self.alphas:
                if not min(a, b, a + b) > -d:
                    raise AdmissibilityError(
                        f"min(alpha_i, alpha_j, alpha_i+alpha_j) <= -d for ({a}, {b})",
                        "min{a_i,a_j,a_i+a_j}>-d")

    @classmethod
    def parse(cls, text: str) -> "AdmissibleSequence":
        return cls(tuple(FunctionalSpec.parse(p) for p in text.split(",") if p.strip()))


@dataclass(frozen=True)
class FunctionalResult:
    spec: FunctionalSpec
    value: float
    face_count: int


def _volumes(stream: FaceStream) -> np.ndarray:
    if stream.volumes is None:
        raise ParameterError(f"stream for k={stream.k} carries no volumes")
    return np.asarray(stream.volumes, dtype=np.float64)


def volume_power(stream: FaceStream, alpha: float) -> FunctionalResult:
    spec = FunctionalSpec(stream.k, alpha)
    if stream.dim:
        spec.check(stream.dim)
    n = len(stream)
    if spec.alpha == 0.0 or spec.k == 0:
        # a vertex has unit 0-dimensional volume
        return FunctionalResult(spec, float(n), n)
    vols = _volumes(stream)
    zero = vols == 0.0
    if spec.alpha < 0 and np.any(zero):
        raise DegenerateFaceError(f"zero-volume {stream.k}-face raised to alpha={alpha}")
    value = float(np.sum(vols[~zero] ** spec.alpha))
    return FunctionalResult(spec, value, n)


def _canonical_order(pts: np.ndarray, delta: float) -> np.ndarray:
    """Permutation putting points in grid-cell order (better cache locality)."""
    if len(pts) < 2:
        return np.arange(len(pts))
    cells = np.floor((pts - pts.min(axis=0)) / delta).astype(np.int64)
    return np.lexsort(cells.T[::-1])


def evaluate_sequence(cloud, delta: float, seq: AdmissibleSequence,
                      complex_kind: str = "rips") -> list[FunctionalResult]:
    """All functionals of ``seq`` from a single clique expansion."""
    if complex_kind not in COMPLEX_KINDS:
        raise ParameterError(f"complex kind must be one of {COMPLEX_KINDS}, got {complex_kind!r}")
    if not isinstance(seq, AdmissibleSequence):
        seq = AdmissibleSequence(tuple(seq))
    pts = _points_of(cloud)
    seq.check(pts.shape[1])
    pts = np.ascontiguousarray(pts[_canonical_order(pts, delta)])
    graph = build_neighbor_graph(pts, delta)
    cech_r2 = 0.25 * delta * delta if complex_kind == "cech" else -1.0
    counts, sums, err = kernels.clique_sums(
        pts, graph.indptr, graph.indices, seq.k_max,
        np.array(seq.ks, dtype=np.int32), np.array(seq.alphas, dtype=np.float64), cech_r2)
    if err == kernels.ERR_DEGENERATE:
        raise DegenerateFaceError("zero-volume face raised to a negative power")
    if err == kernels.ERR_GRAM:
        raise NumericalError("negative Gram determinant beyond round-off")
    return [FunctionalResult(s, float(v), int(counts[s.k])) for s, v in zip(seq, sums)]


def typical_moment_estimate(stream: FaceStream, alpha: float) -> float:
    """Mean of vol**alpha over the faces of the stream."""
    if len(stream) == 0:
        raise UndefinedEstimateError(f"no {stream.k}-faces to average over")
    res = volume_power(stream, alpha)
    return res.value / res.face_count


def typical_jface_volume(stream: FaceStream, cloud, j: int) -> float:
    """Mean over k-faces of the summed j-volume of their j-dimensional faces."""
    k = stream.k
    pts = _points_of(cloud)
    if not 1 <= j < k or k > pts.shape[1]:
        raise ParameterError(f"need 1 <= j < k <= d, got j={j}, k={k}, d={pts.shape[1]}")
    if len(stream) == 0:
        raise UndefinedEstimateError(f"no {k}-faces to average over")
    total = 0.0
    subsets = list(combinations(range(k + 1), j + 1))
    for face in stream.faces:
        for sub in subsets:
            total += simplex_volume(pts[face[list(sub)]])
    return total / len(stream)


def ordered_tuple_sum(cloud, delta: float, k: int, alpha: float) -> float:
    """Brute-force sum over ordered distinct (k+1)-tuples of Delta_delta^alpha.

    Exponential cost; intended for checking small instances only.
    """
    from itertools import permutations

    from .geometry import diameter_le

    pts = _points_of(cloud)
    total = 0.0
    for tup in permutations(range(len(pts)), k + 1):
        sub = pts[list(tup)]
        if not diameter_le(sub, delta):
            continue
        if alpha == 0.0:
            total += 1.0
        else:
            total += simplex_volume(sub) ** alpha
    return total

