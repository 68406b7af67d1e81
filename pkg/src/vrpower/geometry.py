"""Observation windows, Poisson sampling and metric primitives.

Everything here is a pure function of its inputs. Distances are compared
through squared norms, ``sum((x - y)**2) <= s**2``, in every module so the
grid search and the brute-force oracles agree bit for bit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .errors import DimensionError, NumericalError, ParameterError

GRAM_CLAMP = 1e-12
SUPPORT_TOL = 1e-9


def unit_ball_volume(d: int) -> float:
    """Volume kappa_d of the d-dimensional unit ball.

    Uses kappa_d = 2*pi/d * kappa_{d-2}, which keeps kappa_1 = 2 exact.
    """
    if int(d) != d or d < 0:
        raise ParameterError(f"dimension must be a non-negative integer, got {d}")
    v = 1.0 if d % 2 == 0 else 2.0
    for j in range(2 + d % 2, int(d) + 1, 2):
        v *= 2.0 * math.pi / j
    return v


class WindowKind(str, Enum):
    UNIT_CUBE = "cube"
    UNIT_VOLUME_BALL = "ball"


@dataclass(frozen=True)
class Window:
    """Convex compact window of volume one.

    The cube is ``[0, 1]^d``; the ball is centred at the origin with radius
    ``kappa_d^(-1/d)``.
    """

    kind: WindowKind
    dim: int

    def __post_init__(self):
        object.__setattr__(self, "kind", WindowKind(self.kind))
        if int(self.dim) != self.dim or self.dim < 1:
            raise ParameterError(f"window dimension must be a positive integer, got {self.dim}")

    @classmethod
    def cube(cls, dim: int) -> "Window":
        return cls(WindowKind.UNIT_CUBE, dim)

    @classmethod
    def ball(cls, dim: int) -> "Window":
        return cls(WindowKind.UNIT_VOLUME_BALL, dim)

    @property
    def radius(self) -> float:
        if self.kind is WindowKind.UNIT_CUBE:
            raise ParameterError("cube windows have no radius")
        return unit_ball_volume(self.dim) ** (-1.0 / self.dim)

    @property
    def volume(self) -> float:
        return 1.0

    @property
    def diameter(self) -> float:
        if self.kind is WindowKind.UNIT_CUBE:
            return math.sqrt(self.dim)
        return 2.0 * self.radius

    @property
    def surface_area(self) -> float:
        if self.kind is WindowKind.UNIT_CUBE:
            return 2.0 * self.dim
        d = self.dim
        return d * unit_ball_volume(d) * self.radius ** (d - 1)

    def contains(self, points) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        if self.kind is WindowKind.UNIT_CUBE:
            return np.all((pts >= 0.0) & (pts <= 1.0), axis=1)
        return np.einsum("ij,ij->i", pts, pts) <= self.radius ** 2


@dataclass(frozen=True, eq=False)
class PointCloud:
    """A sampled configuration together with the seed that generated it."""

    points: np.ndarray
    seed: int
    intensity: float
    window: Window | None = None
    dim: int = field(init=False)

    def __post_init__(self):
        pts = np.ascontiguousarray(self.points, dtype=np.float64)
        if pts.ndim != 2:
            raise ParameterError("points must be an (n, d) array")
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "dim", pts.shape[1])

    def __len__(self):
        return self.points.shape[0]

    @classmethod
    def from_points(cls, points, dim: int | None = None) -> "PointCloud":
        pts = np.asarray(points, dtype=np.float64)
        if pts.size == 0:
            pts = pts.reshape(0, dim if dim is not None else 1)
        elif pts.ndim == 1:
            pts = pts.reshape(-1, 1)
        return cls(pts, seed=0, intensity=float(max(len(pts), 1)))


def make_rng(seed) -> np.random.Generator:
    """Counter-based generator (Philox) keyed by an integer or a seed tuple."""
    if isinstance(seed, np.random.SeedSequence):
        ss = seed
    else:
        ss = np.random.SeedSequence(seed)
    return np.random.Generator(np.random.Philox(ss))


def stream_seed(master: int, *index: int) -> int:
    """64-bit seed of the stream addressed by ``(master, *index)``.

    Independent of the order in which streams are requested.
    """
    ss = np.random.SeedSequence([int(master), *map(int, index)])
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def sample_poisson(window: Window, t: float, seed: int) -> PointCloud:
    """Poisson process of intensity ``t`` on ``window``.

    Draws ``N ~ Poisson(t)`` and then ``N`` i.i.d. uniform points. The ball
    uses rejection from its bounding cube.
    """
    if not isinstance(window, Window):
        raise ParameterError(f"unsupported window {window!r}")
    if not (t > 0) or not math.isfinite(t):
        raise ParameterError(f"intensity must be positive, got {t}")
    rng = make_rng(seed)
    n = int(rng.poisson(t * window.volume))
    d = window.dim
    if window.kind is WindowKind.UNIT_CUBE:
        pts = rng.random((n, d))
    else:
        r = window.radius
        chunks, have = [], 0
        while have < n:
            want = max(16, int(1.2 * (n - have) * 2**d / unit_ball_volume(d)))
            cand = (2.0 * rng.random((want, d)) - 1.0) * r
            cand = cand[np.einsum("ij,ij->i", cand, cand) <= r * r]
            chunks.append(cand)
            have += len(cand)
        pts = np.concatenate(chunks)[:n] if chunks else np.empty((0, d))
    return PointCloud(pts, seed=int(seed), intensity=float(t), window=window)


def _as_simplex(points, k_expected=None) -> np.ndarray:
    pts = np.asarray(points, dtype=np.float64)
    if pts.ndim == 1:
        pts = pts.reshape(-1, 1)
    if pts.ndim != 2 or pts.shape[0] < 1:
        raise ParameterError("expected a non-empty (k+1, d) array of points")
    return pts


def gram_determinant(points) -> float:
    pts = _as_simplex(points)
    edges = pts[1:] - pts[0]
    return float(np.linalg.det(edges @ edges.T)) if len(edges) else 1.0


def simplex_volume(points) -> float:
    """k-dimensional volume of the convex hull of ``k + 1`` points in R^d.

    Computed as ``sqrt(det G) / k!`` with ``G`` the Gram matrix of the edges
    at the first point. Determinants within ``GRAM_CLAMP * diam**(2k)`` of
    zero are roundoff and count as zero; more negative ones raise. The
    diameter scale keeps the test independent of the vertex order.
    """
    pts = _as_simplex(points)
    k = pts.shape[0] - 1
    d = pts.shape[1]
    if k < 1:
        raise ParameterError("a simplex needs at least two points")
    if k > d:
        raise DimensionError(f"a {k}-simplex has no volume in R^{d}")
    det = gram_determinant(pts)
    bound = GRAM_CLAMP * squared_diameter(pts) ** k
    if det <= bound:
        if det < -bound:
            raise NumericalError(f"negative Gram determinant {det:.3e}")
        det = 0.0
    return math.sqrt(det) / math.factorial(k)


def squared_diameter(points) -> float:
    pts = _as_simplex(points)
    best = 0.0
    for i in range(len(pts)):
        for j in range(i + 1, len(pts)):
            diff = pts[i] - pts[j]
            best = max(best, float(np.dot(diff, diff)))
    return best


def diameter(points) -> float:
    return math.sqrt(squared_diameter(points))


def diameter_le(points, s: float) -> bool:
    """True iff every pairwise distance is at most ``s`` (no tolerance)."""
    pts = _as_simplex(points)
    s2 = s * s
    for i in range(len(pts)):
        for j in range(i + 1, len(pts)):
            diff = pts[i] - pts[j]
            if float(np.dot(diff, diff)) > s2:
                return False
    return True


def _circumball(support: np.ndarray):
    """Smallest ball with all of ``support`` on its boundary, within their affine hull."""
    p0 = support[0]
    if len(support) == 1:
        return p0.copy(), 0.0
    edges = support[1:] - p0
    gram = edges @ edges.T
    rhs = 0.5 * np.einsum("ij,ij->i", edges, edges)
    lam, *_ = np.linalg.lstsq(gram, rhs, rcond=None)
    offset = lam @ edges
    return p0 + offset, float(np.dot(offset, offset))


def min_enclosing_ball(points):
    """Centre and radius of the smallest enclosing ball (Welzl, move-to-front).

    Support-set membership is tested with relative tolerance ``1e-9``.
    """
    pts = _as_simplex(points)
    n = len(pts)
    if n == 0:
        raise ParameterError("empty point set")
    order = list(range(n))
    d = pts.shape[1]

    def inside(c, r2, p):
        diff = p - c
        return float(np.dot(diff, diff)) <= r2 * (1.0 + SUPPORT_TOL) + 1e-300

    def mtf(end, support):
        if support:
            c, r2 = _circumball(pts[support])
        else:
            c, r2 = pts[order[0]].copy(), -1.0
        if len(support) == d + 1:
            return c, r2
        i = 0
        while i < end:
            idx = order[i]
            if r2 < 0.0 or not inside(c, r2, pts[idx]):
                if r2 < 0.0 and not support:
                    c, r2 = pts[idx].copy(), 0.0
                else:
                    c, r2 = mtf(i, support + [idx])
                order.insert(0, order.pop(i))
            i += 1
        return c, r2

    c, r2 = mtf(n, [])
    return c, math.sqrt(max(r2, 0.0))


def min_enclosing_ball_radius(points) -> float:
    return min_enclosing_ball(points)[1]


def inner_parallel_volume(window: Window, delta: float) -> float:
    """Exact volume of ``{x : B(x, delta) subset W}``."""
    if delta < 0:
        raise ParameterError("delta must be non-negative")
    d = window.dim
    if window.kind is WindowKind.UNIT_CUBE:
        return max(1.0 - 2.0 * delta, 0.0) ** d
    r = window.radius
    return (max(r - delta, 0.0) / r) ** d
