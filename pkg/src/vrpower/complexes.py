"""Gilbert graph construction and Rips / Čech face enumeration."""

from __future__ import annotations

import io
import math
from dataclasses import dataclass

import numpy as np

from . import kernels
from .errors import NumericalError, ParameterError
from .geometry import PointCloud

DEFAULT_K_MAX = 4


@dataclass(frozen=True, eq=False)
class NeighborGraph:
    """Graph joining points at distance at most ``delta``, stored as CSR.

    ``indices[indptr[i]:indptr[i+1]]`` is the sorted neighbour list of ``i``.
    """

    n: int
    indptr: np.ndarray
    indices: np.ndarray
    delta: float
    points: np.ndarray

    def adjacency(self, i: int) -> np.ndarray:
        return self.indices[self.indptr[i]:self.indptr[i + 1]]

    @property
    def num_edges(self) -> int:
        return len(self.indices) // 2

    def edges(self) -> np.ndarray:
        rows = np.repeat(np.arange(self.n), np.diff(self.indptr))
        keep = rows < self.indices
        return np.column_stack([rows[keep], self.indices[keep]])


@dataclass(frozen=True, eq=False)
class FaceStream:
    """All k-faces of one complex, lexicographically ordered vertex tuples."""

    k: int
    faces: np.ndarray
    volumes: np.ndarray | None = None
    kind: str = "rips"
    delta: float = float("nan")
    dim: int = 0

    def __len__(self):
        return len(self.faces)

    def __iter__(self):
        return (tuple(int(v) for v in f) for f in self.faces)

    def as_set(self) -> set[tuple[int, ...]]:
        return set(iter(self))


def _points_of(cloud) -> np.ndarray:
    if isinstance(cloud, PointCloud):
        return cloud.points
    pts = np.asarray(cloud, dtype=np.float64)
    return pts.reshape(-1, 1) if pts.ndim == 1 else pts


def build_neighbor_graph(cloud, delta: float) -> NeighborGraph:
    if not (delta > 0) or not math.isfinite(delta):
        raise ParameterError(f"delta must be positive, got {delta}")
    pts = _points_of(cloud)
    indptr, indices = kernels.neighbor_csr(pts, delta)
    return NeighborGraph(len(pts), indptr, indices, float(delta), pts)


def _check_kmax(k_max):
    if int(k_max) != k_max or k_max < 0:
        raise ParameterError(f"k_max must be a non-negative integer, got {k_max}")


def _streams(graph, k_max, cech_r2, with_volumes, kind):
    _check_kmax(k_max)
    faces, vols, err = kernels.clique_faces(
        graph.points, graph.indptr, graph.indices, k_max, cech_r2, with_volumes
    )
    if err == kernels.ERR_GRAM:
        raise NumericalError("negative Gram determinant beyond round-off")
    d = graph.points.shape[1]
    return [
        FaceStream(k, faces[k], vols[k], kind=kind, delta=graph.delta, dim=d)
        for k in range(k_max + 1)
    ]


def enumerate_rips_faces(graph: NeighborGraph, k_max: int = DEFAULT_K_MAX,
                         with_volumes: bool = False) -> list[FaceStream]:
    """Every (k+1)-clique of ``graph`` for k = 0..k_max.

    Cliques are grown only by common neighbours with larger index, so each
    appears once and in lexicographic order.
    """
    return _streams(graph, k_max, -1.0, with_volumes, "rips")


def enumerate_cech_faces(cloud, delta: float, k_max: int = DEFAULT_K_MAX,
                         with_volumes: bool = False) -> list[FaceStream]:
    """Rips cliques at the same ``delta`` whose miniball radius is <= delta/2."""
    graph = cloud if isinstance(cloud, NeighborGraph) else build_neighbor_graph(cloud, delta)
    return _streams(graph, k_max, 0.25 * delta * delta, with_volumes, "cech")


def f_vector(streams) -> np.ndarray:
    return np.array([len(s) for s in streams], dtype=np.int64)


def write_face_dump(streams, fh=None) -> str:
    """One face per line: ``k v0 ... vk [volume]``."""
    buf = io.StringIO()
    for s in streams:
        for i, face in enumerate(s.faces):
            parts = [str(s.k), *map(str, face.tolist())]
            if s.volumes is not None:
                parts.append(repr(float(s.volumes[i])))
            buf.write(" ".join(parts) + "\n")
    text = buf.getvalue()
    if fh is not None:
        fh.write(text)
    return text


def read_face_dump(text: str) -> dict[int, list[tuple[tuple[int, ...], float | None]]]:
    out: dict[int, list] = {}
    for line in text.splitlines():
        if not line.strip():
            continue
        tok = line.split()
        k = int(tok[0])
        verts = tuple(int(v) for v in tok[1:k + 2])
        if len(verts) != k + 1:
            raise ParameterError(f"malformed face line: {line!r}")
        vol = float(tok[k + 2]) if len(tok) > k + 2 else None
        out.setdefault(k, []).append((verts, vol))
    return out
