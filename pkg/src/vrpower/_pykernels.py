"""Pure-Python/numpy implementations of the compiled kernels.

Same signatures and return values as ``_kernels``. The Čech predicate here
goes through the Welzl routine in ``geometry`` rather than subset
enumeration, so comparing both backends doubles as an oracle check.
"""

import itertools
import math
from collections import defaultdict

import numpy as np

from .geometry import GRAM_CLAMP, SUPPORT_TOL, min_enclosing_ball, squared_diameter

ERR_NONE = 0
ERR_DEGENERATE = 1
ERR_GRAM = 2


def neighbor_csr(points, delta):
    P = np.ascontiguousarray(points, dtype=np.float64)
    n, d = P.shape
    if n == 0:
        return np.zeros(1, dtype=np.int64), np.zeros(0, dtype=np.int64)
    lo = P.min(axis=0)
    cells = defaultdict(list)
    for i, c in enumerate(map(tuple, np.floor((P - lo) / delta).astype(np.int64))):
        cells[c].append(i)
    cells = {c: np.array(v, dtype=np.int64) for c, v in cells.items()}
    d2 = delta * delta
    offsets = list(itertools.product((-1, 0, 1), repeat=d))
    rows = [[] for _ in range(n)]
    for c, members in cells.items():
        for off in offsets:
            other = cells.get(tuple(a + b for a, b in zip(c, off)))
            if other is None:
                continue
            diff = P[members][:, None, :] - P[other][None, :, :]
            dist2 = np.sum(diff * diff, axis=2)
            for a, b in zip(*np.nonzero(dist2 <= d2)):
                i, j = members[a], other[b]
                if i != j:
                    rows[i].append(int(j))
    indptr = np.zeros(n + 1, dtype=np.int64)
    indptr[1:] = np.cumsum([len(r) for r in rows])
    indices = np.array([j for r in rows for j in sorted(r)], dtype=np.int64)
    return indptr, indices


def gram_volume(P, verts):
    k = len(verts) - 1
    edges = P[list(verts[1:])] - P[verts[0]]
    G = edges @ edges.T
    det = float(np.linalg.det(G))
    bound = GRAM_CLAMP * squared_diameter(P[list(verts)]) ** k
    if det <= bound:
        if det < -bound:
            return None
        det = 0.0
    return math.sqrt(det) / math.factorial(k)


def _walk(P, indptr, indices, kmax, cech_r2, visit):
    """Ordered clique expansion; ``visit(verts)`` returns False to stop."""
    n = P.shape[0]
    cech = cech_r2 >= 0.0
    nbrs = [indices[indptr[i]:indptr[i + 1]] for i in range(n)]

    def expand(verts, cand):
        if cech and len(verts) >= 3:
            _, r = min_enclosing_ball(P[verts])
            if r * r > cech_r2:
                return True
        if not visit(verts):
            return False
        if len(verts) - 1 == kmax:
            return True
        for idx, v in enumerate(cand):
            nxt = np.intersect1d(cand[idx + 1:], nbrs[v], assume_unique=True)
            if not expand(verts + [int(v)], nxt):
                return False
        return True

    for v0 in range(n):
        if not expand([v0], nbrs[v0][nbrs[v0] > v0]):
            return False
    return True


def clique_sums(points, indptr, indices, kmax, spec_k, spec_alpha, cech_r2=-1.0):
    P = np.ascontiguousarray(points, dtype=np.float64)
    spec_k = np.asarray(spec_k, dtype=np.int64)
    spec_alpha = np.asarray(spec_alpha, dtype=np.float64)
    counts = np.zeros(kmax + 1, dtype=np.int64)
    sums = np.zeros(len(spec_k), dtype=np.float64)
    need_vol = [bool(np.any((spec_k == k) & (spec_alpha != 0.0))) for k in range(kmax + 1)]
    err = [ERR_NONE]

    def visit(verts):
        k = len(verts) - 1
        counts[k] += 1
        vol = 1.0 if k == 0 else 0.0
        if need_vol[k] and k >= 1:
            vol = gram_volume(P, verts)
            if vol is None:
                err[0] = ERR_GRAM
                return False
        for s in np.nonzero(spec_k == k)[0]:
            a = spec_alpha[s]
            if a == 0.0:
                sums[s] += 1.0
            elif vol == 0.0:
                if a < 0.0:
                    err[0] = ERR_DEGENERATE
                    return False
            else:
                sums[s] += vol ** a
        return True

    _walk(P, indptr, indices, kmax, cech_r2, visit)
    return counts, sums, err[0]


def clique_faces(points, indptr, indices, kmax, cech_r2=-1.0, with_volumes=False):
    P = np.ascontiguousarray(points, dtype=np.float64)
    d = P.shape[1]
    faces = [[] for _ in range(kmax + 1)]
    vols = [[] for _ in range(kmax + 1)]
    err = [ERR_NONE]

    def visit(verts):
        k = len(verts) - 1
        faces[k].append(verts)
        if with_volumes and 1 <= k <= d:
            vol = gram_volume(P, verts)
            if vol is None:
                err[0] = ERR_GRAM
                return False
            vols[k].append(vol)
        return True

    _walk(P, indptr, indices, kmax, cech_r2, visit)
    out_faces = [np.array(f, dtype=np.int64).reshape(-1, k + 1) for k, f in enumerate(faces)]
    out_vols = [
        np.array(v, dtype=np.float64) if with_volumes and 1 <= k <= d else None
        for k, v in enumerate(vols)
    ]
    return out_faces, out_vols, err[0]


def miniball_r2_batch(P):
    """Vectorised subset enumeration over an (n, m, d) stack of point sets."""
    A = np.asarray(P, dtype=np.float64)
    n, m, d = A.shape
    best = np.full(n, np.inf)
    for size in range(1, min(m, d + 1) + 1):
        for sub in itertools.combinations(range(m), size):
            p0 = A[:, sub[0], :]
            if size == 1:
                center = p0
                r2 = np.zeros(n)
                ok = np.ones(n, dtype=bool)
            else:
                E = A[:, list(sub[1:]), :] - p0[:, None, :]
                G = E @ np.swapaxes(E, 1, 2)
                rhs = 0.5 * np.einsum("nij,nij->ni", E, E)
                scale = np.max(np.diagonal(G, axis1=1, axis2=2), axis=1)
                det = np.linalg.det(G)
                ok = np.abs(det) > (1e-12 * np.maximum(scale, 1e-300)) ** (size - 1)
                Gs = np.where(ok[:, None, None], G, np.eye(size - 1))
                lam = np.linalg.solve(Gs, rhs[..., None])[..., 0]
                off = np.einsum("ni,nic->nc", lam, E)
                center = p0 + off
                r2 = np.einsum("nc,nc->n", off, off)
            dist2 = np.sum((A - center[:, None, :]) ** 2, axis=2)
            encl = ok & np.all(dist2 <= r2[:, None] * (1.0 + SUPPORT_TOL) + 1e-300, axis=1)
            best = np.where(encl & (r2 < best), r2, best)
    return best
