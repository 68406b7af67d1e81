# distutils: language = c++
# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled kernels: grid neighbour search, clique expansion, small miniballs.

Mirrors the API of ``_pykernels`` exactly; ``kernels`` picks one at import.
"""

import itertools
import math

import numpy as np
cimport numpy as cnp
from libc.math cimport sqrt, pow, fabs
from libc.stdint cimport int64_t
from libcpp.vector cimport vector
from libcpp.algorithm cimport sort

cnp.import_array()

ctypedef int64_t idx_t

cdef enum:
    MAXV = 16      # max vertices per face handled by the clique walker
    MAXD = 16      # max ambient dimension

cdef double GRAM_CLAMP = 1e-12
cdef double SUPPORT_TOL = 1e-9

cdef enum:
    E_NONE = 0
    E_DEGENERATE = 1
    E_GRAM = 2

ERR_NONE = E_NONE
ERR_DEGENERATE = E_DEGENERATE
ERR_GRAM = E_GRAM


cdef inline idx_t _lower_bound(const idx_t* a, idx_t n, idx_t key) noexcept nogil:
    cdef idx_t lo = 0, hi = n, mid
    while lo < hi:
        mid = (lo + hi) >> 1
        if a[mid] < key:
            lo = mid + 1
        else:
            hi = mid
    return lo


def _grid_layout(cnp.ndarray pts, double delta):
    cdef Py_ssize_t d = pts.shape[1]
    lo = pts.min(axis=0)
    extent = pts.max(axis=0) - lo
    side = delta
    while True:
        ncell = np.floor(extent / side).astype(np.int64) + 1
        if float(np.prod(ncell.astype(np.float64))) < 2.0 ** 62:
            break
        side *= 2.0
    coords = np.floor((pts - lo) / side).astype(np.int64)
    coords = np.minimum(coords, ncell - 1)
    strides = np.ones(d, dtype=np.int64)
    for j in range(1, d):
        strides[j] = strides[j - 1] * ncell[j - 1]
    keys = coords @ strides
    return coords, ncell, strides, keys


def neighbor_csr(points, double delta):
    """Symmetric CSR adjacency of the graph ``|x_i - x_j| <= delta``.

    Uses a uniform grid with cell side ``>= delta`` so only the ``3^d``
    surrounding cells are scanned. Rows are sorted ascending.
    """
    cdef cnp.ndarray[double, ndim=2, mode="c"] P = np.ascontiguousarray(points, dtype=np.float64)
    cdef Py_ssize_t n = P.shape[0], d = P.shape[1]
    if n == 0:
        return np.zeros(1, dtype=np.int64), np.zeros(0, dtype=np.int64)
    coords_a, ncell_a, strides_a, keys_a = _grid_layout(P, delta)
    order_a = np.argsort(keys_a, kind="stable").astype(np.int64)
    skeys_a = np.ascontiguousarray(keys_a[order_a])
    offsets_a = np.array(list(itertools.product((-1, 0, 1), repeat=d)), dtype=np.int64).reshape(-1, d)

    cdef const idx_t[:, ::1] coords = np.ascontiguousarray(coords_a)
    cdef const idx_t[::1] ncell = np.ascontiguousarray(ncell_a)
    cdef const idx_t[::1] strides = np.ascontiguousarray(strides_a)
    cdef const idx_t[::1] keys = np.ascontiguousarray(keys_a)
    cdef const idx_t[::1] order = order_a
    cdef const idx_t[::1] skeys = skeys_a
    cdef const idx_t[:, ::1] offsets = offsets_a
    cdef Py_ssize_t noff = offsets.shape[0]
    cdef double d2 = delta * delta, s, diff
    cdef vector[idx_t] ei, ej
    cdef Py_ssize_t i, j, o, c, p, lo, hi
    cdef idx_t nk, cc
    cdef bint ok

    for i in range(n):
        for o in range(noff):
            ok = True
            nk = keys[i]
            for c in range(d):
                cc = coords[i, c] + offsets[o, c]
                if cc < 0 or cc >= ncell[c]:
                    ok = False
                    break
                nk += offsets[o, c] * strides[c]
            if not ok:
                continue
            lo = _lower_bound(&skeys[0], n, nk)
            hi = _lower_bound(&skeys[0], n, nk + 1)
            for p in range(lo, hi):
                j = order[p]
                if j <= i:
                    continue
                s = 0.0
                for c in range(d):
                    diff = P[i, c] - P[j, c]
                    s += diff * diff
                if s <= d2:
                    ei.push_back(i)
                    ej.push_back(j)

    cdef Py_ssize_t m = ei.size(), e
    indptr_a = np.zeros(n + 1, dtype=np.int64)
    indices_a = np.empty(2 * m, dtype=np.int64)
    cdef idx_t[::1] indptr = indptr_a
    cdef idx_t[::1] indices = indices_a
    for e in range(m):
        indptr[ei[e] + 1] += 1
        indptr[ej[e] + 1] += 1
    for i in range(n):
        indptr[i + 1] += indptr[i]
    fill_a = indptr_a[:n].copy()
    cdef idx_t[::1] fill = fill_a
    for e in range(m):
        indices[fill[ei[e]]] = ej[e]
        fill[ei[e]] += 1
        indices[fill[ej[e]]] = ei[e]
        fill[ej[e]] += 1
    for i in range(n):
        if indptr[i + 1] - indptr[i] > 1:
            sort(&indices[indptr[i]], &indices[0] + indptr[i + 1])
    return indptr_a, indices_a


cdef double _gram_det(const double[:, ::1] P, const idx_t* verts, int k, int d, int* err) noexcept nogil:
    """Determinant of the k x k Gram matrix of edges at verts[0]."""
    cdef double G[MAXV][MAXV]
    cdef double E[MAXV][MAXD]
    cdef int a, b, c, piv
    cdef double s, tmp, det = 1.0, best, diam2 = 0.0, bound
    for a in range(k):
        for c in range(d):
            E[a][c] = P[verts[a + 1], c] - P[verts[0], c]
    for a in range(k):
        for b in range(a, k):
            s = 0.0
            for c in range(d):
                s += E[a][c] * E[b][c]
            G[a][b] = s
            G[b][a] = s
    # squared diameter, so the flatness test does not depend on the base vertex
    for a in range(k):
        diam2 = max(diam2, G[a][a])
        for b in range(a + 1, k):
            diam2 = max(diam2, G[a][a] + G[b][b] - 2.0 * G[a][b])
    bound = GRAM_CLAMP * pow(diam2, k)
    for a in range(k):
        piv = a
        best = fabs(G[a][a])
        for b in range(a + 1, k):
            if fabs(G[b][a]) > best:
                best = fabs(G[b][a])
                piv = b
        if best == 0.0:
            return 0.0
        if piv != a:
            det = -det
            for c in range(k):
                tmp = G[a][c]
                G[a][c] = G[piv][c]
                G[piv][c] = tmp
        det *= G[a][a]
        for b in range(a + 1, k):
            tmp = G[b][a] / G[a][a]
            for c in range(a, k):
                G[b][c] -= tmp * G[a][c]
    # below roundoff relative to diam^(2k): flat face
    if det <= bound:
        if det < -bound:
            err[0] = E_GRAM
        return 0.0
    return det


cdef double _factorial(int k) noexcept nogil:
    cdef double f = 1.0
    cdef int i
    for i in range(2, k + 1):
        f *= i
    return f


cdef bint _circumball(const double* pts, int d, const int* sub, int s,
                      double* center, double* r2) noexcept nogil:
    """Circumcentre of the points pts[sub[0..s-1]] inside their affine hull.

    Returns False for affinely dependent subsets.
    """
    cdef double G[MAXV][MAXV + 1]
    cdef double E[MAXV][MAXD]
    cdef double lam[MAXV]
    cdef int a, b, c, piv, m = s - 1
    cdef double tmp, best, scale = 0.0, acc
    cdef const double* p0 = pts + sub[0] * d
    if s == 1:
        for c in range(d):
            center[c] = p0[c]
        r2[0] = 0.0
        return True
    for a in range(m):
        for c in range(d):
            E[a][c] = pts[sub[a + 1] * d + c] - p0[c]
    for a in range(m):
        for b in range(a, m):
            acc = 0.0
            for c in range(d):
                acc += E[a][c] * E[b][c]
            G[a][b] = acc
            G[b][a] = acc
        G[a][m] = 0.5 * G[a][a]
        if G[a][a] > scale:
            scale = G[a][a]
    for a in range(m):
        piv = a
        best = fabs(G[a][a])
        for b in range(a + 1, m):
            if fabs(G[b][a]) > best:
                best = fabs(G[b][a])
                piv = b
        if best <= 1e-12 * scale:
            return False
        if piv != a:
            for c in range(m + 1):
                tmp = G[a][c]
                G[a][c] = G[piv][c]
                G[piv][c] = tmp
        for b in range(a + 1, m):
            tmp = G[b][a] / G[a][a]
            for c in range(a, m + 1):
                G[b][c] -= tmp * G[a][c]
    for a in range(m - 1, -1, -1):
        acc = G[a][m]
        for b in range(a + 1, m):
            acc -= G[a][b] * lam[b]
        lam[a] = acc / G[a][a]
    acc = 0.0
    for c in range(d):
        tmp = 0.0
        for a in range(m):
            tmp += lam[a] * E[a][c]
        center[c] = p0[c] + tmp
        acc += tmp * tmp
    r2[0] = acc
    return True


cdef double _miniball_r2(const double* pts, int npts, int d, double stop_below) noexcept nogil:
    """Squared radius of the smallest enclosing ball of npts points.

    Minimum over circumballs of affinely independent subsets that enclose
    every point. Returns early once a ball with r2 <= stop_below is found
    (pass a negative value to get the exact minimum).
    """
    cdef int sub[MAXV]
    cdef double center[MAXD]
    cdef double r2, best = 1e300, acc, diff
    cdef int mask, s, a, c, q, maxs = d + 1
    cdef bint encl
    for mask in range(1, 1 << npts):
        s = 0
        for a in range(npts):
            if mask & (1 << a):
                sub[s] = a
                s += 1
        if s > maxs:
            continue
        if not _circumball(pts, d, sub, s, center, &r2):
            continue
        if r2 >= best:
            continue
        encl = True
        for q in range(npts):
            acc = 0.0
            for c in range(d):
                diff = pts[q * d + c] - center[c]
                acc += diff * diff
            if acc > r2 * (1.0 + SUPPORT_TOL) + 1e-300:
                encl = False
                break
        if encl:
            best = r2
            if best <= stop_below:
                return best
    return best


def miniball_r2_batch(P):
    """Squared miniball radius for each point set in an (n, m, d) array."""
    cdef cnp.ndarray[double, ndim=3, mode="c"] A = np.ascontiguousarray(P, dtype=np.float64)
    cdef Py_ssize_t n = A.shape[0], m = A.shape[1], d = A.shape[2], i
    if m > MAXV or d > MAXD:
        raise ValueError("point sets too large for the compiled miniball")
    out_a = np.empty(n, dtype=np.float64)
    cdef double[::1] out = out_a
    cdef const double* base = &A[0, 0, 0] if n > 0 else NULL
    with nogil:
        for i in range(n):
            out[i] = _miniball_r2(base + i * m * d, <int>m, <int>d, -1.0)
    return out_a


cdef class _Walker:
    cdef const double[:, ::1] P
    cdef const idx_t[::1] indptr
    cdef const idx_t[::1] indices
    cdef int kmax, d
    cdef bint cech, collect, any_vol
    cdef double cech_r2
    cdef idx_t[:, ::1] cand
    cdef idx_t clen[MAXV]
    cdef idx_t verts[MAXV]
    cdef double buf[MAXV * MAXD]
    cdef long long[::1] counts
    cdef double[::1] sums
    cdef const int[::1] spec_k
    cdef const double[::1] spec_alpha
    cdef int nspec
    cdef bint need_vol[MAXV]
    cdef bint count_only[MAXV]
    cdef unsigned char[::1] mark
    cdef vector[vector[idx_t]] faces
    cdef vector[vector[double]] vols
    cdef int err

    def __init__(self, P, indptr, indices, int kmax, spec_k, spec_alpha,
                 double cech_r2, bint collect, with_volumes):
        cdef int k, s
        self.P = P
        self.indptr = indptr
        self.indices = indices
        self.kmax = kmax
        self.d = P.shape[1]
        self.cech = cech_r2 >= 0.0
        self.cech_r2 = cech_r2
        self.collect = collect
        self.spec_k = spec_k
        self.spec_alpha = spec_alpha
        self.nspec = spec_k.shape[0]
        n = P.shape[0]
        maxdeg = int(np.max(np.diff(indptr))) if n > 0 else 0
        self.cand = np.zeros((kmax + 1, max(maxdeg, 1)), dtype=np.int64)
        self.counts = np.zeros(kmax + 1, dtype=np.int64)
        self.mark = np.zeros(max(n, 1), dtype=np.uint8)
        self.sums = np.zeros(self.nspec, dtype=np.float64)
        self.err = 0
        for k in range(kmax + 1):
            self.need_vol[k] = bool(with_volumes) and 1 <= k <= self.d
            for s in range(self.nspec):
                if spec_k[s] == k and spec_alpha[s] != 0.0:
                    self.need_vol[k] = True
        for k in range(kmax + 1):
            self.count_only[k] = not (self.need_vol[k] or self.cech or self.collect)
        self.faces.resize(kmax + 1)
        self.vols.resize(kmax + 1)

    cdef void record(self, int k, idx_t mult) noexcept:
        cdef double vol = 0.0, a
        cdef int s, j
        self.counts[k] += mult
        if k == 0:
            vol = 1.0  # counting measure of a single point
        elif self.need_vol[k]:
            vol = sqrt(max(_gram_det(self.P, self.verts, k, self.d, &self.err), 0.0)) / _factorial(k)
        for s in range(self.nspec):
            if self.spec_k[s] != k:
                continue
            a = self.spec_alpha[s]
            if a == 0.0:
                self.sums[s] += mult
            elif vol == 0.0:
                if a < 0.0:
                    self.err = E_DEGENERATE
            else:
                self.sums[s] += pow(vol, a)
        if self.collect:
            for j in range(k + 1):
                self.faces[k].push_back(self.verts[j])
            if self.need_vol[k]:
                self.vols[k].push_back(vol)

    cdef bint cech_ok(self, int depth) noexcept:
        cdef int a, c
        if depth < 2:
            return True
        for a in range(depth + 1):
            for c in range(self.d):
                self.buf[a * self.d + c] = self.P[self.verts[a], c]
        return _miniball_r2(self.buf, depth + 1, self.d, self.cech_r2) <= self.cech_r2

    cdef idx_t intersect(self, int depth, idx_t start, idx_t v) noexcept:
        """cand[depth+1] = cand[depth][start:] & N(v); returns its length."""
        cdef idx_t a = start, alen = self.clen[depth]
        cdef idx_t b = self.indptr[v], bend = self.indptr[v + 1]
        cdef idx_t out = 0, x, y
        while a < alen and b < bend:
            x = self.cand[depth, a]
            y = self.indices[b]
            if x < y:
                a += 1
            elif y < x:
                b += 1
            else:
                self.cand[depth + 1, out] = x
                out += 1
                a += 1
                b += 1
        return out

    cdef idx_t count_marked(self, idx_t v) noexcept:
        """Number of neighbours w > v of v that are flagged in ``mark``."""
        cdef idx_t b = self.indptr[v], bend = self.indptr[v + 1], total = 0
        b += _lower_bound(&self.indices[0] + b, bend - b, v + 1)
        while b < bend:
            total += self.mark[self.indices[b]]
            b += 1
        return total

    cdef void visit(self, int depth) noexcept:
        cdef idx_t idx, v, m
        if self.err:
            return
        if self.cech and not self.cech_ok(depth):
            return
        self.record(depth, 1)
        if depth == self.kmax:
            return
        for idx in range(self.clen[depth]):
            v = self.cand[depth, idx]
            self.verts[depth + 1] = v
            if depth + 1 == self.kmax and self.count_only[depth + 1]:
                self.record(depth + 1, self.clen[depth] - idx)
                return
            if depth + 2 == self.kmax and self.count_only[depth + 2]:
                if idx == 0:
                    for m in range(self.clen[depth]):
                        self.mark[self.cand[depth, m]] = 1
                m = self.count_marked(v)
                self.record(depth + 1, 1)
                if m:
                    self.record(depth + 2, m)
                if idx + 1 == self.clen[depth]:
                    for m in range(self.clen[depth]):
                        self.mark[self.cand[depth, m]] = 0
                continue
            self.clen[depth + 1] = self.intersect(depth, idx + 1, v)
            self.visit(depth + 1)

    def run(self):
        cdef idx_t n = self.P.shape[0], v0, end, p, idx
        for v0 in range(n):
            self.verts[0] = v0
            p = self.indptr[v0]
            end = self.indptr[v0 + 1]
            while p < end and self.indices[p] <= v0:
                p += 1
            self.clen[0] = end - p
            for idx in range(end - p):
                self.cand[0, idx] = self.indices[p + idx]
            self.visit(0)
            if self.err:
                break
        return self.err

    def result_sums(self):
        return np.asarray(self.counts).copy(), np.asarray(self.sums).copy()

    def result_faces(self):
        faces, vols = [], []
        cdef int k
        cdef Py_ssize_t i, sz
        for k in range(self.kmax + 1):
            sz = self.faces[k].size()
            arr = np.empty(sz, dtype=np.int64)
            for i in range(sz):
                arr[i] = self.faces[k][i]
            faces.append(arr.reshape(-1, k + 1))
            if self.need_vol[k]:
                sz = self.vols[k].size()
                varr = np.empty(sz, dtype=np.float64)
                for i in range(sz):
                    varr[i] = self.vols[k][i]
                vols.append(varr)
            else:
                vols.append(None)
        return faces, vols


def _check_sizes(P, kmax):
    if kmax + 1 > MAXV or P.shape[1] > MAXD:
        raise ValueError("k_max or dimension too large for the compiled kernels")


def clique_sums(points, indptr, indices, int kmax, spec_k, spec_alpha, double cech_r2=-1.0):
    """Face counts per dimension and sum of volume**alpha per (k, alpha) spec."""
    P = np.ascontiguousarray(points, dtype=np.float64)
    _check_sizes(P, kmax)
    w = _Walker(P, np.ascontiguousarray(indptr, dtype=np.int64),
                np.ascontiguousarray(indices, dtype=np.int64), kmax,
                np.ascontiguousarray(spec_k, dtype=np.int32),
                np.ascontiguousarray(spec_alpha, dtype=np.float64),
                cech_r2, False, False)
    err = w.run()
    counts, sums = w.result_sums()
    return counts, sums, err


def clique_faces(points, indptr, indices, int kmax, double cech_r2=-1.0, with_volumes=False):
    """All faces up to kmax in lexicographic order, plus volumes on request."""
    P = np.ascontiguousarray(points, dtype=np.float64)
    _check_sizes(P, kmax)
    w = _Walker(P, np.ascontiguousarray(indptr, dtype=np.int64),
                np.ascontiguousarray(indices, dtype=np.int64), kmax,
                np.zeros(0, dtype=np.int32), np.zeros(0, dtype=np.float64),
                cech_r2, True, with_volumes)
    err = w.run()
    faces, vols = w.result_faces()
    return faces, vols, err
