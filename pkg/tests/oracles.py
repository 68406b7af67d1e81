"""Independent reference implementations used only by the tests.

Nothing here shares code with the package: faces come from exhaustive
subset testing, volumes from Cayley-Menger determinants, and enclosing
balls from barycentric circumcentres of every candidate support set.
"""

import itertools
import math

import numpy as np


def cayley_menger_volume(points):
    P = np.asarray(points, dtype=float)
    k = len(P) - 1
    D = np.sum((P[:, None, :] - P[None, :, :]) ** 2, axis=2)
    B = np.ones((k + 2, k + 2))
    B[0, 0] = 0.0
    B[1:, 1:] = D
    sign = (-1) ** (k + 1)
    v2 = sign * np.linalg.det(B) / (2 ** k * math.factorial(k) ** 2)
    return math.sqrt(max(v2, 0.0))


def _circumcentre(S):
    """Circumcentre of S in its affine hull via barycentric coordinates, or None."""
    m = len(S)
    if m == 1:
        return S[0], np.array([1.0])
    D = np.sum((S[:, None, :] - S[None, :, :]) ** 2, axis=2)
    M = np.zeros((m + 1, m + 1))
    M[:m, :m] = D
    M[:m, m] = M[m, :m] = 1.0
    rhs = np.zeros(m + 1)
    rhs[m] = 1.0
    if abs(np.linalg.det(M)) < 1e-14 * max(1.0, np.abs(M).max()) ** (m + 1):
        return None
    sol = np.linalg.solve(M, rhs)
    lam = sol[:m]
    return lam @ S, lam


def brute_miniball_r2(points):
    """Smallest enclosing ball radius squared by trying every support set."""
    P = np.asarray(points, dtype=float)
    n, d = P.shape
    best = math.inf
    for size in range(1, min(n, d + 1) + 1):
        for sub in itertools.combinations(range(n), size):
            res = _circumcentre(P[list(sub)])
            if res is None:
                continue
            c, _ = res
            r2 = float(np.sum((P[sub[0]] - c) ** 2))
            if np.all(np.sum((P - c) ** 2, axis=1) <= r2 * (1 + 1e-10) + 1e-15):
                best = min(best, r2)
    return best


def brute_rips_faces(points, delta, k_max):
    P = np.asarray(points, dtype=float)
    n = len(P)
    d2 = delta * delta
    adj = np.sum((P[:, None, :] - P[None, :, :]) ** 2, axis=2) <= d2
    out = []
    for k in range(k_max + 1):
        faces = set()
        for sub in itertools.combinations(range(n), k + 1):
            if all(adj[a, b] for a, b in itertools.combinations(sub, 2)):
                faces.add(sub)
        out.append(faces)
    return out


def brute_cech_faces(points, delta, k_max):
    P = np.asarray(points, dtype=float)
    rips = brute_rips_faces(P, delta, k_max)
    lim = delta * delta / 4
    return [{f for f in faces if len(f) < 3 or brute_miniball_r2(P[list(f)]) <= lim}
            for faces in rips]


def brute_edges(points, delta):
    P = np.asarray(points, dtype=float)
    n = len(P)
    return {(i, j) for i in range(n) for j in range(i + 1, n)
            if float(np.sum((P[i] - P[j]) ** 2)) <= delta * delta}


# Frozen reference values (computed once by the recipes noted, then pinned).

# 2*pi * int_0^1 r * A(r) dr, A(r) = lens area of two unit discs at distance r
# (scipy.integrate.quad, abs tol 1e-13): Rips constant for k=2, alpha=0, d=2.
MU_2_0_D2 = 5.788555831562368

# 2*pi * int_0^1 r^2 * A(r) dr: mixed constant with the edge length weighted by
# the Rips indicator of the triangle, (j, k) = (1, 2), d=2.
MU_10_12_D2 = 3.5280600482747952

# Scrambled Sobol (2^22 points, seed 7) over two polar-parametrised disc
# points, closed-form triangle miniball test, times pi^2. Quadrature error
# judged ~1e-3 from the spread of 2^18 / 2^20 / 2^22 runs.
NU_2_0_D2 = 5.5516
NU_2_0_D2_ERR = 2e-3
