"""Time the compiled kernels against the pure-Python fallback.

    python benchmarks/bench_kernels.py [--repeat 3] [--scale 1.0]

Both backends get identical inputs; results are checked for agreement
before timings are reported.
"""

import argparse
import time

import numpy as np

from vrpower import kernels
from vrpower.geometry import Window, sample_poisson

py = kernels.python_backend
cc = kernels.compiled_backend


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t0)
    return min(times), out


def cases(scale):
    # (label, dim, intensity, delta, k_max, cech)
    return [
        ("sparse d=2 f-vector", 2, int(4000 * scale), 0.01, 3, False),
        ("thermo d=2 k<=2 alpha=1", 2, int(2000 * scale), (1 / (2000 * scale)) ** 0.5, 2, False),
        ("dense d=2 k<=2", 2, int(600 * scale), 0.12, 2, False),
        ("thermo d=3 Cech k<=3", 3, int(1000 * scale), (1 / (1000 * scale)) ** (1 / 3), 3, True),
    ]


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--scale", type=float, default=1.0, help="multiplies every intensity")
    args = ap.parse_args()
    if cc is None:
        raise SystemExit("compiled extension not built; run `python setup.py build_ext --inplace`")
    print(f"{'case':28s} {'faces':>10s} {'python s':>10s} {'compiled s':>11s} {'speedup':>8s}")
    for label, d, t, delta, kmax, cech in cases(args.scale):
        P = sample_poisson(Window.cube(d), t, 1).points
        cech_r2 = delta * delta / 4 if cech else -1.0
        spec_k = np.arange(1, kmax + 1, dtype=np.int32)
        spec_a = np.ones(kmax, dtype=np.float64)

        def run(b):
            indptr, indices = b.neighbor_csr(P, delta)
            return b.clique_sums(P, indptr, indices, kmax, spec_k, spec_a, cech_r2)

        tp, (cp, sp, _) = best_of(lambda: run(py), args.repeat)
        tc, (c2, s2, _) = best_of(lambda: run(cc), args.repeat)
        assert np.array_equal(cp, c2), (cp, c2)
        # top-dimensional simplices in d=2 have zero volume, so allow roundoff there
        np.testing.assert_allclose(sp, s2, rtol=1e-9, atol=1e-12)
        print(f"{label:28s} {int(cp.sum()):10d} {tp:10.3f} {tc:11.4f} {tp / tc:8.0f}x")

    stacks = np.random.default_rng(0).normal(size=(int(100_000 * args.scale), 3, 2))
    tp, a = best_of(lambda: py.miniball_r2_batch(stacks), args.repeat)
    tc, b = best_of(lambda: cc.miniball_r2_batch(stacks), args.repeat)
    np.testing.assert_allclose(a, b, rtol=1e-9)
    print(f"{'miniball batch 3 pts d=2':28s} {len(stacks):10d} {tp:10.3f} {tc:11.4f} {tp / tc:8.0f}x")


if __name__ == "__main__":
    main()
