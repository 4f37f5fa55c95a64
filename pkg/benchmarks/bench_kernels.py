"""Time the numba and numpy kernels on the workloads the package actually runs.

    python benchmarks/bench_kernels.py [--repeat 5]

Both backends are imported in one process; the numba functions are warmed up
once so compile time is excluded (and reported separately).
"""
import argparse
import time

import numpy as np

from squeezelab import _accel, kernels, presets
from squeezelab.spectrum import model_variances


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def workloads():
    lf = kernels.log_factorial_table(1000)
    t, u, lp = kernels.fock_coefficients(0.5 * 10**-1.15, 0.5 * 10**1.6)
    yield "density matrix N=170", (t, u, lp, 170, lf), "density_matrix"
    yield "density matrix N=400", (t, u, lp, 400, lf), "density_matrix"

    m = presets.spectrum_model()
    f = (np.arange(55000) + 0.5) * 100e3
    v1, v2 = model_variances(m, f)
    c = np.array([kernels.fock_coefficients(0.5 * a, 0.5 * b) for a, b in zip(v1, v2)])
    nmean = (v1 + v2) / 4 - 0.5
    ntr = np.where(nmean < 5.0, 50, 170).astype(np.int64)
    args = (c[:, 0].copy(), c[:, 1].copy(), c[:, 2].copy(), ntr, lf)
    yield "photon distributions, 55000 bins", args, "diagonal_batch"


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    opts = ap.parse_args()
    if not _accel.HAVE_NUMBA:
        raise SystemExit("numba is not installed; nothing to compare against")

    print(f"{'workload':36s} {'numpy [s]':>10s} {'numba [s]':>10s} {'speedup':>8s} {'max rel diff':>13s}")
    for name, args, kind in workloads():
        fast = getattr(kernels, f"{kind}_numba")
        slow = getattr(kernels, f"{kind}_numpy")
        t0 = time.perf_counter()
        a = fast(*args)
        compile_s = time.perf_counter() - t0
        b = slow(*args)
        scale = np.maximum(np.abs(b), 1e-300)
        diff = float(np.max(np.abs(a - b) / scale * (np.abs(b) > 1e-250)))
        tn = best_of(lambda: fast(*args), opts.repeat)
        tp = best_of(lambda: slow(*args), opts.repeat)
        print(f"{name:36s} {tp:10.4f} {tn:10.4f} {tp / tn:8.1f} {diff:13.2e}"
              f"   (first numba call {compile_s:.2f}s)")


if __name__ == "__main__":
    main()
