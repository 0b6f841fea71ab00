"""Time the numba kernels against their numpy fallbacks.

    python benchmarks/bench_kernels.py [--shots N] [--repeat R]

Compilation is triggered once before timing.  Integer kernels are checked
for identical output on every run.
"""

import argparse
import time

import numpy as np

from qutrit_kcbs import _kernels as K
from qutrit_kcbs.geometry import optimal_pentagram


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t0)
    return min(times), out


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--shots", type=int, default=2_000_000)
    ap.add_argument("--cycle-n", type=int, default=21)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()
    if not K.HAVE_NUMBA:
        raise SystemExit("numba is not installed; nothing to compare")

    u = np.random.default_rng(0).random((args.shots, K.UNIFORMS_PER_SHOT))
    m = optimal_pentagram().matrix()
    vr, vi = np.ascontiguousarray(m.real), np.ascontiguousarray(m.imag)
    x0 = np.array([1.1, 0.3, 2.0, -0.7])

    cases = [
        (f"classify_shots ({args.shots:,} shots)",
         lambda: K.classify_shots_numba(u, 0.3, 0.4, 0.9, 0.01),
         lambda: K.classify_shots_numpy(u, 0.3, 0.4, 0.9, 0.01), True),
        (f"cycle_extremes (n={args.cycle_n})",
         lambda: K.cycle_extremes_numba(args.cycle_n),
         lambda: K.cycle_extremes_numpy(args.cycle_n), True),
        ("compass_search (one start)",
         lambda: K.compass_search_numba(x0, vr, vi, 0.5, 0.5, 1e-9, 10_000)[1],
         lambda: K.compass_search_numpy(x0, vr, vi, 0.5, 0.5, 1e-9, 10_000)[1], False),
    ]
    print(f"{'kernel':38s} {'numba':>10s} {'numpy':>10s} {'speedup':>8s}")
    for name, fast, slow, exact in cases:
        fast()  # compile
        t_nb, out_nb = best_of(fast, args.repeat)
        t_np, out_np = best_of(slow, args.repeat)
        if exact:
            assert np.array_equal(np.asarray(out_nb), np.asarray(out_np)), name
        else:
            assert abs(out_nb - out_np) < 1e-12, name
        print(f"{name:38s} {t_nb * 1e3:9.2f}ms {t_np * 1e3:9.2f}ms {t_np / t_nb:7.1f}x")


if __name__ == "__main__":
    main()
