"""Compare the numba kernels with their pure-numpy fallbacks.

Kernel timings call both implementations in this process. The end-to-end
timing continues one branch in two subprocesses, with and without
AI_TOOLKIT_DISABLE_JIT, so the backend is chosen exactly as a user would.

    python3 benchmarks/bench_kernels.py [--period 500] [--repeat 5]
"""
import argparse
import os
import subprocess
import sys
import timeit

import numpy as np

from ai_toolkit import kernels
from ai_toolkit._jit import USE_NUMBA, numba

E = (0.9, 0.0, 0.1, 0.5, 0.25)

END_TO_END = """
import time
from ai_toolkit import kernels
from ai_toolkit.continuation import ContinuationOptions, ResidualSystem, continue_branch
from ai_toolkit.presets import PRESETS
import numpy as np
pre = PRESETS["ellipse"]
w = np.random.default_rng(0).choice([-1, 1], {n})
sys_ = ResidualSystem(pre.p, pre.sigma, pre.delta, {n})
continue_branch(ResidualSystem(pre.p, pre.sigma, pre.delta, 3), "-++")  # warm-up / compile
t0 = time.perf_counter()
rec = continue_branch(sys_, w, ContinuationOptions(stop_at_first_fold=True, ell0=0.05))
print(kernels.BACKEND, time.perf_counter() - t0, len(rec.points))
"""


def best(fn, repeat):
    fn()  # compile or warm caches
    return min(timeit.repeat(fn, number=1, repeat=repeat))


def kernel_cases(n):
    rng = np.random.default_rng(1)
    word = rng.choice([-1.0, 1.0], n)
    xi = word + rng.uniform(-0.05, 0.05, n)
    out1, outj = np.empty(n), np.zeros((n, n + 1))
    a, b, c, sigma, delta = E
    x0 = np.array([0.1022, -1.4040, -0.7222])
    return [
        ("t_iterate", lambda: kernels.t_iterate(1, a, b, c, 0.0, sigma, delta, 0.1, word, word, 1e-12, 10_000),
         lambda: kernels._t_iterate_np(1, a, b, c, 0.0, sigma, delta, 0.1, word, word, 1e-12, 10_000)),
        ("residual", lambda: kernels.residual(*E, 0.3, xi, out1),
         lambda: kernels._residual_np(*E, 0.3, xi, out1)),
        ("jacobian", lambda: kernels.jacobian(*E, 0.3, xi, outj),
         lambda: kernels._jacobian_np(*E, 0.3, xi, outj)),
        ("periodic_qr", lambda: kernels.periodic_qr(*E, 0.3, xi, 200, 1e-12),
         lambda: kernels._periodic_qr_py(*E, 0.3, xi, 200, 1e-12)),
        ("first_return", lambda: kernels.first_return(0.5, 0.0, 0.5, -0.3, 0.5, -1.0, x0, 0.005, 5000),
         lambda: kernels._first_return_loop(0.5, 0.0, 0.5, -0.3, 0.5, -1.0, x0, 0.005, 5000)),
    ]


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--period", type=int, default=500)
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--skip-end-to-end", action="store_true")
    args = ap.parse_args()

    print(f"numba available: {numba is not None}, active backend: {kernels.BACKEND}")
    if not USE_NUMBA:
        print("numba is off, so both columns time the same fallback code")
    print(f"{'kernel':14s} {'jit [ms]':>10s} {'numpy [ms]':>11s} {'speedup':>8s}")
    for name, fast, slow in kernel_cases(args.period):
        tf, ts = best(fast, args.repeat), best(slow, args.repeat)
        print(f"{name:14s} {1e3 * tf:10.3f} {1e3 * ts:11.3f} {ts / tf:8.1f}")

    if args.skip_end_to_end:
        return
    print(f"\ncontinuation of a period-{args.period} word to its first fold:")
    for flag in ("0", "1"):
        env = dict(os.environ, AI_TOOLKIT_DISABLE_JIT=flag)
        res = subprocess.run([sys.executable, "-c", END_TO_END.format(n=args.period)], env=env,
                             capture_output=True, text=True, check=True)
        backend, secs, pts = res.stdout.split()
        print(f"  {backend:6s} {float(secs):8.2f} s  ({pts} points)")


if __name__ == "__main__":
    main()
