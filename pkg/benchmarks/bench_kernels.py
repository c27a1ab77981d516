"""Timing comparison of the two kernel lanes.

Both lanes are imported side by side (the package-level selection in
jacspec.kernels is bypassed), their outputs are checked for bit-identity,
and per-shape timings are printed. Run as a script:

    python benchmarks/bench_kernels.py
"""

import time

import numpy as np

from jacspec.kernels import _pykernels

try:
    from jacspec.kernels import _ckernels
except ImportError:
    _ckernels = None

SHAPES = (64, 128, 256)
TARGET_SECONDS = 0.4


def _time_call(fn, *args):
    fn(*args)  # warm up
    reps = 1
    while True:
        t0 = time.perf_counter()
        for _ in range(reps):
            fn(*args)
        dt = time.perf_counter() - t0
        if dt > TARGET_SECONDS / 4 or reps >= 4096:
            return dt / reps
        reps *= 4


def main():
    lanes = [("python", _pykernels)]
    if _ckernels is not None:
        lanes.insert(0, ("compiled", _ckernels))
    else:
        print("compiled lane not built; timing the python lane only\n")

    g = np.random.default_rng(2479)
    print(f"{'op':<14}{'n':>6}" + "".join(f"{name:>14}" for name, _ in lanes) + f"{'speedup':>10}")
    for n in SHAPES:
        a = g.normal(size=(n, n))
        b = g.normal(size=(n, n))
        v = g.normal(size=n)
        cases = (("matmul", (a, b)), ("matvec", (a, v)), ("rmatvec", (a, v)), ("sq_frobenius", (a,)))
        for op, args in cases:
            outs = [getattr(mod, op)(*args) for _, mod in lanes]
            if len(outs) == 2:
                same = np.array_equal(np.atleast_1d(outs[0]), np.atleast_1d(outs[1]))
                if not same:
                    raise SystemExit(f"lane mismatch on {op} n={n}: outputs are not bit-identical")
            times = [_time_call(getattr(mod, op), *args) for _, mod in lanes]
            ratio = times[-1] / times[0] if len(times) == 2 else float("nan")
            cells = "".join(f"{t * 1e3:>11.3f} ms" for t in times)
            print(f"{op:<14}{n:>6}{cells}{ratio:>9.1f}x")
    if len(lanes) == 2:
        print("\nall outputs bit-identical across lanes")


if __name__ == "__main__":
    main()
