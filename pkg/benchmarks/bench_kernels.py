"""Time the compiled kernels against their numpy fallbacks.

    python benchmarks/bench_kernels.py [--repeat N]
"""
import argparse
import timeit

import numpy as np

from sheforge import _fallback
from sheforge.harmonics import synthesize_staircase
from sheforge.simulator import InverterConfig, _SpwmClock

try:
    from sheforge import _native
except ImportError:
    _native = None


def spwm_case(cycles=50):
    cfg = InverterConfig()
    n = int(cfg.sample_rate / cfg.f0) * cycles
    clock = _SpwmClock(cfg, n, cfg.sample_rate)
    return np.ascontiguousarray(0.9 * cfg.s * clock.sine), clock.carrier, cfg.s


def projection_case(cycles=10, max_order=200):
    tr = synthesize_staircase(np.radians([10, 20, 40, 60]), 10.0, 50.0, 200_000.0, n_cycles=cycles)
    L = int(round(tr.sample_rate / tr.fundamental_freq)) * cycles
    k = np.arange(L)
    table = 2.0 * np.pi * k / L
    return tr.samples, np.cos(table), np.sin(table), cycles, max_order


def bench(label, fn, args, repeat):
    t = min(timeit.repeat(lambda: fn(*args), number=1, repeat=repeat))
    print(f"{label:<42s} {1e3 * t:9.2f} ms")
    return t


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--repeat", type=int, default=5)
    args = p.parse_args()

    cases = [("spwm_levels (50 cycles)", "spwm_levels", spwm_case()),
             ("project_harmonics (10 cyc, N=200)", "project_harmonics", projection_case())]
    for label, name, data in cases:
        slow = bench(f"{label} fallback", getattr(_fallback, name), data, args.repeat)
        if _native is None:
            print("  compiled extension not built; skipping")
            continue
        fast = bench(f"{label} native", getattr(_native, name), data, args.repeat)
        a, b = getattr(_fallback, name)(*data), getattr(_native, name)(*data)
        same = all(np.allclose(x, y, rtol=0, atol=1e-12) for x, y in zip(np.atleast_1d(a), np.atleast_1d(b))) \
            if isinstance(a, tuple) else np.array_equal(a, b)
        print(f"  speedup x{slow / fast:.1f}, outputs agree: {same}")


if __name__ == "__main__":
    main()
