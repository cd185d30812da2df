"""Time the compiled kernels against the pure-Python fallback.

    python benchmarks/bench_kernels.py [--repeat 5]
"""
import argparse
import math
import timeit

import numpy as np

from icdyn import _backend


def cases():
    s0 = np.array([1.0, 1.0, 1.0])
    rng = np.random.default_rng(0)
    t = np.arange(2000) / 50.0
    y = np.exp(-0.1 * t) + rng.normal(0, 2.5, t.size)
    lm = (t, y, math.log(0.1), 1.0, True, 200, 1e-10, math.log(1e-4 / t[-1]), math.log(5e7))
    return {
        "lorenz_rk4 (50k steps)": lambda: _backend.lorenz_rk4(s0, 10.0, 28.0, 8 / 3, 1e-3, 0, 10, 5000),
        "lorenz_lyapunov (t = 50)": lambda: _backend.lorenz_lyapunov(
            s0, 10.0, 28.0, 8 / 3, 1e-3, 5000, 500, 100, 1e-8),
        "decay_lm (M = 2000)": lambda: _backend.decay_lm(*lm),
    }


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    names = _backend.available()
    if "compiled" not in names:
        print("compiled extension not built; only the fallback is timed")
    prev = _backend.current()
    print(f"{'kernel':<28}" + "".join(f"{n + ' [ms]':>16}" for n in names) + f"{'speedup':>10}")
    try:
        for label, fn in cases().items():
            best = {}
            for name in names:
                _backend.use(name)
                number = 1 if name == "python" else 5
                best[name] = min(timeit.repeat(fn, number=number, repeat=args.repeat)) / number
            row = "".join(f"{best[n] * 1e3:>16.3f}" for n in names)
            speed = f"{best['python'] / best['compiled']:>9.1f}x" if len(names) == 2 else ""
            print(f"{label:<28}{row}{speed}")
    finally:
        _backend.use(prev)


if __name__ == "__main__":
    main()
