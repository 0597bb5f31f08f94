"""Compare the compiled and pure-Python kernels on the optimizer hot paths.

Run with ``python benchmarks/bench_kernels.py``; pass ``--repeat`` to change
the number of timing rounds.
"""

import argparse
import timeit

from nlaqkd import _kernels_py

try:
    from nlaqkd import _kernels
except ImportError:
    _kernels = None

CASES = {
    "kgr qs x1000": lambda k: [k.kgr(k.QS, 1.0 + 0.01 * i, 1e-3, 0.03, 0.95, 1.0, 2.0) for i in range(1000)],
    "kgr spc x1000": lambda k: [k.kgr(k.SPC, 1.0 + 0.01 * i, 1e-3, 0.03, 0.95, 1.0, 2.0) for i in range(1000)],
    "maximize_v ideal x100": lambda k: [
        k.maximize_v(k.IDEAL, 10 ** (-i / 20), 0.03, 0.95, 1.0, 2.0, 1.001, 100.0, 64, 3, 1e-6) for i in range(100)
    ],
    "maximize_v qs x100": lambda k: [
        k.maximize_v(k.QS, 10 ** (-i / 20), 0.03, 0.95, 1.0, 2.0, 1.001, 100.0, 64, 3, 1e-6) for i in range(100)
    ],
}


def best_time(fn, module, repeat):
    return min(timeit.repeat(lambda: fn(module), number=1, repeat=repeat))


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=5)
    args = parser.parse_args()
    print(f"{'case':<24}{'python (s)':>12}{'compiled (s)':>14}{'speed-up':>10}")
    for name, fn in CASES.items():
        t_py = best_time(fn, _kernels_py, args.repeat)
        if _kernels is None:
            print(f"{name:<24}{t_py:>12.4f}{'n/a':>14}{'n/a':>10}")
            continue
        t_c = best_time(fn, _kernels, args.repeat)
        print(f"{name:<24}{t_py:>12.4f}{t_c:>14.4f}{t_py / t_c:>9.1f}x")


if __name__ == "__main__":
    main()
