"""Time the compiled kernels against the pure-Python fallback.

Run with ``python benchmarks/bench_kernels.py``. The extension must have been
built (``pip install -e . --no-build-isolation``); otherwise only the Python
timings are printed.
"""

import argparse
import timeit

import numpy as np

from oscbus import _kernels_py

try:
    from oscbus import _kernels as _kernels_cy
except ImportError:
    _kernels_cy = None


def accumulate_case(rng, n_tuples, n_segments):
    eig = rng.uniform(-1, 1, (n_tuples, n_segments, 4))
    coef = rng.uniform(-2, 2, (n_segments, 5))
    coef[:, 4] = rng.uniform(0.1, 0.5, n_segments)
    return eig, coef


def best_of(fn, repeat):
    timer = timeit.Timer(fn)
    number, _ = timer.autorange()
    return min(timer.repeat(repeat, number)) / number


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=5)
    args = parser.parse_args(argv)
    rng = np.random.default_rng(0)
    backends = {"python": _kernels_py}
    if _kernels_cy is not None:
        backends["cython"] = _kernels_cy

    cases = []
    for n_tuples, n_segments in ((8, 6), (16, 64), (32, 4096)):
        eig, coef = accumulate_case(rng, n_tuples, n_segments)
        cases.append((f"accumulate_batch tuples={n_tuples} segments={n_segments}",
                      lambda k, e=eig, c=coef: k.accumulate_batch(e, c)))
    for dim in (32, 128, 512):
        cases.append((f"displacement_matrix dim={dim}", lambda k, d=dim: k.displacement_matrix(1.3 - 0.7j, d)))

    print(f"{'case':<50}" + "".join(f"{name:>14}" for name in backends) + f"{'speedup':>10}")
    for label, call in cases:
        times = {name: best_of(lambda m=mod: call(m), args.repeat) for name, mod in backends.items()}
        row = f"{label:<50}" + "".join(f"{t * 1e3:>12.3f}ms" for t in times.values())
        if "cython" in times:
            row += f"{times['python'] / times['cython']:>9.1f}x"
        print(row)


if __name__ == "__main__":
    main()
