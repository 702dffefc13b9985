"""Time the compiled kernels against the numpy fallback.

    python benchmarks/bench_kernels.py --repeat 20
"""
import argparse
import timeit

import numpy as np

from flair_lab import _kernels_py

try:
    from flair_lab import _kernels as _kernels_c
except ImportError:
    _kernels_c = None


def cases(rng):
    d, k = 256, 8
    x = rng.standard_normal((64, d))
    means = rng.standard_normal((k, d))
    logw = np.log(np.full(k, 1.0 / k))
    variances = np.full(k, 0.1)
    img = rng.standard_normal((128, 128))
    kernel = np.array([1, 4, 6, 4, 1], dtype=np.float64) / 16
    return {
        "mixture_moments 64x256, 8 comps": lambda m: m.mixture_moments(x, 0.5, logw, means, variances),
        "circular_convolve_rows 128x128, k=5": lambda m: m.circular_convolve_rows(img, kernel),
    }


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=20)
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args(argv)
    backends = {"python": _kernels_py}
    if _kernels_c is not None:
        backends["compiled"] = _kernels_c
    else:
        print("compiled extension not built; timing the fallback only")
    print(f"{'kernel':40s} " + " ".join(f"{b:>12s}" for b in backends) + "   speedup")
    for name, fn in cases(np.random.default_rng(args.seed)).items():
        times = {}
        for b, mod in backends.items():
            fn(mod)
            times[b] = min(timeit.repeat(lambda: fn(mod), number=1, repeat=args.repeat))
        speed = f"{times['python'] / times['compiled']:8.2f}x" if "compiled" in times else ""
        print(f"{name:40s} " + " ".join(f"{1e3 * t:10.3f}ms" for t in times.values()) + f"  {speed}")


if __name__ == "__main__":
    main()
