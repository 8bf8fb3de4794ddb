"""Compiled vs pure-Python kernels.

    python benchmarks/bench_kernels.py [--repeat N]

Times the same-padded convolution (forward + backward, micro-net sizes)
and the transportation simplex behind the EMD metric on a few grid sizes,
checks that both backends agree, and prints one line per case.
"""
import argparse
import time

import numpy as np

from salloss.kernels import get_backend
from salloss.metrics import pixel_centers


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t0)
    return min(times), out


def conv_case(kern, x, w, b, g):
    def run():
        y = kern.conv2d_forward(x, w, b)
        return y, kern.conv2d_backward(x, w, g)
    return run


def emd_case(kern, a, b, cost):
    return lambda: kern.transport_simplex(a, b, cost)[0]


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--emd-sizes", default="8,12,16")
    args = ap.parse_args()
    try:
        fast = get_backend("cython")
    except ImportError:
        raise SystemExit("compiled extension not built; run `pip install -e . --no-build-isolation`")
    slow = get_backend("python")
    rng = np.random.default_rng(0)

    print(f"{'case':<24}{'cython s':>12}{'python s':>12}{'speedup':>10}  agree")
    for cin, cout, size in ((1, 8, 16), (8, 1, 16), (8, 16, 32)):
        x = rng.standard_normal((cin, size, size))
        w = rng.standard_normal((cout, cin, 3, 3))
        b = rng.standard_normal(cout)
        g = rng.standard_normal((cout, size, size))
        tc, oc = best_of(conv_case(fast, x, w, b, g), args.repeat)
        tp, op = best_of(conv_case(slow, x, w, b, g), args.repeat)
        agree = np.allclose(oc[0], op[0], atol=1e-10) and all(
            np.allclose(u, v, atol=1e-10) for u, v in zip(oc[1], op[1]))
        print(f"{f'conv {cin}->{cout} {size}x{size}':<24}{tc:>12.5f}{tp:>12.5f}{tp / tc:>10.1f}  {agree}")

    for n in (int(s) for s in args.emd_sizes.split(",")):
        pts = pixel_centers((n, n))
        cost = np.sqrt(((pts[:, None, :] - pts[None, :, :]) ** 2).sum(axis=2))
        a = rng.random(n * n)
        b = rng.random(n * n)
        a /= a.sum()
        b /= b.sum()
        tc, vc = best_of(emd_case(fast, a, b, cost), args.repeat)
        tp, vp = best_of(emd_case(slow, a, b, cost), args.repeat)
        print(f"{f'emd simplex {n}x{n}':<24}{tc:>12.5f}{tp:>12.5f}{tp / tc:>10.1f}  {abs(vc - vp) <= 1e-9}")


if __name__ == "__main__":
    main()
