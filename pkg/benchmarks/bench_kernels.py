"""Compare the compiled and pure-Python jet kernels.

Usage: python3 benchmarks/bench_kernels.py [--T 14] [--d 3] [--repeat 5]

Times the truncated product on dense random rational jets and an end-to-end
``compute_bm`` run under each backend (the latter in a subprocess, since the
backend is fixed at import).
"""

import argparse
import os
import random
import subprocess
import sys
import timeit

import gmpy2

from gevrey_bergman import _kernels_py

try:
    from gevrey_bergman import _ckernels
except ImportError:
    _ckernels = None


def random_terms(d, T, rng):
    from itertools import product

    out = {}
    for e in product(range(T + 1), repeat=d):
        if sum(e) <= T:
            out[e] = gmpy2.mpq(rng.randint(-50, 50), rng.randint(1, 30))
    return out


END_TO_END = (
    "import time;"
    "from gevrey_bergman.potentials import radial_quartic;"
    "from gevrey_bergman.recursion import compute_bm;"
    "t=time.perf_counter();compute_bm(radial_quartic(),M={M},q={q});"
    "print(time.perf_counter()-t)"
)


def end_to_end(M, q, pure):
    env = dict(os.environ)
    if pure:
        env["GEVREY_BERGMAN_PURE"] = "1"
    else:
        env.pop("GEVREY_BERGMAN_PURE", None)
    res = subprocess.run([sys.executable, "-c", END_TO_END.format(M=M, q=q)],
                         env=env, capture_output=True, text=True, check=True)
    return float(res.stdout.strip())


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--T", type=int, default=14)
    ap.add_argument("--d", type=int, default=3)
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--M", type=int, default=5)
    ap.add_argument("--q", type=int, default=6)
    args = ap.parse_args(argv)

    rng = random.Random(0)
    a = random_terms(args.d, args.T, rng)
    b = random_terms(args.d, args.T, rng)
    print(f"dense product: d={args.d} T={args.T} terms={len(a)}")
    ref = _kernels_py.mul_trunc(a, b, args.d, args.T)
    t_py = min(timeit.repeat(lambda: _kernels_py.mul_trunc(a, b, args.d, args.T),
                             number=1, repeat=args.repeat))
    print(f"  python  {t_py * 1e3:9.2f} ms")
    if _ckernels is None:
        print("  cython  (not built)")
    else:
        assert _ckernels.mul_trunc(a, b, args.d, args.T) == ref, "backends disagree"
        t_c = min(timeit.repeat(lambda: _ckernels.mul_trunc(a, b, args.d, args.T),
                                number=1, repeat=args.repeat))
        print(f"  cython  {t_c * 1e3:9.2f} ms   speedup {t_py / t_c:5.2f}x")

    print(f"compute_bm(radial_quartic, M={args.M}, q={args.q})")
    e_py = end_to_end(args.M, args.q, pure=True)
    print(f"  python  {e_py:9.3f} s")
    if _ckernels is not None:
        e_c = end_to_end(args.M, args.q, pure=False)
        print(f"  cython  {e_c:9.3f} s   speedup {e_py / e_c:5.2f}x")


if __name__ == "__main__":
    main()
