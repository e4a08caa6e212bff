"""Compare the compiled pairing kernel with the numpy fallback.

Usage::

    python3 benchmarks/bench_kernel.py [--blocks 20000] [--repeat 5]

Reports best-of-``repeat`` wall time for the raw block sums and for
full density evaluations (the latter by swapping the backend used by
``levydens.kernel``), plus the largest disagreement between backends.
"""

import argparse
import math
import time

import numpy as np

from levydens import _pykernel, kernel
from levydens.density import density
from levydens.oscint import gauss_legendre
from levydens.symbol import parse_symbol

try:
    from levydens import _ckernel
except ImportError:  # extension not built
    _ckernel = None

CASES = [
    ("chain:n=1,eps=1.0", 0.5, 1.0),
    ("chain:n=2,eps=1.0", 1.0, 0.5),
    ("chain:n=2,eps=0.5", 0.5, 2.0),
    ("sym:n=2,eps=1.0", 1.0, 1e-3),
    ("sq:n=1,eps=1.0", 1.0, 1.0),
]


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t0)
    return min(times), out


def bench_blocks(impl, spec, t, x, blocks, repeat):
    sym = parse_symbol(spec)
    nodes, weights = gauss_legendre(16)
    nodes, weights = np.ascontiguousarray(nodes), np.ascontiguousarray(weights)
    return best_of(
        lambda: impl.paired_blocks(sym.code, sym.n, sym.eps, t, 0, 1.0 / x, 0.0, 1, blocks + 1, nodes, weights),
        repeat,
    )


def bench_density(impl, spec, t, x, repeat):
    saved = kernel.paired_blocks, kernel.integrand
    kernel.paired_blocks, kernel.integrand = impl.paired_blocks, impl.integrand
    try:
        return best_of(lambda: density(parse_symbol(spec), t, x).p, repeat)
    finally:
        kernel.paired_blocks, kernel.integrand = saved


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--blocks", type=int, default=20000)
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    if _ckernel is None:
        print("compiled kernel not built; only the python backend is available")
        return

    print(f"active backend: {kernel.BACKEND}")
    print(f"{'case':<22}{'t':>6}{'x':>8}  {'blocks py [ms]':>15}{'blocks c [ms]':>15}{'speedup':>9}"
          f"  {'density py [ms]':>16}{'density c [ms]':>15}{'max |diff|':>12}")
    for spec, t, x in CASES:
        tp, vp = bench_blocks(_pykernel, spec, t, x, args.blocks, args.repeat)
        tc, vc = bench_blocks(_ckernel, spec, t, x, args.blocks, args.repeat)
        dp, pp = bench_density(_pykernel, spec, t, x, max(1, args.repeat // 2))
        dc, pc = bench_density(_ckernel, spec, t, x, max(1, args.repeat // 2))
        diff = max(float(np.max(np.abs(np.asarray(vp) - np.asarray(vc)))), abs(pp - pc))
        print(f"{spec:<22}{t:>6g}{x:>8g}  {1e3 * tp:>15.2f}{1e3 * tc:>15.2f}{tp / tc:>9.1f}"
              f"  {1e3 * dp:>16.2f}{1e3 * dc:>15.2f}{diff:>12.2e}")
    if not math.isfinite(diff):
        raise SystemExit(1)


if __name__ == "__main__":
    main()
