"""Time the compiled core against the pure-Python fallback.

    python3 benchmarks/bench_backends.py [--steps N] [--obs N] [--points N] [--repeat R]

Both backends get identical inputs; the script also reports the largest
output difference so a speed-up never hides a divergence.
"""

import argparse
import sys
import timeit

import numpy as np

from intdiff import _backend


def _best(fn, repeat):
    return min(timeit.repeat(fn, number=1, repeat=repeat))


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--steps", type=int, default=200_000, help="Euler steps")
    ap.add_argument("--obs", type=int, default=9_000, help="N-W sample size")
    ap.add_argument("--points", type=int, default=100, help="N-W evaluation points")
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args(argv)

    core = _backend.compiled()
    if core is None:
        print("compiled core not built; nothing to compare", file=sys.stderr)
        return 1
    py = _backend.fallback

    rng = np.random.default_rng(0)
    z = rng.standard_normal(args.steps)
    euler_args = (0.085711, 0.85837, 0.085711, 0.1566, True, True, 0.0008, z, False)

    w = 0.085711 + 0.02 * rng.standard_normal(args.obs)
    r = 0.01 * rng.standard_normal(args.obs) ** 2
    pts = np.linspace(0.078, 0.09, args.points)
    nw_args = (w, r, pts, 0.12, 0)

    rows = []
    for label, name, a in (("euler", "euler_affine", euler_args), ("nw_sums", "nw_sums", nw_args)):
        fc, fp = getattr(core, name), getattr(py, name)
        tc = _best(lambda: fc(*a), args.repeat)
        tp = _best(lambda: fp(*a), args.repeat)
        oc, op = fc(*a), fp(*a)
        diff = max(float(np.max(np.abs(np.asarray(x) - np.asarray(y)))) for x, y in zip(oc[:2], op[:2]))
        rows.append((label, tc, tp, tp / tc, diff))

    print(f"{'kernel':<10}{'compiled s':>12}{'python s':>12}{'speed-up':>10}{'max |diff|':>13}")
    for label, tc, tp, sp, diff in rows:
        print(f"{label:<10}{tc:>12.4f}{tp:>12.4f}{sp:>9.1f}x{diff:>13.2e}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
