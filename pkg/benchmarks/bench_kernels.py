"""Compare the compiled and numpy collision kernels.

    python benchmarks/bench_kernels.py [--repeat 3] [--threads N] [--json out.json]

Reports the best wall time per call for each kernel, grid and backend, the
speed-up of the compiled kernels, and the largest difference between the two.
"""

import argparse
import json
import os
import time

import numpy as np

from fermikin import _kernels_py, lattice

try:
    from fermikin import _kernels
except ImportError:
    _kernels = None

GRIDS = [(1, 32), (1, 64), (2, 8), (2, 12)]


def best_time(fn, repeat):
    best = np.inf
    out = None
    for _ in range(repeat):
        t = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t)
    return best, out


def cases(d, n, threads):
    g = lattice.build_grid(d, n)
    disp = lattice.nearest_neighbour(g)
    v = lattice.cosine_potential(g)
    rng = np.random.default_rng(0)
    W = rng.uniform(0.05, 0.95, g.size)
    Z = rng.normal(size=(g.size, 2, 2)) + 1j * rng.normal(size=(g.size, 2, 2))
    Q, _ = np.linalg.qr(Z)
    M = Q @ (rng.uniform(0.05, 0.95, (g.size, 2))[..., None] * np.conj(np.swapaxes(Q, 1, 2)))
    eps = lattice.default_eps(disp)
    om, add, sub = disp.values, g.add_table, g.sub_table
    return {
        "scalar_collision": lambda m: m.scalar_collision(W, om, v.values, add, sub, eps, 1, threads),
        "hubbard_sums": lambda m: m.hubbard_sums(M, om, add, sub, eps, eps, 1, True, threads)[0],
    }


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    p.add_argument("--repeat", type=int, default=3)
    p.add_argument("--threads", type=int, default=int(os.environ.get("FERMIKIN_THREADS", "1")))
    p.add_argument("--json")
    args = p.parse_args(argv)
    if _kernels is None:
        print("compiled extension not available; only the numpy backend can be timed")
    rows = []
    print(f"{'kernel':<18}{'grid':>10}{'numpy [s]':>12}{'compiled [s]':>14}{'speed-up':>10}{'max diff':>11}")
    for d, n in GRIDS:
        for name, fn in cases(d, n, args.threads).items():
            tp, ref = best_time(lambda: fn(_kernels_py), args.repeat)
            row = {"kernel": name, "d": d, "n": n, "python_s": tp}
            if _kernels is not None:
                tc, out = best_time(lambda: fn(_kernels), args.repeat)
                row.update(compiled_s=tc, speedup=tp / tc, max_diff=float(np.max(np.abs(out - ref))))
            rows.append(row)
            c = row.get("compiled_s", float("nan"))
            print(f"{name:<18}{f'd={d} n={n}':>10}{tp:>12.4f}{c:>14.4f}{row.get('speedup', float('nan')):>10.1f}"
                  f"{row.get('max_diff', float('nan')):>11.1e}")
    if args.json:
        with open(args.json, "w") as fh:
            json.dump({"threads": args.threads, "rows": rows}, fh, indent=2)


if __name__ == "__main__":
    main()
