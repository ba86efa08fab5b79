"""Compare the Cython and pure-Python connectivity kernels.

Builds structured hexahedral meshes, optionally refined once uniformly so
that father elements take part, and times ``build_connectivity`` with
each backend. Also times the point-matching kernel used for node reuse.

Usage::

    python3 benchmarks/bench_connectivity.py [--sizes 4 8 12] [--repeat 3]
"""
from __future__ import annotations

import argparse
import time

import numpy as np

from refpat import kernels
from refpat.patterndb import PatternDatabase
from refpat.reftools import refine_uniform
from refpat.samples import hex_block


def best_of(fn, repeat: int) -> float:
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def available_backends() -> list[str]:
    names = ["python"]
    try:
        kernels.backend_module("cython")
        names.append("cython")
    except ImportError:
        pass
    return names


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--sizes", type=int, nargs="+", default=[4, 8, 12])
    parser.add_argument("--repeat", type=int, default=3)
    parser.add_argument("--refined", action="store_true",
                        help="refine each block once before timing")
    args = parser.parse_args(argv)

    backends = available_backends()
    if "cython" not in backends:
        print("note: compiled kernels not built, timing the Python backend only")
    db = PatternDatabase.with_uniform() if args.refined else None

    header = f"{'mesh':>12} {'elements':>9}" + "".join(f" {b + ' [s]':>12}" for b in backends)
    print("build_connectivity")
    print(header + (f" {'speedup':>8}" if len(backends) == 2 else ""))
    for n in args.sizes:
        mesh = hex_block(n)
        if db is not None:
            refine_uniform(mesh, mesh.leaves(), db)
        times = [best_of(lambda: mesh.build_connectivity(backend=b), args.repeat)
                 for b in backends]
        row = f"{f'hex {n}^3':>12} {mesh.n_elements:9d}" + "".join(f" {t:12.4f}" for t in times)
        if len(times) == 2:
            row += f" {times[0] / times[1]:8.1f}"
        print(row)

    print("\nmatch_points (n query points against n candidates)")
    print(f"{'n':>12}" + "".join(f" {b + ' [s]':>12}" for b in backends))
    rng = np.random.default_rng(0)
    for n in (1_000, 4_000):
        pts = rng.random((n, 3))
        query = pts[rng.permutation(n)]
        times = [best_of(lambda: kernels.match_points(query, pts, backend=b), args.repeat)
                 for b in backends]
        print(f"{n:12d}" + "".join(f" {t:12.4f}" for t in times))


if __name__ == "__main__":
    main()
