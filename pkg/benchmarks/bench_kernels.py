"""Time the numba kernels against their pure Python/NumPy counterparts.

    python benchmarks/bench_kernels.py [--repeat 5]

The numba timings exclude compilation (one warm-up call per kernel).
"""

from __future__ import annotations

import argparse
import math
import time

import numpy as np

from brink import _kernels as k
from brink.criticality import critical_grid
from brink.potentials import RadialProblem, WellCoulombTail
from brink.radial import Discretization


def best_of(fn, repeat: int) -> float:
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def cases(size: int):
    disc = Discretization(RadialProblem(WellCoulombTail(0.7), dimension=1, grid=critical_grid(1e4)))
    qa, qb, h, n = disc.qa, disc.qb, disc.h, disc.n
    energy = -0.04

    def fill(fn):
        out = np.zeros(n)
        out[0], out[1] = 1e-3, 1.1e-3
        return lambda: fn(qa, qb, energy, h, out, 0, n - 1, 1)

    def nodes(fn):
        return lambda: fn(qa, qb, energy, h, 1e-3, 1.1e-3, 0, n - 1)

    rng = np.random.default_rng(0)
    pos = rng.standard_normal((size, 5, 3)) * 10.0
    pos2 = pos[:, :2, :].copy()
    u = rng.uniform(0.0, 100.0, size)
    v1, v2 = rng.uniform(-20.0, 20.0, (2, size))
    return [
        (f"numerov_fill (n={n})", fill(k.numerov_fill_py), fill(k.numerov_fill_nb)),
        (f"numerov_nodes (n={n})", nodes(k.numerov_nodes_py), nodes(k.numerov_nodes_nb)),
        (f"coulomb_energy (M={size}, N=5)", lambda: k.coulomb_energy_py(pos, 0.91), lambda: k.coulomb_energy_nb(pos, 0.91)),
        (f"natom_bound (M={size}, N=5)", lambda: k.natom_bound_py(pos, 0.91, 2, 0.3), lambda: k.natom_bound_nb(pos, 0.91, 2, 0.3)),
        (f"helium_bound (M={size})", lambda: k.helium_bound_py(pos2, 0.91, 0.5, 0.6), lambda: k.helium_bound_nb(pos2, 0.91, 0.5, 0.6)),
        (f"cone_hits (M={size})", lambda: k.cone_hits_py(u, v1, v2, 0.5, 0.6), lambda: k.cone_hits_nb(u, v1, v2, 0.5, 0.6)),
    ]


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=5)
    parser.add_argument("--size", type=int, default=200_000)
    args = parser.parse_args()
    print(f"{'kernel':<34} {'python [s]':>11} {'numba [s]':>11} {'speedup':>8}")
    for name, py, nb in cases(args.size):
        nb()  # compile
        t_py = best_of(py, args.repeat)
        t_nb = best_of(nb, args.repeat)
        ratio = t_py / t_nb if t_nb > 0 else math.inf
        print(f"{name:<34} {t_py:>11.4f} {t_nb:>11.4f} {ratio:>7.1f}x")


if __name__ == "__main__":
    main()
