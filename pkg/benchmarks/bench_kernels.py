"""Compiled vs pure-Python row kernels.

    python benchmarks/bench_kernels.py [--sites 1024] [--repeat 5]

Times one implicit row solve for each kernel and a short toda-hirota
simulation with the kernel swapped in.
"""

import argparse
import timeit

import numpy as np

from multiscale_lattice import _kernels_py, kernels
from multiscale_lattice.simulate import simulate_envelope

try:
    from multiscale_lattice import _kernels as _compiled
except ImportError:
    _compiled = None


def row_inputs(n, seed=0):
    rng = np.random.default_rng(seed)
    u0 = 0.02 * rng.normal(size=n)
    return u0, u0 + 0.002 * rng.normal(size=n)


def best(stmt, repeat):
    return min(timeit.repeat(stmt, number=1, repeat=repeat))


def run(sites, repeat):
    u0, u1 = row_inputs(sites)
    backends = {"python": _kernels_py}
    if _compiled is not None:
        backends["compiled"] = _compiled
    rows = []
    for name, mod in backends.items():
        t_toda = best(lambda: mod.toda_hirota_row(u0, u1, 0.25, 1e-12, 100, 0.0), repeat)
        t_hiet = best(lambda: mod.hietarinta_row(u0, 3.0, 1.0, 2.0, 4.0), repeat)
        saved = kernels.toda_hirota_row
        kernels.toda_hirota_row = mod.toda_hirota_row
        try:
            t_sim = best(lambda: simulate_envelope("toda-hirota", eps=0.2, N=sites), 1)
        finally:
            kernels.toda_hirota_row = saved
        rows.append((name, t_toda, t_hiet, t_sim))
    print(f"sites = {sites}, best of {repeat}")
    print(f"{'backend':<10}{'toda row [ms]':>15}{'hietarinta row [ms]':>22}{'toda run [s]':>15}")
    for name, a, b, c in rows:
        print(f"{name:<10}{1e3 * a:>15.3f}{1e3 * b:>22.3f}{c:>15.2f}")
    if len(rows) == 2:
        py, cc = rows
        print(f"speedup   {py[1] / cc[1]:>14.1f}x{py[2] / cc[2]:>21.1f}x{py[3] / cc[3]:>14.1f}x")


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--sites", type=int, default=1024)
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    run(args.sites, args.repeat)


if __name__ == "__main__":
    main()
