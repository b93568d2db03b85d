"""Benchmark the compiled element kernels against the numpy fallback.

Times ``batch_element_integrals`` on synthetic element batches for both
backends, checks they agree, and reports the speedup.  Also times one
full stiffness assembly of the L-panel benchmark mesh per backend.

Usage: python benchmarks/bench_kernels.py [--sizes 100,1000,10000]
"""

import argparse
import time

import numpy as np

from crackfem import _kernels_py
from crackfem.cohesive_law import Material
from crackfem.generators import gen_lpanel
from crackfem.solver import Simulation, SolverSettings

try:
    from crackfem import _kernels_cy
except ImportError:
    _kernels_cy = None


def make_batch(tp, m, seed=0):
    rng = np.random.default_rng(seed)
    n = 2 * tp
    base = (np.array([[0, 0], [1, 0], [1, 1], [0, 1.0]]) if tp == 4
            else np.array([[0, 0], [1, 0], [0, 1.0]]))
    coords = np.zeros((m, n, 2))
    for i in range(m):
        poly = base + rng.uniform(-0.1, 0.1, base.shape)
        coords[i, :tp] = poly
        for k in range(tp):
            coords[i, tp + k] = 0.5 * (poly[k] + poly[(k + 1) % tp])
    mask = (rng.random((m, tp)) < 0.5).astype(np.uint8)
    c = np.broadcast_to(
        Material(E=30e9, nu=0.2, f_t=3e6, G_f=100.0).plane_stress(),
        (m, 3, 3)).copy()
    return coords, mask, c


def best_of(fn, repeats=5):
    times = []
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--sizes", default="100,1000,10000")
    args = parser.parse_args()
    sizes = [int(s) for s in args.sizes.split(",")]

    if _kernels_cy is None:
        print("compiled kernels not built; run pip install -e . first")

    print(f"{'tp':>3} {'elements':>9} {'python':>12} {'cython':>12} {'speedup':>8}")
    for tp in (3, 4):
        for m in sizes:
            coords, mask, c = make_batch(tp, m)
            t_py = best_of(lambda: _kernels_py.batch_element_integrals(
                tp, coords, mask, c))
            row = f"{tp:>3} {m:>9} {t_py * 1e3:>10.2f}ms"
            if _kernels_cy is not None:
                t_cy = best_of(lambda: _kernels_cy.batch_element_integrals(
                    tp, coords, mask, c))
                ref = _kernels_py.batch_element_integrals(tp, coords, mask, c)
                out = _kernels_cy.batch_element_integrals(tp, coords, mask, c)
                for a, b in zip(ref, out):
                    assert np.max(np.abs(a - b)) <= 1e-12 * np.max(np.abs(a))
                row += f" {t_cy * 1e3:>10.2f}ms {t_py / t_cy:>7.1f}x"
            print(row)

    print("\nfull L-panel stiffness assembly (refine=2):")
    mesh, _ = gen_lpanel(2)
    mats = {0: Material(E=25.85e9, nu=0.18, f_t=2.7e6, G_f=75.0),
            1: Material(E=25.85e9, nu=0.18, f_t=1e12, G_f=75.0)}
    import crackfem.kernels as kernels
    for name, impl in (("python", _kernels_py), ("cython", _kernels_cy)):
        if impl is None:
            continue
        kernels.batch_element_integrals = impl.batch_element_integrals
        sim = Simulation(mesh, mats, SolverSettings())
        sim.apply_prescribed(1e-5)

        def assemble():
            sim._cache_version = -1
            sim.assemble()

        print(f"  {name:>7}: {best_of(assemble) * 1e3:.2f} ms "
              f"(cache rebuild + assemble)")


if __name__ == "__main__":
    main()
