"""Compare the numba and numpy integration backends on the two demo workloads.

Run:  python benchmarks/bench_integrator.py
"""

from __future__ import annotations

import time

import numpy as np

from mpxpi import assemble, fixtures, kernels
from mpxpi.power import _grid_matrices  # noqa: SLF001 - benchmark peeks at internals


def _time(fn, repeat: int = 3) -> float:
    best = np.inf
    for _ in range(repeat):
        start = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - start)
    return best


def main() -> None:
    cases = []

    loop = assemble(fixtures.heterogeneous_ring_system())
    y0 = np.concatenate([np.random.default_rng(42).standard_normal(16), np.zeros(16)])
    cases.append(("8-node trace, 50k steps, dim 32", loop.state_matrix, loop.forcing, y0, 1e-3, 50_000))

    grid = fixtures.sixteen_bus_grid()
    mat, forcing = _grid_matrices(grid, True, grid.injection)
    omega0 = float(grid.injection.sum() / grid.damping.sum())
    z0 = (grid.damping * omega0 - grid.injection) / grid.inertia
    y0g = np.concatenate([np.full(16, omega0), z0])
    cases.append(("16-bus demo, 1M steps, dim 32", mat, forcing, y0g, 2e-5, 1_000_000))

    print(f"{'workload':<34} {'numba':>10} {'numpy':>10} {'speedup':>9}")
    for name, m, f, y, dt, steps in cases:
        run = lambda be: kernels.integrate_lti(m, f, y, dt, steps, steps, backend=be)  # noqa: E731
        run("numba")  # warm the JIT outside the timing
        t_nb = _time(lambda: run("numba"))
        t_np = _time(lambda: run("numpy"), repeat=1)
        print(f"{name:<34} {t_nb:>9.3f}s {t_np:>9.3f}s {t_np / t_nb:>8.1f}x")


if __name__ == "__main__":
    main()
