"""Benchmark: compiled vs pure-Python stepping kernels.

Times the periodic block-tridiagonal solve on representative sizes and a
full evolution workload. Run after `pip install -e .`:

    python benchmarks/bench_step.py [--steps 200]
"""

import argparse
import time

import numpy as np

from ldgflow import Basis, initial_curve, make_mesh
from ldgflow.blocksolve import available_backends, solve_periodic_block_tridiag
from ldgflow.solver import FlowParams, Stepper, _resolved_floor, initial_state


def bench_tridiag(ncells, bs, nrhs, repeats=50):
    rng = np.random.default_rng(7)
    L = rng.standard_normal((ncells, bs, bs))
    D = rng.standard_normal((ncells, bs, bs)) + 8 * np.eye(bs)
    U = rng.standard_normal((ncells, bs, bs))
    R = rng.standard_normal((ncells, bs, nrhs))
    out = {}
    for backend in available_backends():
        solve_periodic_block_tridiag(L, D, U, R, backend=backend)  # warm up
        t0 = time.perf_counter()
        for _ in range(repeats):
            solve_periodic_block_tridiag(L, D, U, R, backend=backend)
        out[backend] = (time.perf_counter() - t0) / repeats
    return out


def bench_evolution(ncells, degree, steps, backend):
    mesh = make_mesh(ncells)
    basis = Basis(degree)
    params = FlowParams(flow="apcsf", tau=1e-5, T=1.0, backend=backend)
    state = initial_state(initial_curve("ellipse"), mesh, basis, params)
    stepper = Stepper(mesh, basis, params, _resolved_floor(state, params))
    stepper.step(state)  # warm up
    t0 = time.perf_counter()
    for _ in range(steps):
        state = stepper.step(state)
    return (time.perf_counter() - t0) / steps


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--steps", type=int, default=200, help="evolution steps to time")
    args = ap.parse_args()

    print("periodic block-tridiagonal solve (mean seconds/solve):")
    print(f"  {'N':>5s} {'b':>3s} {'rhs':>3s} " + " ".join(f"{b:>12s}" for b in available_backends()))
    for ncells, bs, nrhs in [(80, 4, 2), (160, 6, 2), (640, 10, 2)]:
        times = bench_tridiag(ncells, bs, nrhs)
        cols = " ".join(f"{times[b] * 1e3:10.3f}ms" for b in available_backends())
        print(f"  {ncells:5d} {bs:3d} {nrhs:3d} {cols}")

    print(f"\nfull area-preserving step (mean seconds/step over {args.steps} steps):")
    for ncells, degree in [(80, 1), (160, 2), (640, 4)]:
        cols = []
        for backend in available_backends():
            per = bench_evolution(ncells, degree, args.steps, backend)
            cols.append(f"{backend}: {per * 1e3:8.3f}ms")
        print(f"  N={ncells:4d} k={degree}:  " + "   ".join(cols))


if __name__ == "__main__":
    main()
