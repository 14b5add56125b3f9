#!/usr/bin/env python3
"""Benchmark the compiled kernels against the pure-Python fallback.

Covers the two hot paths: exact integer elimination (rank/determinant) and
the RK4 segment runner.  Also cross-checks that both backends produce the
same results on the benchmark workloads.

Usage: python benchmarks/bench_kernels.py [--matrices N] [--steps N]
"""

import argparse
import random
import time

import numpy as np

from dofcluster import _backend, _pykernels


def time_call(fn, repeat=3):
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def bench_elimination(n_matrices):
    rng = random.Random(12345)
    mats = []
    for _ in range(n_matrices):
        n = rng.randint(8, 14)
        mats.append([[rng.randint(-5, 5) for _ in range(n)] for _ in range(n)])
    arrays = [np.array(m, dtype=np.int64) for m in mats]

    pure_ranks = [_pykernels.bareiss_rank(m) for m in mats]
    pure_dets = [_pykernels.bareiss_determinant(m) for m in mats]
    t_pure = time_call(lambda: [_pykernels.bareiss_rank(m) for m in mats])
    t_pure_det = time_call(lambda: [_pykernels.bareiss_determinant(m) for m in mats])

    rows = [("rank (pure)", t_pure, None), ("det  (pure)", t_pure_det, None)]
    if _backend.compiled_available():
        from dofcluster import _kernels

        comp_ranks = [_kernels.bareiss_rank_i64(a) for a in arrays]
        comp_dets = [_kernels.bareiss_det_i64(a) for a in arrays]
        assert comp_ranks == pure_ranks, "backend rank mismatch"
        assert comp_dets == pure_dets, "backend determinant mismatch"
        t_comp = time_call(lambda: [_kernels.bareiss_rank_i64(a) for a in arrays])
        t_comp_det = time_call(lambda: [_kernels.bareiss_det_i64(a) for a in arrays])
        rows.append(("rank (compiled)", t_comp, t_pure / t_comp))
        rows.append(("det  (compiled)", t_comp_det, t_pure_det / t_comp_det))
    return rows


def bench_segment(steps):
    from dofcluster import bundled_scenario_path, load_scenario
    from dofcluster.redistribution import steady_state_map
    from dofcluster.sim import build_network

    scenario = load_scenario(bundled_scenario_path())
    n = scenario.n
    m = len(scenario.edges)
    ei = np.array([e[0] for e in scenario.edges], dtype=np.int64)
    ej = np.array([e[1] for e in scenario.edges], dtype=np.int64)
    eg = np.array(scenario.conductances)
    params = [np.array(getattr(scenario, k)) for k in
              ("resistance", "inductance", "capacitance", "v_input", "gain_p", "gain_i")]
    refs = np.array(scenario.references)
    loads = np.array(scenario.loads)
    eq = steady_state_map(build_network(scenario))

    def run(runner):
        V = refs.copy() + 0.05
        I = eq.currents.copy()
        q = np.zeros(n)
        out = [np.empty((steps + 1, n)) for _ in range(3)]
        out_xi = np.empty((steps + 1, m))
        counts = np.zeros(n, dtype=np.int64)
        runner(V, I, q, refs, loads, ei, ej, eg, *params,
               1e-4, steps, out[0], out[1], out[2], out_xi, 1, -1.0, 10, counts)
        return V.copy()

    v_pure = run(_pykernels.run_segment)
    t_pure = time_call(lambda: run(_pykernels.run_segment))
    rows = [(f"rk4 {steps} steps x {n} nodes (pure)", t_pure, None)]
    if _backend.compiled_available():
        from dofcluster import _kernels

        v_comp = run(_kernels.run_segment)
        drift = np.abs(v_comp - v_pure).max()
        assert drift < 1e-12, f"backend trajectory drift {drift}"
        t_comp = time_call(lambda: run(_kernels.run_segment))
        rows.append((f"rk4 {steps} steps x {n} nodes (compiled)", t_comp, t_pure / t_comp))
    return rows


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--matrices", type=int, default=400)
    parser.add_argument("--steps", type=int, default=10000)
    args = parser.parse_args()

    print(f"active backend: {_backend.active_backend()}")
    if not _backend.compiled_available():
        print("compiled extension not available; timing the pure kernels only")

    rows = bench_elimination(args.matrices)
    rows += bench_segment(args.steps)
    width = max(len(r[0]) for r in rows)
    print(f"\n{'kernel':<{width}}  {'best of 3':>10}  speedup")
    for name, t, speedup in rows:
        tag = f"{speedup:6.1f}x" if speedup else "      -"
        print(f"{name:<{width}}  {t * 1e3:9.2f}ms  {tag}")


if __name__ == "__main__":
    main()
