"""Compiled vs pure kernel equivalence and the overflow promotion path."""

import random

import numpy as np
import pytest

from conftest import fraction_rank, random_int_matrix
from dofcluster import _backend, _pykernels

needs_compiled = pytest.mark.skipif(
    not _backend.compiled_available(), reason="compiled extension not built"
)


@needs_compiled
class TestEliminationEquivalence:
    def test_rank_matches_pure_on_random_matrices(self):
        from dofcluster import _kernels

        rng = random.Random(321)
        for _ in range(200):
            rows = random_int_matrix(rng, max_dim=9, lo=-6, hi=6)
            arr = np.array(rows, dtype=np.int64)
            assert _kernels.bareiss_rank_i64(arr) == _pykernels.bareiss_rank(rows)

    def test_det_matches_pure_on_random_matrices(self):
        from dofcluster import _kernels

        rng = random.Random(654)
        for _ in range(200):
            n = rng.randint(1, 8)
            rows = [[rng.randint(-6, 6) for _ in range(n)] for _ in range(n)]
            arr = np.array(rows, dtype=np.int64)
            assert _kernels.bareiss_det_i64(arr) == _pykernels.bareiss_determinant(rows)

    def test_intermediate_overflow_raises(self):
        from dofcluster import _kernels

        big = 2**61
        rows = [[big, big - 1], [big - 3, big - 7]]
        with pytest.raises(OverflowError):
            _kernels.bareiss_det_i64(np.array(rows, dtype=np.int64))

    def test_oversized_input_raises(self):
        from dofcluster import _kernels

        rows = np.array([[2**62 + 10]], dtype=np.uint64).astype(np.int64)
        with pytest.raises(OverflowError):
            _kernels.bareiss_rank_i64(np.abs(rows))


class TestDispatchFallback:
    def test_rank_promotes_on_overflow(self):
        # big enough that the compiled path overflows; the dispatcher must
        # land on the exact answer anyway
        big = 2**61
        rows = [[big, big - 1], [big - 3, big - 7]]
        assert _backend.exact_rank_rows(rows) == fraction_rank(rows)

    def test_rank_handles_entries_beyond_int64(self):
        big = 10**30
        rows = [[big, 2 * big], [3 * big, 6 * big]]
        assert _backend.exact_rank_rows(rows) == 1

    def test_det_handles_entries_beyond_int64(self):
        big = 10**25
        rows = [[big, 0], [0, big]]
        assert _backend.exact_determinant_rows(rows) == big * big

    def test_force_pure_env(self, monkeypatch):
        monkeypatch.setattr(_backend, "_FORCE_PURE", True)
        assert _backend.active_backend() == "pure"

    def test_empty_inputs(self):
        assert _backend.exact_rank_rows([]) == 0
        assert _backend.exact_rank_rows([[], []]) == 0
        assert _backend.exact_determinant_rows([]) == 1


@needs_compiled
class TestSegmentEquivalence:
    def test_trajectories_agree(self):
        from dofcluster import _kernels

        rng = np.random.default_rng(7)
        n, m, steps = 5, 7, 400
        edges = sorted({(0, 1), (1, 2), (2, 3), (3, 4), (0, 4), (1, 3), (0, 2)})
        ei = np.array([e[0] for e in edges], dtype=np.int64)
        ej = np.array([e[1] for e in edges], dtype=np.int64)
        eg = rng.uniform(0.5, 2.0, m)
        R = rng.uniform(0.1, 0.3, n)
        L = np.full(n, 1.8e-3)
        C = np.full(n, 2.2e-3)
        Vin = np.full(n, 24.0)
        kp = np.full(n, 0.05)
        ki = np.full(n, 4.0)
        refs = 12.0 + rng.uniform(-0.3, 0.3, n)
        loads = rng.uniform(0.5, 3.0, n)
        V0 = refs + rng.uniform(-0.2, 0.2, n)
        I0 = rng.uniform(0.0, 3.0, n)
        q0 = np.zeros(n)

        results = []
        for runner in (_kernels.run_segment, _pykernels.run_segment):
            V, I, q = V0.copy(), I0.copy(), q0.copy()
            out = [np.empty((steps + 1, n)) for _ in range(3)]
            out_xi = np.empty((steps + 1, m))
            counts = np.zeros(n, dtype=np.int64)
            ret = runner(V, I, q, refs.copy(), loads.copy(), ei, ej, eg,
                         R, L, C, Vin, kp, ki, 1e-4, steps,
                         out[0], out[1], out[2], out_xi, 1, -1.0, 10, counts)
            assert tuple(ret) == (steps, -1, False)
            # rows 1..steps are the written samples (row 0 belongs to the caller)
            results.append((V, I, q, out[0][1:], out[1][1:], out[2][1:], out_xi[1:]))
        for a, b in zip(results[0], results[1]):
            assert np.abs(a - b).max() < 1e-12

    def test_risk_monitor_agrees(self):
        from dofcluster import _kernels

        n, steps = 1, 300
        empty = np.zeros(0, dtype=np.int64)
        args = dict(
            refs=np.array([12.0]), loads=np.array([4.0]),
            R=np.array([0.2]), L=np.array([1.8e-3]), C=np.array([2.2e-3]),
            Vin=np.array([24.0]), kp=np.array([0.05]), ki=np.array([4.0]),
        )
        outcome = []
        for runner in (_kernels.run_segment, _pykernels.run_segment):
            V = np.array([12.0])
            I = np.array([1.0])
            q = np.zeros(1)
            out = [np.empty((steps + 1, 1)) for _ in range(3)]
            out_xi = np.empty((steps + 1, 0))
            counts = np.zeros(1, dtype=np.int64)
            ret = runner(V, I, q, args["refs"], args["loads"], empty, empty,
                         np.zeros(0), args["R"], args["L"], args["C"],
                         args["Vin"], args["kp"], args["ki"], 1e-4, steps,
                         out[0], out[1], out[2], out_xi, 1, 0.02, 50, counts)
            outcome.append(tuple(ret))
        assert outcome[0] == outcome[1]
        assert outcome[0][1] == 0  # node 0 fired the monitor
