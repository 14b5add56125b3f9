# cython: language_level=3
# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernels: int64 fraction-free elimination with overflow
detection, and the RK4 segment runner.

Contracts mirror `dofcluster._pykernels`; `_backend` picks a backend and
falls back to the pure versions when an elimination would leave int64
range (the fallback recomputes with Python's arbitrary precision).
"""

import numpy as np

from libc.math cimport isfinite

cdef extern from *:
    ctypedef long long i128 "__int128"

OVERFLOW_MSG = "intermediate value left the int64 safe range"

cdef long long _LIMIT = (<long long>1) << 62


cdef inline long long _absll(long long x) noexcept:
    return -x if x < 0 else x


def bareiss_rank_i64(long long[:, ::1] mat):
    """Exact rank of an int64 matrix; raises OverflowError when an
    intermediate value cannot be represented safely."""
    cdef Py_ssize_t nr = mat.shape[0]
    cdef Py_ssize_t nc = mat.shape[1]
    if nr == 0 or nc == 0:
        return 0
    work_arr = np.array(mat, dtype=np.int64, copy=True)
    cdef long long[:, ::1] w = work_arr
    cdef Py_ssize_t i, j, k, pr, pc
    cdef long long prev = 1, pivot, best, v, mik
    cdef i128 t
    cdef Py_ssize_t limit = nr if nr < nc else nc

    for i in range(nr):
        for j in range(nc):
            if _absll(w[i, j]) > _LIMIT:
                raise OverflowError(OVERFLOW_MSG)

    k = 0
    while k < limit:
        pr = -1
        pc = -1
        best = 0
        for i in range(k, nr):
            for j in range(k, nc):
                v = _absll(w[i, j])
                if v > best:
                    best = v
                    pr = i
                    pc = j
        if pr < 0:
            break
        if pr != k:
            for j in range(nc):
                v = w[k, j]
                w[k, j] = w[pr, j]
                w[pr, j] = v
        if pc != k:
            for i in range(nr):
                v = w[i, k]
                w[i, k] = w[i, pc]
                w[i, pc] = v
        pivot = w[k, k]
        for i in range(k + 1, nr):
            mik = w[i, k]
            for j in range(k + 1, nc):
                t = (<i128>pivot) * (<i128>w[i, j]) - (<i128>mik) * (<i128>w[k, j])
                t = t / (<i128>prev)
                if t > (<i128>_LIMIT) or t < -(<i128>_LIMIT):
                    raise OverflowError(OVERFLOW_MSG)
                w[i, j] = <long long>t
            w[i, k] = 0
        prev = pivot
        k += 1
    return k


def bareiss_det_i64(long long[:, ::1] mat):
    """Exact determinant of a square int64 matrix; raises OverflowError
    when an intermediate value cannot be represented safely."""
    cdef Py_ssize_t n = mat.shape[0]
    if mat.shape[1] != n:
        raise ValueError("determinant requires a square matrix")
    if n == 0:
        return 1
    work_arr = np.array(mat, dtype=np.int64, copy=True)
    cdef long long[:, ::1] w = work_arr
    cdef Py_ssize_t i, j, k, pr, pc
    cdef long long prev = 1, pivot, best, v, mik, sign = 1
    cdef i128 t

    for i in range(n):
        for j in range(n):
            if _absll(w[i, j]) > _LIMIT:
                raise OverflowError(OVERFLOW_MSG)

    for k in range(n - 1):
        pr = -1
        pc = -1
        best = 0
        for i in range(k, n):
            for j in range(k, n):
                v = _absll(w[i, j])
                if v > best:
                    best = v
                    pr = i
                    pc = j
        if pr < 0:
            return 0
        if pr != k:
            for j in range(n):
                v = w[k, j]
                w[k, j] = w[pr, j]
                w[pr, j] = v
            sign = -sign
        if pc != k:
            for i in range(n):
                v = w[i, k]
                w[i, k] = w[i, pc]
                w[i, pc] = v
            sign = -sign
        pivot = w[k, k]
        for i in range(k + 1, n):
            mik = w[i, k]
            for j in range(k + 1, n):
                t = (<i128>pivot) * (<i128>w[i, j]) - (<i128>mik) * (<i128>w[k, j])
                t = t / (<i128>prev)
                if t > (<i128>_LIMIT) or t < -(<i128>_LIMIT):
                    raise OverflowError(OVERFLOW_MSG)
                w[i, j] = <long long>t
            w[i, k] = 0
        prev = pivot
    return int(sign * w[n - 1, n - 1])


cdef void _rhs(Py_ssize_t n, Py_ssize_t m,
               double[::1] v, double[::1] cur, double[::1] acc,
               double[::1] refs, double[::1] loads,
               long long[::1] ei, long long[::1] ej, double[::1] eg,
               double[::1] R, double[::1] L, double[::1] C, double[::1] Vin,
               double[::1] kp, double[::1] ki,
               double[::1] xi,
               double[::1] dv, double[::1] di, double[::1] dq) noexcept:
    cdef Py_ssize_t i, e
    cdef double f, err, u_raw, u
    for i in range(n):
        xi[i] = 0.0
    for e in range(m):
        f = eg[e] * (v[ej[e]] - v[ei[e]])
        xi[ei[e]] += f
        xi[ej[e]] -= f
    for i in range(n):
        err = refs[i] - v[i]
        u_raw = (refs[i] + R[i] * (loads[i] - xi[i])) / Vin[i] + kp[i] * err + ki[i] * acc[i]
        u = u_raw
        if u < 0.0:
            u = 0.0
        elif u > 1.0:
            u = 1.0
        dv[i] = (cur[i] + xi[i] - loads[i]) / C[i]
        di[i] = (-v[i] - R[i] * cur[i] + Vin[i] * u) / L[i]
        dq[i] = err if u_raw == u else 0.0


def run_segment(double[::1] V, double[::1] I, double[::1] q,
                double[::1] refs, double[::1] loads,
                long long[::1] edge_i, long long[::1] edge_j, double[::1] edge_g,
                double[::1] R, double[::1] L, double[::1] C,
                double[::1] Vin, double[::1] kp, double[::1] ki,
                double h, long long nsteps,
                double[:, ::1] out_V, double[:, ::1] out_I, double[:, ::1] out_U,
                double[:, ::1] out_xi,
                long long out_row,
                double risk_theta, long long risk_window, long long[::1] risk_counts):
    """Compiled twin of `_pykernels.run_segment` (same contract)."""
    cdef Py_ssize_t n = V.shape[0]
    cdef Py_ssize_t m = edge_i.shape[0]
    buf = np.empty((16, n))
    cdef double[:, ::1] b = buf
    cdef double[::1] sv = b[0], si = b[1], sq = b[2]
    cdef double[::1] dv1 = b[3], di1 = b[4], dq1 = b[5]
    cdef double[::1] dv2 = b[6], di2 = b[7], dq2 = b[8]
    cdef double[::1] dv3 = b[9], di3 = b[10], dq3 = b[11]
    cdef double[::1] dv4 = b[12], di4 = b[13], dq4 = b[14]
    cdef double[::1] xi = b[15]
    cdef double half = 0.5 * h
    cdef double sixth = h / 6.0
    cdef Py_ssize_t step, i, e, row
    cdef double f, err, u_raw, u
    cdef long long steps = nsteps
    cdef bint bad, fired
    cdef Py_ssize_t trigger

    for step in range(steps):
        _rhs(n, m, V, I, q, refs, loads, edge_i, edge_j, edge_g,
             R, L, C, Vin, kp, ki, xi, dv1, di1, dq1)
        for i in range(n):
            sv[i] = V[i] + half * dv1[i]
            si[i] = I[i] + half * di1[i]
            sq[i] = q[i] + half * dq1[i]
        _rhs(n, m, sv, si, sq, refs, loads, edge_i, edge_j, edge_g,
             R, L, C, Vin, kp, ki, xi, dv2, di2, dq2)
        for i in range(n):
            sv[i] = V[i] + half * dv2[i]
            si[i] = I[i] + half * di2[i]
            sq[i] = q[i] + half * dq2[i]
        _rhs(n, m, sv, si, sq, refs, loads, edge_i, edge_j, edge_g,
             R, L, C, Vin, kp, ki, xi, dv3, di3, dq3)
        for i in range(n):
            sv[i] = V[i] + h * dv3[i]
            si[i] = I[i] + h * di3[i]
            sq[i] = q[i] + h * dq3[i]
        _rhs(n, m, sv, si, sq, refs, loads, edge_i, edge_j, edge_g,
             R, L, C, Vin, kp, ki, xi, dv4, di4, dq4)
        for i in range(n):
            V[i] += sixth * (dv1[i] + 2.0 * dv2[i] + 2.0 * dv3[i] + dv4[i])
            I[i] += sixth * (di1[i] + 2.0 * di2[i] + 2.0 * di3[i] + di4[i])
            q[i] += sixth * (dq1[i] + 2.0 * dq2[i] + 2.0 * dq3[i] + dq4[i])

        row = <Py_ssize_t>out_row + step
        for i in range(n):
            xi[i] = 0.0
        for e in range(m):
            f = edge_g[e] * (V[edge_j[e]] - V[edge_i[e]])
            xi[edge_i[e]] += f
            xi[edge_j[e]] -= f
            out_xi[row, e] = f
        bad = False
        for i in range(n):
            err = refs[i] - V[i]
            u_raw = (refs[i] + R[i] * (loads[i] - xi[i])) / Vin[i] + kp[i] * err + ki[i] * q[i]
            u = u_raw
            if u < 0.0:
                u = 0.0
            elif u > 1.0:
                u = 1.0
            out_V[row, i] = V[i]
            out_I[row, i] = I[i]
            out_U[row, i] = u
            if not (isfinite(V[i]) and isfinite(I[i]) and isfinite(q[i])):
                bad = True
        if bad:
            return step + 1, -1, True

        if risk_theta >= 0.0:
            fired = False
            trigger = -1
            for i in range(n):
                u = out_U[row, i] - 0.5
                if u < 0.0:
                    u = -u
                if u > risk_theta:
                    risk_counts[i] += 1
                else:
                    risk_counts[i] = 0
                if risk_counts[i] >= risk_window and not fired:
                    fired = True
                    trigger = i
            if fired:
                return step + 1, trigger, False

    return steps, -1, False
