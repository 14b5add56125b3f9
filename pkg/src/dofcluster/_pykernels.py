"""Pure-Python kernels: exact integer elimination and the RK4 segment runner.

This module is the fallback used when the compiled extension is missing (or
disabled via DOFCLUSTER_PURE=1).  The compiled extension implements the same
contracts; `_backend` selects between them.

Integer elimination works on Python ints, so intermediate growth can never
overflow here.  The elimination is fraction-free: every interior division is
exact by construction, entries stay integral throughout.
"""

from __future__ import annotations

import numpy as np


def _full_pivot(m, k, nr, nc):
    """Largest-magnitude nonzero entry of the trailing submatrix, or None."""
    pr = pc = -1
    best = 0
    for i in range(k, nr):
        mi = m[i]
        for j in range(k, nc):
            v = mi[j]
            if v and (best == 0 or abs(v) > best):
                best = abs(v)
                pr, pc = i, j
    if pr < 0:
        return None
    return pr, pc


def bareiss_rank(rows) -> int:
    """Exact rank over the rationals of an integer matrix (list of rows)."""
    nr = len(rows)
    nc = len(rows[0]) if nr else 0
    if nr == 0 or nc == 0:
        return 0
    m = [list(r) for r in rows]
    prev = 1
    k = 0
    limit = min(nr, nc)
    while k < limit:
        piv = _full_pivot(m, k, nr, nc)
        if piv is None:
            break
        pr, pc = piv
        if pr != k:
            m[k], m[pr] = m[pr], m[k]
        if pc != k:
            for row in m:
                row[k], row[pc] = row[pc], row[k]
        pivot = m[k][k]
        for i in range(k + 1, nr):
            mi = m[i]
            mik = mi[k]
            mk = m[k]
            for j in range(k + 1, nc):
                mi[j] = (pivot * mi[j] - mik * mk[j]) // prev
            mi[k] = 0
        prev = pivot
        k += 1
    return k


def bareiss_determinant(rows) -> int:
    """Exact determinant of a square integer matrix (list of rows)."""
    n = len(rows)
    if n and len(rows[0]) != n:
        raise ValueError("determinant requires a square matrix")
    if n == 0:
        return 1
    m = [list(r) for r in rows]
    sign = 1
    prev = 1
    for k in range(n - 1):
        piv = _full_pivot(m, k, n, n)
        if piv is None:
            return 0
        pr, pc = piv
        if pr != k:
            m[k], m[pr] = m[pr], m[k]
            sign = -sign
        if pc != k:
            for row in m:
                row[k], row[pc] = row[pc], row[k]
            sign = -sign
        pivot = m[k][k]
        for i in range(k + 1, n):
            mi = m[i]
            mik = mi[k]
            mk = m[k]
            for j in range(k + 1, n):
                mi[j] = (pivot * mi[j] - mik * mk[j]) // prev
            mi[k] = 0
        prev = pivot
    return sign * m[n - 1][n - 1]


def run_segment(
    V, I, q,
    refs, loads,
    edge_i, edge_j, edge_g,
    R, L, C, Vin, kp, ki,
    h, nsteps,
    out_V, out_I, out_U, out_xi,
    out_row,
    risk_theta, risk_window, risk_counts,
):
    """Advance the converter network `nsteps` fixed RK4 steps of size `h`.

    State arrays (V, I, q) are updated in place; one output row is written
    per completed step starting at `out_row`.  The coupling is recomputed
    from instantaneous voltages at every stage; the per-node integrator
    state q is part of the integrated state with its rate frozen while the
    duty command is clamped to [0, 1].

    Returns (steps_done, trigger_node, aborted):
      trigger_node >= 0 when the saturation-risk monitor fired (|u - 0.5| >
      risk_theta for risk_window consecutive steps; disabled when
      risk_theta < 0), aborted=True when a state went non-finite.
    """
    n = V.shape[0]
    lap_w = np.zeros((n, n))
    for e in range(edge_i.shape[0]):
        a, b, g = edge_i[e], edge_j[e], edge_g[e]
        lap_w[a, b] -= g
        lap_w[b, a] -= g
        lap_w[a, a] += g
        lap_w[b, b] += g

    def rhs(v, cur, acc):
        xi = -(lap_w @ v)
        err = refs - v
        u_raw = (refs + R * (loads - xi)) / Vin + kp * err + ki * acc
        u = np.clip(u_raw, 0.0, 1.0)
        dv = (cur + xi - loads) / C
        di = (-v - R * cur + Vin * u) / L
        dq = np.where(u_raw == u, err, 0.0)
        return dv, di, dq

    half = 0.5 * h
    sixth = h / 6.0
    for step in range(nsteps):
        dv1, di1, dq1 = rhs(V, I, q)
        dv2, di2, dq2 = rhs(V + half * dv1, I + half * di1, q + half * dq1)
        dv3, di3, dq3 = rhs(V + half * dv2, I + half * di2, q + half * dq2)
        dv4, di4, dq4 = rhs(V + h * dv3, I + h * di3, q + h * dq3)
        V += sixth * (dv1 + 2.0 * dv2 + 2.0 * dv3 + dv4)
        I += sixth * (di1 + 2.0 * di2 + 2.0 * di3 + di4)
        q += sixth * (dq1 + 2.0 * dq2 + 2.0 * dq3 + dq4)

        xi_node = -(lap_w @ V)
        u_raw = (refs + R * (loads - xi_node)) / Vin + kp * (refs - V) + ki * q
        u = np.clip(u_raw, 0.0, 1.0)
        row = out_row + step
        out_V[row] = V
        out_I[row] = I
        out_U[row] = u
        out_xi[row] = edge_g * (V[edge_j] - V[edge_i])

        if not (np.isfinite(V).all() and np.isfinite(I).all() and np.isfinite(q).all()):
            return step + 1, -1, True

        if risk_theta >= 0.0:
            beyond = np.abs(u - 0.5) > risk_theta
            risk_counts[beyond] += 1
            risk_counts[~beyond] = 0
            hit = risk_counts >= risk_window
            if hit.any():
                return step + 1, int(np.argmax(hit)), False

    return nsteps, -1, False
