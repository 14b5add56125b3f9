"""Shared fixtures and independent oracles for the test suite."""

from __future__ import annotations

from fractions import Fraction

import pytest

from dofcluster import Cluster, build_graph

# canonical six-node demo graph (two natural clusters {0,1} and {2,3,4,5})
SIX_NODE_EDGES = [(0, 1), (1, 2), (1, 3), (2, 3), (3, 5), (3, 4)]

SIX_NODE_LAPLACIAN = [
    [1, -1, 0, 0, 0, 0],
    [-1, 3, -1, -1, 0, 0],
    [0, -1, 2, -1, 0, 0],
    [0, -1, -1, 4, -1, -1],
    [0, 0, 0, -1, 1, 0],
    [0, 0, 0, -1, 0, 1],
]


@pytest.fixture
def six_node():
    return build_graph(6, SIX_NODE_EDGES)


def pendant_clique(k: int = 6):
    """Complete graph on k nodes, each clique node with one private pendant.

    Dense inside, sparse outside, yet every internal move leaks to some
    pendant: the clique cluster has zero dof.
    """
    edges = [(i, j) for i in range(k) for j in range(i + 1, k)]
    edges += [(i, i + k) for i in range(k)]
    return build_graph(2 * k, edges)


def random_connected_graph(rng, n=None, extra_p=0.25):
    """Random-attachment tree plus Bernoulli extra edges: always connected."""
    if n is None:
        n = rng.randint(2, 20)
    edges = [(i, rng.randrange(i)) for i in range(1, n)]
    for i in range(n):
        for j in range(i + 1, n):
            if rng.random() < extra_p:
                edges.append((i, j))
    return build_graph(n, edges)


def random_connected_cluster(rng, g, max_size=None):
    """Random connected proper cluster grown from a random seed node."""
    if max_size is None:
        max_size = g.n - 1
    size = rng.randint(1, max(1, max_size))
    seed = rng.randrange(g.n)
    members = [seed]
    inside = {seed}
    frontier = set(g.neighbors[seed])
    while len(members) < size and frontier:
        j = rng.choice(sorted(frontier))
        members.append(j)
        inside.add(j)
        frontier = (frontier | g.neighbors[j]) - inside
    return Cluster(members)


def fraction_determinant(rows) -> "Fraction":
    """Independent determinant oracle: plain LU over Fractions with
    partial pivoting."""
    n = len(rows)
    m = [[Fraction(x) for x in row] for row in rows]
    det = Fraction(1)
    for col in range(n):
        pivot = next((r for r in range(col, n) if m[r][col] != 0), None)
        if pivot is None:
            return Fraction(0)
        if pivot != col:
            m[col], m[pivot] = m[pivot], m[col]
            det = -det
        det *= m[col][col]
        for r in range(col + 1, n):
            if m[r][col] != 0:
                f = m[r][col] / m[col][col]
                m[r] = [a - f * b for a, b in zip(m[r], m[col])]
    return det


def fraction_rank(rows) -> int:
    """Independent rank oracle: plain Gauss-Jordan over Fractions."""
    if not rows or not rows[0]:
        return 0
    m = [[Fraction(x) for x in row] for row in rows]
    nr, nc = len(m), len(m[0])
    rank = 0
    for col in range(nc):
        pivot = next((r for r in range(rank, nr) if m[r][col] != 0), None)
        if pivot is None:
            continue
        m[rank], m[pivot] = m[pivot], m[rank]
        pv = m[rank][col]
        for r in range(nr):
            if r != rank and m[r][col] != 0:
                f = m[r][col] / pv
                m[r] = [a - f * b for a, b in zip(m[r], m[rank])]
        rank += 1
        if rank == nr:
            break
    return rank


def random_int_matrix(rng, max_dim=10, lo=-5, hi=5):
    nr = rng.randint(1, max_dim)
    nc = rng.randint(1, max_dim)
    return [[rng.randint(lo, hi) for _ in range(nc)] for _ in range(nr)]


def grid_best_cost(problem, radius=2.0, points=13, levels=6, tol=1e-9):
    """Dense grid search over the containment null space, refined around
    the best point; independent upper bound on the achievable cost."""
    import numpy as np

    from dofcluster.redistribution import _null_space

    basis = _null_space(problem.containment) if problem.containment.size \
        else np.eye(len(problem.members))
    f = basis.shape[1]
    assert f >= 1
    center = np.zeros(f)
    span = radius
    best_cost = np.inf
    for _ in range(levels):
        axes = [np.linspace(center[k] - span, center[k] + span, points) for k in range(f)]
        mesh = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, f)
        dv = mesh @ basis.T
        duty = problem.duty_base + dv @ problem.duty_map.T
        ok = (
            (duty <= problem.duty_hi + tol).all(axis=1)
            & (duty >= problem.duty_lo - tol).all(axis=1)
        )
        if ok.any():
            good = dv[ok]
            costs = (
                np.einsum("ij,jk,ik->i", good, problem.cost_quad, good)
                + good @ problem.cost_lin
                + problem.cost_const
            )
            idx = int(np.argmin(costs))
            if costs[idx] < best_cost:
                best_cost = float(costs[idx])
                center = mesh[ok][idx]
        span = 4.0 * span / (points - 1)
    return best_cost


def random_feasible_network(rng, n_lo=3, n_hi=7):
    """Unit-conductance network with wide duty boxes (always feasible)."""
    import numpy as np

    from dofcluster.redistribution import SteadyStateNetwork

    g = random_connected_graph(rng, n=rng.randint(n_lo, n_hi), extra_p=0.2)
    n = g.n
    return SteadyStateNetwork(
        graph=g,
        conductance={e: 1.0 for e in g.edges},
        resistance=np.full(n, 0.2),
        v_input=np.full(n, 24.0),
        references=np.array([12.0 + 0.2 * rng.random() for _ in range(n)]),
        loads=np.array([0.5 + 2.5 * rng.random() for _ in range(n)]),
        duty_min=np.full(n, 0.35),
        duty_max=np.full(n, 0.75),
    )
