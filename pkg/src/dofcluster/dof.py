"""Degree-of-freedom measure for clusters, plus the exact-rank machinery
behind it.

The dof of a cluster counts the independent internal directions in which
its members' reference values can move without changing the flux seen by
any external node: cluster size minus the rank of the cluster's bridge
rows.  Ranks and determinants are computed exactly over the integers
(fraction-free elimination, arbitrary precision on overflow); no floating
point enters the dof path.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _backend
from .errors import AssumptionError, SpectralCheckError
from .graph import Cluster, Graph, block_view, induced_subgraph, is_connected
from .intmatrix import IntMatrix


@dataclass(frozen=True)
class DofReport:
    """Result of a cluster dof evaluation.

    deficiency equals the bridge rank: the number of linearly independent
    external connections the cluster has.
    """

    cluster_size: int
    bridge_rank: int
    dof: int
    deficiency: int


def exact_rank(m: IntMatrix) -> int:
    """Rank over the rationals, computed exactly.

    Uses fraction-free elimination with full pivoting; empty matrices have
    rank 0.
    """
    return _backend.exact_rank_rows(m.tolists())


def exact_determinant(m: IntMatrix) -> int:
    """Exact determinant of a square integer matrix."""
    if not m.is_square():
        raise ValueError(f"determinant requires a square matrix, got {m.shape}")
    return _backend.exact_determinant_rows(m.tolists())


def rank_difference(m1: IntMatrix, m2: IntMatrix) -> int:
    """exact_rank(m1) - exact_rank(m2); negative values are legal for
    arbitrary inputs."""
    return exact_rank(m1) - exact_rank(m2)


def cluster_dof(g: Graph, c: Cluster) -> DofReport:
    """Degrees of freedom of a cluster in a connected graph.

    Requires the graph and the cluster's induced subgraph to be connected
    and the cluster to be a proper subset of the nodes; the measure is not
    defined otherwise.  Only the bridge rank is computed: the diagonal
    block of a cluster satisfying these preconditions is always full rank,
    so dof = |cluster| - rank(bridge).
    """
    if not is_connected(g):
        raise AssumptionError("graph is disconnected; cluster dof is undefined")
    if len(c) == g.n:
        raise AssumptionError("cluster must be a proper subset of the nodes")
    if not is_connected(induced_subgraph(g, c)):
        raise AssumptionError(
            f"cluster {list(c.members)} induces a disconnected subgraph"
        )
    view = block_view(g, c)
    bridge_rank = exact_rank(view.bridge_matrix)
    size = len(c)
    return DofReport(
        cluster_size=size,
        bridge_rank=bridge_rank,
        dof=size - bridge_rank,
        deficiency=bridge_rank,
    )


@dataclass(frozen=True)
class DominanceReport:
    """Structural conditions under which a matrix is guaranteed nonsingular:
    irreducibility, row diagonal dominance, and at least one strictly
    dominant row."""

    irreducible: bool
    diagonally_dominant: bool
    has_strictly_dominant_row: bool
    strict_rows: tuple[int, ...]

    @property
    def all_hold(self) -> bool:
        return self.irreducible and self.diagonally_dominant and self.has_strictly_dominant_row


def _pattern_strongly_connected(m: IntMatrix) -> bool:
    """Strong connectivity of the nonzero off-diagonal pattern.

    For a symmetric matrix this is plain connectivity; irreducibility in
    general means no permutation puts the matrix in block-triangular form,
    which is equivalent to strong connectivity of the directed pattern.
    """
    n = m.rows
    if n <= 1:
        return True
    succ = [
        [j for j in range(n) if j != i and m[i, j] != 0]
        for i in range(n)
    ]
    pred = [[] for _ in range(n)]
    for i in range(n):
        for j in succ[i]:
            pred[j].append(i)

    def reaches_all(adj):
        seen = {0}
        stack = [0]
        while stack:
            x = stack.pop()
            for y in adj[x]:
                if y not in seen:
                    seen.add(y)
                    stack.append(y)
        return len(seen) == n

    return reaches_all(succ) and reaches_all(pred)


def check_taussky_conditions(m: IntMatrix) -> DominanceReport:
    """Evaluate the Taussky nonsingularity conditions on a square matrix."""
    if not m.is_square():
        raise ValueError(f"conditions require a square matrix, got {m.shape}")
    dominant = True
    strict = []
    for i in range(m.rows):
        off = sum(abs(m[i, j]) for j in range(m.cols) if j != i)
        dii = abs(m[i, i])
        if dii < off:
            dominant = False
        elif dii > off:
            strict.append(i)
    return DominanceReport(
        irreducible=_pattern_strongly_connected(m),
        diagonally_dominant=dominant,
        has_strictly_dominant_row=bool(strict),
        strict_rows=tuple(strict),
    )


def spectral_positivity_check(m: IntMatrix, tolerance: float = 1e-9) -> bool:
    """True iff the smallest eigenvalue of a symmetric matrix exceeds the
    tolerance (floating-point check, test-harness use only).

    Eigensolver failure raises SpectralCheckError so it cannot be mistaken
    for a negative verdict.
    """
    if not m.is_square():
        raise ValueError(f"eigenvalue check requires a square matrix, got {m.shape}")
    if not m.is_symmetric():
        raise ValueError("eigenvalue check requires a symmetric matrix")
    try:
        eigenvalues = np.linalg.eigvalsh(m.to_float())
    except np.linalg.LinAlgError as exc:
        raise SpectralCheckError(f"eigensolver did not converge: {exc}") from exc
    return bool(eigenvalues[0] > tolerance)
