"""Undirected graphs, Laplacians, clusters, and the block structure a
cluster induces on the Laplacian.

Nodes are contiguous 0-based integer ids.  Files may carry arbitrary
labels; `read_graph_file` maps them onto ids and returns the label table.
All types here are immutable after construction and safe to share.
"""

from __future__ import annotations

import json
from collections import deque
from collections.abc import Iterable
from dataclasses import dataclass
from pathlib import Path

from .errors import AssumptionError, GraphError, ScenarioError
from .intmatrix import IntMatrix


class Graph:
    """Simple undirected graph: no self-loops, no duplicate edges."""

    __slots__ = ("n", "edges", "neighbors")

    def __init__(self, n: int, edges: frozenset, neighbors: tuple):
        object.__setattr__(self, "n", n)
        object.__setattr__(self, "edges", edges)
        object.__setattr__(self, "neighbors", neighbors)

    def __setattr__(self, name, value):
        raise AttributeError("Graph is immutable")

    def degree(self, i: int) -> int:
        return len(self.neighbors[i])

    def has_edge(self, i: int, j: int) -> bool:
        return (i, j) in self.edges or (j, i) in self.edges

    def __eq__(self, other):
        if not isinstance(other, Graph):
            return NotImplemented
        return self.n == other.n and self.edges == other.edges

    def __hash__(self):
        return hash((self.n, self.edges))

    def __repr__(self):
        return f"Graph(n={self.n}, edges={sorted(self.edges)})"


def build_graph(n: int, edge_list: Iterable[tuple[int, int]]) -> Graph:
    """Build a simple undirected graph on nodes 0..n-1.

    Duplicate and reversed pairs collapse to one edge.  Self-loops and
    out-of-range ids are rejected.
    """
    if n < 1:
        raise GraphError(f"node count must be positive, got {n}")
    edges = set()
    for pair in edge_list:
        i, j = pair
        if not (0 <= i < n and 0 <= j < n):
            raise GraphError(f"edge ({i},{j}) references a node outside 0..{n - 1}")
        if i == j:
            raise GraphError(f"self-loop ({i},{i}) is not allowed")
        edges.add((min(i, j), max(i, j)))
    nbrs = [set() for _ in range(n)]
    for i, j in edges:
        nbrs[i].add(j)
        nbrs[j].add(i)
    return Graph(n, frozenset(edges), tuple(frozenset(s) for s in nbrs))


class Cluster:
    """Non-empty ordered collection of distinct node ids.

    Order matters: it fixes the row order of block views and the variable
    order of downstream optimization problems.
    """

    __slots__ = ("members",)

    def __init__(self, members: Iterable[int]):
        mem = tuple(int(m) for m in members)
        if not mem:
            raise GraphError("cluster must be non-empty")
        if len(set(mem)) != len(mem):
            raise GraphError(f"cluster has duplicate members: {mem}")
        object.__setattr__(self, "members", mem)

    def __setattr__(self, name, value):
        raise AttributeError("Cluster is immutable")

    def member_set(self) -> frozenset:
        return frozenset(self.members)

    def __len__(self):
        return len(self.members)

    def __iter__(self):
        return iter(self.members)

    def __contains__(self, node):
        return node in self.members

    def __eq__(self, other):
        if not isinstance(other, Cluster):
            return NotImplemented
        return self.members == other.members

    def __hash__(self):
        return hash(self.members)

    def __repr__(self):
        return f"Cluster({list(self.members)})"


@dataclass(frozen=True)
class Partition:
    """Disjoint clusters covering all nodes (validated by validate_partition)."""

    clusters: tuple[Cluster, ...]

    def __init__(self, clusters: Iterable[Cluster]):
        object.__setattr__(self, "clusters", tuple(clusters))


@dataclass(frozen=True)
class BlockView:
    """The rows of the Laplacian owned by a cluster, split into the square
    block on the cluster's own columns and the bridge onto the rest."""

    diagonal_block: IntMatrix
    bridge_matrix: IntMatrix
    cluster_order: tuple[int, ...]
    external_order: tuple[int, ...]


@dataclass(frozen=True)
class PartitionReport:
    violations: tuple[str, ...]

    @property
    def ok(self) -> bool:
        return not self.violations


def _check_cluster(g: Graph, c: Cluster) -> None:
    for m in c.members:
        if not (0 <= m < g.n):
            raise GraphError(f"cluster member {m} outside 0..{g.n - 1}")


def laplacian(g: Graph) -> IntMatrix:
    """Degree matrix minus adjacency matrix; symmetric with zero row sums."""
    rows = [[0] * g.n for _ in range(g.n)]
    for i in range(g.n):
        rows[i][i] = g.degree(i)
    for i, j in g.edges:
        rows[i][j] = -1
        rows[j][i] = -1
    return IntMatrix(rows, cols=g.n)


def is_connected(g: Graph) -> bool:
    """True iff a traversal from node 0 reaches every node."""
    seen = {0}
    queue = deque([0])
    while queue:
        x = queue.popleft()
        for y in g.neighbors[x]:
            if y not in seen:
                seen.add(y)
                queue.append(y)
    return len(seen) == g.n


def induced_subgraph(g: Graph, c: Cluster) -> Graph:
    """Subgraph on the cluster, nodes relabeled 0..|c|-1 in cluster order."""
    _check_cluster(g, c)
    index = {node: k for k, node in enumerate(c.members)}
    edges = [
        (index[i], index[j])
        for i, j in g.edges
        if i in index and j in index
    ]
    return build_graph(len(c), edges)


def block_view(g: Graph, c: Cluster) -> BlockView:
    """Split the cluster's Laplacian rows into diagonal block and bridge.

    Bridge columns are the external nodes in ascending id order.  A cluster
    equal to the full node set has no bridge and is rejected.
    """
    _check_cluster(g, c)
    if len(c) == g.n:
        raise AssumptionError(
            "cluster equals the full node set; the block split needs at "
            "least one external node"
        )
    lap = laplacian(g)
    inside = list(c.members)
    outside = [k for k in range(g.n) if k not in c.member_set()]
    return BlockView(
        diagonal_block=lap.submatrix(inside, inside),
        bridge_matrix=lap.submatrix(inside, outside),
        cluster_order=tuple(inside),
        external_order=tuple(outside),
    )


def degree_deficiency_decomposition(g: Graph, c: Cluster) -> tuple[IntMatrix, IntMatrix]:
    """Split a cluster's diagonal block into the induced subgraph's
    Laplacian plus the diagonal of external-edge counts.

    The sum of the two parts reproduces block_view(g, c).diagonal_block
    entry for entry.  Like the block split, this needs at least one
    external node.
    """
    if len(c) == g.n:
        raise AssumptionError(
            "cluster equals the full node set; the decomposition needs at "
            "least one external node"
        )
    sub = induced_subgraph(g, c)
    lap_inner = laplacian(sub)
    deficiency = [
        g.degree(node) - sub.degree(k) for k, node in enumerate(c.members)
    ]
    return lap_inner, IntMatrix.diagonal(deficiency)


def validate_partition(g: Graph, p: Partition) -> PartitionReport:
    """Collect every violation of the clustering preconditions.

    Violations are data, not exceptions: an empty report means the
    partition is usable.
    """
    violations = []
    if not is_connected(g):
        violations.append("graph is disconnected")
    if len(p.clusters) < 2:
        violations.append(f"partition has {len(p.clusters)} cluster(s); need at least 2")
    seen: dict[int, int] = {}
    for idx, c in enumerate(p.clusters):
        if len(c) == 0:
            violations.append(f"cluster {idx} is empty")
            continue
        for m in c.members:
            if not (0 <= m < g.n):
                violations.append(f"cluster {idx} member {m} outside 0..{g.n - 1}")
            elif m in seen:
                violations.append(f"node {m} appears in clusters {seen[m]} and {idx}")
            else:
                seen[m] = idx
        if all(0 <= m < g.n for m in c.members):
            if not is_connected(induced_subgraph(g, c)):
                violations.append(f"cluster {idx} induces a disconnected subgraph")
    missing = [k for k in range(g.n) if k not in seen]
    if missing:
        violations.append(f"nodes not covered by any cluster: {missing}")
    return PartitionReport(tuple(violations))


# ---------------------------------------------------------------------------
# file ingestion

def _map_labels(labels: list[str], n: int) -> tuple[dict[str, int], list[str]]:
    """Assign 0-based ids to file labels; returns (label->id, id->label).

    Integer labels already in 0..n-1 pass through; integer labels in 1..n
    are shifted down by one (so unmentioned isolated nodes still get a
    label).  Otherwise the file must mention all n labels, which are sorted
    (numerically when possible) and numbered in order.
    """
    try:
        values = [int(s) for s in labels]
        numeric = True
    except ValueError:
        numeric = False
    if numeric:
        if all(0 <= v < n for v in values):
            return {s: int(s) for s in labels}, [str(k) for k in range(n)]
        if all(1 <= v <= n for v in values):
            return {s: int(s) - 1 for s in labels}, [str(k + 1) for k in range(n)]
    if len(labels) != n:
        raise ScenarioError(
            f"cannot map node labels to ids: {len(labels)} distinct labels "
            f"for {n} nodes and labels are not 0- or 1-based integers"
        )
    ordered = sorted(labels, key=(lambda s: int(s)) if numeric else None)
    return {s: k for k, s in enumerate(ordered)}, list(ordered)


def parse_edge_list(text: str) -> tuple[Graph, list[str]]:
    """Parse the edge-list format: first line the node count, then one
    "i j" pair per line; '#' starts a comment.

    Returns the graph and the per-id label table.
    """
    lines = []
    for raw in text.splitlines():
        line = raw.split("#", 1)[0].strip()
        if line:
            lines.append(line)
    if not lines:
        raise ScenarioError("empty graph file")
    try:
        n = int(lines[0])
    except ValueError:
        raise ScenarioError(f"first line must be the node count, got {lines[0]!r}") from None
    pairs = []
    labels: list[str] = []
    seen = set()
    for line in lines[1:]:
        parts = line.split()
        if len(parts) != 2:
            raise ScenarioError(f"expected 'i j' on edge line, got {line!r}")
        pairs.append((parts[0], parts[1]))
        for s in parts:
            if s not in seen:
                seen.add(s)
                labels.append(s)
    mapping, table = _map_labels(labels, n)
    graph = build_graph(n, [(mapping[a], mapping[b]) for a, b in pairs])
    return graph, table


def read_graph_file(path: str | Path) -> tuple[Graph, list[str]]:
    """Read a graph from an edge-list file or from the `graph` section of a
    scenario file (sniffed by a leading '{')."""
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ScenarioError(f"cannot read graph file {path}: {exc}") from None
    if text.lstrip().startswith("{"):
        from .scenario import graph_from_section

        try:
            doc = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ScenarioError(f"invalid JSON in {path}: {exc}") from None
        if "graph" not in doc:
            raise ScenarioError(f"{path} has no 'graph' section")
        g, labels, _ = graph_from_section(doc["graph"])
        return g, labels
    return parse_edge_list(text)
