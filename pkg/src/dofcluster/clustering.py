"""Cluster detection around an overloaded node.

Two strategies:

* greedy dof-driven growth: at each step add the frontier node that
  increases the cluster's dof, breaking ties by an availability score;
  when no frontier node increases dof, fall back to the highest-degree
  frontier node.  Growth stops as soon as a feasibility oracle accepts
  the cluster.
* k-steps reachability baseline: grow by whole breadth-first shells.

Both are deterministic: every argmax breaks ties toward the lowest node
id.  The feasibility oracle is a callable taking a Cluster and returning
either a payload (feasible: typically the re-optimized references) or
None (infeasible).
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass
from typing import Callable, Optional

from .dof import cluster_dof
from .errors import AssumptionError, ClusterSearchExhausted, GraphError
from .graph import Cluster, Graph, is_connected

RULE_DOF = "dof-increase"
RULE_DEGREE = "max-degree"

FeasibilityOracle = Callable[[Cluster], Optional[object]]


@dataclass(frozen=True)
class TraceStep:
    step: int
    node: int
    rule: str
    dof_after: int | None


@dataclass(frozen=True)
class ExplorationState:
    """Cluster under construction plus its frontier and current dof.

    current_dof is None only when the cluster has swallowed the whole
    graph (the measure is undefined there).  The trace has one entry per
    growth step: len(trace) == len(cluster) - 1.
    """

    cluster: Cluster
    frontier: frozenset
    current_dof: int | None
    trace: tuple[TraceStep, ...]


@dataclass(frozen=True)
class GreedyResult:
    cluster: Cluster
    solution: object
    trace: tuple[TraceStep, ...]
    feasible_before_growth: bool


@dataclass(frozen=True)
class KstepsResult:
    cluster: Cluster
    solution: object
    iterations: int


def initialize_exploration(g: Graph, overload: int) -> ExplorationState:
    """Singleton cluster at the overloaded node; an isolated node has dof 0."""
    if not (0 <= overload < g.n):
        raise GraphError(f"overload node {overload} outside 0..{g.n - 1}")
    return ExplorationState(
        cluster=Cluster([overload]),
        frontier=frozenset(g.neighbors[overload]),
        current_dof=0,
        trace=(),
    )


def _dof_with(g: Graph, state: ExplorationState, j: int) -> int | None:
    """dof of the cluster grown by frontier node j; None when that would
    cover the whole graph (undefined)."""
    grown = Cluster(state.cluster.members + (j,))
    if len(grown) == g.n:
        return None
    return cluster_dof(g, grown).dof


def candidate_set(g: Graph, state: ExplorationState) -> frozenset:
    """Frontier nodes whose addition strictly increases the cluster dof."""
    current = state.current_dof if state.current_dof is not None else math.inf
    chosen = []
    for j in sorted(state.frontier):
        d = _dof_with(g, state, j)
        if d is not None and d > current:
            chosen.append(j)
    return frozenset(chosen)


def _validate_availability(availability, nodes) -> dict[int, float]:
    scores = {}
    for j in nodes:
        try:
            value = float(availability[j])
        except (KeyError, IndexError, TypeError) as exc:
            raise ValueError(f"availability score missing for node {j}") from exc
        if not math.isfinite(value):
            raise ValueError(f"availability score for node {j} is not finite")
        scores[j] = value
    return scores


def grow_step(g: Graph, state: ExplorationState, availability) -> ExplorationState:
    """Add exactly one node to the cluster.

    Dof-increasing candidates win, ranked by availability; otherwise the
    highest-degree frontier node is taken.  The frontier is updated
    incrementally (union with the new node's neighbors, minus the node and
    any of its neighbors already inside).
    """
    if not state.frontier:
        raise ClusterSearchExhausted(
            "frontier is empty; the cluster cannot grow further",
            cluster=state.cluster,
            trace=list(state.trace),
        )
    candidates = candidate_set(g, state)
    if candidates:
        scores = _validate_availability(availability, sorted(candidates))
        best = max(scores.values())
        node = min(j for j, s in scores.items() if s == best)
        rule = RULE_DOF
    else:
        best = max(g.degree(j) for j in state.frontier)
        node = min(j for j in state.frontier if g.degree(j) == best)
        rule = RULE_DEGREE

    cluster = Cluster(state.cluster.members + (node,))
    inside = cluster.member_set()
    frontier = (state.frontier | g.neighbors[node]) - {node} - (inside & g.neighbors[node])
    dof_after = None if len(cluster) == g.n else cluster_dof(g, cluster).dof
    step = TraceStep(step=len(state.trace) + 1, node=node, rule=rule, dof_after=dof_after)
    return ExplorationState(
        cluster=cluster,
        frontier=frontier,
        current_dof=dof_after,
        trace=state.trace + (step,),
    )


def dof_greedy_cluster(
    g: Graph,
    overload: int,
    availability,
    oracle: FeasibilityOracle,
    max_steps: int | None = None,
) -> GreedyResult:
    """Grow a cluster around the overloaded node until the oracle accepts.

    The oracle is also consulted on the initial singleton, so a
    zero-growth solution is returned when one exists.  Exhausting
    max_steps (default n-1, enough to reach the full node set) without
    feasibility raises ClusterSearchExhausted carrying the trace.
    """
    if not is_connected(g):
        raise AssumptionError("graph is disconnected; cluster exploration is undefined")
    state = initialize_exploration(g, overload)
    solution = oracle(state.cluster)
    if solution is not None:
        return GreedyResult(
            cluster=state.cluster,
            solution=solution,
            trace=(),
            feasible_before_growth=True,
        )
    if max_steps is None:
        max_steps = g.n - 1
    for _ in range(max_steps):
        state = grow_step(g, state, availability)
        solution = oracle(state.cluster)
        if solution is not None:
            return GreedyResult(
                cluster=state.cluster,
                solution=solution,
                trace=state.trace,
                feasible_before_growth=False,
            )
    raise ClusterSearchExhausted(
        f"no feasible cluster within {max_steps} growth steps",
        cluster=state.cluster,
        trace=list(state.trace),
    )


def ksteps_cluster(g: Graph, overload: int, k: int) -> Cluster:
    """All nodes at breadth-first distance <= k from the overloaded node,
    ordered by (distance, id)."""
    if not (0 <= overload < g.n):
        raise GraphError(f"overload node {overload} outside 0..{g.n - 1}")
    if k < 1:
        raise ValueError(f"k must be at least 1, got {k}")
    dist = {overload: 0}
    queue = deque([overload])
    order = [overload]
    while queue:
        x = queue.popleft()
        if dist[x] == k:
            continue
        for y in sorted(g.neighbors[x]):
            if y not in dist:
                dist[y] = dist[x] + 1
                queue.append(y)
                order.append(y)
    return Cluster(order)


def ksteps_greedy(
    g: Graph,
    overload: int,
    oracle: FeasibilityOracle,
    max_k: int | None = None,
) -> KstepsResult:
    """Baseline: enlarge by whole reachability shells until feasible."""
    if not is_connected(g):
        raise AssumptionError("graph is disconnected; cluster exploration is undefined")
    if max_k is None:
        max_k = g.n - 1
    for k in range(1, max_k + 1):
        cluster = ksteps_cluster(g, overload, k)
        solution = oracle(cluster)
        if solution is not None:
            return KstepsResult(cluster=cluster, solution=solution, iterations=k)
        if len(cluster) == g.n:
            raise ClusterSearchExhausted(
                f"reachability saturated the graph at k={k} without feasibility",
                cluster=cluster,
            )
    raise ClusterSearchExhausted(
        f"no feasible reachability cluster up to k={max_k}",
        cluster=ksteps_cluster(g, overload, max_k),
    )
