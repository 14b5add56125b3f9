"""Local reference re-optimization with flux containment.

Given a resistive converter network at equilibrium and a cluster of nodes,
find voltage-reference shifts for the cluster members that keep the net
flux into every external neighbor unchanged (containment), respect each
member's duty-cycle saturation box, and minimize a convex quadratic cost.

Containment equalities are eliminated exactly by restricting the decision
to their null space (whose dimension is the cluster's dof on
unit-conductance networks); the remaining inequality-constrained convex QP
is solved by a primal active-set iteration seeded by a phase-1 feasibility
LP.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import linprog

from .errors import AssumptionError, SolverError
from .graph import Cluster, Graph, induced_subgraph, is_connected


def _frozen(a) -> np.ndarray:
    arr = np.array(a, dtype=float)
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True)
class SteadyStateNetwork:
    """Converter network data sufficient to determine any equilibrium.

    conductance maps each undirected edge (i, j) with i < j to a positive
    siemens value; per-node arrays are indexed by node id.
    """

    graph: Graph
    conductance: dict
    resistance: np.ndarray
    v_input: np.ndarray
    references: np.ndarray
    loads: np.ndarray
    duty_min: np.ndarray
    duty_max: np.ndarray

    def __post_init__(self):
        n = self.graph.n
        for name in ("resistance", "v_input", "references", "loads", "duty_min", "duty_max"):
            arr = _frozen(getattr(self, name))
            if arr.shape != (n,):
                raise ValueError(f"{name} must have shape ({n},), got {arr.shape}")
            object.__setattr__(self, name, arr)
        cond = {}
        for (i, j), g in self.conductance.items():
            a, b = min(i, j), max(i, j)
            if not self.graph.has_edge(a, b):
                raise ValueError(f"conductance given for non-edge ({i},{j})")
            if not g > 0:
                raise ValueError(f"conductance on edge ({i},{j}) must be positive, got {g}")
            cond[(a, b)] = float(g)
        missing = [e for e in self.graph.edges if e not in cond]
        if missing:
            raise ValueError(f"missing conductance for edges {sorted(missing)}")
        object.__setattr__(self, "conductance", cond)
        if not (self.v_input > 0).all():
            raise ValueError("converter input voltages must be positive")
        if not ((self.duty_min >= 0) & (self.duty_min < self.duty_max) & (self.duty_max <= 1)).all():
            raise ValueError("duty bounds must satisfy 0 <= min < max <= 1")

    def with_references(self, references) -> "SteadyStateNetwork":
        return SteadyStateNetwork(
            graph=self.graph,
            conductance=dict(self.conductance),
            resistance=self.resistance,
            v_input=self.v_input,
            references=references,
            loads=self.loads,
            duty_min=self.duty_min,
            duty_max=self.duty_max,
        )

    def with_loads(self, loads) -> "SteadyStateNetwork":
        return SteadyStateNetwork(
            graph=self.graph,
            conductance=dict(self.conductance),
            resistance=self.resistance,
            v_input=self.v_input,
            references=self.references,
            loads=loads,
            duty_min=self.duty_min,
            duty_max=self.duty_max,
        )

    def total_conductance(self) -> np.ndarray:
        """Sum of incident edge conductances per node."""
        s = np.zeros(self.graph.n)
        for (i, j), g in self.conductance.items():
            s[i] += g
            s[j] += g
        return s


@dataclass(frozen=True)
class Equilibrium:
    """Flux, current and duty implied by a voltage profile at steady state.

    edge_flux[(i, j)] (i < j) is the current flowing into i from j; the
    per-node net flux and converter current follow from it, and the duty
    is whatever input holds that operating point.
    """

    voltages: np.ndarray
    edge_flux: dict
    node_flux: np.ndarray
    currents: np.ndarray
    duty: np.ndarray


def steady_state_map(net: SteadyStateNetwork, voltages=None) -> Equilibrium:
    """Equilibrium implied by a voltage profile (default: the references)."""
    v = net.references if voltages is None else np.asarray(voltages, dtype=float)
    if v.shape != (net.graph.n,):
        raise ValueError(f"voltages must have shape ({net.graph.n},), got {v.shape}")
    edge_flux = {}
    node_flux = np.zeros(net.graph.n)
    for (i, j), g in sorted(net.conductance.items()):
        f = g * (v[j] - v[i])
        edge_flux[(i, j)] = f
        node_flux[i] += f
        node_flux[j] -= f
    currents = net.loads - node_flux
    duty = (v + net.resistance * currents) / net.v_input
    return Equilibrium(
        voltages=_frozen(v),
        edge_flux=edge_flux,
        node_flux=_frozen(node_flux),
        currents=_frozen(currents),
        duty=_frozen(duty),
    )


# ---------------------------------------------------------------------------
# cost specifications

class DutyCenteringCost:
    """Pull cluster duties toward 50% with a small ridge on the reference
    shifts for uniqueness: sum (u_i - 0.5)^2 + rho * sum dV_i^2."""

    name = "duty-centering"

    def __init__(self, rho: float = 1e-3):
        if rho <= 0:
            raise ValueError("rho must be positive")
        self.rho = rho

    def build(self, duty_map: np.ndarray, duty_base: np.ndarray):
        r = duty_base - 0.5
        quad = duty_map.T @ duty_map + self.rho * np.eye(duty_map.shape[1])
        lin = 2.0 * duty_map.T @ r
        return quad, lin, float(r @ r)


class ReferenceDeviationCost:
    """Smallest reference movement: sum dV_i^2 (vanishes at dV = 0)."""

    name = "reference-deviation"

    def build(self, duty_map: np.ndarray, duty_base: np.ndarray):
        m = duty_map.shape[1]
        return np.eye(m), np.zeros(m), 0.0


COST_SPECS = {
    DutyCenteringCost.name: DutyCenteringCost,
    ReferenceDeviationCost.name: ReferenceDeviationCost,
}


@dataclass(frozen=True)
class RedistributionProblem:
    """Assembled decision problem over the cluster's reference shifts.

    cost(dV) = dV' Q dV + q' dV + c0 subject to containment rows
    (containment @ dV == 0) and duty boxes
    duty_lo <= duty_base + duty_map @ dV <= duty_hi.
    """

    net: SteadyStateNetwork
    cluster: Cluster
    members: tuple[int, ...]
    containment: np.ndarray
    external_neighbors: tuple[int, ...]
    duty_map: np.ndarray
    duty_base: np.ndarray
    duty_lo: np.ndarray
    duty_hi: np.ndarray
    cost_quad: np.ndarray
    cost_lin: np.ndarray
    cost_const: float
    cost_name: str
    covers_all_nodes: bool

    def cost_value(self, delta_v: np.ndarray) -> float:
        return float(delta_v @ self.cost_quad @ delta_v + self.cost_lin @ delta_v + self.cost_const)

    def report(self, labels=None) -> str:
        name = (lambda i: labels[i]) if labels else str
        lines = ["redistribution problem"]
        lines.append(f"  cluster: [{', '.join(name(i) for i in self.members)}]")
        lines.append(f"  variables: {len(self.members)} reference shift(s) dV")
        if self.covers_all_nodes:
            lines.append("  containment: none (cluster covers every node)")
        else:
            lines.append(f"  containment rows ({len(self.external_neighbors)}):")
            for r, k in enumerate(self.external_neighbors):
                terms = " + ".join(
                    f"{self.containment[r, c]:g}*dV[{name(i)}]"
                    for c, i in enumerate(self.members)
                    if self.containment[r, c] != 0.0
                )
                lines.append(f"    into {name(k)}: {terms} == 0")
        lines.append("  duty boxes:")
        for c, i in enumerate(self.members):
            lines.append(
                f"    {self.duty_lo[c]:.6g} <= u[{name(i)}] <= {self.duty_hi[c]:.6g}"
                f"   (now {self.duty_base[c]:.6g})"
            )
        lines.append(f"  cost: {self.cost_name}")
        return "\n".join(lines)


def assemble_problem(
    net: SteadyStateNetwork,
    cluster: Cluster,
    cost=None,
) -> RedistributionProblem:
    """Build the containment-constrained re-optimization for a cluster.

    One containment equality per external node adjacent to the cluster;
    duty boxes for every member (duty is affine in the reference shifts);
    convex quadratic cost (non-convex specs are rejected here).
    """
    g = net.graph
    if not is_connected(g):
        raise AssumptionError("network graph is disconnected")
    if not is_connected(induced_subgraph(g, cluster)):
        raise AssumptionError(
            f"cluster {list(cluster.members)} induces a disconnected subgraph"
        )
    members = cluster.members
    index = {node: c for c, node in enumerate(members)}
    inside = cluster.member_set()
    covers_all = len(cluster) == g.n

    externals = []
    rows = []
    for k in range(g.n):
        if k in inside:
            continue
        touching = [i for i in g.neighbors[k] if i in inside]
        if not touching:
            continue
        row = np.zeros(len(members))
        for i in touching:
            row[index[i]] = net.conductance[(min(i, k), max(i, k))]
        externals.append(k)
        rows.append(row)
    containment = np.array(rows) if rows else np.zeros((0, len(members)))

    base = steady_state_map(net)
    total_g = net.total_conductance()
    m = len(members)
    duty_map = np.zeros((m, m))
    for r, i in enumerate(members):
        duty_map[r, r] = (1.0 + net.resistance[i] * total_g[i]) / net.v_input[i]
        for j in g.neighbors[i]:
            if j in index:
                duty_map[r, index[j]] -= (
                    net.resistance[i] * net.conductance[(min(i, j), max(i, j))] / net.v_input[i]
                )

    if cost is None:
        cost = DutyCenteringCost()
    quad, lin, const = cost.build(duty_map, base.duty[list(members)])
    quad = 0.5 * (quad + quad.T)
    eigs = np.linalg.eigvalsh(quad)
    if eigs[0] < -1e-9 * max(1.0, abs(eigs[-1])):
        raise ValueError(f"cost spec {cost.name!r} is not convex (min eigenvalue {eigs[0]:g})")

    return RedistributionProblem(
        net=net,
        cluster=cluster,
        members=members,
        containment=containment,
        external_neighbors=tuple(externals),
        duty_map=duty_map,
        duty_base=base.duty[list(members)].copy(),
        duty_lo=net.duty_min[list(members)].copy(),
        duty_hi=net.duty_max[list(members)].copy(),
        cost_quad=quad,
        cost_lin=np.asarray(lin, dtype=float),
        cost_const=float(const),
        cost_name=getattr(cost, "name", type(cost).__name__),
        covers_all_nodes=covers_all,
    )


@dataclass(frozen=True)
class RedistributionSolution:
    status: str
    cluster: Cluster
    members: tuple[int, ...]
    delta_v: np.ndarray | None
    new_references: np.ndarray | None
    equilibrium: Equilibrium | None
    cost: float | None
    containment_residual: float | None
    active_constraints: tuple[str, ...]
    iterations: int
    diagnostics: str = ""

    @property
    def feasible(self) -> bool:
        return self.status == "feasible"

    def report(self, labels=None) -> str:
        name = (lambda i: labels[i]) if labels else str
        lines = [f"redistribution solution: {self.status}"]
        if self.diagnostics:
            lines.append(f"  note: {self.diagnostics}")
        if self.feasible:
            for c, i in enumerate(self.members):
                lines.append(
                    f"  dV[{name(i)}] = {self.delta_v[c]:+.9g}"
                    f" -> ref {self.new_references[i]:.9g}, duty {self.equilibrium.duty[i]:.9g}"
                )
            lines.append(f"  cost = {self.cost:.9g}")
            lines.append(f"  containment residual = {self.containment_residual:.3g}")
            active = ", ".join(self.active_constraints) if self.active_constraints else "none"
            lines.append(f"  active set: {active}")
        lines.append(f"  iterations: {self.iterations}")
        return "\n".join(lines)


def _null_space(a: np.ndarray) -> np.ndarray:
    if a.size == 0:
        return np.eye(a.shape[1])
    u, s, vt = np.linalg.svd(a)
    tol = max(a.shape) * np.finfo(float).eps * (s[0] if s.size else 0.0)
    rank = int((s > tol).sum())
    return vt[rank:].T


def containment_rank(problem: RedistributionProblem) -> int:
    """Number of independent containment equalities."""
    a = problem.containment
    if a.size == 0:
        return 0
    s = np.linalg.svd(a, compute_uv=False)
    tol = max(a.shape) * np.finfo(float).eps * s[0]
    return int((s > tol).sum())


def _phase1(g_ineq: np.ndarray, h: np.ndarray):
    """Max-margin feasibility LP: maximize t s.t. G z + t <= h, t <= 1.

    Returns (z0, margin); margin < 0 means the most violated constraint
    cannot be satisfied better than -margin.
    """
    k = g_ineq.shape[1]
    c = np.zeros(k + 1)
    c[-1] = -1.0
    a_ub = np.hstack([g_ineq, np.ones((g_ineq.shape[0], 1))])
    res = linprog(
        c,
        A_ub=a_ub,
        b_ub=h,
        bounds=[(None, None)] * k + [(None, 1.0)],
        method="highs",
    )
    if not res.success:
        raise SolverError(f"phase-1 feasibility LP failed: {res.message}")
    return res.x[:k], float(res.x[-1])


def _active_set_qp(hess, lin, g_ineq, h, z0, max_iter):
    """Primal active-set method for min 1/2 z'Hz + c'z s.t. Gz <= h.

    Starts from a feasible z0.  Returns (z, working_set, iterations);
    hitting the iteration cap raises SolverError (abnormal, not
    infeasible).
    """
    z = z0.astype(float).copy()
    n_ineq = g_ineq.shape[0]
    working = [i for i in range(n_ineq) if h[i] - g_ineq[i] @ z <= 1e-10]
    for it in range(1, max_iter + 1):
        grad = hess @ z + lin
        if working:
            basis = _null_space(g_ineq[working])
        else:
            basis = np.eye(z.shape[0])
        if basis.shape[1] == 0:
            p = np.zeros_like(z)
        else:
            reduced_h = basis.T @ hess @ basis
            reduced_g = basis.T @ grad
            y = np.linalg.lstsq(reduced_h, -reduced_g, rcond=None)[0]
            p = basis @ y
        if np.linalg.norm(p) <= 1e-11 * (1.0 + np.linalg.norm(z)):
            if not working:
                return z, working, it
            lam = np.linalg.lstsq(g_ineq[working].T, -grad, rcond=None)[0]
            j = int(np.argmin(lam))
            if lam[j] >= -1e-9:
                return z, working, it
            working.pop(j)
            continue
        alpha = 1.0
        blocking = -1
        for i in range(n_ineq):
            if i in working:
                continue
            gp = g_ineq[i] @ p
            if gp > 1e-13:
                step = (h[i] - g_ineq[i] @ z) / gp
                if step < alpha - 1e-15:
                    alpha = max(step, 0.0)
                    blocking = i
        z = z + alpha * p
        if blocking >= 0:
            working.append(blocking)
    raise SolverError(f"active-set iteration cap ({max_iter}) reached")


def solve(
    problem: RedistributionProblem,
    feas_tol: float = 1e-9,
    max_iter: int | None = None,
) -> RedistributionSolution:
    """Solve the assembled problem.

    Equality constraints are eliminated exactly (decision restricted to
    the containment null space) before the box phase, so containment
    holds to machine precision in any feasible solution.  Infeasibility
    is certified either by a pinned decision violating a box or by the
    phase-1 LP margin.
    """
    members = problem.members
    m = len(members)
    if max_iter is None:
        max_iter = 100 * m
    basis = _null_space(problem.containment) if problem.containment.size else np.eye(m)
    free_dim = basis.shape[1]

    def infeasible(note, iterations=0):
        return RedistributionSolution(
            status="infeasible",
            cluster=problem.cluster,
            members=members,
            delta_v=None,
            new_references=None,
            equilibrium=None,
            cost=None,
            containment_residual=None,
            active_constraints=(),
            iterations=iterations,
            diagnostics=note,
        )

    def feasible(delta, working, iterations):
        new_refs = problem.net.references.copy()
        for c, i in enumerate(members):
            new_refs[i] += delta[c]
        eq = steady_state_map(problem.net, new_refs)
        residual = (
            float(np.abs(problem.containment @ delta).max())
            if problem.containment.size
            else 0.0
        )
        names = []
        for w in working:
            side, row = ("max", w) if w < m else ("min", w - m)
            names.append(f"u_{side}[{members[row]}]")
        return RedistributionSolution(
            status="feasible",
            cluster=problem.cluster,
            members=members,
            delta_v=delta,
            new_references=new_refs,
            equilibrium=eq,
            cost=problem.cost_value(delta),
            containment_residual=residual,
            active_constraints=tuple(names),
            iterations=iterations,
            diagnostics="cluster covers every node; no containment rows"
            if problem.covers_all_nodes
            else "",
        )

    slack_hi = problem.duty_hi - problem.duty_base
    slack_lo = problem.duty_base - problem.duty_lo

    if free_dim == 0:
        if (slack_hi >= -feas_tol).all() and (slack_lo >= -feas_tol).all():
            return feasible(np.zeros(m), [], 0)
        return infeasible(
            "containment pins every reference and the current duties violate their boxes"
        )

    g_ineq = np.vstack([problem.duty_map @ basis, -(problem.duty_map @ basis)])
    h = np.concatenate([slack_hi, slack_lo])

    if (h >= -feas_tol).all():
        z0 = np.zeros(free_dim)
    else:
        z0, margin = _phase1(g_ineq, h)
        if margin < -feas_tol:
            return infeasible(
                f"no point in the containment null space satisfies the duty boxes "
                f"(best margin {margin:.3g})"
            )

    hess = 2.0 * basis.T @ problem.cost_quad @ basis
    lin = basis.T @ problem.cost_lin
    z, working, iterations = _active_set_qp(hess, lin, g_ineq, h, z0, max_iter)
    return feasible(basis @ z, working, iterations)


def microgrid_feasibility_oracle(net: SteadyStateNetwork, cost=None, feas_tol: float = 1e-9):
    """Adapter: bind assemble+solve for use inside the cluster searches.

    The returned callable yields the RedistributionSolution when feasible
    and None otherwise; abnormal solver termination propagates.
    """

    def oracle(cluster: Cluster):
        solution = solve(assemble_problem(net, cluster, cost), feas_tol=feas_tol)
        return solution if solution.feasible else None

    return oracle
