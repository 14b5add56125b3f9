"""Time-domain DC-microgrid simulation.

Each node hosts an averaged buck-converter model (output voltage V,
internal current I) coupled to its neighbors through line conductances,
stabilized by a local feedforward+PI duty-cycle loop.  A disturbance
schedule changes loads at step boundaries; a trigger policy (scheduled
instants or a sustained saturation-risk monitor) fires the secondary
layer, which detects a cluster around the most stressed node, solves the
containment re-optimization, and applies the new references
instantaneously.

Integration is classical fixed-step RK4 over the per-node state
(V, I, integrator memory q), with the coupling recomputed from
instantaneous voltages at every stage and q's rate frozen while the duty
command is clamped.  The heavy stepping runs on the selected kernel
backend.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import _backend
from .clustering import dof_greedy_cluster, ksteps_greedy
from .errors import ClusterSearchExhausted, SimulationAbort
from .redistribution import (
    DutyCenteringCost,
    ReferenceDeviationCost,
    SteadyStateNetwork,
    microgrid_feasibility_oracle,
    steady_state_map,
)
from .scenario import Scenario


@dataclass(frozen=True)
class ConverterParams:
    """Electrical parameters of one averaged converter node."""

    resistance: float
    inductance: float
    capacitance: float
    v_input: float

    def __post_init__(self):
        for name in ("resistance", "inductance", "capacitance", "v_input"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be strictly positive")


@dataclass(frozen=True)
class ControlGains:
    kp: float = 0.05
    ki: float = 4.0


@dataclass(frozen=True)
class NodeState:
    """Converter state: output voltage, internal current, integral memory."""

    voltage: float
    current: float
    accumulator: float = 0.0


def derivative(params: ConverterParams, state: NodeState, duty: float,
               coupling: float, load: float) -> tuple[float, float]:
    """State rates (dV/dt, dI/dt) of one node.

    The coupling current and the load drain act on the output capacitor;
    the duty cycle drives the inductor branch.
    """
    dv = (state.current + coupling - load) / params.capacitance
    di = (-state.voltage - params.resistance * state.current
          + params.v_input * duty) / params.inductance
    return dv, di


def primary_control(params: ConverterParams, gains: ControlGains, state: NodeState,
                    reference: float, coupling: float, load: float) -> float:
    """Feedforward+PI duty command, clamped to the physical range [0, 1].

    The feedforward term alone holds the equilibrium exactly when the
    voltage sits on its reference; feedback corrects transients.  The
    integral memory is read here but advanced by the integrator (frozen
    while the command is clamped).
    """
    feedforward = (reference + params.resistance * (load - coupling)) / params.v_input
    raw = (feedforward + gains.kp * (reference - state.voltage)
           + gains.ki * state.accumulator)
    return min(1.0, max(0.0, raw))


def duty_balance_availability(loads, duty):
    """Remaining control capacity: load magnitude weighted by how close the
    duty sits to its 50% midpoint."""
    loads = np.asarray(loads, dtype=float)
    duty = np.asarray(duty, dtype=float)
    return np.abs(loads) * (1.0 - np.abs(duty - 0.5))


def uniform_availability(loads, duty):
    return np.ones_like(np.asarray(duty, dtype=float))


AVAILABILITY_MEASURES = {
    "duty-balance": duty_balance_availability,
    "uniform": uniform_availability,
}


@dataclass(frozen=True)
class TimeSeries:
    """Sampled trajectories on the uniform step grid (row k is time k*h)."""

    times: np.ndarray
    labels: tuple[str, ...]
    edges: tuple[tuple[int, int], ...]
    voltage: np.ndarray
    current: np.ndarray
    duty: np.ndarray
    loads: np.ndarray
    flux: np.ndarray

    def write_csv(self, node_path: str | Path, edge_path: str | Path) -> None:
        """Long-format CSVs: nodes as `t,node,V,I,u,d`, edges as `t,edge,xi`."""
        with open(node_path, "w") as f:
            f.write("t,node,V,I,u,d\n")
            for k, t in enumerate(self.times):
                ts = repr(float(t))
                for i, label in enumerate(self.labels):
                    f.write(
                        f"{ts},{label},{float(self.voltage[k, i])!r},"
                        f"{float(self.current[k, i])!r},{float(self.duty[k, i])!r},"
                        f"{float(self.loads[k, i])!r}\n"
                    )
        with open(edge_path, "w") as f:
            f.write("t,edge,xi\n")
            names = [f"{self.labels[i]}-{self.labels[j]}" for i, j in self.edges]
            for k, t in enumerate(self.times):
                ts = repr(float(t))
                for e, name in enumerate(names):
                    f.write(f"{ts},{name},{float(self.flux[k, e])!r}\n")


@dataclass(frozen=True)
class ClusterOutcome:
    algorithm: str
    feasible: bool
    cluster: tuple[str, ...]
    detail: dict
    error: str | None = None


@dataclass(frozen=True)
class SecondaryEvent:
    time: float
    trigger: str
    overload: str
    outcomes: tuple[ClusterOutcome, ...]
    applied: str | None
    references_after: tuple[float, ...]

    def to_json(self) -> str:
        return json.dumps(
            {
                "type": "secondary-event",
                "t": self.time,
                "trigger": self.trigger,
                "overload": self.overload,
                "applied": self.applied,
                "outcomes": [
                    {
                        "algorithm": o.algorithm,
                        "feasible": o.feasible,
                        "cluster": list(o.cluster),
                        "error": o.error,
                        **o.detail,
                    }
                    for o in self.outcomes
                ],
                "references_after": list(self.references_after),
            }
        )


def write_event_log(events, path: str | Path) -> None:
    with open(path, "w") as f:
        for event in events:
            f.write(event.to_json() + "\n")


def build_network(scenario: Scenario, references=None, loads=None) -> SteadyStateNetwork:
    """Steady-state view of the scenario, optionally at overridden
    references/loads."""
    return SteadyStateNetwork(
        graph=scenario.graph(),
        conductance=scenario.conductance_map(),
        resistance=scenario.resistance,
        v_input=scenario.v_input,
        references=scenario.references if references is None else references,
        loads=scenario.loads if loads is None else loads,
        duty_min=scenario.duty_min,
        duty_max=scenario.duty_max,
    )


def post_schedule_loads(scenario: Scenario) -> np.ndarray:
    """Loads after every scheduled disturbance has been applied."""
    loads = np.array(scenario.loads, dtype=float)
    for d in scenario.schedule:
        loads[d.node] = d.load
    return loads


def make_cost(scenario: Scenario):
    if scenario.secondary.cost == "duty-centering":
        return DutyCenteringCost(rho=scenario.secondary.cost_rho)
    return ReferenceDeviationCost()


def explore_snapshot(scenario: Scenario, feas_tol: float = 1e-9):
    """One-shot exploration inputs at the post-schedule equilibrium:
    (network, availability scores)."""
    net = build_network(scenario, loads=post_schedule_loads(scenario))
    eq = steady_state_map(net)
    measure = AVAILABILITY_MEASURES[scenario.secondary.availability]
    return net, measure(net.loads, eq.duty)


# ---------------------------------------------------------------------------
# stepping

@dataclass
class SimState:
    """Mutable integration state at a step boundary (time = step_index * h)."""

    step_index: int
    voltage: np.ndarray
    current: np.ndarray
    accumulator: np.ndarray
    references: np.ndarray
    loads: np.ndarray


def initial_state(scenario: Scenario) -> SimState:
    """Equilibrium state at the scenario's initial references and loads."""
    eq = steady_state_map(build_network(scenario))
    return SimState(
        step_index=0,
        voltage=np.array(scenario.references),
        current=eq.currents.copy(),
        accumulator=np.zeros(scenario.n),
        references=np.array(scenario.references),
        loads=np.array(scenario.loads),
    )


def step(scenario: Scenario, state: SimState) -> SimState:
    """Advance the network one fixed step.

    Disturbances scheduled at the current boundary take effect before
    integrating.  A non-finite result raises SimulationAbort.
    """
    h = scenario.sim.h
    loads = state.loads.copy()
    for d in scenario.schedule:
        if int(round(d.time / h)) == state.step_index:
            loads[d.node] = d.load
    V = state.voltage.copy()
    I = state.current.copy()
    q = state.accumulator.copy()
    n = scenario.n
    m = len(scenario.edges)
    out = [np.empty((2, n)) for _ in range(3)]
    out_xi = np.empty((2, m))
    _, _, aborted = _backend.run_segment(
        V, I, q, state.references, loads,
        np.array([e[0] for e in scenario.edges], dtype=np.int64),
        np.array([e[1] for e in scenario.edges], dtype=np.int64),
        np.array(scenario.conductances),
        np.array(scenario.resistance), np.array(scenario.inductance),
        np.array(scenario.capacitance), np.array(scenario.v_input),
        np.array(scenario.gain_p), np.array(scenario.gain_i),
        h, 1, out[0], out[1], out[2], out_xi, 1,
        -1.0, 1, np.zeros(n, dtype=np.int64),
    )
    if aborted:
        raise SimulationAbort(
            f"state became non-finite at t={(state.step_index + 1) * h:.6g} s",
            time=(state.step_index + 1) * h,
        )
    return SimState(
        step_index=state.step_index + 1,
        voltage=V,
        current=I,
        accumulator=q,
        references=state.references,
        loads=loads,
    )


# ---------------------------------------------------------------------------
# full scenario run

def _duty_now(scenario_arrays, V, q, loads):
    refs, R, Vin, kp, ki, lap_w = scenario_arrays
    xi = -(lap_w @ V)
    raw = (refs + R * (loads - xi)) / Vin + kp * (refs - V) + ki * q
    return np.clip(raw, 0.0, 1.0)


def _run_algorithms(scenario, refs, loads, duty_now, overload, feas_tol):
    net = build_network(scenario, references=refs.copy(), loads=loads.copy())
    oracle = microgrid_feasibility_oracle(net, make_cost(scenario), feas_tol=feas_tol)
    measure = AVAILABILITY_MEASURES[scenario.secondary.availability]
    availability = measure(loads, duty_now)
    labels = scenario.labels
    wanted = scenario.secondary.algorithm
    outcomes = []
    applied = None
    new_refs = None

    if wanted in ("dof", "both"):
        try:
            res = dof_greedy_cluster(
                net.graph, overload, availability, oracle,
                max_steps=scenario.secondary.max_steps,
            )
            detail = {
                "trace": [
                    {"step": s.step, "node": labels[s.node], "rule": s.rule, "dof": s.dof_after}
                    for s in res.trace
                ],
                "feasible_before_growth": res.feasible_before_growth,
                "cost": res.solution.cost,
                "iterations": res.solution.iterations,
                "delta_v": {
                    labels[i]: float(d)
                    for i, d in zip(res.solution.members, res.solution.delta_v)
                },
            }
            outcomes.append(ClusterOutcome(
                algorithm="dof",
                feasible=True,
                cluster=tuple(labels[i] for i in res.cluster),
                detail=detail,
            ))
            if applied is None:
                applied = "dof"
                new_refs = res.solution.new_references
        except ClusterSearchExhausted as exc:
            outcomes.append(ClusterOutcome(
                algorithm="dof",
                feasible=False,
                cluster=tuple(labels[i] for i in exc.cluster) if exc.cluster else (),
                detail={"trace": [
                    {"step": s.step, "node": labels[s.node], "rule": s.rule, "dof": s.dof_after}
                    for s in exc.trace
                ]},
                error=str(exc),
            ))

    if wanted in ("ksteps", "both"):
        try:
            res = ksteps_greedy(
                net.graph, overload, oracle, max_k=scenario.secondary.max_k
            )
            detail = {
                "iterations": res.iterations,
                "cost": res.solution.cost,
                "delta_v": {
                    labels[i]: float(d)
                    for i, d in zip(res.solution.members, res.solution.delta_v)
                },
            }
            outcomes.append(ClusterOutcome(
                algorithm="ksteps",
                feasible=True,
                cluster=tuple(labels[i] for i in res.cluster),
                detail=detail,
            ))
            if applied is None and wanted == "ksteps":
                applied = "ksteps"
                new_refs = res.solution.new_references
        except ClusterSearchExhausted as exc:
            outcomes.append(ClusterOutcome(
                algorithm="ksteps",
                feasible=False,
                cluster=tuple(labels[i] for i in exc.cluster) if exc.cluster else (),
                detail={},
                error=str(exc),
            ))

    return outcomes, applied, new_refs


def run_scenario(scenario: Scenario, feas_tol: float = 1e-9):
    """Simulate the scenario end to end.

    Returns (TimeSeries, [SecondaryEvent, ...]).  A non-finite state
    raises SimulationAbort carrying the truncated TimeSeries and the
    events recorded so far.  Cluster-search exhaustion at an event is
    logged and the run continues on the old references.
    """
    n = scenario.n
    h = scenario.sim.h
    total = int(round(scenario.sim.horizon / h))
    labels = scenario.labels

    edge_i = np.array([e[0] for e in scenario.edges], dtype=np.int64)
    edge_j = np.array([e[1] for e in scenario.edges], dtype=np.int64)
    edge_g = np.array(scenario.conductances, dtype=float)
    R = np.array(scenario.resistance)
    L = np.array(scenario.inductance)
    C = np.array(scenario.capacitance)
    Vin = np.array(scenario.v_input)
    kp = np.array(scenario.gain_p)
    ki = np.array(scenario.gain_i)
    refs = np.array(scenario.references)
    loads = np.array(scenario.loads)

    lap_w = np.zeros((n, n))
    for (a, b), g in zip(scenario.edges, scenario.conductances):
        lap_w[a, b] -= g
        lap_w[b, a] -= g
        lap_w[a, a] += g
        lap_w[b, b] += g
    arrays = (refs, R, Vin, kp, ki, lap_w)

    eq0 = steady_state_map(build_network(scenario))
    V = refs.copy()
    I = eq0.currents.copy()
    q = np.zeros(n)

    schedule = {}
    for d in scenario.schedule:
        idx = int(round(d.time / h))
        schedule.setdefault(min(idx, total), []).append(d)

    # the state starts at the undisturbed equilibrium; loads scheduled at
    # t=0 are already in force for the first sample's duty command
    for d in schedule.get(0, []):
        loads[d.node] = d.load

    rows = total + 1
    out_V = np.empty((rows, n))
    out_I = np.empty((rows, n))
    out_U = np.empty((rows, n))
    out_xi = np.empty((rows, len(scenario.edges)))
    out_V[0] = V
    out_I[0] = I
    out_U[0] = _duty_now(arrays, V, q, loads)
    out_xi[0] = edge_g * (V[edge_j] - V[edge_i])

    policy = scenario.secondary.policy
    risk_mode = policy.kind == "saturation-risk"
    trigger_steps = set()
    if policy.kind == "scheduled":
        trigger_steps = {int(round(t / h)) for t in policy.times}
    risk_theta = policy.threshold if risk_mode else -1.0
    risk_window = max(1, int(round(policy.window / h)))
    risk_counts = np.zeros(n, dtype=np.int64)
    events: list[SecondaryEvent] = []
    events_left = policy.max_events

    def fire(step_idx: int, trigger: str, overload_id: int | None):
        nonlocal refs, arrays, events_left
        duty_now = _duty_now(arrays, V, q, loads)
        if overload_id is None:
            if policy.overload is not None:
                overload_id = labels.index(policy.overload)
            else:
                overload_id = int(np.argmax(np.abs(duty_now - 0.5)))
        outcomes, applied, new_refs = _run_algorithms(
            scenario, refs, loads, duty_now, overload_id, feas_tol
        )
        if new_refs is not None:
            refs = np.array(new_refs)
            arrays = (refs, R, Vin, kp, ki, lap_w)
        events.append(SecondaryEvent(
            time=step_idx * h,
            trigger=trigger,
            overload=labels[overload_id],
            outcomes=tuple(outcomes),
            applied=applied,
            references_after=tuple(float(x) for x in refs),
        ))
        events_left -= 1

    def finish(upto: int) -> TimeSeries:
        times = np.arange(upto + 1) * h
        load_rows = np.tile(np.array(scenario.loads), (upto + 1, 1))
        for idx in sorted(schedule):
            if idx <= upto:
                for d in schedule[idx]:
                    load_rows[idx:, d.node] = d.load
        return TimeSeries(
            times=times,
            labels=labels,
            edges=scenario.edges,
            voltage=out_V[: upto + 1],
            current=out_I[: upto + 1],
            duty=out_U[: upto + 1],
            loads=load_rows,
            flux=out_xi[: upto + 1],
        )

    boundaries = sorted(set(schedule) | trigger_steps | {total})
    cur = 0
    while cur < total:
        for d in schedule.get(cur, []):
            loads[d.node] = d.load
        if cur in trigger_steps and events_left > 0:
            fire(cur, "scheduled", None)
        nxt = min(b for b in boundaries if b > cur)
        monitoring = risk_mode and events_left > 0
        done, trig_node, aborted = _backend.run_segment(
            V, I, q, refs, loads,
            edge_i, edge_j, edge_g,
            R, L, C, Vin, kp, ki,
            h, nxt - cur,
            out_V, out_I, out_U, out_xi,
            cur + 1,
            risk_theta if monitoring else -1.0,
            risk_window, risk_counts,
        )
        cur += done
        if aborted:
            exc = SimulationAbort(
                f"state became non-finite at t={cur * h:.6g} s", time=cur * h
            )
            exc.timeseries = finish(cur)
            exc.events = list(events)
            raise exc
        if trig_node >= 0:
            fire(cur, "saturation-risk", int(trig_node))
            risk_counts[:] = 0

    for d in schedule.get(total, []):
        loads[d.node] = d.load
    if total in trigger_steps and events_left > 0:
        fire(total, "scheduled", None)

    return finish(total), events
