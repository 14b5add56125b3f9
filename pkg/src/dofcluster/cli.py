"""Command-line front end.

Commands: `dof` (one-shot cluster measure), `cluster` (greedy detection on
a scenario), `simulate` (full time-domain run with CSV output), `compare`
(side-by-side dof vs k-steps detection).

Exit codes: 0 success, 1 usage or parse failure, 2 structural assumption
violation, 3 infeasibility or search exhaustion, 4 numerical abort.
"""

from __future__ import annotations

import argparse
import dataclasses
import sys
from pathlib import Path

from .clustering import dof_greedy_cluster, ksteps_greedy
from .dof import cluster_dof
from .errors import (
    AssumptionError,
    ClusterSearchExhausted,
    GraphError,
    ScenarioError,
    SimulationAbort,
    SolverError,
)
from .graph import Cluster, read_graph_file
from .redistribution import assemble_problem, microgrid_feasibility_oracle
from .scenario import SimConfig, bundled_scenario_path, load_scenario
from .sim import explore_snapshot, make_cost, run_scenario, write_event_log

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_ASSUMPTION = 2
EXIT_INFEASIBLE = 3
EXIT_NUMERICAL = 4


def _resolve_scenario(spec: str) -> Path:
    if spec.startswith("bundled:"):
        return bundled_scenario_path(spec.split(":", 1)[1])
    if spec == "bundled":
        return bundled_scenario_path()
    path = Path(spec)
    if not path.exists():
        raise ScenarioError(f"scenario file not found: {spec}")
    return path


def _parse_cluster_spec(spec: str, labels: list[str]) -> Cluster:
    names = [s.strip() for s in spec.split(",") if s.strip()]
    if not names:
        raise GraphError("empty cluster spec")
    ids = []
    for name in names:
        if name not in labels:
            raise GraphError(f"unknown node label {name!r} in cluster spec")
        ids.append(labels.index(name))
    return Cluster(ids)


def cmd_dof(args) -> int:
    graph, labels = read_graph_file(args.graph)
    cluster = _parse_cluster_spec(args.cluster, labels)
    report = cluster_dof(graph, cluster)
    print(f"cluster: {','.join(labels[i] for i in cluster)} (size {report.cluster_size})")
    print(f"bridge rank: {report.bridge_rank}")
    print(f"dof={report.dof} deficiency={report.deficiency}")
    return EXIT_OK


def _print_trace(trace, labels):
    for s in trace:
        dof_str = "undefined" if s.dof_after is None else str(s.dof_after)
        print(f"step {s.step}: add {labels[s.node]} ({s.rule}) dof={dof_str}")


def _run_detection(scenario, overload_label, algo, feas_tol, qp_report=False):
    net, availability = explore_snapshot(scenario, feas_tol)
    labels = list(scenario.labels)
    if overload_label not in labels:
        raise GraphError(f"unknown overload label {overload_label!r}")
    overload = labels.index(overload_label)
    oracle = microgrid_feasibility_oracle(net, make_cost(scenario), feas_tol=feas_tol)

    rows = []
    failures = []
    if algo in ("dof", "both"):
        try:
            res = dof_greedy_cluster(
                net.graph, overload, availability, oracle,
                max_steps=scenario.secondary.max_steps,
            )
            print("dof-based exploration:")
            if res.feasible_before_growth:
                print("  feasible before any growth")
            _print_trace(res.trace, labels)
            print(f"cluster: {','.join(labels[i] for i in res.cluster)} (size {len(res.cluster)})")
            print("feasible: yes")
            for i, dv in zip(res.solution.members, res.solution.delta_v):
                print(f"  reference shift {labels[i]}: {dv:+.6g} V")
            print(f"  cost: {res.solution.cost:.9g}")
            rows.append(("dof", len(res.cluster), "yes", f"{len(res.trace)} growth step(s)"))
            if qp_report:
                problem = assemble_problem(net, res.cluster, make_cost(scenario))
                print(problem.report(labels=labels))
                print(res.solution.report(labels=labels))
        except ClusterSearchExhausted as exc:
            print("dof-based exploration: EXHAUSTED")
            _print_trace(exc.trace, labels)
            if exc.cluster is not None:
                print(f"cluster reached: {','.join(labels[i] for i in exc.cluster)}")
            rows.append(("dof", len(exc.cluster) if exc.cluster else 0, "no", "exhausted"))
            failures.append(exc)

    if algo in ("ksteps", "both"):
        try:
            res = ksteps_greedy(
                net.graph, overload, oracle, max_k=scenario.secondary.max_k
            )
            print("k-steps exploration:")
            print(f"cluster: {','.join(labels[i] for i in res.cluster)} (size {len(res.cluster)})")
            print(f"feasible: yes after {res.iterations} iteration(s)")
            rows.append(("ksteps", len(res.cluster), "yes", f"k={res.iterations}"))
        except ClusterSearchExhausted as exc:
            print("k-steps exploration: EXHAUSTED")
            rows.append(("ksteps", len(exc.cluster) if exc.cluster else 0, "no", "exhausted"))
            failures.append(exc)

    if algo == "both":
        print()
        print(f"{'algorithm':<10} {'size':>4} {'feasible':>8}  detail")
        for name, size, ok, detail in rows:
            print(f"{name:<10} {size:>4} {ok:>8}  {detail}")

    return EXIT_INFEASIBLE if failures else EXIT_OK


def cmd_cluster(args) -> int:
    scenario = load_scenario(_resolve_scenario(args.scenario))
    return _run_detection(scenario, args.overload, args.algo, args.feas_tol, args.qp_report)


def cmd_compare(args) -> int:
    scenario = load_scenario(_resolve_scenario(args.scenario))
    return _run_detection(scenario, args.overload, "both", args.feas_tol, args.qp_report)


def _write_outputs(outdir: Path, ts, events, labels) -> None:
    outdir.mkdir(parents=True, exist_ok=True)
    ts.write_csv(outdir / "nodes.csv", outdir / "edges.csv")
    write_event_log(events, outdir / "events.jsonl")
    with open(outdir / "label_map.csv", "w") as f:
        f.write("id,label\n")
        for i, label in enumerate(labels):
            f.write(f"{i},{label}\n")


def _simulation_summary(scenario, ts, events) -> None:
    print(f"simulated {len(ts.times) - 1} steps of {scenario.sim.h!r} s "
          f"({float(ts.times[-1]):g} s horizon), {len(events)} secondary event(s)")
    labels = list(scenario.labels)
    for ev in events:
        sizes = ", ".join(
            f"{o.algorithm}: size {len(o.cluster)} ({'feasible' if o.feasible else 'failed'})"
            for o in ev.outcomes
        )
        print(f"  t={ev.time:g}s overload={ev.overload} applied={ev.applied or 'none'} [{sizes}]")
    if not events:
        return
    first = events[0]
    applied = next((o for o in first.outcomes if o.algorithm == first.applied), None)
    if applied is None:
        return
    inside = {labels.index(x) for x in applied.cluster}
    pre_idx = 0
    if scenario.schedule:
        pre_idx = max(0, int(round(scenario.schedule[0].time / scenario.sim.h)))
    pre_idx = min(pre_idx, len(ts.times) - 1)
    ext = [i for i in range(scenario.n) if i not in inside]
    if ext:
        dv = abs(ts.voltage[-1, ext] - ts.voltage[pre_idx, ext]).max()
        print(f"  max external voltage deviation (end vs pre-event): {dv:.3e} V")
    outside_edges = [
        e for e, (a, b) in enumerate(scenario.edges)
        if not (a in inside and b in inside)
    ]
    if outside_edges:
        dxi = abs(ts.flux[-1, outside_edges] - ts.flux[pre_idx, outside_edges]).max()
        print(f"  max external/boundary flux deviation: {dxi:.3e} A")


def cmd_simulate(args) -> int:
    scenario = load_scenario(_resolve_scenario(args.scenario))
    sim = scenario.sim
    overrides = {}
    if args.h is not None:
        overrides["h"] = args.h
    if args.horizon is not None:
        overrides["horizon"] = args.horizon
    if args.seed is not None:
        overrides["seed"] = args.seed
    if overrides:
        scenario = dataclasses.replace(
            scenario,
            sim=SimConfig(
                h=overrides.get("h", sim.h),
                horizon=overrides.get("horizon", sim.horizon),
                seed=overrides.get("seed", sim.seed),
            ),
        )
    outdir = Path(args.out)
    try:
        ts, events = run_scenario(scenario, feas_tol=args.feas_tol)
    except SimulationAbort as exc:
        _write_outputs(outdir, exc.timeseries, exc.events, scenario.labels)
        print(f"simulation aborted: {exc}", file=sys.stderr)
        print(f"partial output written to {outdir}", file=sys.stderr)
        return EXIT_NUMERICAL
    _write_outputs(outdir, ts, events, scenario.labels)
    _simulation_summary(scenario, ts, events)
    print(f"output written to {outdir}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dofcluster",
        description="Cluster dof measure, greedy cluster detection, and "
                    "DC-microgrid redistribution simulation",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_dof = sub.add_parser("dof", help="dof of a cluster in a graph file")
    p_dof.add_argument("--graph", required=True, help="edge-list or scenario file")
    p_dof.add_argument("--cluster", required=True, help="comma-separated node labels")
    p_dof.set_defaults(func=cmd_dof)

    def add_common(p):
        p.add_argument("--scenario", required=True,
                       help="scenario file, or 'bundled' / 'bundled:NAME'")
        p.add_argument("--feas-tol", type=float, default=1e-9,
                       help="duty-box feasibility tolerance (default 1e-9)")

    p_cluster = sub.add_parser("cluster", help="detect a cluster around an overloaded node")
    add_common(p_cluster)
    p_cluster.add_argument("--overload", required=True, help="overloaded node label")
    p_cluster.add_argument("--algo", choices=["dof", "ksteps", "both"], default="dof")
    p_cluster.add_argument("--qp-report", action="store_true",
                           help="print the assembled problem and solution report")
    p_cluster.set_defaults(func=cmd_cluster)

    p_compare = sub.add_parser("compare", help="cluster with --algo both")
    add_common(p_compare)
    p_compare.add_argument("--overload", required=True)
    p_compare.add_argument("--qp-report", action="store_true")
    p_compare.set_defaults(func=cmd_compare)

    p_sim = sub.add_parser("simulate", help="run a scenario and write CSV output")
    add_common(p_sim)
    p_sim.add_argument("--out", required=True, help="output directory")
    p_sim.add_argument("--h", type=float, default=None, help="override step size")
    p_sim.add_argument("--horizon", type=float, default=None, help="override horizon")
    p_sim.add_argument("--seed", type=int, default=None, help="override seed")
    p_sim.set_defaults(func=cmd_simulate)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code not in (0, None) else EXIT_OK
    try:
        return args.func(args)
    except (ScenarioError, GraphError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except AssumptionError as exc:
        print(f"assumption violation: {exc}", file=sys.stderr)
        return EXIT_ASSUMPTION
    except ClusterSearchExhausted as exc:
        print(f"infeasible: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except (SolverError, SimulationAbort) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
