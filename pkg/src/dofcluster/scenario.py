"""Scenario files: strict JSON schema, parsing, and serialization.

A scenario bundles a conductance-weighted graph, per-node converter and
control parameters, initial references and loads, a disturbance schedule,
the secondary-layer configuration (trigger policy, availability measure,
cost, algorithm choice), and integration settings.  Unknown keys are
rejected everywhere; parse -> serialize -> parse is the identity on the
in-memory scenario.

Node labels in files are arbitrary strings; ids are their positions in
the `nodes` list.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

from .errors import ScenarioError
from .graph import Graph, build_graph

ALGORITHMS = ("dof", "ksteps", "both")
AVAILABILITY_NAMES = ("duty-balance", "uniform")
COST_NAMES = ("duty-centering", "reference-deviation")
POLICY_TYPES = ("scheduled", "saturation-risk", "none")

CONVERTER_KEYS = ("R", "L", "C", "V_in", "k_p", "k_i", "u_min", "u_max")
CONVERTER_DEFAULTS = {
    "R": 0.2,
    "L": 1.8e-3,
    "C": 2.2e-3,
    "V_in": 24.0,
    "k_p": 0.05,
    "k_i": 4.0,
    "u_min": 0.0,
    "u_max": 1.0,
}


def _require_keys(section: dict, where: str, required: tuple, optional: tuple = ()):
    if not isinstance(section, dict):
        raise ScenarioError(f"{where} must be an object")
    unknown = set(section) - set(required) - set(optional)
    if unknown:
        raise ScenarioError(f"unknown key(s) in {where}: {sorted(unknown)}")
    missing = [k for k in required if k not in section]
    if missing:
        raise ScenarioError(f"missing key(s) in {where}: {missing}")


def _number(value, where: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ScenarioError(f"{where} must be a number, got {value!r}")
    if not math.isfinite(value):
        raise ScenarioError(f"{where} must be finite, got {value!r}")
    return float(value)


@dataclass(frozen=True)
class TriggerPolicy:
    kind: str = "saturation-risk"
    times: tuple[float, ...] = ()
    threshold: float = 0.35
    window: float = 0.05
    overload: str | None = None
    max_events: int = 5


@dataclass(frozen=True)
class SecondaryConfig:
    policy: TriggerPolicy = TriggerPolicy()
    availability: str = "duty-balance"
    cost: str = "duty-centering"
    cost_rho: float = 1e-3
    algorithm: str = "dof"
    max_steps: int | None = None
    max_k: int | None = None


@dataclass(frozen=True)
class SimConfig:
    h: float = 1e-4
    horizon: float = 1.0
    seed: int = 0


@dataclass(frozen=True)
class Disturbance:
    time: float
    node: int
    load: float


@dataclass(frozen=True)
class Scenario:
    labels: tuple[str, ...]
    edges: tuple[tuple[int, int], ...]
    conductances: tuple[float, ...]
    resistance: tuple[float, ...]
    inductance: tuple[float, ...]
    capacitance: tuple[float, ...]
    v_input: tuple[float, ...]
    gain_p: tuple[float, ...]
    gain_i: tuple[float, ...]
    duty_min: tuple[float, ...]
    duty_max: tuple[float, ...]
    references: tuple[float, ...]
    loads: tuple[float, ...]
    schedule: tuple[Disturbance, ...]
    secondary: SecondaryConfig
    sim: SimConfig

    @property
    def n(self) -> int:
        return len(self.labels)

    def graph(self) -> Graph:
        return build_graph(self.n, self.edges)

    def conductance_map(self) -> dict:
        return {e: g for e, g in zip(self.edges, self.conductances)}

    def id_of(self, label: str) -> int:
        try:
            return self.labels.index(label)
        except ValueError:
            raise ScenarioError(f"unknown node label {label!r}") from None


def graph_from_section(section) -> tuple[Graph, list[str], dict]:
    """Parse a scenario `graph` section into (graph, labels, conductance)."""
    _require_keys(section, "graph", ("nodes", "edges"))
    nodes = section["nodes"]
    if not isinstance(nodes, list) or not nodes:
        raise ScenarioError("graph.nodes must be a non-empty list of labels")
    labels = [str(x) for x in nodes]
    if len(set(labels)) != len(labels):
        raise ScenarioError("graph.nodes contains duplicate labels")
    index = {s: k for k, s in enumerate(labels)}
    edges = []
    cond = {}
    for entry in section["edges"]:
        if not isinstance(entry, list) or len(entry) not in (2, 3):
            raise ScenarioError(f"graph edge must be [a, b] or [a, b, g], got {entry!r}")
        a, b = str(entry[0]), str(entry[1])
        if a not in index or b not in index:
            raise ScenarioError(f"edge ({a}, {b}) references unknown label")
        g = _number(entry[2], f"conductance of edge ({a},{b})") if len(entry) == 3 else 1.0
        if g <= 0:
            raise ScenarioError(f"conductance of edge ({a},{b}) must be positive")
        i, j = index[a], index[b]
        key = (min(i, j), max(i, j))
        if key in cond:
            raise ScenarioError(f"duplicate edge ({a},{b})")
        cond[key] = g
        edges.append(key)
    graph = build_graph(len(labels), edges)
    return graph, labels, cond


def _per_node_values(section, labels, where: str, defaults: dict | None = None) -> dict[str, dict]:
    """Expand {default: ..., per_node: {label: ...}} into values per key."""
    _require_keys(section, where, (), ("default", "per_node"))
    base = section.get("default")
    per = section.get("per_node", {})
    if not isinstance(per, dict):
        raise ScenarioError(f"{where}.per_node must be an object")
    for label in per:
        if label not in labels:
            raise ScenarioError(f"{where}.per_node references unknown label {label!r}")
    return {"default": base, "per_node": per}


def _scalar_section(section, labels, where: str) -> list[float]:
    spec = _per_node_values(section, labels, where)
    values = []
    for label in labels:
        if label in spec["per_node"]:
            values.append(_number(spec["per_node"][label], f"{where}.per_node[{label}]"))
        elif spec["default"] is not None:
            values.append(_number(spec["default"], f"{where}.default"))
        else:
            raise ScenarioError(f"{where}: no value for node {label!r} and no default")
    return values


def _converter_section(section, labels) -> dict[str, list[float]]:
    spec = _per_node_values(section, labels, "converters")
    default = dict(CONVERTER_DEFAULTS)
    if spec["default"] is not None:
        _require_keys(spec["default"], "converters.default", (), CONVERTER_KEYS)
        for k, v in spec["default"].items():
            default[k] = _number(v, f"converters.default.{k}")
    out = {k: [] for k in CONVERTER_KEYS}
    for label in labels:
        merged = dict(default)
        override = spec["per_node"].get(label)
        if override is not None:
            _require_keys(override, f"converters.per_node[{label}]", (), CONVERTER_KEYS)
            for k, v in override.items():
                merged[k] = _number(v, f"converters.per_node[{label}].{k}")
        for k in CONVERTER_KEYS:
            out[k].append(merged[k])
    for name in ("R", "L", "C", "V_in"):
        if any(v <= 0 for v in out[name]):
            raise ScenarioError(f"converters.{name} must be positive for every node")
    for lo, hi in zip(out["u_min"], out["u_max"]):
        if not (0 <= lo < hi <= 1):
            raise ScenarioError("duty bounds must satisfy 0 <= u_min < u_max <= 1")
    return out


def _policy_section(section) -> TriggerPolicy:
    _require_keys(
        section, "secondary.policy", ("type",),
        ("times", "threshold", "window", "overload", "max_events"),
    )
    kind = section["type"]
    if kind not in POLICY_TYPES:
        raise ScenarioError(f"secondary.policy.type must be one of {POLICY_TYPES}, got {kind!r}")
    times = tuple(_number(t, "policy time") for t in section.get("times", []))
    if kind == "scheduled" and not times:
        raise ScenarioError("scheduled trigger policy needs a non-empty 'times' list")
    overload = section.get("overload")
    return TriggerPolicy(
        kind=kind,
        times=times,
        threshold=_number(section.get("threshold", 0.35), "policy.threshold"),
        window=_number(section.get("window", 0.05), "policy.window"),
        overload=str(overload) if overload is not None else None,
        max_events=int(section.get("max_events", 5)),
    )


def _secondary_section(section) -> SecondaryConfig:
    _require_keys(
        section, "secondary", (),
        ("policy", "availability", "cost", "algorithm", "max_steps", "max_k"),
    )
    policy = _policy_section(section["policy"]) if "policy" in section else TriggerPolicy()
    availability = section.get("availability", "duty-balance")
    if availability not in AVAILABILITY_NAMES:
        raise ScenarioError(
            f"secondary.availability must be one of {AVAILABILITY_NAMES}, got {availability!r}"
        )
    cost_section = section.get("cost", {"type": "duty-centering"})
    _require_keys(cost_section, "secondary.cost", ("type",), ("rho",))
    cost = cost_section["type"]
    if cost not in COST_NAMES:
        raise ScenarioError(f"secondary.cost.type must be one of {COST_NAMES}, got {cost!r}")
    algorithm = section.get("algorithm", "dof")
    if algorithm not in ALGORITHMS:
        raise ScenarioError(f"secondary.algorithm must be one of {ALGORITHMS}, got {algorithm!r}")
    max_steps = section.get("max_steps")
    max_k = section.get("max_k")
    for name, value in (("max_steps", max_steps), ("max_k", max_k)):
        if value is not None and (isinstance(value, bool) or not isinstance(value, int) or value < 1):
            raise ScenarioError(f"secondary.{name} must be a positive integer")
    return SecondaryConfig(
        policy=policy,
        availability=availability,
        cost=cost,
        cost_rho=_number(cost_section.get("rho", 1e-3), "secondary.cost.rho"),
        algorithm=algorithm,
        max_steps=max_steps,
        max_k=max_k,
    )


def parse_scenario(doc: dict) -> Scenario:
    _require_keys(
        doc, "scenario",
        ("graph", "converters", "references", "loads", "sim"),
        ("schedule", "secondary"),
    )
    graph, labels, cond = graph_from_section(doc["graph"])
    conv = _converter_section(doc["converters"], labels)
    references = _scalar_section(doc["references"], labels, "references")
    loads = _scalar_section(doc["loads"], labels, "loads")

    sim_section = doc["sim"]
    _require_keys(sim_section, "sim", ("h", "horizon"), ("seed",))
    sim = SimConfig(
        h=_number(sim_section["h"], "sim.h"),
        horizon=_number(sim_section["horizon"], "sim.horizon"),
        seed=int(sim_section.get("seed", 0)),
    )
    if sim.h <= 0:
        raise ScenarioError("sim.h must be positive")
    if sim.horizon < sim.h:
        raise ScenarioError("sim.horizon must cover at least one step")

    schedule = []
    for k, entry in enumerate(doc.get("schedule", [])):
        _require_keys(entry, f"schedule[{k}]", ("t", "node", "load"))
        t = _number(entry["t"], f"schedule[{k}].t")
        if not (0 <= t <= sim.horizon):
            raise ScenarioError(f"schedule[{k}].t={t} outside [0, horizon]")
        label = str(entry["node"])
        if label not in labels:
            raise ScenarioError(f"schedule[{k}] references unknown label {label!r}")
        schedule.append(
            Disturbance(time=t, node=labels.index(label), load=_number(entry["load"], "load"))
        )
    schedule.sort(key=lambda d: (d.time, d.node))

    secondary = _secondary_section(doc.get("secondary", {}))
    if secondary.policy.overload is not None and secondary.policy.overload not in labels:
        raise ScenarioError(
            f"secondary.policy.overload references unknown label {secondary.policy.overload!r}"
        )
    for t in secondary.policy.times:
        if not (0 <= t <= sim.horizon):
            raise ScenarioError(f"trigger time {t} outside [0, horizon]")

    edges = tuple(sorted(cond))
    return Scenario(
        labels=tuple(labels),
        edges=edges,
        conductances=tuple(cond[e] for e in edges),
        resistance=tuple(conv["R"]),
        inductance=tuple(conv["L"]),
        capacitance=tuple(conv["C"]),
        v_input=tuple(conv["V_in"]),
        gain_p=tuple(conv["k_p"]),
        gain_i=tuple(conv["k_i"]),
        duty_min=tuple(conv["u_min"]),
        duty_max=tuple(conv["u_max"]),
        references=tuple(references),
        loads=tuple(loads),
        schedule=tuple(schedule),
        secondary=secondary,
        sim=sim,
    )


def load_scenario(path: str | Path) -> Scenario:
    try:
        doc = json.loads(Path(path).read_text())
    except OSError as exc:
        raise ScenarioError(f"cannot read scenario file {path}: {exc}") from None
    except json.JSONDecodeError as exc:
        raise ScenarioError(f"invalid JSON in {path}: {exc}") from None
    return parse_scenario(doc)


def scenario_to_dict(s: Scenario) -> dict:
    """Serialize back to the file schema (canonical form)."""
    per_conv = {
        label: {
            "R": s.resistance[i],
            "L": s.inductance[i],
            "C": s.capacitance[i],
            "V_in": s.v_input[i],
            "k_p": s.gain_p[i],
            "k_i": s.gain_i[i],
            "u_min": s.duty_min[i],
            "u_max": s.duty_max[i],
        }
        for i, label in enumerate(s.labels)
    }
    policy = {"type": s.secondary.policy.kind}
    if s.secondary.policy.times:
        policy["times"] = list(s.secondary.policy.times)
    policy["threshold"] = s.secondary.policy.threshold
    policy["window"] = s.secondary.policy.window
    if s.secondary.policy.overload is not None:
        policy["overload"] = s.secondary.policy.overload
    policy["max_events"] = s.secondary.policy.max_events
    return {
        "graph": {
            "nodes": list(s.labels),
            "edges": [
                [s.labels[i], s.labels[j], g]
                for (i, j), g in zip(s.edges, s.conductances)
            ],
        },
        "converters": {"per_node": per_conv},
        "references": {"per_node": {label: s.references[i] for i, label in enumerate(s.labels)}},
        "loads": {"per_node": {label: s.loads[i] for i, label in enumerate(s.labels)}},
        "schedule": [
            {"t": d.time, "node": s.labels[d.node], "load": d.load} for d in s.schedule
        ],
        "secondary": {
            "policy": policy,
            "availability": s.secondary.availability,
            "cost": {"type": s.secondary.cost, "rho": s.secondary.cost_rho},
            "algorithm": s.secondary.algorithm,
            **({"max_steps": s.secondary.max_steps} if s.secondary.max_steps else {}),
            **({"max_k": s.secondary.max_k} if s.secondary.max_k else {}),
        },
        "sim": {"h": s.sim.h, "horizon": s.sim.horizon, "seed": s.sim.seed},
    }


def dump_scenario(s: Scenario, path: str | Path) -> None:
    Path(path).write_text(json.dumps(scenario_to_dict(s), indent=2) + "\n")


def bundled_scenario_path(name: str = "microgrid20") -> Path:
    """Path of a scenario shipped with the package."""
    path = Path(__file__).parent / "data" / f"{name}.json"
    if not path.exists():
        raise ScenarioError(f"no bundled scenario named {name!r}")
    return path
