"""Scenario files, Monte Carlo replication and aggregate metrics.

A scenario file is JSON mirroring :class:`ScenarioSpec`; see the README for
the schema. Replication ``r`` runs with seed ``base_seed + r`` and results
are aggregated in replication order, so reports do not depend on how many
worker processes were used.
"""

from __future__ import annotations

import dataclasses
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Any, Optional, Union

from uavtrust.attacks import AttackConfigError, AttackKind, AttackSchedule, validate_schedule
from uavtrust.detector import Classification, DetectorConfig
from uavtrust.fleet import (
    MissionPlan,
    MissionResult,
    RoutePlanner,
    SimConfig,
    SimConfigError,
    WindField,
    check_clusters,
    interval_steps,
    run_mission,
)
from uavtrust.positioning import DistanceStation, PositioningConfig, PositioningError
from uavtrust.trust import TrustWeights

BUNDLED = ("normal", "ddos", "gps-spoof", "mitm", "selfish", "wind", "wind+gps-spoof")
DEFAULT_REPLICATIONS = 200

_KIND_ALIASES = {
    "ddos": AttackKind.DDOS, "ddosflooding": AttackKind.DDOS, "flooding": AttackKind.DDOS,
    "gps-spoofing": AttackKind.GPS_SPOOFING, "gpsspoofing": AttackKind.GPS_SPOOFING,
    "gps-spoof": AttackKind.GPS_SPOOFING,
    "mitm": AttackKind.MITM, "maninthemiddle": AttackKind.MITM,
    "selfish": AttackKind.SELFISH, "selfishhijack": AttackKind.SELFISH, "hijack": AttackKind.SELFISH,
}


class ScenarioError(ValueError):
    pass


class ScenarioParseError(ScenarioError):
    pass


class ScenarioValidationError(ScenarioError):
    pass


@dataclass
class ScenarioSpec:
    name: str
    sim: SimConfig = field(default_factory=SimConfig)
    clusters: list = field(default_factory=lambda: [["uav1", "uav2", "uav3"]])
    plans: Any = field(default_factory=RoutePlanner)  # RoutePlanner or {uav: MissionPlan}
    wind: WindField = field(default_factory=WindField)
    attacks: list = field(default_factory=list)
    detector: DetectorConfig = field(default_factory=DetectorConfig)
    replications: int = DEFAULT_REPLICATIONS
    base_seed: int = 0
    positioning: Optional[PositioningConfig] = None
    description: str = ""

    @property
    def uav_ids(self) -> list:
        return [u for c in self.clusters for u in c]

    def validate(self) -> "ScenarioSpec":
        """Check cross-field invariants; raises ScenarioValidationError."""
        if self.replications < 1:
            raise ScenarioValidationError("replications must be >= 1")
        if self.sim.uav_count != len(self.uav_ids):
            raise ScenarioValidationError(
                f"sim.uav_count ({self.sim.uav_count}) must equal the number of clustered UAVs "
                f"({len(self.uav_ids)})"
            )
        try:
            if isinstance(self.plans, dict):
                check_clusters(self.clusters, list(self.plans))
                if self.sim.area_side is None:
                    raise SimConfigError("explicit routes require sim.area_side")
                for plan in self.plans.values():
                    plan.check_bounds(self.sim.area_side)
            else:
                check_clusters(self.clusters, self.uav_ids)
            interval_steps(self.detector, self.sim.timestep)
            validate_schedule(self.attacks, self.clusters)
        except (SimConfigError, AttackConfigError) as exc:
            raise ScenarioValidationError(str(exc)) from None
        for a in self.attacks:
            if a.end > self.sim.mission_duration:
                raise ScenarioValidationError(
                    f"attack on {a.target!r} must end within the mission ({self.sim.mission_duration} s)"
                )
        return self

    def with_seed(self, r: int) -> SimConfig:
        return dataclasses.replace(self.sim, rng_seed=self.base_seed + r)


# ------------------------------------------------------------------ parsing


def _take(d: dict, where: str, cls, allowed: Optional[set] = None, **extra):
    if not isinstance(d, dict):
        raise ScenarioParseError(f"{where}: expected an object")
    names = {f.name for f in dataclasses.fields(cls)} if allowed is None else allowed
    unknown = sorted(set(d) - names)
    if unknown:
        raise ScenarioParseError(f"{where}: unknown field(s) {', '.join(unknown)}")
    try:
        return cls(**{**d, **extra})
    except (TypeError, ValueError) as exc:
        raise ScenarioValidationError(f"{where}: {exc}") from None


def _vec3(v, where):
    if not (isinstance(v, (list, tuple)) and len(v) == 3 and all(isinstance(x, (int, float)) for x in v)):
        raise ScenarioParseError(f"{where}: expected a list of 3 numbers")
    return tuple(float(x) for x in v)


def spec_from_dict(data: dict, source: str = "<scenario>") -> ScenarioSpec:
    if not isinstance(data, dict):
        raise ScenarioParseError(f"{source}: top level must be an object")
    top = {"name", "description", "replications", "base_seed", "sim", "clusters", "plans",
           "wind", "attacks", "detector", "positioning"}
    unknown = sorted(set(data) - top)
    if unknown:
        raise ScenarioParseError(f"{source}: unknown field(s) {', '.join(unknown)}")
    if "name" not in data:
        raise ScenarioParseError(f"{source}: missing required field 'name'")

    sim_fields = {f.name for f in dataclasses.fields(SimConfig)} - {"rng_seed"}
    sim = _take(data.get("sim", {}), "sim", SimConfig, sim_fields)

    clusters = data.get("clusters", [["uav1", "uav2", "uav3"]])
    if not (isinstance(clusters, list) and all(isinstance(c, list) for c in clusters)):
        raise ScenarioParseError("clusters: expected a list of lists of UAV ids")

    plans_raw = data.get("plans", {"planner": {}})
    if not isinstance(plans_raw, dict) or len(plans_raw) != 1 or not set(plans_raw) <= {"planner", "routes"}:
        raise ScenarioParseError("plans: expected exactly one of 'planner' or 'routes'")
    if "planner" in plans_raw:
        p = dict(plans_raw["planner"] or {})
        for key in ("leg_length", "altitude"):
            if key in p:
                p[key] = tuple(p[key])
        if "task_kinds" in p:
            p["task_kinds"] = tuple(p["task_kinds"])
        plans = _take(p, "plans.planner", RoutePlanner)
    else:
        plans = {}
        for uav, route in plans_raw["routes"].items():
            where = f"plans.routes.{uav}"
            if not isinstance(route, dict) or "waypoints" not in route:
                raise ScenarioParseError(f"{where}: expected an object with 'waypoints'")
            wps = [_vec3(w, f"{where}.waypoints[{i}]") for i, w in enumerate(route["waypoints"])]
            tasks = route.get("tasks", [])
            plans[uav] = _take({"waypoints": wps, "tasks": tasks}, where, MissionPlan)

    wind_raw = dict(data.get("wind", {}))
    if "mean_wind" in wind_raw:
        wind_raw["mean_wind"] = _vec3(wind_raw["mean_wind"], "wind.mean_wind")
    wind = _take(wind_raw, "wind", WindField)

    attacks = []
    for i, a in enumerate(data.get("attacks", []) or []):
        where = f"attacks[{i}]"
        if not isinstance(a, dict):
            raise ScenarioParseError(f"{where}: expected an object")
        a = dict(a)
        kind = str(a.get("kind", "")).lower().replace("_", "-")
        if kind not in _KIND_ALIASES and kind.replace("-", "") not in _KIND_ALIASES:
            raise ScenarioParseError(f"{where}.kind: unknown attack kind {a.get('kind')!r}")
        a["kind"] = _KIND_ALIASES.get(kind) or _KIND_ALIASES[kind.replace("-", "")]
        for req in ("target", "start", "end"):
            if req not in a:
                raise ScenarioParseError(f"{where}: missing required field {req!r}")
        attacks.append(_take(a, where, AttackSchedule))

    det_raw = dict(data.get("detector", {}))
    weights = _take(det_raw.pop("weights", {}), "detector.weights", TrustWeights)
    detector = _take(det_raw, "detector", DetectorConfig, weights=weights)

    positioning = None
    if data.get("positioning") is not None:
        pr = dict(data["positioning"])
        stations = []
        for i, s in enumerate(pr.pop("stations", [])):
            where = f"positioning.stations[{i}]"
            s = dict(s)
            if "position" in s:
                s["position"] = _vec3(s["position"], f"{where}.position")
            stations.append(_take(s, where, DistanceStation))
        try:
            positioning = _take(pr, "positioning", PositioningConfig, stations=stations)
        except PositioningError as exc:
            raise ScenarioValidationError(f"positioning: {exc}") from None

    for key in ("replications", "base_seed"):
        if key in data and not isinstance(data[key], int):
            raise ScenarioParseError(f"{key}: expected an integer")
    spec = ScenarioSpec(
        name=str(data["name"]),
        sim=sim,
        clusters=[list(c) for c in clusters],
        plans=plans,
        wind=wind,
        attacks=attacks,
        detector=detector,
        replications=data.get("replications", DEFAULT_REPLICATIONS),
        base_seed=data.get("base_seed", 0),
        positioning=positioning,
        description=str(data.get("description", "")),
    )
    return spec.validate()


def spec_to_dict(spec: ScenarioSpec) -> dict:
    sim = dataclasses.asdict(spec.sim)
    sim.pop("rng_seed")
    if isinstance(spec.plans, dict):
        plans = {"routes": {
            uav: {"waypoints": p.waypoints.tolist(), "tasks": [list(t) for t in p.tasks]}
            for uav, p in spec.plans.items()
        }}
    else:
        planner = dataclasses.asdict(spec.plans)
        plans = {"planner": {k: list(v) if isinstance(v, tuple) else v for k, v in planner.items()}}
    attacks = []
    for a in spec.attacks:
        d = dataclasses.asdict(a)
        d["kind"] = a.kind.value
        attacks.append(d)
    det = dataclasses.asdict(spec.detector)
    out = {
        "name": spec.name,
        "description": spec.description,
        "replications": spec.replications,
        "base_seed": spec.base_seed,
        "sim": sim,
        "clusters": spec.clusters,
        "plans": plans,
        "wind": {**dataclasses.asdict(spec.wind), "mean_wind": list(spec.wind.mean_wind)},
        "attacks": attacks,
        "detector": det,
    }
    if spec.positioning is not None:
        pos = dataclasses.asdict(spec.positioning)
        for s in pos["stations"]:
            s["position"] = list(s["position"])
        out["positioning"] = pos
    return out


def load_scenario(path: Union[str, Path]) -> ScenarioSpec:
    path = Path(path)
    text = path.read_text()
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ScenarioParseError(f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}") from None
    try:
        return spec_from_dict(data, str(path))
    except ScenarioParseError as exc:
        raise ScenarioParseError(f"{path}: {exc}") from None
    except ScenarioValidationError as exc:
        raise ScenarioValidationError(f"{path}: {exc}") from None


def bundled_scenario_path(name: str) -> Path:
    name = name[:-5] if name.endswith(".json") else name
    if name not in BUNDLED:
        raise ScenarioValidationError(f"unknown bundled scenario {name!r}")
    return Path(str(resources.files("uavtrust") / "scenarios" / f"{name}.json"))


def resolve_scenario(ref: str) -> ScenarioSpec:
    """Load ``ref`` as a file path, falling back to a bundled scenario name."""
    p = Path(ref)
    if p.is_file():
        return load_scenario(p)
    name = ref[:-5] if ref.endswith(".json") else ref
    if name not in BUNDLED:
        raise ScenarioValidationError(f"{ref!r} is neither a scenario file nor a bundled scenario")
    return load_scenario(bundled_scenario_path(name))


# -------------------------------------------------------------- monte carlo


@dataclass
class ReplicationOutcome:
    seed: int
    verdicts: list  # [(interval, cluster, flagged, classification, {uav: (T_task, T_ene, T_dev, T_total)})]
    detected: bool
    false_alarm: bool
    environmental: bool


@dataclass
class MonteCarloReport:
    scenario: str
    replications: int
    base_seed: int
    detection_rate: float
    false_alarm_rate: float
    environmental_accuracy: Optional[float]
    mean_trust: dict  # uav -> list of per-interval mean components
    outcomes: list = field(default_factory=list)

    def mean_total(self, uav) -> float:
        rows = self.mean_trust[uav]
        return math.fsum(r["T_total"] for r in rows) / len(rows)

    def mean_component(self, uav, name: str) -> float:
        rows = self.mean_trust[uav]
        return math.fsum(r[name] for r in rows) / len(rows)

    def to_dict(self) -> dict:
        return {
            "scenario": self.scenario,
            "replications": self.replications,
            "base_seed": self.base_seed,
            "detection_rate": self.detection_rate,
            "false_alarm_rate": self.false_alarm_rate,
            "environmental_accuracy": self.environmental_accuracy,
            "mean_trust": self.mean_trust,
            "replication_verdicts": [
                {
                    "seed": o.seed,
                    "detected": o.detected,
                    "false_alarm": o.false_alarm,
                    "environmental": o.environmental,
                    "flags": [[v[0], v[1], v[2], v[3]] for v in o.verdicts],
                }
                for o in self.outcomes
            ],
        }


def run_replication(spec: ScenarioSpec, r: int) -> MissionResult:
    return run_mission(
        spec.with_seed(r), spec.plans, spec.wind, spec.attacks, spec.clusters,
        spec.detector, spec.positioning,
    )


def summarize(spec: ScenarioSpec, result: MissionResult, seed: int) -> ReplicationOutcome:
    targets = {a.target: a for a in spec.attacks}
    interval = spec.detector.evaluation_interval
    verdicts = []
    for v in result.verdicts:
        comps = {u: (tc.task_trust, tc.energy_trust, tc.deviation_trust, tc.total_trust)
                 for u, tc in v.trust.items()}
        verdicts.append((v.interval_index, v.cluster, v.flagged, v.classification.value, comps))

    false_alarm = any(v[2] is not None and v[2] not in targets for v in verdicts)
    detected = False
    if targets:
        hits = []
        for target, a in targets.items():
            hit = any(
                v[2] == target
                and v[3] == Classification.ATTACK_CONFIRMED.value
                and v[0] * interval < a.end and (v[0] + 1) * interval > a.start
                for v in verdicts
            )
            hits.append(hit)
        detected = all(hits) and not false_alarm
    environmental = (
        not any(v[2] is not None for v in verdicts)
        and any(v[3] == Classification.ENVIRONMENTAL_SHIFT.value for v in verdicts)
    )
    return ReplicationOutcome(seed, verdicts, detected, false_alarm, environmental)


def _replicate(args) -> ReplicationOutcome:
    spec, r = args
    return summarize(spec, run_replication(spec, r), spec.base_seed + r)


def aggregate(spec: ScenarioSpec, outcomes: list) -> MonteCarloReport:
    n = len(outcomes)
    detection = sum(o.detected for o in outcomes) / n if spec.attacks else 0.0
    false_alarm = sum(o.false_alarm for o in outcomes) / n
    env = None
    if not spec.attacks and not spec.wind.calm:
        env = sum(o.environmental for o in outcomes) / n

    names = ("T_task", "T_ene", "T_dev", "T_total")
    sums: dict = {}
    for o in outcomes:
        for interval, _, _, _, comps in o.verdicts:
            for uav, values in comps.items():
                slot = sums.setdefault(uav, {}).setdefault(interval, [[] for _ in names])
                for acc, value in zip(slot, values):
                    acc.append(value)
    mean_trust = {}
    for uav in spec.uav_ids:
        rows = []
        for interval in sorted(sums.get(uav, {})):
            slot = sums[uav][interval]
            row = {"interval_index": interval}
            row.update({name: math.fsum(acc) / len(acc) for name, acc in zip(names, slot)})
            rows.append(row)
        mean_trust[uav] = rows
    return MonteCarloReport(spec.name, n, spec.base_seed, detection, false_alarm, env, mean_trust, outcomes)


def run_monte_carlo(spec: ScenarioSpec, workers: int = 1) -> MonteCarloReport:
    """Run ``spec.replications`` missions with seeds ``base_seed + r``."""
    jobs = [(spec, r) for r in range(spec.replications)]
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            outcomes = list(pool.map(_replicate, jobs, chunksize=max(1, len(jobs) // (4 * workers))))
    else:
        outcomes = [_replicate(j) for j in jobs]
    return aggregate(spec, outcomes)
