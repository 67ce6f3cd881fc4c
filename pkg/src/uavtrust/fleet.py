"""Discrete-time point-mass simulation of a UAV fleet.

UAVs fly straight legs between waypoints at cruise speed, are pushed by the
cluster's wind field, spend energy on flight and tasks, and execute a task
when they capture a waypoint that carries one. The audit unit sees the
reported position track, the cumulative energy, and its own (possibly
inconclusive) observation of each task outcome.

``run_mission`` drives the compiled (or pure-Python) flight kernel for the
whole mission in one call per UAV and then replays the audit unit's periodic
evaluations over the recorded telemetry.
"""

from __future__ import annotations

import dataclasses
import enum
import math
from dataclasses import dataclass, field
from typing import Hashable, Iterator, Mapping, Optional, Sequence

import numpy as np

from uavtrust import kernels
from uavtrust.attacks import (
    IDENTITY,
    AttackKind,
    AttackSchedule,
    ChannelDeltas,
    step_window,
    validate_schedule,
)
from uavtrust.detector import (
    ClusterVerdict,
    DetectorConfig,
    TrustHistory,
    UavObservation,
    classify_interval,
    evaluate_cluster,
    mission_reset,
)
from uavtrust.trust import EvidenceCounts

#: Task kinds and their energy relative to ``SimConfig.task_energy``.
TASK_KINDS = {"survey": 1.0, "photo": 0.6, "delivery": 1.6}

AREA_RANGE = (1500.0, 2500.0)


class SimConfigError(ValueError):
    pass


class Outcome(str, enum.Enum):
    SUCCESS = "success"
    FAIL = "fail"
    UNCERTAIN = "uncertain"


@dataclass(frozen=True)
class SimConfig:
    area_side: Optional[float] = None  # drawn from AREA_RANGE per run when unset
    uav_count: int = 3
    timestep: float = 1.0
    mission_duration: float = 1200.0
    cruise_speed: float = 10.0
    base_power: float = 60.0
    move_power_per_speed: float = 6.0
    task_energy: float = 150.0
    obs_uncertainty_prob: float = 0.05
    task_success_prob: float = 0.95
    capture_radius: float = 5.0
    rng_seed: int = 0

    def __post_init__(self):
        positive = (
            "timestep", "mission_duration", "cruise_speed", "base_power",
            "move_power_per_speed", "task_energy", "capture_radius",
        )
        for name in positive:
            if not getattr(self, name) > 0:
                raise SimConfigError(f"{name} must be > 0")
        if self.area_side is not None and not self.area_side > 0:
            raise SimConfigError("area_side must be > 0")
        if self.uav_count < 1:
            raise SimConfigError("uav_count must be >= 1")
        for name in ("obs_uncertainty_prob", "task_success_prob"):
            if not 0.0 <= getattr(self, name) <= 1.0:
                raise SimConfigError(f"{name} must lie in [0, 1]")

    @property
    def n_steps(self) -> int:
        return int(round(self.mission_duration / self.timestep))


@dataclass(frozen=True)
class WindField:
    mean_wind: tuple[float, float, float] = (0.0, 0.0, 0.0)
    gust_std: float = 0.0
    energy_factor: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "mean_wind", tuple(float(v) for v in self.mean_wind))
        if len(self.mean_wind) != 3:
            raise SimConfigError("mean_wind must be a 3-vector")
        if self.gust_std < 0:
            raise SimConfigError("gust_std must be >= 0")
        if self.energy_factor < 1:
            raise SimConfigError("energy_factor must be >= 1")

    @property
    def calm(self) -> bool:
        return self.gust_std == 0 and not any(self.mean_wind) and self.energy_factor == 1


@dataclass
class MissionPlan:
    waypoints: np.ndarray
    tasks: list = field(default_factory=list)  # (waypoint index, task kind)

    def __post_init__(self):
        self.waypoints = np.ascontiguousarray(self.waypoints, dtype=np.float64)
        if self.waypoints.ndim != 2 or self.waypoints.shape[1] != 3 or len(self.waypoints) < 1:
            raise SimConfigError("waypoints must be a non-empty (n, 3) array")
        self.tasks = [(int(i), str(kind)) for i, kind in self.tasks]
        seen = set()
        for idx, kind in self.tasks:
            if not 0 <= idx < len(self.waypoints):
                raise SimConfigError(f"task references waypoint {idx}, plan has {len(self.waypoints)}")
            if kind not in TASK_KINDS:
                raise SimConfigError(f"unknown task kind {kind!r}")
            if idx in seen:
                raise SimConfigError(f"waypoint {idx} carries more than one task")
            seen.add(idx)

    def check_bounds(self, area_side: float) -> None:
        xy = self.waypoints[:, :2]
        if (xy < 0).any() or (xy > area_side).any() or (self.waypoints[:, 2] < 0).any():
            raise SimConfigError(f"waypoints leave the {area_side:.0f} m x {area_side:.0f} m area")

    def task_arrays(self, task_energy: float) -> tuple[np.ndarray, np.ndarray]:
        has_task = np.zeros(len(self.waypoints), dtype=np.int8)
        energy = np.zeros(len(self.waypoints), dtype=np.float64)
        for idx, kind in self.tasks:
            has_task[idx] = 1
            energy[idx] = task_energy * TASK_KINDS[kind]
        return has_task, energy


@dataclass
class UavState:
    uav_id: Hashable
    true_position: np.ndarray
    reported_position: np.ndarray
    energy_consumed: float = 0.0
    evidence: EvidenceCounts = field(default_factory=EvidenceCounts)
    plan_cursor: int = 1
    spoof_offset: np.ndarray = field(default_factory=lambda: np.zeros(3))
    speed: float = 0.0  # commanded airspeed during the last step

    @classmethod
    def at_start(cls, uav_id: Hashable, plan: MissionPlan) -> "UavState":
        p = plan.waypoints[0].copy()
        return cls(uav_id, p, p.copy())

    @property
    def perceived_position(self) -> np.ndarray:
        return self.true_position - self.spoof_offset


@dataclass(frozen=True)
class TelemetryRecord:
    time: float
    uav: Hashable
    expected_position: tuple
    reported_position: tuple
    interval_energy: float
    task_events: tuple  # ((waypoint index, true outcome), ...)


def step_kinematics(
    state: UavState,
    plan: MissionPlan,
    wind: WindField,
    dt: float,
    rng: Optional[np.random.Generator] = None,
    *,
    cruise_speed: float = 10.0,
    capture_radius: float = 5.0,
    deltas: ChannelDeltas = IDENTITY,
    gust: Optional[Sequence[float]] = None,
) -> UavState:
    """Advance one UAV by ``dt``.

    The UAV heads for its current waypoint at cruise speed (slowing so as not
    to overshoot it) and is displaced by wind plus gust. Navigation uses the
    perceived position, which differs from the true one only while spoofed.
    The returned state's ``plan_cursor`` has advanced if the waypoint was
    captured; task execution is left to the caller.
    """
    if not dt > 0:
        raise ValueError("dt must be > 0")
    if gust is None:
        gust = rng.normal(0.0, wind.gust_std, 3) if (rng is not None and wind.gust_std > 0) else (0.0, 0.0, 0.0)
    px, py, pz = (float(v) for v in state.true_position)
    # the false fix disappears as soon as spoofing stops
    ox, oy, oz = (float(v) for v in state.spoof_offset) if deltas.spoof_speed else (0.0, 0.0, 0.0)
    qx, qy, qz = px - ox, py - oy, pz - oz
    cursor = state.plan_cursor
    cx = cy = cz = 0.0
    speed = 0.0
    wps = plan.waypoints
    if cursor < len(wps):
        dx, dy, dz = wps[cursor, 0] - qx, wps[cursor, 1] - qy, wps[cursor, 2] - qz
        dist = math.sqrt(dx * dx + dy * dy + dz * dz)
        if dist > 0.0:
            v = dist / dt
            speed = v if v < cruise_speed else cruise_speed
            s = speed / dist
            cx, cy, cz = dx * s, dy * s, dz * s
    sx, sy, sz = deltas.spoof_velocity
    wx, wy, wz = wind.mean_wind
    px = px + (((cx + sx) + wx) + float(gust[0])) * dt
    py = py + (((cy + sy) + wy) + float(gust[1])) * dt
    pz = pz + (((cz + sz) + wz) + float(gust[2])) * dt
    if deltas.spoof_speed:
        ox, oy, oz = ox + sx * dt, oy + sy * dt, oz + sz * dt
    true_pos = np.array([px, py, pz])
    offset = np.array([ox, oy, oz])
    perceived = true_pos - offset
    if cursor < len(wps):
        d = wps[cursor] - perceived
        if math.sqrt(d[0] * d[0] + d[1] * d[1] + d[2] * d[2]) <= capture_radius:
            cursor += 1
    reported = perceived.copy() if deltas.falsify_position else true_pos.copy()
    return dataclasses.replace(
        state,
        true_position=true_pos,
        reported_position=reported,
        plan_cursor=cursor,
        spoof_offset=offset,
        speed=speed,
    )


def consume_energy(
    speed: float,
    wind: WindField,
    tasks_done: int,
    dt: float,
    *,
    base_power: float,
    move_power_per_speed: float,
    task_energy: float,
    deltas: ChannelDeltas = IDENTITY,
) -> float:
    """Joules spent during one step.

    ``(base + move * speed) * wind factor * dt`` for flight, scaled by any
    selfish throttle, plus flooding power and per-task energy.
    """
    if not dt > 0:
        raise ValueError("dt must be > 0")
    move = speed + deltas.spoof_speed if deltas.spoof_speed else speed
    e = (base_power + move_power_per_speed * move) * wind.energy_factor * dt
    if deltas.energy_factor != 1.0:
        e = e * deltas.energy_factor
    if deltas.extra_power:
        e = e + deltas.extra_power * dt
    return e + task_energy * tasks_done


def execute_task(
    rng: np.random.Generator,
    p_success: float = 0.95,
    deltas: ChannelDeltas = IDENTITY,
) -> Optional[Outcome]:
    """True outcome of one task, or ``None`` if a selfish UAV skipped it.

    A skipped task is a failure as far as the mission is concerned but
    consumes no task energy.
    """
    if deltas.task_skip_prob and rng.random() < deltas.task_skip_prob:
        return None
    ps = p_success * (1.0 - deltas.task_drop_prob) if deltas.task_drop_prob else p_success
    return Outcome.SUCCESS if rng.random() < ps else Outcome.FAIL


def audit_observe(outcome: Optional[Outcome], rng: np.random.Generator, p_uncertain: float) -> Outcome:
    """What the audit unit records for a task, independent of any self-report."""
    if rng.random() < p_uncertain:
        return Outcome.UNCERTAIN
    return Outcome.SUCCESS if outcome is Outcome.SUCCESS else Outcome.FAIL


def record_observation(ev: EvidenceCounts, observed: Outcome) -> EvidenceCounts:
    if observed is Outcome.SUCCESS:
        return ev.add(successful=1)
    if observed is Outcome.FAIL:
        return ev.add(failed=1)
    return ev.add(uncertain=1)


# ---------------------------------------------------------------- planning


@dataclass(frozen=True)
class RoutePlanner:
    """Random cluster routes: one base route per cluster, shifted per UAV.

    Members of a cluster fly parallel copies of the same route with the same
    task mix, so in calm conditions they spend identical energy.
    """

    leg_length: tuple[float, float] = (250.0, 350.0)
    altitude: tuple[float, float] = (80.0, 120.0)
    lateral_spacing: float = 40.0
    margin: float = 200.0
    max_turn: float = math.pi / 2
    task_kinds: tuple[str, ...] = tuple(TASK_KINDS)

    def generate(
        self,
        rng: np.random.Generator,
        area_side: float,
        clusters: Sequence[Sequence[Hashable]],
        path_length: float,
    ) -> dict:
        lo, hi = self.margin, area_side - self.margin
        if hi <= lo:
            raise SimConfigError("area too small for the route margin")
        n_legs = int(math.ceil(path_length / self.leg_length[0])) + 2
        plans = {}
        for members in clusters:
            pts = [np.array([rng.uniform(lo, hi), rng.uniform(lo, hi)])]
            heading = rng.uniform(0.0, 2 * math.pi)
            for _ in range(n_legs):
                length = rng.uniform(*self.leg_length)
                heading += rng.uniform(-self.max_turn, self.max_turn)
                nxt = pts[-1] + length * np.array([math.cos(heading), math.sin(heading)])
                if not ((lo <= nxt) & (nxt <= hi)).all():
                    centre = np.array([area_side / 2, area_side / 2]) - pts[-1]
                    heading = math.atan2(centre[1], centre[0]) + rng.uniform(-math.pi / 4, math.pi / 4)
                    nxt = pts[-1] + length * np.array([math.cos(heading), math.sin(heading)])
                    nxt = np.clip(nxt, lo, hi)
                pts.append(nxt)
            z = rng.uniform(*self.altitude, size=len(pts))
            base = np.column_stack([np.array(pts), z])
            kinds = rng.choice(len(self.task_kinds), size=len(pts))
            tasks = [(i, self.task_kinds[kinds[i]]) for i in range(1, len(pts))]
            k = len(members)
            for j, uav in enumerate(members):
                offset = np.array([(j - (k - 1) / 2) * self.lateral_spacing, 0.0, 0.0])
                plans[uav] = MissionPlan(base + offset, list(tasks))
        return plans


# ---------------------------------------------------------------- mission


@dataclass
class MissionResult:
    uav_ids: list
    clusters: list
    times: np.ndarray
    expected: dict
    true_position: dict
    reported: dict
    energy: dict
    true_outcome: dict
    observed: dict
    task_wp: dict
    verdicts: list  # ClusterVerdict, interval-major then cluster order
    area_side: float
    attacks: list

    def telemetry(self) -> Iterator[TelemetryRecord]:
        """Per-step records, time-major, UAVs in id order."""
        for k in range(1, len(self.times)):
            for uav in self.uav_ids:
                events = ()
                if self.task_wp[uav][k - 1] >= 0:
                    outcome = Outcome.SUCCESS if self.true_outcome[uav][k - 1] == 1 else Outcome.FAIL
                    events = ((int(self.task_wp[uav][k - 1]), outcome.value),)
                yield TelemetryRecord(
                    float(self.times[k]),
                    uav,
                    tuple(self.expected[uav][k].tolist()),
                    tuple(self.reported[uav][k].tolist()),
                    float(self.energy[uav][k] - self.energy[uav][k - 1]),
                    events,
                )


def expected_track(plan: MissionPlan, cfg: SimConfig, n_steps: Optional[int] = None) -> np.ndarray:
    """Undisturbed waypoint-following track, one row per step boundary."""
    n = cfg.n_steps if n_steps is None else n_steps
    has_task, task_energy = plan.task_arrays(cfg.task_energy)
    out = kernels.fly(
        plan.waypoints, task_energy, has_task, cfg.timestep, cfg.cruise_speed,
        cfg.capture_radius, cfg.base_power, cfg.move_power_per_speed, 1.0,
        cfg.task_success_prob, cfg.obs_uncertainty_prob, (0.0, 0.0, 0.0),
        np.zeros((n, 3)), np.zeros((n, 3)),
    )
    return out[0]


def interval_steps(detector: DetectorConfig, dt: float) -> int:
    ratio = detector.evaluation_interval / dt
    steps = int(round(ratio))
    if steps < 1 or abs(ratio - steps) > 1e-9:
        raise SimConfigError("evaluation_interval must be a whole number of timesteps")
    return steps


def check_clusters(clusters: Sequence[Sequence[Hashable]], uav_ids: Sequence[Hashable]) -> None:
    seen = []
    for members in clusters:
        if len(members) < 3:
            raise SimConfigError(f"every cluster needs K >= 3 UAVs, got {len(members)}")
        seen.extend(members)
    if len(set(seen)) != len(seen):
        raise SimConfigError("a UAV belongs to more than one cluster")
    if set(seen) != set(uav_ids):
        raise SimConfigError("cluster assignment must cover exactly the UAVs that have plans")


def run_mission(
    cfg: SimConfig,
    plans,
    wind: WindField,
    attacks: Sequence[AttackSchedule] = (),
    clusters: Optional[Sequence[Sequence[Hashable]]] = None,
    detector: DetectorConfig = DetectorConfig(),
    positioning=None,
) -> MissionResult:
    """Simulate one mission and the audit unit's periodic verdicts.

    ``plans`` is either a mapping of UAV id to ``MissionPlan`` or a planner
    with a ``generate(rng, area_side, clusters, path_length)`` method; in the
    latter case ``clusters`` must be given. ``positioning`` optionally
    replaces reported positions with distance-station fixes.
    The run is fully determined by ``cfg.rng_seed``.
    """
    rng = np.random.default_rng(cfg.rng_seed)
    area = cfg.area_side if cfg.area_side is not None else float(rng.uniform(*AREA_RANGE))
    n = cfg.n_steps
    dt = cfg.timestep

    if isinstance(plans, Mapping):
        if clusters is None:
            clusters = [list(plans)]
        plans = dict(plans)
    else:
        if clusters is None:
            raise SimConfigError("clusters are required when plans are generated")
        plans = plans.generate(rng, area, clusters, cfg.mission_duration * cfg.cruise_speed)
    clusters = [list(c) for c in clusters]
    uav_ids = [u for c in clusters for u in c]
    if not plans:
        raise SimConfigError("no mission plans given")
    check_clusters(clusters, list(plans))
    for plan in plans.values():
        plan.check_bounds(area)
    validate_schedule(attacks, clusters)
    for a in attacks:
        if a.end > cfg.mission_duration + 1e-9:
            raise SimConfigError(f"attack on {a.target!r} ends after the mission")

    resolved = []
    for a in attacks:
        if a.kind is AttackKind.GPS_SPOOFING and a.spoof_heading is None:
            a = dataclasses.replace(a, spoof_heading=float(rng.uniform(0.0, 2 * math.pi)))
        resolved.append(a)
    attack_of = {a.target: a for a in resolved}

    gusts = rng.standard_normal((len(uav_ids), n, 3)) * wind.gust_std
    uniforms = rng.random((len(uav_ids), n, 3))

    out = {k: {} for k in ("expected", "true", "reported", "energy", "tout", "obs", "twp")}
    for idx, uav in enumerate(uav_ids):
        plan = plans[uav]
        has_task, task_energy = plan.task_arrays(cfg.task_energy)
        kw = {}
        a = attack_of.get(uav)
        if a is not None:
            k0, k1 = step_window(a.start, a.end, dt)
            kw = dict(
                attack_kind=a.kind.code, attack_start=k0, attack_end=k1,
                flood_power=a.flood_power, spoof_velocity=a.spoof_velocity(),
                spoof_speed=a.spoof_offset_rate if a.kind is AttackKind.GPS_SPOOFING else 0.0,
                falsify=a.falsify_position, drop_prob=a.task_drop_prob,
                skip_prob=a.selfish_skip_prob, selfish_factor=a.selfish_energy_factor,
            )
        tpos, rpos, energy, tout, obs, twp = kernels.fly(
            plan.waypoints, task_energy, has_task, dt, cfg.cruise_speed, cfg.capture_radius,
            cfg.base_power, cfg.move_power_per_speed, wind.energy_factor,
            cfg.task_success_prob, cfg.obs_uncertainty_prob, wind.mean_wind,
            gusts[idx], uniforms[idx], **kw,
        )
        out["expected"][uav] = expected_track(plan, cfg, n)
        out["true"][uav] = tpos
        out["reported"][uav] = rpos
        out["energy"][uav] = energy
        out["tout"][uav] = tout
        out["obs"][uav] = obs
        out["twp"][uav] = twp

    if positioning is not None and positioning.enabled:
        for uav in uav_ids:
            out["reported"][uav] = positioning.track(out["true"][uav], rng)

    verdicts = _evaluate_intervals(out, clusters, detector, dt, n)
    times = np.arange(n + 1) * dt
    return MissionResult(
        uav_ids, clusters, times, out["expected"], out["true"], out["reported"],
        out["energy"], out["tout"], out["obs"], out["twp"], verdicts, area, resolved,
    )


def _evaluate_intervals(out, clusters, detector: DetectorConfig, dt: float, n: int) -> list:
    spi = interval_steps(detector, dt)
    n_intervals = n // spi
    counts = {}
    for uav, obs in out["obs"].items():
        z = np.zeros((1, 3), dtype=np.int64)
        hits = np.stack([obs == 0, obs == 1, obs == 2], axis=1).astype(np.int64)
        counts[uav] = np.concatenate([z, np.cumsum(hits, axis=0)])
    verdicts = []
    histories = [TrustHistory() for _ in clusters]
    alpha = detector.alpha
    for j in range(1, n_intervals + 1):
        k = j * spi
        lo = max(1, k - alpha + 1)
        for ci, members in enumerate(clusters):
            observations = {}
            for uav in members:
                s, f, x = (int(v) for v in counts[uav][k])
                observations[uav] = UavObservation(
                    EvidenceCounts(s, f, x),
                    float(out["energy"][uav][k]),
                    out["expected"][uav][lo:k + 1],
                    out["reported"][uav][lo:k + 1],
                )
            verdict = evaluate_cluster(observations, detector, interval_index=j - 1, cluster=f"cluster{ci}")
            verdict.classification = classify_interval(histories[ci], verdict, detector.persistence)
            histories[ci].record(verdict)
            verdicts.append(verdict)
    # trust state does not survive the mission
    histories = [mission_reset(h) for h in histories]
    return verdicts
