"""Attack models and the per-step channel perturbations they cause.

Each attack touches only the channels it is known to affect:

=============  ==================================================
DDoS flooding  extra power draw
GPS spoofing   navigation drifts toward a false target (deviation,
               plus the energy of the extra distance flown)
MITM           additional task failures
Selfish        skipped tasks and throttled power draw
=============  ==================================================
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Hashable, Iterable, Optional, Sequence


class AttackConfigError(ValueError):
    pass


class AttackKind(str, enum.Enum):
    DDOS = "ddos"
    GPS_SPOOFING = "gps-spoofing"
    MITM = "mitm"
    SELFISH = "selfish"

    @property
    def code(self) -> int:
        # integer codes understood by the flight kernels
        return _KIND_CODES[self]


_KIND_CODES = {
    AttackKind.DDOS: 1,
    AttackKind.GPS_SPOOFING: 2,
    AttackKind.MITM: 3,
    AttackKind.SELFISH: 4,
}


@dataclass(frozen=True)
class AttackSchedule:
    target: Hashable
    kind: AttackKind
    start: float
    end: float
    flood_power: float = 200.0
    spoof_offset_rate: float = 2.0
    spoof_heading: Optional[float] = None  # radians; None = drawn per run
    falsify_position: bool = False
    task_drop_prob: float = 0.6
    selfish_skip_prob: float = 0.7
    selfish_energy_factor: float = 0.5

    def __post_init__(self):
        object.__setattr__(self, "kind", AttackKind(self.kind))
        if not self.start < self.end:
            raise AttackConfigError(f"attack on {self.target}: start must be < end")
        if self.start < 0:
            raise AttackConfigError(f"attack on {self.target}: start must be >= 0")
        if self.flood_power < 0 or self.spoof_offset_rate < 0:
            raise AttackConfigError("flood_power and spoof_offset_rate must be >= 0")
        for name in ("task_drop_prob", "selfish_skip_prob"):
            if not 0.0 <= getattr(self, name) <= 1.0:
                raise AttackConfigError(f"{name} must lie in [0, 1]")
        if not 0.0 <= self.selfish_energy_factor < 1.0:
            raise AttackConfigError("selfish_energy_factor must lie in [0, 1)")

    def active(self, t: float) -> bool:
        return self.start <= t < self.end

    def spoof_velocity(self) -> tuple[float, float, float]:
        heading = self.spoof_heading or 0.0
        rate = self.spoof_offset_rate
        return (rate * math.cos(heading), rate * math.sin(heading), 0.0)


@dataclass(frozen=True)
class ChannelDeltas:
    """Per-step perturbation of one UAV's behaviour. The default is the identity."""

    extra_power: float = 0.0
    spoof_velocity: tuple[float, float, float] = (0.0, 0.0, 0.0)
    spoof_speed: float = 0.0
    falsify_position: bool = False
    task_drop_prob: float = 0.0
    task_skip_prob: float = 0.0
    energy_factor: float = 1.0


IDENTITY = ChannelDeltas()


def apply_attack_effects(uav, schedule: Optional[AttackSchedule], t: float) -> ChannelDeltas:
    """Channel deltas for ``uav`` (an id or a ``UavState``) during the step starting at ``t``."""
    uav = getattr(uav, "uav_id", uav)
    if schedule is None or uav != schedule.target or not schedule.active(t):
        return IDENTITY
    kind = schedule.kind
    if kind is AttackKind.DDOS:
        return ChannelDeltas(extra_power=schedule.flood_power)
    if kind is AttackKind.GPS_SPOOFING:
        return ChannelDeltas(
            spoof_velocity=schedule.spoof_velocity(),
            spoof_speed=schedule.spoof_offset_rate,
            falsify_position=schedule.falsify_position,
        )
    if kind is AttackKind.MITM:
        return ChannelDeltas(task_drop_prob=schedule.task_drop_prob)
    return ChannelDeltas(
        task_skip_prob=schedule.selfish_skip_prob,
        energy_factor=schedule.selfish_energy_factor,
    )


def validate_schedule(
    schedules: Iterable[AttackSchedule], clusters: Sequence[Sequence[Hashable]]
) -> None:
    """Reject configurations with two concurrent attacks in one cluster.

    Each UAV may carry at most one schedule per mission.
    """
    schedules = list(schedules)
    cluster_of = {}
    for idx, members in enumerate(clusters):
        for uav in members:
            cluster_of[uav] = idx
    seen = set()
    for s in schedules:
        if s.target not in cluster_of:
            raise AttackConfigError(f"attack target {s.target!r} is not in any cluster")
        if s.target in seen:
            raise AttackConfigError(f"UAV {s.target!r} has more than one attack schedule")
        seen.add(s.target)
    for i, a in enumerate(schedules):
        for b in schedules[i + 1:]:
            same_cluster = cluster_of[a.target] == cluster_of[b.target]
            if same_cluster and a.start < b.end and b.start < a.end:
                raise AttackConfigError(
                    f"single attacker per cluster violated: {a.target!r} and {b.target!r} "
                    f"are attacked concurrently in cluster {cluster_of[a.target]}"
                )


def step_window(start: float, end: float, dt: float) -> tuple[int, int]:
    """Step indices ``[k0, k1)`` whose start time ``k * dt`` lies in ``[start, end)``."""
    def first_at_or_after(t):
        k = max(0, math.ceil(t / dt))
        while k > 0 and (k - 1) * dt >= t:
            k -= 1
        while k * dt < t:
            k += 1
        return k

    return first_at_or_after(start), first_at_or_after(end)
