"""Trust scoring primitives used by the audit unit.

Every function here is pure. Scores are computed from three behavioural
channels observed over one mission:

* task outcomes, summarised as a subjective-logic opinion ``(b, d, u)``
  and collapsed to ``T_task = (2b + u) / 2``;
* cumulative energy, compared against the mean of the cluster peers;
* path deviation, averaged over a sliding window of position samples.

The fused score subtracts the (normalised) deviation term, so it may be
negative for a UAV that is far from its planned track.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Hashable, Mapping, Sequence

import numpy as np

#: Peer-mean energies below this are treated as zero (Joules).
ENERGY_EPSILON = 1e-9
#: Energy trust reported when the peer mean is zero but the UAV is not.
ENERGY_TRUST_CAP = 10.0


class ClusterTooSmallError(ValueError):
    """Raised when a peer comparison is requested on too few UAVs."""


@dataclass(frozen=True)
class EvidenceCounts:
    successful: int = 0
    failed: int = 0
    uncertain: int = 0

    def __post_init__(self):
        for name in ("successful", "failed", "uncertain"):
            value = getattr(self, name)
            if value < 0:
                raise ValueError(f"{name} count must be >= 0, got {value}")

    @property
    def total(self) -> int:
        return self.successful + self.failed + self.uncertain

    def add(self, successful: int = 0, failed: int = 0, uncertain: int = 0) -> "EvidenceCounts":
        return EvidenceCounts(
            self.successful + successful, self.failed + failed, self.uncertain + uncertain
        )


@dataclass(frozen=True)
class OpinionVector:
    belief: float
    disbelief: float
    uncertainty: float

    def __post_init__(self):
        for name in ("belief", "disbelief", "uncertainty"):
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1], got {value}")
        total = self.belief + self.disbelief + self.uncertainty
        if abs(total - 1.0) > 1e-12:
            raise ValueError(f"opinion components must sum to 1, got {total!r}")


@dataclass(frozen=True)
class TrustWeights:
    """Fusion weights plus the length scale that makes deviation unitless."""

    w_task: float = 0.4
    w_ene: float = 0.3
    w_dev: float = 0.3
    deviation_scale: float = 100.0

    def __post_init__(self):
        for name in ("w_task", "w_ene", "w_dev"):
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1], got {value}")
        total = self.w_task + self.w_ene + self.w_dev
        if abs(total - 1.0) > 1e-9:
            raise ValueError(
                f"weights must sum to 1 (w_task + w_ene + w_dev = {total:.12g})"
            )
        if not self.deviation_scale > 0.0:
            raise ValueError(f"deviation_scale must be > 0, got {self.deviation_scale}")


@dataclass(frozen=True)
class PositionSample:
    time: float
    expected: tuple[float, float, float]
    actual: tuple[float, float, float]


@dataclass(frozen=True)
class TrustComponents:
    task_trust: float
    energy_trust: float
    deviation_trust: float
    total_trust: float


def opinion_from_evidence(ev: EvidenceCounts) -> OpinionVector:
    """Turn audit-unit task counts into an opinion.

    With no evidence at all the opinion is fully uncertain ``(0, 0, 1)``.
    """
    n = ev.total
    if n == 0:
        return OpinionVector(0.0, 0.0, 1.0)
    b = ev.successful / n
    d = ev.failed / n
    u = ev.uncertain / n
    return OpinionVector(b, d, u)


def task_trust(op: OpinionVector) -> float:
    return (2.0 * op.belief + op.uncertainty) / 2.0


def peer_mean_energy(energies: Mapping[Hashable, float], uav: Hashable) -> float:
    """Mean energy of every cluster member except ``uav``."""
    if uav not in energies:
        raise KeyError(uav)
    k = len(energies)
    if k < 2:
        raise ClusterTooSmallError(f"peer mean needs at least 2 UAVs, got {k}")
    # fsum keeps the result independent of the mapping's iteration order
    return math.fsum(e for u, e in energies.items() if u != uav) / (k - 1)


def energy_trust(
    own: float,
    peer_mean: float,
    eps: float = ENERGY_EPSILON,
    cap: float = ENERGY_TRUST_CAP,
) -> float:
    """Relative absolute gap between a UAV's energy and its peers' mean.

    A zero peer mean is handled without dividing: 0 when the UAV also used
    (almost) nothing, ``cap`` otherwise.
    """
    if own < 0.0 or peer_mean < 0.0:
        raise ValueError("energies must be non-negative")
    if peer_mean < eps:
        return 0.0 if own < eps else cap
    return abs(own - peer_mean) / peer_mean


def window_mean_distance(expected: np.ndarray, actual: np.ndarray, alpha: int) -> float:
    """Mean Euclidean distance over the last ``min(alpha, n)`` rows."""
    expected = np.asarray(expected, dtype=float)
    actual = np.asarray(actual, dtype=float)
    if expected.shape != actual.shape or expected.ndim != 2 or expected.shape[1] != 3:
        raise ValueError("expected and actual must both be (n, 3) arrays")
    if alpha < 1:
        raise ValueError(f"alpha must be >= 1, got {alpha}")
    n = expected.shape[0]
    if n == 0:
        raise ValueError("deviation window is empty")
    m = min(alpha, n)
    diff = expected[n - m:] - actual[n - m:]
    # hypot rescales, so tiny offsets do not underflow to zero
    dist = np.hypot(np.hypot(diff[:, 0], diff[:, 1]), diff[:, 2])
    return float(dist.mean())


def deviation_trust(samples: Sequence[PositionSample], alpha: int) -> float:
    """Windowed mean distance between expected and actual positions (meters).

    Uses the ``alpha`` most recent samples, or all of them when fewer exist.
    """
    if not samples:
        raise ValueError("deviation window is empty")
    times = [s.time for s in samples]
    if any(b <= a for a, b in zip(times, times[1:])):
        raise ValueError("position samples must be strictly increasing in time")
    expected = np.array([s.expected for s in samples], dtype=float)
    actual = np.array([s.actual for s in samples], dtype=float)
    return window_mean_distance(expected, actual, alpha)


def total_trust(
    task: float, energy: float, deviation: float, weights: TrustWeights
) -> float:
    """Weighted fusion; the deviation term is scaled to unitless and subtracted."""
    return (
        weights.w_task * task
        + weights.w_ene * energy
        - weights.w_dev * (deviation / weights.deviation_scale)
    )


def trust_components(
    ev: EvidenceCounts, energy: float, peer_mean: float, deviation: float, weights: TrustWeights
) -> TrustComponents:
    t_task = task_trust(opinion_from_evidence(ev))
    t_ene = energy_trust(energy, peer_mean)
    return TrustComponents(t_task, t_ene, deviation, total_trust(t_task, t_ene, deviation, weights))
