"""Peer-comparison detector run by the audit unit each evaluation interval.

A UAV is flagged when its total trust sits outside the range of its
cluster peers while those peers agree with one another. When the whole
cluster moves together no one is flagged; if the common score is far from
the score of an ideal UAV the interval is labelled an environmental shift.
"""

from __future__ import annotations

import enum
import logging
import math
from dataclasses import dataclass, field
from typing import Hashable, Mapping, Optional

import numpy as np

from uavtrust.trust import (
    ClusterTooSmallError,
    EvidenceCounts,
    TrustComponents,
    TrustWeights,
    peer_mean_energy,
    trust_components,
    window_mean_distance,
)

log = logging.getLogger(__name__)


class Classification(str, enum.Enum):
    CLEAR = "clear"
    ATTACK_FLAGGED = "attack-flagged"
    ENVIRONMENTAL_SHIFT = "environmental-shift"
    ATTACK_CONFIRMED = "attack-confirmed"


@dataclass(frozen=True)
class DetectorConfig:
    evaluation_interval: float = 240.0
    range_threshold: float = 0.15
    alpha: int = 10
    weights: TrustWeights = field(default_factory=TrustWeights)
    persistence: int = 1

    def __post_init__(self):
        if not self.evaluation_interval > 0:
            raise ValueError("evaluation_interval must be > 0")
        if not self.range_threshold > 0:
            raise ValueError("range_threshold must be > 0")
        if self.alpha < 1:
            raise ValueError("alpha must be >= 1")
        if self.persistence < 1:
            raise ValueError("persistence must be >= 1")


@dataclass
class UavObservation:
    """What the audit unit holds for one UAV at evaluation time.

    ``expected``/``actual`` are (n, 3) position windows, oldest first; they
    may be empty right after a mission reset.
    """

    evidence: EvidenceCounts
    energy: float
    expected: np.ndarray
    actual: np.ndarray


@dataclass(frozen=True)
class ScoreComparison:
    flagged: Optional[Hashable]
    ambiguous: bool
    spread: float


@dataclass
class ClusterVerdict:
    interval_index: int
    trust: dict
    flagged: Optional[Hashable]
    classification: Classification
    ambiguous: bool = False
    cluster: Optional[str] = None


@dataclass
class TrustHistory:
    components: dict = field(default_factory=dict)
    verdicts: list = field(default_factory=list)

    def record(self, verdict: ClusterVerdict) -> None:
        for uav, tc in verdict.trust.items():
            self.components.setdefault(uav, []).append(tc)
        self.verdicts.append(verdict)

    def __len__(self):
        return len(self.verdicts)


def compare_scores(scores: Mapping[Hashable, float], tau: float) -> ScoreComparison:
    """Find the single UAV whose score is out of its peers' range.

    Candidate ``i`` needs ``|T_i - mean(others)| > tau`` with the others
    mutually within ``tau``. Several candidates are resolved by the largest
    gap; an exact tie, or no candidate while the scores disagree, is
    reported as ambiguous with nobody flagged.
    """
    k = len(scores)
    if k < 3:
        raise ClusterTooSmallError(f"peer-range comparison needs at least 3 UAVs, got {k}")
    values = list(scores.values())
    spread = max(values) - min(values)
    candidates = []
    for uav, score in scores.items():
        others = [v for u, v in scores.items() if u != uav]
        gap = abs(score - math.fsum(others) / (k - 1))
        if gap > tau and max(others) - min(others) <= tau:
            candidates.append((gap, uav))
    if candidates:
        best = max(gap for gap, _ in candidates)
        top = [uav for gap, uav in candidates if gap == best]
        if len(top) == 1:
            return ScoreComparison(top[0], False, spread)
        return ScoreComparison(None, True, spread)
    return ScoreComparison(None, spread > tau, spread)


def evaluate_cluster(
    observations: Mapping[Hashable, UavObservation],
    cfg: DetectorConfig,
    interval_index: int = 0,
    cluster: Optional[str] = None,
) -> ClusterVerdict:
    if len(observations) < 3:
        raise ClusterTooSmallError(
            f"cluster evaluation needs at least 3 UAVs, got {len(observations)}"
        )
    energies = {uav: obs.energy for uav, obs in observations.items()}
    trust = {}
    for uav, obs in observations.items():
        # no position samples yet means no evidence of deviation
        if len(obs.expected) == 0:
            dev = 0.0
        else:
            dev = window_mean_distance(obs.expected, obs.actual, cfg.alpha)
        trust[uav] = trust_components(
            obs.evidence, obs.energy, peer_mean_energy(energies, uav), dev, cfg.weights
        )

    tau = cfg.range_threshold
    cmp = compare_scores({uav: tc.total_trust for uav, tc in trust.items()}, tau)
    if cmp.flagged is not None:
        classification = Classification.ATTACK_FLAGGED
    elif cmp.ambiguous:
        log.info(
            "interval %d%s: scores spread %.3f with no single outlier; not flagging",
            interval_index, f" ({cluster})" if cluster else "", cmp.spread,
        )
        classification = Classification.CLEAR
    else:
        nominal = cfg.weights.w_task  # score of a UAV with T_task=1, T_ene=0, T_dev=0
        shifted = all(abs(tc.total_trust - nominal) > tau for tc in trust.values())
        classification = Classification.ENVIRONMENTAL_SHIFT if shifted else Classification.CLEAR
    return ClusterVerdict(interval_index, trust, cmp.flagged, classification, cmp.ambiguous, cluster)


def classify_interval(
    history: TrustHistory, verdict: ClusterVerdict, persistence: int = 1
) -> Classification:
    """Confirm a flag once the same UAV has been flagged ``persistence`` times in a row.

    ``history`` holds the earlier verdicts of this mission (not ``verdict``).
    """
    if verdict.flagged is None:
        return verdict.classification
    recent = history.verdicts[-(persistence - 1):] if persistence > 1 else []
    if len(recent) == persistence - 1 and all(v.flagged == verdict.flagged for v in recent):
        return Classification.ATTACK_CONFIRMED
    return verdict.classification


def mission_reset(history: Optional[TrustHistory] = None) -> TrustHistory:
    return TrustHistory()


def empty_observation(energy: float = 0.0) -> UavObservation:
    return UavObservation(EvidenceCounts(), energy, np.zeros((0, 3)), np.zeros((0, 3)))
