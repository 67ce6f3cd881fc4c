import logging

import numpy as np
import pytest
from hypothesis import given, strategies as st

from uavtrust.detector import (
    Classification,
    ClusterVerdict,
    DetectorConfig,
    TrustHistory,
    UavObservation,
    classify_interval,
    compare_scores,
    empty_observation,
    evaluate_cluster,
    mission_reset,
)
from uavtrust.trust import ClusterTooSmallError, EvidenceCounts

TAU = 0.15
# dyadic grid: sums and halvings are exact, so shifted comparisons stay exact
grid = st.integers(-512, 512).map(lambda k: k / 128)


def test_tight_cluster_is_clear():
    cmp = compare_scores({"a": 0.31, "b": 0.30, "c": 0.32}, TAU)
    assert cmp.flagged is None and not cmp.ambiguous


def test_negative_outlier_is_flagged():
    cmp = compare_scores({"a": -1.24, "b": 0.31, "c": 0.30}, TAU)
    assert cmp.flagged == "a"


def test_two_separated_pairs_are_ambiguous(caplog):
    scores = {"a": 0.10, "b": 0.12, "c": 0.95, "d": 0.93}
    assert compare_scores(scores, TAU).ambiguous

    # two low-energy and two high-energy UAVs: T_total splits into two pairs
    observations = {u: empty_observation(e) for u, e in zip("abcd", (100.0, 100.0, 1000.0, 1000.0))}
    with caplog.at_level(logging.INFO, logger="uavtrust.detector"):
        v = evaluate_cluster(observations, DetectorConfig())
    assert v.flagged is None
    assert v.classification is Classification.CLEAR
    assert v.ambiguous
    assert "no single outlier" in caplog.text


def test_needs_three_uavs():
    with pytest.raises(ClusterTooSmallError):
        compare_scores({"a": 0.0, "b": 1.0}, TAU)
    with pytest.raises(ClusterTooSmallError):
        evaluate_cluster({"a": empty_observation(), "b": empty_observation()}, DetectorConfig())


def test_equal_gap_candidates_are_not_flagged():
    # each of the two outer UAVs is an equally good outlier candidate
    cmp = compare_scores({"a": 0.0, "b": 0.1, "c": 0.2}, 0.09)
    assert cmp.flagged is None and cmp.ambiguous


@given(grid, grid, grid)
def test_at_most_one_flag(a, b, c):
    cmp = compare_scores({"a": a, "b": b, "c": c}, TAU)
    assert cmp.flagged in (None, "a", "b", "c")
    assert not (cmp.flagged and cmp.ambiguous)


@given(grid, grid, grid, grid)
def test_translation_invariant(a, b, c, shift):
    base = compare_scores({"a": a, "b": b, "c": c}, TAU)
    moved = compare_scores({"a": a + shift, "b": b + shift, "c": c + shift}, TAU)
    assert (moved.flagged, moved.ambiguous) == (base.flagged, base.ambiguous)


@given(grid, grid, grid, st.permutations(["x", "y", "z"]))
def test_relabeling_invariant(a, b, c, names):
    base = compare_scores({"a": a, "b": b, "c": c}, TAU)
    rename = dict(zip("abc", names))
    relabeled = compare_scores({rename["c"]: c, rename["a"]: a, rename["b"]: b}, TAU)
    assert relabeled.flagged == (rename[base.flagged] if base.flagged else None)
    assert relabeled.ambiguous == base.ambiguous


def _obs(ev=(10, 0, 0), energy=1000.0, offset=0.0):
    exp = np.zeros((5, 3))
    act = exp + np.array([offset, 0.0, 0.0])
    return UavObservation(EvidenceCounts(*ev), energy, exp, act)


def test_identical_inputs_never_flag():
    v = evaluate_cluster({u: _obs() for u in "abc"}, DetectorConfig())
    assert v.flagged is None
    assert len({tc.total_trust for tc in v.trust.values()}) == 1


def test_spoofed_uav_flagged_in_cluster():
    obs = {"a": _obs(offset=400.0), "b": _obs(), "c": _obs()}
    v = evaluate_cluster(obs, DetectorConfig(), interval_index=2)
    assert v.flagged == "a"
    assert v.classification is Classification.ATTACK_FLAGGED
    assert v.trust["a"].total_trust < 0 < v.trust["b"].total_trust
    assert v.interval_index == 2


def test_cluster_wide_shift_is_environmental():
    obs = {u: _obs(offset=60.0) for u in "abc"}
    v = evaluate_cluster(obs, DetectorConfig())
    assert v.flagged is None
    assert v.classification is Classification.ENVIRONMENTAL_SHIFT


def _verdict(flagged, idx=0):
    cls = Classification.ATTACK_FLAGGED if flagged else Classification.CLEAR
    return ClusterVerdict(idx, {}, flagged, cls)


def _replay(flags, m):
    h = TrustHistory()
    out = []
    for i, f in enumerate(flags):
        v = _verdict(f, i)
        out.append(classify_interval(h, v, m))
        h.record(v)
    return out


def test_persistence_rule():
    assert _replay(["a", "a"], 2)[-1] is Classification.ATTACK_CONFIRMED
    assert Classification.ATTACK_CONFIRMED not in _replay(["a", "b", "a", "b"], 2)
    assert _replay(["a"], 1) == [Classification.ATTACK_CONFIRMED]
    assert _replay([None, None], 1) == [Classification.CLEAR] * 2


def test_first_flag_not_confirmed_when_persistence_two():
    assert _replay(["a"], 2) == [Classification.ATTACK_FLAGGED]


def test_mission_reset():
    h = TrustHistory()
    h.record(evaluate_cluster({u: _obs() for u in "abc"}, DetectorConfig()))
    assert len(h) == 1
    assert len(mission_reset(h)) == 0
    assert len(mission_reset(mission_reset())) == 0


def test_reset_then_evaluate_without_data():
    v = evaluate_cluster({u: empty_observation() for u in "abc"}, DetectorConfig())
    for tc in v.trust.values():
        assert (tc.task_trust, tc.energy_trust, tc.deviation_trust) == (0.5, 0.0, 0.0)
    assert v.flagged is None


def test_config_validation():
    with pytest.raises(ValueError):
        DetectorConfig(alpha=0)
    with pytest.raises(ValueError):
        DetectorConfig(persistence=0)
    with pytest.raises(ValueError):
        DetectorConfig(range_threshold=0.0)
