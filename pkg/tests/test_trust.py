import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from uavtrust.trust import (
    ClusterTooSmallError,
    EvidenceCounts,
    OpinionVector,
    PositionSample,
    TrustWeights,
    deviation_trust,
    energy_trust,
    opinion_from_evidence,
    peer_mean_energy,
    task_trust,
    total_trust,
    trust_components,
)

counts = st.integers(min_value=0, max_value=10_000)
evidence = st.builds(EvidenceCounts, counts, counts, counts)
positive = st.floats(min_value=1e-3, max_value=1e6, allow_nan=False)


@pytest.mark.parametrize(
    "ev, expected",
    [
        ((0, 0, 0), (0.0, 0.0, 1.0)),
        ((5, 0, 0), (1.0, 0.0, 0.0)),
        ((3, 1, 1), (0.6, 0.2, 0.2)),
    ],
)
def test_opinion_examples(ev, expected):
    op = opinion_from_evidence(EvidenceCounts(*ev))
    assert (op.belief, op.disbelief, op.uncertainty) == expected


@pytest.mark.parametrize(
    "op, expected",
    [((1.0, 0.0, 0.0), 1.0), ((0.0, 0.0, 1.0), 0.5), ((0.6, 0.2, 0.2), 0.7)],
)
def test_task_trust_examples(op, expected):
    assert task_trust(OpinionVector(*op)) == pytest.approx(expected, abs=1e-15)


def test_negative_counts_rejected():
    with pytest.raises(ValueError):
        EvidenceCounts(-1, 0, 0)


def test_opinion_must_sum_to_one():
    with pytest.raises(ValueError):
        OpinionVector(0.5, 0.5, 0.5)


@given(evidence)
def test_opinion_is_a_distribution(ev):
    op = opinion_from_evidence(ev)
    parts = (op.belief, op.disbelief, op.uncertainty)
    assert all(p >= 0 for p in parts)
    assert abs(sum(parts) - 1.0) <= 1e-12
    assert 0.0 <= task_trust(op) <= 1.0


@given(evidence)
def test_extra_success_never_lowers_task_trust(ev):
    before = task_trust(opinion_from_evidence(ev))
    after = task_trust(opinion_from_evidence(ev.add(successful=1)))
    assert after >= before - 1e-15


@given(st.floats(0, 1), st.floats(0, 1), st.floats(0, 1))
def test_task_trust_monotone_in_belief_for_fixed_uncertainty(u, b1, b2):
    room = 1.0 - u
    lo, hi = sorted((b1 * room, b2 * room))
    t_lo = task_trust(OpinionVector(lo, 1.0 - u - lo, u))
    t_hi = task_trust(OpinionVector(hi, 1.0 - u - hi, u))
    assert t_hi >= t_lo


@pytest.mark.parametrize(
    "energies, uav, expected",
    [
        ({"A": 10.0, "B": 20.0, "C": 30.0}, "A", 25.0),
        ({"A": 10.0, "B": 10.0, "C": 10.0}, "B", 10.0),
        ({"A": 0.0, "B": 0.0}, "A", 0.0),
    ],
)
def test_peer_mean_examples(energies, uav, expected):
    assert peer_mean_energy(energies, uav) == expected


def test_peer_mean_errors():
    with pytest.raises(KeyError):
        peer_mean_energy({"A": 1.0, "B": 2.0}, "Z")
    with pytest.raises(ClusterTooSmallError):
        peer_mean_energy({"A": 1.0}, "A")


def test_energy_trust_examples():
    assert energy_trust(10.0, 10.0) == 0.0
    assert energy_trust(20.0, 10.0) == 1.0
    assert energy_trust(5.0, 0.0) == 10.0
    assert energy_trust(0.0, 0.0) == 0.0


@given(positive)
def test_energy_trust_of_equal_energies_is_zero(e):
    assert energy_trust(e, e) == 0.0


@given(positive, positive, st.floats(min_value=1e-3, max_value=1e3))
def test_energy_trust_scale_invariant(a, b, lam):
    assert math.isclose(energy_trust(lam * a, lam * b), energy_trust(a, b), rel_tol=1e-12, abs_tol=1e-12)


def _samples(offsets, start=(0.0, 0.0, 0.0)):
    return [
        PositionSample(float(t), start, tuple(np.add(start, off)))
        for t, off in enumerate(offsets)
    ]


def test_deviation_examples():
    assert deviation_trust(_samples([(0, 0, 0)] * 5), 4) == 0.0
    assert deviation_trust(_samples([(3, 4, 0)] * 6), 4) == pytest.approx(5.0, abs=1e-9)
    assert deviation_trust(_samples([(7, 0, 0), (0, 0, 0), (10, 0, 0)]), 2) == pytest.approx(5.0, abs=1e-9)


def test_deviation_short_window_uses_available_samples():
    assert deviation_trust(_samples([(0, 0, 2), (0, 0, 4)]), 10) == pytest.approx(3.0)


def test_deviation_rejects_bad_windows():
    with pytest.raises(ValueError):
        deviation_trust([], 3)
    s = _samples([(1, 0, 0), (1, 0, 0)])
    with pytest.raises(ValueError):
        deviation_trust(s[::-1], 3)


vec = st.tuples(*[st.floats(-1e3, 1e3)] * 3)


@given(st.lists(vec, min_size=1, max_size=15), st.integers(1, 20))
def test_deviation_zero_iff_on_track(offsets, alpha):
    samples = _samples(offsets)
    d = deviation_trust(samples, alpha)
    window = offsets[-min(alpha, len(offsets)):]
    on_track = all(o == (0.0, 0.0, 0.0) for o in window)
    assert (d == 0.0) == on_track


@given(st.lists(vec, min_size=1, max_size=10), vec, st.integers(1, 12))
def test_deviation_translation_invariant(offsets, shift, alpha):
    base = deviation_trust(_samples(offsets), alpha)
    moved = deviation_trust(_samples(offsets, start=shift), alpha)
    assert math.isclose(base, moved, rel_tol=1e-9, abs_tol=1e-6)


def test_total_trust_examples():
    assert total_trust(0.7, 0.3, 20.0, TrustWeights(1.0, 0.0, 0.0)) == 0.7
    w = TrustWeights()
    assert total_trust(0.7, 0.1, 0.0, w) == pytest.approx(0.31, abs=1e-12)
    assert total_trust(0.5, 0.2, 500.0, w) == pytest.approx(-1.24, abs=1e-12)


def test_weights_must_sum_to_one():
    with pytest.raises(ValueError, match="sum to 1"):
        TrustWeights(0.4, 0.3, 0.2)


@given(st.floats(0, 1), st.floats(0, 10), st.floats(0, 1e4), st.floats(1e-3, 1e3))
def test_total_trust_decreases_with_deviation(task, ene, dev, extra):
    w = TrustWeights()
    assert total_trust(task, ene, dev + extra, w) < total_trust(task, ene, dev, w)


def test_trust_components_bundle():
    tc = trust_components(EvidenceCounts(3, 1, 1), 20.0, 10.0, 0.0, TrustWeights())
    assert (tc.task_trust, tc.energy_trust, tc.deviation_trust) == (pytest.approx(0.7), 1.0, 0.0)
    assert tc.total_trust == pytest.approx(0.4 * 0.7 + 0.3)
