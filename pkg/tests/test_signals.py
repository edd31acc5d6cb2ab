"""Indicator signals, conditioning, intervals, fidelities and rescaling."""

import numpy as np
import pytest

from restless.core import (
    GATE_ID,
    GATE_X,
    GateSpec,
    InsufficientDataError,
    IQPoint,
    SequenceMeta,
    SignalAxis,
)
from restless.discriminate import LABEL_B, Discriminator, LabeledStream, label_shots
from restless.signals import (
    BinomialEstimate,
    FidelityReport,
    SignalSeries,
    calibration_values,
    conditioned_signals,
    dprime_signal,
    jeffreys_interval,
    normalize_signal,
    post_select,
    readout_fidelities,
    recombine,
    restless_signal,
    spam_correct,
)

from conftest import make_stream


AXIS_RE = SignalAxis(theta=0.0, origin=IQPoint(0.0, 0.0))
DISC = Discriminator(axis=AXIS_RE, threshold=0.5)


def _labeled(labels, num_sequences):
    """A labelled stream whose projections equal the requested labels."""
    iq = np.asarray(labels, dtype=np.float64).astype(np.complex128)
    stream = make_stream(iq, num_sequences=num_sequences)
    labeled = label_shots(stream, DISC)
    assert labeled.labels.tolist() == list(labels)
    return labeled


# --------------------------------------------------------- signal series


def test_signal_series_validation():
    with pytest.raises(ValueError):
        SignalSeries(values=[0.5], counts=[1, 2], stderr=[0.1])
    with pytest.raises(ValueError):
        SignalSeries(values=[0.5], counts=[-1], stderr=[0.1])
    with pytest.raises(ValueError):
        SignalSeries(values=[np.nan], counts=[3], stderr=[0.1])
    with pytest.raises(ValueError):
        SignalSeries(values=[0.5], counts=[0], stderr=[0.1])


def test_signal_series_from_binomial():
    s = SignalSeries.from_binomial([0.25, 0.5], [4, 0])
    assert s.values[0] == 0.25
    assert np.isnan(s.values[1]) and s.counts[1] == 0 and np.isnan(s.stderr[1])
    assert s.stderr[0] == pytest.approx(np.sqrt(0.25 * 0.75 / 4))
    assert s.sequence_index.tolist() == [1, 2]


def test_signal_series_immutable():
    s = SignalSeries.from_binomial([0.25], [4])
    with pytest.raises(ValueError):
        s.values[0] = 0.0


# ------------------------------------------------------ indicator signal


def test_indicator_enumerated_oracle():
    # labels [0,1,1,0,0,1], K=2: changes at j=2,4,6 (slot 2), none at j=3,5
    labeled = _labeled([0, 1, 1, 0, 0, 1], num_sequences=2)
    s = restless_signal(labeled)
    assert s.values.tolist() == [0.0, 1.0]
    assert s.counts.tolist() == [2, 3]
    assert s.stderr.tolist() == [0.0, 0.0]


def test_indicator_excludes_first_shot():
    # slot 1 loses its first repetition: denominators are N_s - 1 and N_s
    labeled = _labeled([0, 0, 0, 0, 0, 0], num_sequences=2)
    s = restless_signal(labeled)
    assert s.counts.tolist() == [2, 3]


def test_indicator_alternating_labels():
    labeled = _labeled([0, 1] * 10, num_sequences=2)
    s = restless_signal(labeled)
    assert s.values.tolist() == [1.0, 1.0]
    assert s.counts.tolist() == [9, 10]


def test_indicator_needs_two_shots():
    labeled = _labeled([0], num_sequences=1)
    with pytest.raises(InsufficientDataError):
        restless_signal(labeled)


def test_indicator_invariant_under_label_swap():
    rng = np.random.default_rng(0)
    labeled = _labeled(rng.integers(0, 2, 120).tolist(), num_sequences=5)
    s = restless_signal(labeled)
    t = restless_signal(labeled.swap_labels())
    np.testing.assert_array_equal(s.values, t.values)
    np.testing.assert_array_equal(s.counts, t.counts)


# -------------------------------------------------------- post-selection


def test_post_select_enumerated_oracle():
    # labels [0,1,1,0,0,1], K=2, N_s=3
    # predecessors by shot: j2<-0, j3<-1, j4<-1, j5<-0, j6<-0
    labeled = _labeled([0, 1, 1, 0, 0, 1], num_sequences=2)
    sel = post_select(labeled)
    assert sel.counts_a.tolist() == [1, 2]
    assert sel.counts_b.tolist() == [1, 1]
    assert sel.num_repetitions == 3
    np.testing.assert_allclose(sel.weights_a, [1 / 3, 2 / 3])
    np.testing.assert_allclose(sel.weights_b, [1 / 3, 1 / 3])
    np.testing.assert_allclose(sel.exclusion_weights_a(), [1 / 2, 2 / 3])


def test_post_select_counts_cover_exclusion_set():
    rng = np.random.default_rng(1)
    labeled = _labeled(rng.integers(0, 2, 200).tolist(), num_sequences=4)
    sel = post_select(labeled)
    total = sel.counts_a + sel.counts_b
    # 199 shots have predecessors; slot 1 misses its first repetition
    assert total.tolist() == [49, 50, 50, 50]


def test_conditioned_signals_enumerated_oracle():
    labeled = _labeled([0, 1, 1, 0, 0, 1], num_sequences=2)
    s_a, s_b = conditioned_signals(labeled)
    assert s_a.values.tolist() == [0.0, 1.0]
    assert s_a.counts.tolist() == [1, 2]
    assert s_b.values.tolist() == [0.0, 1.0]
    assert s_b.counts.tolist() == [1, 1]


def test_conditioned_signals_missing_cells_are_nan():
    # all labels 0: group B never occurs
    labeled = _labeled([0, 0, 0, 0], num_sequences=2)
    s_a, s_b = conditioned_signals(labeled)
    assert s_a.counts.tolist() == [1, 2]
    assert s_b.counts.tolist() == [0, 0]
    assert np.all(np.isnan(s_b.values))


def test_recombination_identity_exact():
    rng = np.random.default_rng(2)
    labeled = _labeled(rng.integers(0, 2, 300).tolist(), num_sequences=6)
    s = restless_signal(labeled)
    s_a, s_b = conditioned_signals(labeled)
    back = recombine(s_a, s_b)
    np.testing.assert_array_equal(back.counts, s.counts)
    np.testing.assert_allclose(back.values, s.values, rtol=0, atol=1e-14)


def test_recombine_handles_empty_cells():
    labeled = _labeled([0, 0, 0, 0], num_sequences=2)
    s_a, s_b = conditioned_signals(labeled)
    back = recombine(s_a, s_b)
    np.testing.assert_array_equal(back.values, restless_signal(labeled).values)


def test_recombine_length_mismatch():
    a = SignalSeries.from_binomial([0.5], [2])
    b = SignalSeries.from_binomial([0.5, 0.5], [2, 2])
    with pytest.raises(ValueError):
        recombine(a, b)


# ------------------------------------------------------ Jeffreys interval

# Frozen oracle values: quantiles of Beta(s + 1/2, n - s + 1/2) computed by
# high-precision bisection of the regularized incomplete beta function.
JEFFREYS_ORACLE = {
    (3, 100): (0.0085202831074035785, 0.07788756942640257),
    (0, 50): (0.0, 0.048758459444071398),
    (50, 50): (0.9512415405559286, 1.0),
    (7, 20): (0.17227621363191202, 0.56776609384149617),
    (1, 2): (0.060830275920097353, 0.93916972407990265),
    (0, 2): (0.0, 0.66682175440120942),
    (0, 3): (0.0, 0.53558324304295091),
    (1, 4): (0.028470895087146792, 0.71624832043658741),
    (3, 4): (0.28375167956341259, 0.97152910491285321),
    (6, 7): (0.49920253838092237, 0.9841234757872532),
}


@pytest.mark.parametrize("s,n", sorted(JEFFREYS_ORACLE))
def test_jeffreys_interval_frozen_oracle(s, n):
    lo, hi = jeffreys_interval(s, n)
    exp_lo, exp_hi = JEFFREYS_ORACLE[(s, n)]
    assert lo == pytest.approx(exp_lo, abs=1e-12)
    assert hi == pytest.approx(exp_hi, abs=1e-12)


def test_jeffreys_interval_edge_rules():
    assert jeffreys_interval(0, 10)[0] == 0.0
    assert jeffreys_interval(10, 10)[1] == 1.0


def test_jeffreys_interval_symmetry():
    lo, hi = jeffreys_interval(7, 20)
    lo_c, hi_c = jeffreys_interval(13, 20)
    assert lo == pytest.approx(1.0 - hi_c, abs=1e-12)
    assert hi == pytest.approx(1.0 - lo_c, abs=1e-12)


def test_jeffreys_interval_validation():
    with pytest.raises(ValueError):
        jeffreys_interval(1, 0)
    with pytest.raises(ValueError):
        jeffreys_interval(5, 4)
    with pytest.raises(ValueError):
        jeffreys_interval(1, 4, confidence=1.0)


def test_binomial_estimate_to_dict():
    est = BinomialEstimate(value=0.25, successes=1, trials=4, interval=(0.1, 0.6))
    d = est.to_dict()
    assert d == {"value": 0.25, "successes": 1, "trials": 4, "interval": [0.1, 0.6]}


# ----------------------------------------------------- readout fidelities


def test_fidelity_report_from_table_arithmetic():
    rep = FidelityReport.from_table(0.02, 0.05, 0.17, 0.17)
    assert rep.fidelity_a.value == pytest.approx(0.965, abs=1e-15)
    assert rep.fidelity_b.value == pytest.approx(0.83, abs=1e-15)
    assert rep.ground_label == 0


def test_fidelity_report_from_table_validation():
    with pytest.raises(ValueError):
        FidelityReport.from_table(1.2, 0.0, 0.0, 0.0)


def _fidelity_hand_stream():
    """12 shots, K=2 (slot 1 identity, slot 2 flip), exactly countable cells.

    Group A (predecessor labelled A): identity shots {0.95, 0.2}, flip shots
    {1.0, 0.9}; the CDF-gap threshold lands at 0.55, so one identity shot is
    misread high.  Group B: identity {0.8, 0.9, 1.0} against flip
    {0.0, 0.85, 0.1, 0.2}; threshold 0.5, one flip shot is misread high.
    """
    proj = [0.05, 1.0, 0.8, 0.0, 0.95, 0.85, 0.9, 0.1, 0.2, 0.9, 1.0, 0.2]
    iq = np.asarray(proj, dtype=np.complex128)
    stream = make_stream(iq, num_sequences=2)
    labeled = label_shots(stream, DISC)
    assert labeled.labels.tolist() == [0, 1, 1, 0, 1, 1, 1, 0, 0, 1, 1, 0]
    meta = SequenceMeta.id_x_blocks(n_id=1, n_x=1)
    return labeled, meta


def test_readout_fidelities_hand_oracle():
    labeled, meta = _fidelity_hand_stream()
    rep = readout_fidelities(labeled, meta)

    assert rep.thresholds == {"A": pytest.approx(0.55), "B": pytest.approx(0.5)}

    assert rep.p_a_b_given_id.value == pytest.approx(0.5)
    assert (rep.p_a_b_given_id.successes, rep.p_a_b_given_id.trials) == (1, 2)
    assert rep.p_a_a_given_x.value == 0.0
    assert (rep.p_a_a_given_x.successes, rep.p_a_a_given_x.trials) == (0, 2)
    assert rep.p_b_a_given_id.value == 0.0
    assert (rep.p_b_a_given_id.successes, rep.p_b_a_given_id.trials) == (0, 3)
    assert rep.p_b_b_given_x.value == pytest.approx(0.25)
    assert (rep.p_b_b_given_x.successes, rep.p_b_b_given_x.trials) == (1, 4)

    for cell, key in (
        (rep.p_a_b_given_id, (1, 2)),
        (rep.p_a_a_given_x, (0, 2)),
        (rep.p_b_a_given_id, (0, 3)),
        (rep.p_b_b_given_x, (1, 4)),
    ):
        np.testing.assert_allclose(cell.interval, JEFFREYS_ORACLE[key], atol=1e-12)

    assert rep.fidelity_a.value == pytest.approx(0.75)
    assert rep.fidelity_b.value == pytest.approx(0.875)
    np.testing.assert_allclose(rep.fidelity_a.interval, JEFFREYS_ORACLE[(3, 4)], atol=1e-12)
    np.testing.assert_allclose(rep.fidelity_b.interval, JEFFREYS_ORACLE[(6, 7)], atol=1e-12)
    assert rep.ground_label == LABEL_B


def test_readout_fidelities_perfect_stream():
    # gates [x, id, x, id] from state 0 give the label cycle [1, 1, 0, 0]
    meta = SequenceMeta(
        (
            GateSpec(GATE_X, 1.0),
            GateSpec(GATE_ID, 0.0),
            GateSpec(GATE_X, 1.0),
            GateSpec(GATE_ID, 0.0),
        )
    )
    labeled = _labeled([1, 1, 0, 0] * 50, num_sequences=4)
    rep = readout_fidelities(labeled, meta)
    for cell in (rep.p_a_b_given_id, rep.p_a_a_given_x, rep.p_b_a_given_id, rep.p_b_b_given_x):
        assert cell.value == 0.0
    assert rep.fidelity_a.value == 1.0
    assert rep.fidelity_b.value == 1.0
    assert rep.fidelity_a.interval[1] == 1.0
    assert rep.fidelity_a.interval[0] > 0.9


def test_readout_fidelities_missing_cell_raises():
    # gates [id, id, x, x] from 0 give labels [0, 0, 1, 0]: no Bshot is
    # ever followed by an identity slot, so the B|id cell is empty
    meta = SequenceMeta.id_x_blocks(n_id=2, n_x=2, eta_x=1.0)
    labeled = _labeled([0, 0, 1, 0] * 30, num_sequences=4)
    with pytest.raises(InsufficientDataError):
        readout_fidelities(labeled, meta)


def test_readout_fidelities_meta_length_mismatch():
    labeled, _ = _fidelity_hand_stream()
    with pytest.raises(ValueError):
        readout_fidelities(labeled, SequenceMeta.id_x_blocks(2, 2))


def test_fidelity_report_to_dict_keys():
    labeled, meta = _fidelity_hand_stream()
    d = readout_fidelities(labeled, meta).to_dict()
    assert set(d["table"]) == {"P_A(B|id)", "P_A(A|x)", "P_B(A|id)", "P_B(B|x)"}
    assert d["fidelity_a"]["value"] == pytest.approx(0.75)
    assert d["thresholds"]["B"] == pytest.approx(0.5)


# ------------------------------------------------------ SPAM correction


def test_spam_correct_group_a_affine_oracle():
    rep = FidelityReport.from_table(0.02, 0.03, 0.04, 0.06)
    series = SignalSeries(values=[0.02, 0.5, 0.98], counts=[5, 5, 5], stderr=[0.19, 0.19, 0.19])
    out = spam_correct(series, rep, "A")
    # low = 0.02, high = 1 - 0.03 = 0.97, scale 0.95
    assert out.values[0] == pytest.approx(0.0, abs=1e-15)
    assert out.values[1] == pytest.approx(0.48 / 0.95)
    assert out.values[2] == pytest.approx(1.0)  # 0.96/0.95 clamped
    assert out.clamped.tolist() == [False, False, True]
    np.testing.assert_allclose(out.stderr, 0.19 / 0.95)


def test_spam_correct_group_b_uses_b_cells():
    rep = FidelityReport.from_table(0.02, 0.03, 0.04, 0.06)
    series = SignalSeries(values=[0.04, 0.94], counts=[5, 5], stderr=[0.0, 0.0])
    out = spam_correct(series, rep, "B")
    # low = 0.04, high = 1 - 0.06 = 0.94
    assert out.values[0] == pytest.approx(0.0, abs=1e-15)
    assert out.values[1] == pytest.approx(1.0)
    assert not out.clamped.any()


def test_spam_correct_bad_group():
    rep = FidelityReport.from_table(0.0, 0.0, 0.0, 0.0)
    series = SignalSeries.from_binomial([0.5], [2])
    with pytest.raises(ValueError):
        spam_correct(series, rep, "C")


# -------------------------------------------------------- normalization


def test_normalize_signal_enumerated():
    series = SignalSeries(values=[0.1, 0.2, 0.4], counts=[2, 2, 2], stderr=[0.09, 0.09, 0.09])
    out = normalize_signal(series, cal_id=0.1, cal_x=0.4)
    np.testing.assert_allclose(out.values, [0.0, 1 / 3, 1.0], atol=1e-15)
    np.testing.assert_allclose(out.stderr, 0.09 / 0.3)
    assert not out.clamped.any()


def test_normalize_signal_clamps_and_masks():
    series = SignalSeries(values=[0.05, 0.95], counts=[2, 2], stderr=[0.0, 0.0])
    out = normalize_signal(series, cal_id=0.1, cal_x=0.9)
    assert out.values.tolist() == [0.0, 1.0]
    assert out.clamped.tolist() == [True, True]


def test_normalize_signal_preserves_missing_cells():
    series = SignalSeries(values=[0.1, np.nan, 0.55], counts=[3, 0, 2], stderr=[0.01, np.nan, 0.02])
    out = normalize_signal(series, cal_id=0.1, cal_x=0.55)
    assert out.values[0] == 0.0 and out.values[2] == 1.0
    assert np.isnan(out.values[1]) and out.counts[1] == 0
    assert not out.clamped[1]


def test_normalize_signal_degenerate_calibration():
    series = SignalSeries.from_binomial([0.5], [2])
    with pytest.raises(InsufficientDataError):
        normalize_signal(series, cal_id=0.3, cal_x=0.3)


def test_calibration_values_from_meta():
    meta = SequenceMeta.id_x_blocks(n_id=2, n_x=2)
    series = SignalSeries(
        values=[0.1, 0.12, 0.9, np.nan], counts=[10, 10, 10, 0], stderr=[0.01, 0.01, 0.01, np.nan]
    )
    cal_id, cal_x = calibration_values(series, meta)
    assert cal_id == pytest.approx(0.11)
    assert cal_x == pytest.approx(0.9)


def test_calibration_values_requires_usable_slots():
    meta = SequenceMeta.id_x_blocks(n_id=2, n_x=2)
    series = SignalSeries(
        values=[0.1, 0.12, np.nan, np.nan], counts=[10, 10, 0, 0], stderr=[0.01, 0.01, np.nan, np.nan]
    )
    with pytest.raises(InsufficientDataError):
        calibration_values(series, meta)


def test_calibration_values_length_mismatch():
    meta = SequenceMeta.id_x_blocks(n_id=1, n_x=1)
    series = SignalSeries.from_binomial([0.5, 0.5, 0.5], [2, 2, 2])
    with pytest.raises(ValueError):
        calibration_values(series, meta)


# ------------------------------------------------------- label-free signal


def test_dprime_signal_enumerated_with_meta():
    # iq [0,1,1,0,0,1], K=2: folded moves are [1,0,1,0,1] at slots
    # [2,1,2,1,2]; identity reference 0, flip reference 1
    iq = np.array([0, 1, 1, 0, 0, 1], dtype=np.complex128)
    stream = make_stream(iq, num_sequences=2)
    meta = SequenceMeta.id_x_blocks(n_id=1, n_x=1)
    s = dprime_signal(stream, meta=meta)
    np.testing.assert_allclose(s.values, [0.0, 1.0], atol=1e-15)
    assert s.counts.tolist() == [2, 3]
    np.testing.assert_allclose(s.stderr, [0.0, 0.0], atol=1e-15)


def test_dprime_signal_explicit_references():
    iq = np.array([0, 1, 0, 1], dtype=np.complex128)
    stream = make_stream(iq, num_sequences=2)
    s = dprime_signal(stream, cal=(0.0, 2.0))
    np.testing.assert_allclose(s.values, [0.5, 0.5], atol=1e-15)
    assert s.counts.tolist() == [1, 2]


def test_dprime_signal_clamps_below_reference():
    iq = np.array([0, 1, 0, 1], dtype=np.complex128)
    stream = make_stream(iq, num_sequences=2)
    s = dprime_signal(stream, cal=(2.0, 3.0))
    assert s.values.tolist() == [0.0, 0.0]
    assert s.clamped.all()


def test_dprime_signal_needs_meta_or_cal():
    iq = np.array([0, 1, 0, 1], dtype=np.complex128)
    stream = make_stream(iq, num_sequences=2)
    with pytest.raises(ValueError):
        dprime_signal(stream)


def test_dprime_signal_degenerate_references():
    iq = np.array([0, 1, 0, 1], dtype=np.complex128)
    stream = make_stream(iq, num_sequences=2)
    meta = SequenceMeta.id_x_blocks(n_id=1, n_x=1)
    with pytest.raises(ValueError):
        dprime_signal(stream, meta=meta)


def test_dprime_signal_statistical():
    rng = np.random.default_rng(9)
    n = 4000
    # state flips at every cycle boundary and holds inside the cycle:
    # 0,0,0,0,1,1,1,1,... so slot 1 is flip-like and slots 2-4 identity-like
    states = np.repeat(np.arange(n // 4) % 2, 4)[:n]
    iq = states + rng.normal(0, 0.05, n) + 1j * rng.normal(0, 0.05, n)
    stream = make_stream(iq.astype(np.complex128), num_sequences=4)
    meta = SequenceMeta(
        (
            GateSpec(GATE_X, 1.0),
            GateSpec(GATE_ID, 0.0),
            GateSpec(GATE_ID, 0.0),
            GateSpec(GATE_ID, 0.0),
        )
    )
    s = dprime_signal(stream, meta=meta)
    np.testing.assert_allclose(s.values, [1.0, 0.0, 0.0, 0.0], atol=0.02)
