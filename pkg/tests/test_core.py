import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from restless.core import (
    GateSpec,
    IQPoint,
    InsufficientDataError,
    MODE_RESTLESS,
    MODE_STANDARD,
    SequenceMeta,
    ShotStream,
    SignalAxis,
    StreamValidationError,
    average_iq,
    average_iq_all,
    global_index,
    split_index,
    wrap_axis_angle,
)

from conftest import make_stream


# -- points and indexing ---------------------------------------------------


def test_iq_point_roundtrip():
    p = IQPoint(0.25, -1.5)
    assert p.as_complex() == 0.25 - 1.5j
    assert IQPoint.from_complex(p.as_complex()) == p
    assert p.as_tuple() == (0.25, -1.5)


@pytest.mark.parametrize("bad", [float("nan"), float("inf"), -float("inf")])
def test_iq_point_rejects_nonfinite(bad):
    with pytest.raises(ValueError):
        IQPoint(bad, 0.0)


def test_global_index_examples():
    # shot of sequence 2 in repetition 3 of a 5-sequence cycle
    assert global_index(2, 3, 5) == 17
    assert split_index(17, 5) == (2, 3)
    assert global_index(1, 0, 7) == 1
    assert split_index(1, 7) == (1, 0)


def test_global_index_vectorised():
    k = np.array([1, 2, 3])
    i = np.array([0, 0, 2])
    j = global_index(k, i, 3)
    assert j.tolist() == [1, 2, 9]
    kk, ii = split_index(j, 3)
    assert kk.tolist() == k.tolist() and ii.tolist() == i.tolist()


def test_global_index_validation():
    with pytest.raises(ValueError):
        global_index(0, 0, 4)
    with pytest.raises(ValueError):
        global_index(5, 0, 4)
    with pytest.raises(ValueError):
        global_index(1, -1, 4)
    with pytest.raises(ValueError):
        split_index(0, 4)


@given(
    k=st.integers(min_value=1, max_value=50),
    i=st.integers(min_value=0, max_value=1000),
    extra=st.integers(min_value=0, max_value=49),
)
def test_index_roundtrip(k, i, extra):
    K = k + extra  # ensures k <= K
    j = global_index(k, i, K)
    assert split_index(j, K) == (k, i)
    assert j == k + i * K


# -- streams ----------------------------------------------------------------


def test_stream_indices_follow_acquisition_order():
    s = make_stream(np.arange(6) + 0j, num_sequences=3)
    assert s.j.tolist() == [1, 2, 3, 4, 5, 6]
    assert s.k.tolist() == [1, 2, 3, 1, 2, 3]
    assert s.i.tolist() == [0, 0, 0, 1, 1, 1]


def test_stream_rejects_size_mismatch():
    with pytest.raises(StreamValidationError):
        ShotStream(
            iq=np.zeros(7, dtype=complex),
            num_sequences=3,
            num_repetitions=2,
            repetition_rate=1e5,
            mode=MODE_RESTLESS,
        )


def test_stream_truncation_flag_rules():
    # short stream must be flagged
    with pytest.raises(StreamValidationError):
        ShotStream(
            iq=np.zeros(5, dtype=complex),
            num_sequences=3,
            num_repetitions=2,
            repetition_rate=1e5,
            mode=MODE_RESTLESS,
        )
    # complete stream must not be flagged
    with pytest.raises(StreamValidationError):
        ShotStream(
            iq=np.zeros(6, dtype=complex),
            num_sequences=3,
            num_repetitions=2,
            repetition_rate=1e5,
            mode=MODE_RESTLESS,
            truncated=True,
        )
    s = ShotStream(
        iq=np.zeros(5, dtype=complex),
        num_sequences=3,
        num_repetitions=2,
        repetition_rate=1e5,
        mode=MODE_RESTLESS,
        truncated=True,
    )
    assert s.counts_per_sequence().tolist() == [2, 2, 1]


def test_stream_rejects_nonfinite_and_empty():
    with pytest.raises(StreamValidationError):
        make_stream([1 + 1j, complex("nan")], num_sequences=2)
    with pytest.raises(StreamValidationError):
        ShotStream(
            iq=np.array([], dtype=complex),
            num_sequences=1,
            num_repetitions=1,
            repetition_rate=1e5,
            mode=MODE_RESTLESS,
            truncated=True,
        )


def test_stream_rejects_bad_mode_and_rate():
    with pytest.raises(StreamValidationError):
        make_stream([0j, 0j], num_sequences=2, mode="reset-free")
    with pytest.raises(StreamValidationError):
        make_stream([0j, 0j], num_sequences=2, repetition_rate=0.0)


def test_stream_is_immutable():
    s = make_stream(np.arange(4) + 0j, num_sequences=2)
    with pytest.raises(ValueError):
        s.iq[0] = 5.0


def test_shots_for_sequence_strides():
    s = make_stream(np.arange(10) + 0j, num_sequences=2)
    assert s.shots_for_sequence(1).real.tolist() == [0, 2, 4, 6, 8]
    assert s.shots_for_sequence(2).real.tolist() == [1, 3, 5, 7, 9]
    with pytest.raises(ValueError):
        s.shots_for_sequence(3)


def test_iter_shots_matches_indexing():
    s = make_stream([1 + 2j, 3 + 4j, 5 + 6j], num_sequences=2)
    rows = list(s.iter_shots())
    assert rows[0] == (1, 1, 0, IQPoint(1.0, 2.0))
    assert rows[1] == (2, 2, 0, IQPoint(3.0, 4.0))
    assert rows[2] == (3, 1, 1, IQPoint(5.0, 6.0))


# -- averaging ----------------------------------------------------------------


def test_average_iq_enumerated():
    # sequence 1 sees 0 and 4+2j, sequence 2 sees 2j and 6
    s = make_stream([0j, 2j, 4 + 2j, 6 + 0j], num_sequences=2)
    assert average_iq(s, 1) == IQPoint(2.0, 1.0)
    assert average_iq(s, 2) == IQPoint(3.0, 1.0)
    avg = average_iq_all(s)
    assert np.allclose(avg, [2 + 1j, 3 + 1j])


def test_average_iq_missing_sequence():
    s = make_stream([1 + 1j, 2 + 2j], num_sequences=3)  # k=3 never acquired
    with pytest.raises(InsufficientDataError):
        average_iq(s, 3)
    avg = average_iq_all(s)
    assert np.isnan(avg[2].real) and not np.isnan(avg[0].real)


# -- axes ----------------------------------------------------------------------


def test_axis_angle_range_enforced():
    SignalAxis(theta=0.0)
    SignalAxis(theta=math.pi - 1e-9)
    with pytest.raises(ValueError):
        SignalAxis(theta=math.pi)
    with pytest.raises(ValueError):
        SignalAxis(theta=-0.1)


def test_axis_projection_known_values():
    axis = SignalAxis(theta=0.0, origin=IQPoint(1.0, 0.0))
    assert np.allclose(axis.project([3 + 5j]), [2.0])
    axis45 = SignalAxis(theta=math.pi / 4)
    assert np.allclose(axis45.project([1 + 1j]), [math.sqrt(2)])
    # component orthogonal to the axis does not contribute
    assert np.allclose(axis45.project([1 - 1j]), [0.0])


@given(
    theta=st.floats(min_value=0.0, max_value=math.pi - 1e-6),
    phi=st.floats(min_value=-3.0, max_value=3.0),
    re=st.floats(min_value=-5, max_value=5),
    im=st.floats(min_value=-5, max_value=5),
)
def test_axis_projection_rotation_equivariance(theta, phi, re, im):
    z = complex(re, im)
    axis = SignalAxis(theta=theta)
    rotated = SignalAxis(theta=wrap_axis_angle(theta + phi))
    direct = axis.project([z])[0]
    via_rotation = rotated.project([z * np.exp(1j * phi)])[0]
    # the axis is orientation-free, so projections agree up to a global sign
    assert min(abs(direct - via_rotation), abs(direct + via_rotation)) < 1e-9 * max(
        1.0, abs(z)
    )


def test_wrap_axis_angle():
    assert wrap_axis_angle(math.pi) == 0.0
    assert wrap_axis_angle(0.0) == 0.0
    assert math.isclose(wrap_axis_angle(-math.pi / 4), 3 * math.pi / 4)
    assert math.isclose(wrap_axis_angle(5 * math.pi / 4), math.pi / 4)


# -- sequence metadata ----------------------------------------------------------


def test_gate_spec_validation():
    with pytest.raises(ValueError):
        GateSpec("hadamard")
    with pytest.raises(ValueError):
        GateSpec("x", flip_probability=1.5)


def test_id_x_blocks_layout():
    meta = SequenceMeta.id_x_blocks(2, 3, eta_x=0.97)
    assert len(meta) == 5
    assert meta.flip_probabilities().tolist() == [0.0, 0.0, 0.97, 0.97, 0.97]
    assert meta.id_like_mask().tolist() == [True, True, False, False, False]
    assert meta.x_like_mask().tolist() == [False, False, True, True, True]


def test_rabi_sweep_flip_probabilities():
    amps = [-0.2, 0.0, 0.1]
    meta = SequenceMeta.rabi_sweep(amps, rad_per_unit=16.0, n_cal_id=2, n_cal_x=1)
    assert len(meta) == 6
    expected = [math.sin(16.0 * a / 2.0) ** 2 for a in amps]
    assert np.allclose(meta.flip_probabilities()[:3], expected)
    assert meta.flip_probabilities()[3:].tolist() == [0.0, 0.0, 1.0]
    assert meta.gates[0].amplitude == -0.2
    assert meta.mask("rabi").sum() == 3


def test_flip_probabilities_require_all_slots():
    meta = SequenceMeta((GateSpec("id", flip_probability=0.0), GateSpec("x")))
    with pytest.raises(ValueError):
        meta.flip_probabilities()
