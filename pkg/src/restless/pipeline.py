"""End-to-end analysis chains shared by the CLI, benchmarks and tests."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .axis import restless_axis, standard_axis
from .core import SequenceMeta, ShotStream, SignalAxis, average_iq_all
from .discriminate import (
    Discriminator,
    LabeledStream,
    METHOD_QUANTILE,
    discriminator_for_stream,
    label_shots,
)
from .signals import (
    PostSelection,
    SignalSeries,
    conditioned_signals,
    post_select,
    recombine,
    restless_signal,
)


@dataclass(frozen=True, eq=False)
class RestlessAnalysis:
    """Everything the single-pass reset-free analysis produces."""

    axis: SignalAxis
    diagnostics: object
    discriminator: Discriminator
    labeled: LabeledStream
    signal: SignalSeries
    signal_a: SignalSeries
    signal_b: SignalSeries
    recombined: SignalSeries
    selection: PostSelection


def analyze_restless(
    stream: ShotStream,
    method: str = METHOD_QUANTILE,
    meta: Optional[SequenceMeta] = None,
) -> RestlessAnalysis:
    """Recover the axis, label the shots and extract all signal variants.

    Chains outcome differencing, first-quadrant folding, axis recovery with
    branch disambiguation, thresholding, the state-change indicator signal,
    predecessor post-selection and the exact recombination.
    """
    axis, diagnostics = restless_axis(stream)
    discriminator = discriminator_for_stream(stream, axis, method=method, meta=meta)
    labeled = label_shots(stream, discriminator)
    signal = restless_signal(labeled)
    signal_a, signal_b = conditioned_signals(labeled)
    return RestlessAnalysis(
        axis=axis,
        diagnostics=diagnostics,
        discriminator=discriminator,
        labeled=labeled,
        signal=signal,
        signal_a=signal_a,
        signal_b=signal_b,
        recombined=recombine(signal_a, signal_b),
        selection=post_select(labeled),
    )


def standard_signal(stream: ShotStream) -> tuple[SignalAxis, SignalSeries]:
    """Averaged-signal analysis: project per-sequence mean IQ onto the
    principal axis of the averages.

    The standard errors are per-sequence standard errors of the projected
    shots.  Applying this to reset-free data is the naive averaging that
    collapses the signal, which is occasionally what one wants to show.
    """
    averages = average_iq_all(stream)
    axis = standard_axis(averages)
    values = axis.project(averages)
    proj = axis.project(stream.iq)
    K = stream.num_sequences
    slots = stream.k - 1
    counts = np.zeros(K, dtype=np.int64)
    np.add.at(counts, slots, 1)
    sums = np.zeros(K)
    np.add.at(sums, slots, proj)
    sq = np.zeros(K)
    np.add.at(sq, slots, proj * proj)
    with np.errstate(invalid="ignore", divide="ignore"):
        mean = sums / counts
        var = np.maximum(sq / counts - mean * mean, 0.0)
        denom = np.maximum(counts - 1, 1)
        stderr = np.sqrt(var * counts / denom) / np.sqrt(counts)
    stderr = np.where(counts > 1, stderr, np.where(counts == 1, 0.0, np.nan))
    return axis, SignalSeries(values=values, counts=counts, stderr=stderr)
