"""State discrimination on projected IQ shots.

Shots are projected onto the recovered signal axis and labelled by a scalar
threshold.  Labels are conventional names for the two projection sides, not
state assignments: ``A`` collects the shots at or below the threshold, ``B``
the shots above it.  Which label corresponds to the ground state is decided
downstream (higher readout fidelity / lower conditioned-signal variance).

Two threshold rules are provided: the default quantile-midpoint rule, which
needs no calibration data, and the empirical-CDF maximum-separation rule,
which locates the best split between identity-tagged and flip-tagged
calibration projections.
"""

from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass

import numpy as np

from .core import IQPoint, InsufficientDataError, ShotStream, SignalAxis

LABEL_A = 0
LABEL_B = 1
LABEL_NAMES = {LABEL_A: "A", LABEL_B: "B"}

METHOD_QUANTILE = "quantile"
METHOD_CDF_GAP = "cdf_gap"


class DegenerateDataWarning(UserWarning):
    """The data admits no meaningful separation; result is a fallback."""


def _one_quantile(part: np.ndarray, q: float, last: int) -> float:
    # part holds the needed order statistics in sorted position
    v = q * last
    j = math.floor(v)
    a = float(part[j])
    b = float(part[min(j + 1, last)])
    t = v - j
    # interpolate from the nearer end so exact-index quantiles stay exact
    # under roundoff
    return b - (b - a) * (1.0 - t) if t >= 0.5 else a + (b - a) * t


def _two_quantiles(x: np.ndarray, q_lo: float, q_hi: float) -> tuple[float, float]:
    # linearly interpolated quantiles via one partial sort; equivalent to
    # np.quantile(x, [q_lo, q_hi]) but without the generic dispatch
    # overhead, which dominates on the per-analysis hot path
    last = len(x) - 1
    j_lo = math.floor(q_lo * last)
    j_hi = math.floor(q_hi * last)
    part = np.partition(x, (j_lo, min(j_lo + 1, last), j_hi, min(j_hi + 1, last)))
    return _one_quantile(part, q_lo, last), _one_quantile(part, q_hi, last)


def quantile_threshold(projections, lower: float = 0.01, upper: float = 0.99) -> float:
    """Midpoint of two extreme quantiles of the projections.

    The default ``(Q(0.01) + Q(0.99)) / 2`` sits halfway between the tails of
    the two projection clusters without needing calibration data.  Quantiles
    use linear interpolation.  Requires at least 100 points so the tail
    quantiles are populated.
    """
    x = np.asarray(projections, dtype=np.float64)
    if len(x) < 100:
        raise InsufficientDataError(f"quantile threshold needs >= 100 points, got {len(x)}")
    if not np.isfinite(x).all():
        raise ValueError("projections must be finite")
    if not (0.0 <= lower <= 1.0 and 0.0 <= upper <= 1.0):
        raise ValueError("quantile fractions must lie in [0, 1]")
    lo, hi = _two_quantiles(x, lower, upper)
    if lo == hi:
        warnings.warn("projections show zero separation; threshold is degenerate", DegenerateDataWarning)
    return float((lo + hi) / 2.0)


def cdf_max_separation_threshold(proj_id, proj_x) -> float:
    """Threshold at the largest gap between two empirical CDFs.

    ``proj_id`` are projections measured after identity-like sequences,
    ``proj_x`` after flip-like sequences.  The gap ``|F_x - F_id|`` is a step
    function that is constant between adjacent pooled sample values, so the
    maximising set is a union of intervals; the threshold is the midpoint of
    the first maximal interval.
    """
    a = np.sort(np.asarray(proj_id, dtype=np.float64))
    b = np.sort(np.asarray(proj_x, dtype=np.float64))
    if len(a) == 0 or len(b) == 0:
        raise InsufficientDataError("both projection sets must be non-empty")
    if not (np.all(np.isfinite(a)) and np.all(np.isfinite(b))):
        raise ValueError("projections must be finite")
    pooled = np.unique(np.concatenate([a, b]))
    f_a = np.searchsorted(a, pooled, side="right") / len(a)
    f_b = np.searchsorted(b, pooled, side="right") / len(b)
    gap = np.abs(f_b - f_a)
    g_max = gap.max()
    if g_max == 0.0:
        warnings.warn("identical projection distributions; threshold is degenerate", DegenerateDataWarning)
        return float((pooled[0] + pooled[-1]) / 2.0)
    start = int(np.argmax(gap == g_max))
    end = start
    while end + 1 < len(gap) and gap[end + 1] == g_max:
        end += 1
    if end + 1 < len(pooled):
        return float((pooled[start] + pooled[end + 1]) / 2.0)
    return float(pooled[start])  # unreachable for g_max > 0; kept as a guard


@dataclass(frozen=True)
class Discriminator:
    """A signal axis plus a scalar threshold on the projected coordinate."""

    axis: SignalAxis
    threshold: float
    method: str = METHOD_QUANTILE

    def __post_init__(self) -> None:
        if not math.isfinite(self.threshold):
            raise ValueError("threshold must be finite")
        if self.method not in (METHOD_QUANTILE, METHOD_CDF_GAP):
            raise ValueError(f"unknown method {self.method!r}")

    def to_dict(self) -> dict:
        return {
            "theta": self.axis.theta,
            "origin": [self.axis.origin.i, self.axis.origin.q],
            "threshold": self.threshold,
            "method": self.method,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_dict(cls, data: dict) -> "Discriminator":
        try:
            axis = SignalAxis(theta=float(data["theta"]), origin=IQPoint(*map(float, data["origin"])))
            return cls(axis=axis, threshold=float(data["threshold"]), method=str(data["method"]))
        except (KeyError, TypeError) as exc:
            raise ValueError(f"malformed discriminator record: {exc}") from None

    @classmethod
    def from_json(cls, text: str) -> "Discriminator":
        return cls.from_dict(json.loads(text))


@dataclass(frozen=True, eq=False)
class LabeledStream:
    """A stream with one label per shot (0 for ``A``, 1 for ``B``)."""

    stream: ShotStream
    labels: np.ndarray
    discriminator: Discriminator

    def __post_init__(self) -> None:
        labels = np.ascontiguousarray(self.labels, dtype=np.uint8).reshape(-1)
        if len(labels) != len(self.stream):
            raise ValueError("one label per shot required")
        if labels.max(initial=0) > 1:
            raise ValueError("labels must be 0 (A) or 1 (B)")
        labels.setflags(write=False)
        object.__setattr__(self, "labels", labels)

    def __len__(self) -> int:
        return len(self.labels)

    def swap_labels(self) -> "LabeledStream":
        """Same stream with the A/B naming convention flipped.

        Useful for checking that analysis results are invariant under the
        arbitrary choice of which cluster is called ``A``.
        """
        return LabeledStream(stream=self.stream, labels=1 - self.labels, discriminator=self.discriminator)


def label_shots(stream: ShotStream, discriminator: Discriminator) -> LabeledStream:
    """Label every shot: ``A`` at or below the threshold, ``B`` above it."""
    proj = discriminator.axis.project(stream.iq)
    labels = (proj > discriminator.threshold).astype(np.uint8)
    return LabeledStream(stream=stream, labels=labels, discriminator=discriminator)


def discriminator_for_stream(
    stream: ShotStream,
    axis: SignalAxis,
    method: str = METHOD_QUANTILE,
    meta=None,
) -> Discriminator:
    """Build a discriminator for a stream with the requested threshold rule.

    The CDF-gap rule needs sequence metadata with identity-like and
    flip-like tags to split the calibration projections.
    """
    proj = axis.project(stream.iq)
    if method == METHOD_QUANTILE:
        return Discriminator(axis=axis, threshold=quantile_threshold(proj), method=method)
    if method == METHOD_CDF_GAP:
        if meta is None:
            raise ValueError("cdf_gap threshold needs sequence metadata")
        if len(meta) != stream.num_sequences:
            raise ValueError("metadata length must equal the cycle length K")
        id_mask = meta.id_like_mask()[stream.k - 1]
        x_mask = meta.x_like_mask()[stream.k - 1]
        if not id_mask.any() or not x_mask.any():
            raise InsufficientDataError("cdf_gap threshold needs both identity- and flip-tagged shots")
        thr = cdf_max_separation_threshold(proj[id_mask], proj[x_mask])
        return Discriminator(axis=axis, threshold=thr, method=method)
    raise ValueError(f"unknown method {method!r}")
