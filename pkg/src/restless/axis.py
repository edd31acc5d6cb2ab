"""Signal-axis recovery in the IQ plane.

Standard (reset) mode: the per-sequence average points spread out along the
line connecting the two state centroids, so the principal axis of their 2x2
covariance recovers the signal axis directly.

Reset-free mode: averages collapse toward the mid-point between the
centroids, so the axis is recovered from consecutive-shot difference points
instead.  Differences cluster at zero (no state change) and at +/- the
centroid separation (state change).  Folding them into the first quadrant
merges the +/- clusters; the per-sequence means of the folded points then
line up and their principal axis gives the folded angle theta_d.  Folding
loses the relative sign of the components, so the true axis is either
theta_d or pi - theta_d; the branch is chosen by comparing the
signal-to-noise ratio of the projected shots under both candidates.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import (
    IQPoint,
    InsufficientDataError,
    ShotStream,
    SignalAxis,
    wrap_axis_angle,
)
from .discriminate import quantile_threshold


class AxisRecoveryError(ValueError):
    """The point cloud does not determine a signal axis."""


def fold_first_quadrant(points) -> np.ndarray:
    """Map points to the first quadrant by taking component-wise magnitudes."""
    z = np.asarray(points, dtype=np.complex128)
    return np.abs(z.real) + 1j * np.abs(z.imag)


@dataclass(frozen=True, eq=False)
class DiffSeries:
    """Consecutive-shot differences of a stream and their foldings.

    ``diff[p]`` is ``m_j - m_(j-1)`` for the shot with global index
    ``j = p + 2``; ``sequence_index[p]`` is the sequence slot of that later
    shot.  Length is stream length minus one (the first shot has no
    predecessor).
    """

    diff: np.ndarray
    folded: np.ndarray
    sequence_index: np.ndarray
    num_sequences: int

    def folded_mean_by_sequence(self) -> tuple[np.ndarray, np.ndarray]:
        """Per-sequence means of folded differences.

        Returns ``(means, counts)`` where ``means`` is complex of shape (K,),
        NaN for sequences without any difference point.
        """
        K = self.num_sequences
        sums = np.zeros(K, dtype=np.complex128)
        counts = np.zeros(K, dtype=np.int64)
        cells = self.sequence_index - 1
        np.add.at(sums, cells, self.folded)
        np.add.at(counts, cells, 1)
        means = np.full(K, np.nan + 0j, dtype=np.complex128)
        nz = counts > 0
        means[nz] = sums[nz] / counts[nz]
        return means, counts


def difference_points(stream: ShotStream) -> DiffSeries:
    """Consecutive-shot difference points ``d_j = m_j - m_(j-1)``."""
    if len(stream) < 2:
        raise InsufficientDataError("difference points need at least two shots")
    d = np.diff(stream.iq)
    k_later = (np.arange(1, len(stream), dtype=np.int64) % stream.num_sequences) + 1
    return DiffSeries(
        diff=d,
        folded=fold_first_quadrant(d),
        sequence_index=k_later,
        num_sequences=stream.num_sequences,
    )


def principal_axis(points) -> float:
    """Angle in ``[0, pi)`` of the largest-variance direction of 2D points.

    Uses the closed-form eigen-direction of the 2x2 covariance matrix.
    Raises :class:`AxisRecoveryError` when all points coincide.
    """
    z = np.asarray(points, dtype=np.complex128).reshape(-1)
    z = z[np.isfinite(z)]
    if len(z) < 2:
        raise AxisRecoveryError("need at least two finite points")
    c = z - z.mean()
    # the second moment of c packs the covariance: Re = cxx - cyy, Im = 2 cxy
    m2 = (c * c).mean()
    if float(np.vdot(c, c).real) <= 0.0:
        raise AxisRecoveryError("all points coincide; axis undefined")
    return wrap_axis_angle(0.5 * math.atan2(float(m2.imag), float(m2.real)))


def standard_axis(averages) -> SignalAxis:
    """Signal axis from per-sequence average IQ points (reset-mode recovery).

    ``averages`` is a sequence of complex points or :class:`IQPoint`.  The
    returned axis is anchored at the centroid of the averages.
    """
    pts = [p.as_complex() if isinstance(p, IQPoint) else complex(p) for p in np.atleast_1d(np.asarray(averages, dtype=object))]
    z = np.asarray(pts, dtype=np.complex128)
    theta = principal_axis(z)
    return SignalAxis(theta=theta, origin=IQPoint.from_complex(z.mean()))


def snr(projections, threshold: float) -> float:
    """Separation quality of projections split at ``threshold``.

    Defined as ``|mean_above - mean_below| / (std_above + std_below)`` with
    the on-threshold points counted as below.  Returns ``inf`` when both
    sides are noiseless point masses and ``0.0`` when one side is empty.
    """
    x = np.asarray(projections, dtype=np.float64)
    m = x > threshold
    n_above = int(np.count_nonzero(m))
    n_below = len(x) - n_above
    if n_above == 0 or n_below == 0:
        return 0.0
    # per-side moments in one pass over pivoted values; pivoting at the
    # overall mean keeps the subtraction form of the variance stable
    pivot = float(x.mean())
    y = x - pivot
    sq = y * y
    sum_above = float(np.add.reduce(y, where=m, initial=0.0))
    sq_above = float(np.add.reduce(sq, where=m, initial=0.0))
    mean_above = sum_above / n_above
    mean_below = (float(y.sum()) - sum_above) / n_below
    var_above = max(sq_above / n_above - mean_above * mean_above, 0.0)
    var_below = max(
        (float(sq.sum()) - sq_above) / n_below - mean_below * mean_below, 0.0
    )
    spread = math.sqrt(var_above) + math.sqrt(var_below)
    gap = abs(mean_above - mean_below)
    if spread == 0.0:
        return float("inf") if gap > 0.0 else 0.0
    return float(gap / spread)


@dataclass(frozen=True)
class AxisDiagnostics:
    """Branch-selection evidence recorded by :func:`restless_axis`."""

    theta_d: float
    theta_m: float
    snr_branch_a: float
    snr_branch_b: float
    chosen: str  # "a" (theta_d) or "b" (pi - theta_d)

    def to_dict(self) -> dict:
        return {
            "theta_d": self.theta_d,
            "theta_m": self.theta_m,
            "snr_branch_a": self.snr_branch_a,
            "snr_branch_b": self.snr_branch_b,
            "chosen": self.chosen,
        }


def restless_axis(stream: ShotStream) -> tuple[SignalAxis, AxisDiagnostics]:
    """Recover the signal axis of a reset-free stream from folded differences.

    Returns the axis (anchored at the overall mean point) together with the
    branch-selection diagnostics.  Requires at least one sequence that
    actually changes the state; an all-identity stream leaves the folded
    means in a single clump and raises :class:`AxisRecoveryError`.
    """
    diffs = difference_points(stream)
    means, counts = diffs.folded_mean_by_sequence()
    usable = means[counts > 0]
    theta_d = principal_axis(usable)

    candidates = {"a": theta_d, "b": wrap_axis_angle(np.pi - theta_d)}
    origin_c = stream.iq.mean()
    origin = IQPoint.from_complex(origin_c)
    # both candidate projections share the centred components
    centered = stream.iq - origin_c
    xr, yi = centered.real, centered.imag
    ratios = {}
    for branch, theta in candidates.items():
        proj = xr * math.cos(theta) + yi * math.sin(theta)
        ratios[branch] = snr(proj, quantile_threshold(proj))
    # ties resolve to the direct (unmirrored) branch
    chosen = "a" if ratios["a"] >= ratios["b"] else "b"
    axis = SignalAxis(theta=candidates[chosen], origin=origin)
    diag = AxisDiagnostics(
        theta_d=theta_d,
        theta_m=axis.theta,
        snr_branch_a=ratios["a"],
        snr_branch_b=ratios["b"],
        chosen=chosen,
    )
    return axis, diag
