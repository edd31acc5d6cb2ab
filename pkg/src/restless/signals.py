"""Per-sequence signals extracted from labelled reset-free streams.

The central observable is the state-change indicator: shot ``j`` scores 1
when its label differs from the label of shot ``j - 1``.  Averaging the
indicator over the repetitions of each sequence gives the per-sequence
signal.  The first shot of a stream has no predecessor and is excluded from
every indicator statistic; per-sequence denominators shrink accordingly.

Because the indicator conditions on the previous outcome, each shot can also
be assigned to an initial-state group: ``M_A`` holds the shots whose
predecessor was labelled ``A``, ``M_B`` the rest.  Signals computed inside a
group are free of the initial-state mixing that distorts the raw signal, and
the raw signal is recovered exactly as their count-weighted combination.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy import stats as _stats

from .axis import difference_points
from .core import InsufficientDataError, ShotStream
from .discriminate import LABEL_A, LABEL_B, LabeledStream


@dataclass(frozen=True, eq=False)
class SignalSeries:
    """A per-sequence signal with counts and standard errors.

    ``values[k-1]`` is the signal of sequence ``k``; cells without data carry
    NaN and a zero count (never a silent zero).  ``clamped`` optionally marks
    cells that were truncated into ``[0, 1]`` by an affine rescale.
    """

    values: np.ndarray
    counts: np.ndarray
    stderr: np.ndarray
    clamped: Optional[np.ndarray] = None

    def __post_init__(self) -> None:
        values = np.ascontiguousarray(self.values, dtype=np.float64).reshape(-1)
        counts = np.ascontiguousarray(self.counts, dtype=np.int64).reshape(-1)
        stderr = np.ascontiguousarray(self.stderr, dtype=np.float64).reshape(-1)
        if not (len(values) == len(counts) == len(stderr)):
            raise ValueError("values, counts and stderr must have equal length")
        if np.any(counts < 0):
            raise ValueError("counts must be non-negative")
        # cells must be finite exactly where they hold data
        finite = np.isfinite(values)
        populated = counts > 0
        if not np.array_equal(finite, populated):
            if np.any(populated & ~finite):
                raise ValueError("non-missing cells must hold finite values")
            raise ValueError("cells without data must be marked NaN")
        clamped = self.clamped
        if clamped is not None:
            clamped = np.ascontiguousarray(clamped, dtype=bool).reshape(-1)
            if len(clamped) != len(values):
                raise ValueError("clamped mask must match series length")
            clamped.setflags(write=False)
        for arr in (values, counts, stderr):
            arr.setflags(write=False)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "counts", counts)
        object.__setattr__(self, "stderr", stderr)
        object.__setattr__(self, "clamped", clamped)

    def __len__(self) -> int:
        return len(self.values)

    @property
    def sequence_index(self) -> np.ndarray:
        return np.arange(1, len(self.values) + 1)

    @classmethod
    def from_binomial(cls, values, counts) -> "SignalSeries":
        """Series with the binomial standard error ``sqrt(s (1 - s) / n)``."""
        values = np.asarray(values, dtype=np.float64)
        counts = np.asarray(counts, dtype=np.int64)
        populated = counts > 0
        with np.errstate(invalid="ignore", divide="ignore"):
            se = np.sqrt(values * (1.0 - values) / counts)
        se = np.where(populated, se, np.nan)
        vals = np.where(populated, values, np.nan)
        return cls(values=vals, counts=counts, stderr=se)


def _per_sequence_mean(flags: np.ndarray, slots: np.ndarray, K: int) -> tuple[np.ndarray, np.ndarray]:
    sums = np.zeros(K, dtype=np.float64)
    counts = np.zeros(K, dtype=np.int64)
    cells = slots - 1
    np.add.at(sums, cells, flags)
    np.add.at(counts, cells, 1)
    with np.errstate(invalid="ignore"):
        means = np.where(counts > 0, sums / np.maximum(counts, 1), np.nan)
    return means, counts


def _indicator(labeled: LabeledStream) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """State-change flags, their slots and previous labels, for shots j >= 2."""
    labels = labeled.labels
    if len(labels) < 2:
        raise InsufficientDataError("indicator statistics need at least two shots")
    flags = labels[1:] != labels[:-1]
    slots = (np.arange(1, len(labels), dtype=np.int64) % labeled.stream.num_sequences) + 1
    return flags.astype(np.float64), slots, labels[:-1]


def restless_signal(labeled: LabeledStream) -> SignalSeries:
    """Per-sequence mean of the state-change indicator with binomial errors."""
    flags, slots, _ = _indicator(labeled)
    means, counts = _per_sequence_mean(flags, slots, labeled.stream.num_sequences)
    return SignalSeries.from_binomial(means, counts)


@dataclass(frozen=True, eq=False)
class PostSelection:
    """Initial-state grouping of the shots by their predecessor label.

    ``counts_a[k-1]`` is ``|M_A|_k``, the number of sequence-``k`` shots whose
    predecessor was labelled ``A``.  ``weights_a`` estimates the probability
    of starting sequence ``k`` in group ``A`` as ``|M_A|_k / N_s``; note the
    excluded first shot makes the two weights sum to slightly less than one
    for the first slot of a complete stream.
    """

    counts_a: np.ndarray
    counts_b: np.ndarray
    num_repetitions: int

    @property
    def weights_a(self) -> np.ndarray:
        return self.counts_a / self.num_repetitions

    @property
    def weights_b(self) -> np.ndarray:
        return self.counts_b / self.num_repetitions

    def exclusion_weights_a(self) -> np.ndarray:
        """``|M_A|_k / (|M_A|_k + |M_B|_k)``: the weight on the indicator
        exclusion set, for which the recombination identity is exact."""
        total = self.counts_a + self.counts_b
        with np.errstate(invalid="ignore"):
            return np.where(total > 0, self.counts_a / np.maximum(total, 1), np.nan)


def post_select(labeled: LabeledStream) -> PostSelection:
    """Group shots by predecessor label (first shot excluded)."""
    _, slots, prev = _indicator(labeled)
    K = labeled.stream.num_sequences
    counts_a = np.zeros(K, dtype=np.int64)
    counts_b = np.zeros(K, dtype=np.int64)
    np.add.at(counts_a, slots[prev == LABEL_A] - 1, 1)
    np.add.at(counts_b, slots[prev == LABEL_B] - 1, 1)
    return PostSelection(counts_a=counts_a, counts_b=counts_b, num_repetitions=labeled.stream.num_repetitions)


def conditioned_signals(labeled: LabeledStream) -> tuple[SignalSeries, SignalSeries]:
    """State-change signals computed separately inside ``M_A`` and ``M_B``.

    Cells where a group has no shots for some sequence are NaN with a zero
    count.  The raw signal equals the count-weighted mean of the two series
    (see :func:`recombine`) exactly, on the shared exclusion set.
    """
    flags, slots, prev = _indicator(labeled)
    K = labeled.stream.num_sequences
    out = []
    for lab in (LABEL_A, LABEL_B):
        sel = prev == lab
        means, counts = _per_sequence_mean(flags[sel], slots[sel], K)
        out.append(SignalSeries.from_binomial(means, counts))
    return out[0], out[1]


def recombine(s_a: SignalSeries, s_b: SignalSeries) -> SignalSeries:
    """Count-weighted recombination of the two conditioned signals.

    Inverse of the conditioning split: reproduces the raw per-sequence signal
    on the same exclusion set.
    """
    if len(s_a) != len(s_b):
        raise ValueError("conditioned series must have equal length")
    n_a, n_b = s_a.counts, s_b.counts
    total = n_a + n_b
    v_a = np.where(n_a > 0, s_a.values, 0.0)
    v_b = np.where(n_b > 0, s_b.values, 0.0)
    if np.any((n_a > 0) & ~np.isfinite(s_a.values)) or np.any((n_b > 0) & ~np.isfinite(s_b.values)):
        raise ValueError("counts inconsistent with conditioned means")
    with np.errstate(invalid="ignore"):
        values = np.where(total > 0, (n_a * v_a + n_b * v_b) / np.maximum(total, 1), np.nan)
    return SignalSeries.from_binomial(values, total)


def jeffreys_interval(successes: int, trials: int, confidence: float = 0.95) -> tuple[float, float]:
    """Equal-tailed Jeffreys interval for a binomial proportion.

    Quantiles of ``Beta(s + 1/2, n - s + 1/2)``, with the conventional edge
    rules ``lo = 0`` when ``s = 0`` and ``hi = 1`` when ``s = n``.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    if not 0 <= successes <= trials:
        raise ValueError("successes must lie in [0, trials]")
    if not 0.0 < confidence < 1.0:
        raise ValueError("confidence must lie in (0, 1)")
    tail = (1.0 - confidence) / 2.0
    dist = _stats.beta(successes + 0.5, trials - successes + 0.5)
    lo = 0.0 if successes == 0 else float(dist.ppf(tail))
    hi = 1.0 if successes == trials else float(dist.ppf(1.0 - tail))
    return lo, hi


@dataclass(frozen=True)
class BinomialEstimate:
    """A probability estimate with its raw counts and optional interval."""

    value: float
    successes: Optional[int] = None
    trials: Optional[int] = None
    interval: Optional[tuple[float, float]] = None

    def to_dict(self) -> dict:
        return {
            "value": self.value,
            "successes": self.successes,
            "trials": self.trials,
            "interval": list(self.interval) if self.interval is not None else None,
        }


@dataclass(frozen=True)
class FidelityReport:
    """Conditional assignment-error table and the derived readout fidelities.

    The four table entries are the probabilities of measuring the named label
    given the gate tag of the sequence, estimated separately inside each
    initial-state group.  Fidelities average the two error channels of their
    group:

    * ``fidelity_a = 1 - [P_A(B | id) + P_A(A | x)] / 2``
    * ``fidelity_b = 1 - [P_B(A | id) + P_B(B | x)] / 2``

    The fidelity intervals pool the correct-assignment counts of both error
    channels; the fidelity values themselves always satisfy the equal-weight
    identities above exactly.
    """

    p_a_b_given_id: BinomialEstimate
    p_a_a_given_x: BinomialEstimate
    p_b_a_given_id: BinomialEstimate
    p_b_b_given_x: BinomialEstimate
    fidelity_a: BinomialEstimate
    fidelity_b: BinomialEstimate
    confidence: float = 0.95
    thresholds: Optional[dict] = None

    def to_dict(self) -> dict:
        return {
            "confidence": self.confidence,
            "table": {
                "P_A(B|id)": self.p_a_b_given_id.to_dict(),
                "P_A(A|x)": self.p_a_a_given_x.to_dict(),
                "P_B(A|id)": self.p_b_a_given_id.to_dict(),
                "P_B(B|x)": self.p_b_b_given_x.to_dict(),
            },
            "fidelity_a": self.fidelity_a.to_dict(),
            "fidelity_b": self.fidelity_b.to_dict(),
            "thresholds": self.thresholds,
        }

    @property
    def ground_label(self) -> int:
        """The label with the higher readout fidelity (taken as ground)."""
        return LABEL_A if self.fidelity_a.value >= self.fidelity_b.value else LABEL_B

    @classmethod
    def from_table(
        cls,
        p_a_b_given_id: float,
        p_a_a_given_x: float,
        p_b_a_given_id: float,
        p_b_b_given_x: float,
        confidence: float = 0.95,
    ) -> "FidelityReport":
        """Build a report from known error probabilities (no counts)."""
        for p in (p_a_b_given_id, p_a_a_given_x, p_b_a_given_id, p_b_b_given_x):
            if not 0.0 <= p <= 1.0:
                raise ValueError(f"probability out of range: {p}")
        return cls(
            p_a_b_given_id=BinomialEstimate(p_a_b_given_id),
            p_a_a_given_x=BinomialEstimate(p_a_a_given_x),
            p_b_a_given_id=BinomialEstimate(p_b_a_given_id),
            p_b_b_given_x=BinomialEstimate(p_b_b_given_x),
            fidelity_a=BinomialEstimate(1.0 - (p_a_b_given_id + p_a_a_given_x) / 2.0),
            fidelity_b=BinomialEstimate(1.0 - (p_b_a_given_id + p_b_b_given_x) / 2.0),
            confidence=confidence,
        )


def _error_cell(n_err: int, n_tot: int, confidence: float) -> BinomialEstimate:
    return BinomialEstimate(
        value=n_err / n_tot,
        successes=n_err,
        trials=n_tot,
        interval=jeffreys_interval(n_err, n_tot, confidence),
    )


def readout_fidelities(labeled: LabeledStream, meta, confidence: float = 0.95) -> FidelityReport:
    """Estimate the assignment-error table and fidelities of both groups.

    Within each initial-state group, identity-tagged and flip-tagged
    projections are re-discriminated at the CDF maximum-separation threshold
    of that group, which decouples the table from the global threshold
    choice.  Requires metadata with at least one identity-like and one
    flip-like slot and a non-empty conditioned set for every table cell.
    """
    from .discriminate import cdf_max_separation_threshold

    stream = labeled.stream
    if len(meta) != stream.num_sequences:
        raise ValueError("metadata length must equal the cycle length K")
    _, slots, prev = _indicator(labeled)
    proj = labeled.discriminator.axis.project(stream.iq)[1:]
    id_mask = meta.id_like_mask()[slots - 1]
    x_mask = meta.x_like_mask()[slots - 1]
    if not id_mask.any() or not x_mask.any():
        raise InsufficientDataError("fidelity estimation needs identity- and flip-tagged shots")

    cells = {}
    thresholds = {}
    pooled = {}
    for lab, name in ((LABEL_A, "A"), (LABEL_B, "B")):
        in_set = prev == lab
        p_id = proj[in_set & id_mask]
        p_x = proj[in_set & x_mask]
        if len(p_id) == 0 or len(p_x) == 0:
            raise InsufficientDataError(f"conditioned set {name} lacks identity- or flip-tagged shots")
        x_t = cdf_max_separation_threshold(p_id, p_x)
        thresholds[name] = x_t
        outcome_b_id = p_id > x_t
        outcome_b_x = p_x > x_t
        if lab == LABEL_A:
            # errors: measuring B after identity, measuring A after a flip
            cells["ab_id"] = _error_cell(int(outcome_b_id.sum()), len(p_id), confidence)
            cells["aa_x"] = _error_cell(int((~outcome_b_x).sum()), len(p_x), confidence)
            n_correct = int((~outcome_b_id).sum() + outcome_b_x.sum())
        else:
            # errors: measuring A after identity, measuring B after a flip
            cells["ba_id"] = _error_cell(int((~outcome_b_id).sum()), len(p_id), confidence)
            cells["bb_x"] = _error_cell(int(outcome_b_x.sum()), len(p_x), confidence)
            n_correct = int(outcome_b_id.sum() + (~outcome_b_x).sum())
        n_tot = len(p_id) + len(p_x)
        pooled[name] = (n_correct, n_tot)

    f_a = 1.0 - (cells["ab_id"].value + cells["aa_x"].value) / 2.0
    f_b = 1.0 - (cells["ba_id"].value + cells["bb_x"].value) / 2.0
    return FidelityReport(
        p_a_b_given_id=cells["ab_id"],
        p_a_a_given_x=cells["aa_x"],
        p_b_a_given_id=cells["ba_id"],
        p_b_b_given_x=cells["bb_x"],
        fidelity_a=BinomialEstimate(
            f_a, pooled["A"][0], pooled["A"][1], jeffreys_interval(*pooled["A"], confidence)
        ),
        fidelity_b=BinomialEstimate(
            f_b, pooled["B"][0], pooled["B"][1], jeffreys_interval(*pooled["B"], confidence)
        ),
        confidence=confidence,
        thresholds=thresholds,
    )


def _affine_rescale(series: SignalSeries, low: float, high: float) -> SignalSeries:
    if high == low:
        raise InsufficientDataError("degenerate calibration: reference values coincide")
    scale = high - low
    values = (series.values - low) / scale
    stderr = series.stderr / abs(scale)
    clipped = np.clip(values, 0.0, 1.0)
    clamped = np.zeros(len(values), dtype=bool)
    ok = np.isfinite(values)
    clamped[ok] = clipped[ok] != values[ok]
    return SignalSeries(values=np.where(ok, clipped, np.nan), counts=series.counts, stderr=stderr, clamped=clamped)


def normalize_signal(series: SignalSeries, cal_id: float, cal_x: float) -> SignalSeries:
    """Rescale a signal so the calibration references map to 0 and 1.

    Values are clamped into ``[0, 1]``; the returned series marks clamped
    cells in its ``clamped`` mask.  Raises on coincident calibration values.
    """
    return _affine_rescale(series, cal_id, cal_x)


def calibration_values(series: SignalSeries, meta) -> tuple[float, float]:
    """Mean signal over identity-like and flip-like calibration slots."""
    if len(meta) != len(series):
        raise ValueError("metadata length must equal series length")
    id_mask = meta.id_like_mask()
    x_mask = meta.x_like_mask()
    if not id_mask.any() or not x_mask.any():
        raise InsufficientDataError("calibration needs identity- and flip-like slots")
    usable = series.counts > 0
    if not (id_mask & usable).any() or not (x_mask & usable).any():
        raise InsufficientDataError("calibration slots hold no data")
    cal_id = float(np.mean(series.values[id_mask & usable]))
    cal_x = float(np.mean(series.values[x_mask & usable]))
    return cal_id, cal_x


def spam_correct(series: SignalSeries, report: FidelityReport, group: str) -> SignalSeries:
    """Invert the assignment-error channel of one conditioned signal.

    For group ``"A"`` the observed change signal equals ``P_A(B | id)`` for a
    perfect identity and ``1 - P_A(A | x)`` for a perfect flip; mapping those
    two levels to 0 and 1 linearly inverts the 2x2 assignment matrix of the
    group.  Group ``"B"`` is handled symmetrically.
    """
    if group == "A":
        low = report.p_a_b_given_id.value
        high = 1.0 - report.p_a_a_given_x.value
    elif group == "B":
        low = report.p_b_a_given_id.value
        high = 1.0 - report.p_b_b_given_x.value
    else:
        raise ValueError("group must be 'A' or 'B'")
    return _affine_rescale(series, low, high)


def dprime_signal(stream: ShotStream, meta=None, cal: Optional[tuple[complex, complex]] = None) -> SignalSeries:
    """Per-sequence signal from folded difference points, without labelling.

    The per-sequence means of the folded differences move linearly between a
    no-change reference and a full-change reference; projecting onto the line
    between the references yields the signal directly.  References come from
    pooled identity-like and flip-like slots of ``meta`` unless given
    explicitly via ``cal = (ref_id, ref_x)``.  Values are clamped into
    ``[0, 1]`` with the clamp mask set; standard errors propagate the spread
    of the projected folded differences.
    """
    diffs = difference_points(stream)
    means, counts = diffs.folded_mean_by_sequence()
    if cal is not None:
        ref_id, ref_x = complex(cal[0]), complex(cal[1])
    else:
        if meta is None:
            raise ValueError("dprime_signal needs sequence metadata or explicit references")
        if len(meta) != stream.num_sequences:
            raise ValueError("metadata length must equal the cycle length K")
        id_mask = meta.id_like_mask()[diffs.sequence_index - 1]
        x_mask = meta.x_like_mask()[diffs.sequence_index - 1]
        if not id_mask.any() or not x_mask.any():
            raise InsufficientDataError("dprime calibration needs identity- and flip-tagged shots")
        ref_id = complex(diffs.folded[id_mask].mean())
        ref_x = complex(diffs.folded[x_mask].mean())
    span = ref_x - ref_id
    length = abs(span)
    if length == 0.0:
        raise ValueError("degenerate calibration: folded references coincide")
    unit = span / length

    coord = np.real(diffs.folded * np.conj(unit))
    K = stream.num_sequences
    sq_sums = np.zeros(K, dtype=np.float64)
    sums = np.zeros(K, dtype=np.float64)
    np.add.at(sums, diffs.sequence_index - 1, coord)
    np.add.at(sq_sums, diffs.sequence_index - 1, coord**2)
    with np.errstate(invalid="ignore", divide="ignore"):
        mean_c = np.where(counts > 0, sums / np.maximum(counts, 1), np.nan)
        var_c = np.maximum(sq_sums / np.maximum(counts, 1) - mean_c**2, 0.0)
        se = np.where(counts > 0, np.sqrt(var_c / np.maximum(counts, 1)) / length, np.nan)

    ref_coord = np.real(np.asarray([ref_id], dtype=np.complex128) * np.conj(unit))[0]
    values = (mean_c - ref_coord) / length
    clipped = np.clip(values, 0.0, 1.0)
    ok = np.isfinite(values)
    clamped = np.zeros(K, dtype=bool)
    clamped[ok] = clipped[ok] != values[ok]
    return SignalSeries(
        values=np.where(ok, clipped, np.nan),
        counts=counts,
        stderr=se,
        clamped=clamped,
    )
