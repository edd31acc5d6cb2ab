"""Core data model for reset-free single-shot measurement streams.

A run cycles through K pulse sequences and repeats the cycle N_s times at a
fixed trigger rate R.  Shots are indexed three ways:

* ``k`` in ``1..K``     -- which sequence was played (1-based),
* ``i`` in ``0..N_s-1`` -- which repetition of the cycle,
* ``j = k + i*K``       -- global acquisition order (1-based).

Each shot yields one IQ-plane point.  Streams store the points as a single
complex array (I on the real axis, Q on the imaginary axis), which keeps the
bulk operations (differences, projections, averages) one-liners.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterator, Sequence

import numpy as np

MODE_STANDARD = "standard"
MODE_RESTLESS = "restless"
_MODES = (MODE_STANDARD, MODE_RESTLESS)

GATE_ID = "id"
GATE_X = "x"
GATE_RABI = "rabi"
GATE_CLIFFORD = "clifford"
GATE_CAL_ID = "cal_id"
GATE_CAL_X = "cal_x"
_GATES = (GATE_ID, GATE_X, GATE_RABI, GATE_CLIFFORD, GATE_CAL_ID, GATE_CAL_X)

# Gate tags whose ideal operation is the identity / a bit flip.  Calibration
# points are deliberately listed with their parent gate.
ID_LIKE_GATES = (GATE_ID, GATE_CAL_ID)
X_LIKE_GATES = (GATE_X, GATE_CAL_X)


class StreamValidationError(ValueError):
    """A shot stream violated a structural invariant."""


class InsufficientDataError(ValueError):
    """An operation received too little data to produce a meaningful result."""


@dataclass(frozen=True)
class IQPoint:
    """A single point in the IQ plane.

    Parameters
    ----------
    i : float
        In-phase component.
    q : float
        Quadrature component.
    """

    i: float
    q: float

    def __post_init__(self) -> None:
        if not (math.isfinite(self.i) and math.isfinite(self.q)):
            raise ValueError(f"IQ components must be finite, got ({self.i}, {self.q})")

    @classmethod
    def from_complex(cls, z: complex) -> "IQPoint":
        return cls(float(np.real(z)), float(np.imag(z)))

    def as_complex(self) -> complex:
        return complex(self.i, self.q)

    def as_tuple(self) -> tuple[float, float]:
        return (self.i, self.q)


def global_index(k, i, num_sequences: int):
    """Map (sequence, repetition) to the global shot index ``j = k + i*K``.

    Accepts scalars or arrays.  ``k`` is 1-based, ``i`` is 0-based and the
    result is 1-based, matching acquisition order.
    """
    if num_sequences < 1:
        raise ValueError(f"num_sequences must be >= 1, got {num_sequences}")
    k_arr = np.asarray(k)
    i_arr = np.asarray(i)
    if np.any(k_arr < 1) or np.any(k_arr > num_sequences):
        raise ValueError(f"sequence index out of range 1..{num_sequences}")
    if np.any(i_arr < 0):
        raise ValueError("repetition index must be >= 0")
    out = k_arr + i_arr * num_sequences
    if out.ndim == 0:
        return int(out)
    return out


def split_index(j, num_sequences: int):
    """Inverse of :func:`global_index`: map ``j`` to ``(k, i)``."""
    j_arr = np.asarray(j)
    if np.any(j_arr < 1):
        raise ValueError("global index must be >= 1")
    k = (j_arr - 1) % num_sequences + 1
    i = (j_arr - 1) // num_sequences
    if j_arr.ndim == 0:
        return int(k), int(i)
    return k, i


@dataclass(frozen=True, eq=False)
class ShotStream:
    """An ordered stream of single-shot IQ points.

    Shots are stored in acquisition order, so the global index of the shot at
    array position ``p`` is ``j = p + 1``.  A complete stream holds exactly
    ``K * N_s`` shots; a shorter stream is a truncated acquisition and must be
    flagged as such.  Per-sequence shot counts of a truncated stream differ by
    at most one because truncation can only remove a suffix.

    Attributes
    ----------
    iq : numpy.ndarray
        Complex IQ points, shape ``(n,)``.
    num_sequences : int
        Cycle length K.
    num_repetitions : int
        Number of cycle repetitions N_s of the full acquisition.
    repetition_rate : float
        Trigger rate R in Hz.
    mode : str
        ``"standard"`` (reset between shots) or ``"restless"`` (no reset).
    truncated : bool
        True when the acquisition stopped before ``K * N_s`` shots.
    """

    iq: np.ndarray
    num_sequences: int
    num_repetitions: int
    repetition_rate: float
    mode: str
    truncated: bool = False

    def __post_init__(self) -> None:
        iq = np.ascontiguousarray(self.iq, dtype=np.complex128).reshape(-1)
        if self.num_sequences < 1 or self.num_repetitions < 1:
            raise StreamValidationError("K and N_s must both be >= 1")
        if not (self.repetition_rate > 0 and math.isfinite(self.repetition_rate)):
            raise StreamValidationError(f"repetition rate must be positive, got {self.repetition_rate}")
        if self.mode not in _MODES:
            raise StreamValidationError(f"mode must be one of {_MODES}, got {self.mode!r}")
        expected = self.num_sequences * self.num_repetitions
        if len(iq) == 0:
            raise StreamValidationError("empty stream")
        if len(iq) > expected:
            raise StreamValidationError(f"stream holds {len(iq)} shots but K*N_s = {expected}")
        if len(iq) < expected and not self.truncated:
            raise StreamValidationError(
                f"stream holds {len(iq)} of {expected} shots and is not flagged truncated"
            )
        if len(iq) == expected and self.truncated:
            raise StreamValidationError("complete stream must not be flagged truncated")
        if not np.all(np.isfinite(iq.view(np.float64))):
            raise StreamValidationError("IQ values must be finite")
        iq.setflags(write=False)
        object.__setattr__(self, "iq", iq)

    def __len__(self) -> int:
        return len(self.iq)

    @property
    def j(self) -> np.ndarray:
        """Global shot indices, ``1..n``."""
        return np.arange(1, len(self.iq) + 1, dtype=np.int64)

    @property
    def k(self) -> np.ndarray:
        """Per-shot sequence indices (1-based)."""
        return (np.arange(len(self.iq), dtype=np.int64) % self.num_sequences) + 1

    @property
    def i(self) -> np.ndarray:
        """Per-shot repetition indices (0-based)."""
        return np.arange(len(self.iq), dtype=np.int64) // self.num_sequences

    def counts_per_sequence(self) -> np.ndarray:
        """Number of acquired shots for each sequence, shape ``(K,)``."""
        n, K = len(self.iq), self.num_sequences
        full, rem = divmod(n, K)
        out = np.full(K, full, dtype=np.int64)
        out[:rem] += 1
        return out

    def shots_for_sequence(self, k: int) -> np.ndarray:
        """All IQ points acquired for sequence ``k`` (1-based), in order."""
        if not 1 <= k <= self.num_sequences:
            raise ValueError(f"sequence index {k} out of range 1..{self.num_sequences}")
        return self.iq[k - 1 :: self.num_sequences]

    def iter_shots(self) -> Iterator[tuple[int, int, int, IQPoint]]:
        """Yield ``(j, k, i, point)`` tuples.  Convenience for small streams."""
        K = self.num_sequences
        for p, z in enumerate(self.iq):
            j = p + 1
            yield j, (p % K) + 1, p // K, IQPoint.from_complex(z)


def average_iq(stream: ShotStream, k: int) -> IQPoint:
    """Average IQ point of all shots belonging to sequence ``k``.

    Raises
    ------
    InsufficientDataError
        If the (truncated) stream holds no shot for this sequence.
    """
    shots = stream.shots_for_sequence(k)
    if len(shots) == 0:
        raise InsufficientDataError(f"no shots acquired for sequence k={k}")
    return IQPoint.from_complex(shots.mean())


def average_iq_all(stream: ShotStream) -> np.ndarray:
    """Per-sequence average IQ points as a complex array of shape ``(K,)``.

    Sequences without any acquired shot (possible only for truncated streams)
    are returned as NaN, never silently dropped.
    """
    n, K = len(stream), stream.num_sequences
    sums = np.zeros(K, dtype=np.complex128)
    np.add.at(sums, np.arange(n) % K, stream.iq)
    counts = stream.counts_per_sequence()
    out = np.full(K, np.nan + 0j, dtype=np.complex128)
    nz = counts > 0
    out[nz] = sums[nz] / counts[nz]
    return out


@dataclass(frozen=True)
class SignalAxis:
    """An oriented line in the IQ plane onto which shots are projected.

    ``theta`` is the axis angle in radians, normalised to ``[0, pi)`` since an
    axis has no preferred direction.  ``origin`` anchors the projection and
    ``scale_ref`` optionally stores a (ground-like, excited-like) reference
    pair used for scaling projected signals.
    """

    theta: float
    origin: IQPoint = field(default_factory=lambda: IQPoint(0.0, 0.0))
    scale_ref: tuple[IQPoint, IQPoint] | None = None

    def __post_init__(self) -> None:
        if not math.isfinite(self.theta):
            raise ValueError("axis angle must be finite")
        if not 0.0 <= self.theta < math.pi:
            raise ValueError(f"axis angle must lie in [0, pi), got {self.theta}")

    @property
    def unit(self) -> complex:
        return complex(math.cos(self.theta), math.sin(self.theta))

    def project(self, points) -> np.ndarray:
        """Project IQ points onto the axis; returns real coordinates."""
        z = np.asarray(points, dtype=np.complex128)
        return np.real((z - self.origin.as_complex()) * np.exp(-1j * self.theta))


def wrap_axis_angle(theta: float) -> float:
    """Fold an arbitrary angle into the axis range ``[0, pi)``."""
    out = math.fmod(theta, math.pi)
    if out < 0:
        out += math.pi
    if out >= math.pi:  # fmod rounding at the boundary
        out = 0.0
    return out


@dataclass(frozen=True)
class GateSpec:
    """Descriptor of the gate sequence played at one cycle slot.

    ``flip_probability`` is the probability that the ideal-plus-noisy gate
    flips the measurement-basis state; for a rotation by angle phi it equals
    ``sin(phi / 2) ** 2``.  It is required for simulation and for analytic
    population traces, optional for descriptive metadata of measured data.
    """

    name: str
    flip_probability: float | None = None
    amplitude: float | None = None
    n_cliffords: int | None = None
    realization: int | None = None

    def __post_init__(self) -> None:
        if self.name not in _GATES:
            raise ValueError(f"unknown gate tag {self.name!r}, expected one of {_GATES}")
        if self.flip_probability is not None and not 0.0 <= self.flip_probability <= 1.0:
            raise ValueError(f"flip probability must be in [0, 1], got {self.flip_probability}")

    @property
    def is_id_like(self) -> bool:
        return self.name in ID_LIKE_GATES

    @property
    def is_x_like(self) -> bool:
        return self.name in X_LIKE_GATES


@dataclass(frozen=True)
class SequenceMeta:
    """Per-sequence gate metadata for one experiment cycle (slots 1..K)."""

    gates: tuple[GateSpec, ...]

    def __post_init__(self) -> None:
        if len(self.gates) == 0:
            raise ValueError("SequenceMeta needs at least one gate")
        object.__setattr__(self, "gates", tuple(self.gates))

    def __len__(self) -> int:
        return len(self.gates)

    def flip_probabilities(self) -> np.ndarray:
        """Flip probabilities eta_k as an array, erroring on missing entries."""
        etas = np.empty(len(self.gates))
        for idx, g in enumerate(self.gates):
            if g.flip_probability is None:
                raise ValueError(f"gate at slot {idx + 1} has no flip probability")
            etas[idx] = g.flip_probability
        return etas

    def mask(self, *names: str) -> np.ndarray:
        """Boolean mask over slots whose gate tag is one of ``names``."""
        return np.array([g.name in names for g in self.gates], dtype=bool)

    def id_like_mask(self) -> np.ndarray:
        return self.mask(*ID_LIKE_GATES)

    def x_like_mask(self) -> np.ndarray:
        return self.mask(*X_LIKE_GATES)

    # -- builders -----------------------------------------------------------

    @classmethod
    def id_x_blocks(cls, n_id: int, n_x: int, eta_x: float = 0.99) -> "SequenceMeta":
        """A block of identity slots followed by a block of X slots."""
        gates = [GateSpec(GATE_ID, flip_probability=0.0) for _ in range(n_id)]
        gates += [GateSpec(GATE_X, flip_probability=eta_x) for _ in range(n_x)]
        return cls(tuple(gates))

    @classmethod
    def rabi_sweep(
        cls,
        amplitudes: Sequence[float],
        rad_per_unit: float,
        n_cal_id: int = 3,
        n_cal_x: int = 3,
        eta_x: float = 1.0,
    ) -> "SequenceMeta":
        """An amplitude sweep followed by identity and flip calibration slots.

        The rotation angle at amplitude ``a`` is ``rad_per_unit * a``, so the
        flip probability is ``sin(rad_per_unit * a / 2) ** 2``.
        """
        gates = [
            GateSpec(
                GATE_RABI,
                flip_probability=math.sin(rad_per_unit * a / 2.0) ** 2,
                amplitude=float(a),
            )
            for a in amplitudes
        ]
        gates += [GateSpec(GATE_CAL_ID, flip_probability=0.0) for _ in range(n_cal_id)]
        gates += [GateSpec(GATE_CAL_X, flip_probability=eta_x) for _ in range(n_cal_x)]
        return cls(tuple(gates))
