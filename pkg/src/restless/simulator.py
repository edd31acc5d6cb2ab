"""Markov-chain simulator for single-shot readout streams.

Reset-free mode: the qubit is never reset, so the post-measurement state of
shot ``j - 1`` is the initial state of shot ``j``.  Per shot the chain

1. lets an excited state decay with probability ``1 - exp(-t_idle / T1)``
   during the idle window before the sequence is played (``t_idle = 1/R -
   t_seq - t_meas``, measured in the previous trigger period),
2. flips the state with the sequence's flip probability ``eta_k``,
3. records the post-gate state as the measurement outcome (the truth), and
4. emits an IQ point from the matching cluster, or from the opposite cluster
   with the assignment-error probability.

Standard mode: the qubit is actively reset after each shot, leaving only a
residual excitation that survives reset with probability
``exp(-(1/R - t_meas) / T1)``.

The module also provides analytic per-shot excited-state population traces.
``excited_population_trace`` implements the phenomenological model used for
fitting (slope/offset parameters ``a`` and ``b`` and a full-period decay
factor ``exp(-1/(R T1))``), while ``expected_initial_ground_share`` predicts
the simulator's own chain exactly, which is what empirical post-selection
weights should be compared against.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .core import (
    GateSpec,
    IQPoint,
    MODE_RESTLESS,
    MODE_STANDARD,
    SequenceMeta,
    ShotStream,
)


@dataclass(frozen=True)
class SimConfig:
    """Physical parameters of a simulated acquisition.

    Times are seconds, the repetition rate is Hz.  ``t_seq`` may be a scalar
    applied to every sequence or a per-sequence array.  The assignment error
    is the probability that a shot's IQ point is emitted from the wrong
    cluster.
    """

    t1: float
    repetition_rate: float
    t_meas: float = 2.5e-6
    t_seq: float | tuple = 0.0
    assignment_error: float = 0.0
    centroid_ground: IQPoint = field(default_factory=lambda: IQPoint(0.0, 0.0))
    centroid_excited: IQPoint = field(default_factory=lambda: IQPoint(1.0, 1.0))
    iq_sigma: float = 0.2
    seed: int = 0

    def __post_init__(self) -> None:
        if not (self.t1 > 0 and math.isfinite(self.t1)):
            raise ValueError(f"T1 must be positive, got {self.t1}")
        if not (self.repetition_rate > 0 and math.isfinite(self.repetition_rate)):
            raise ValueError(f"repetition rate must be positive, got {self.repetition_rate}")
        if self.t_meas < 0:
            raise ValueError("measurement time must be >= 0")
        if not 0.0 <= self.assignment_error < 0.5:
            raise ValueError(f"assignment error must lie in [0, 0.5), got {self.assignment_error}")
        if not (self.iq_sigma > 0 and math.isfinite(self.iq_sigma)):
            raise ValueError(f"IQ cluster width must be positive, got {self.iq_sigma}")
        if isinstance(self.centroid_ground, (tuple, list)):
            object.__setattr__(self, "centroid_ground", IQPoint(*self.centroid_ground))
        if isinstance(self.centroid_excited, (tuple, list)):
            object.__setattr__(self, "centroid_excited", IQPoint(*self.centroid_excited))
        if isinstance(self.t_seq, (list, np.ndarray)):
            object.__setattr__(self, "t_seq", tuple(float(t) for t in self.t_seq))

    def sequence_durations(self, num_sequences: int) -> np.ndarray:
        if isinstance(self.t_seq, tuple):
            if len(self.t_seq) != num_sequences:
                raise ValueError(
                    f"t_seq has {len(self.t_seq)} entries but the cycle has {num_sequences} sequences"
                )
            out = np.asarray(self.t_seq, dtype=np.float64)
        else:
            out = np.full(num_sequences, float(self.t_seq))
        if np.any(out < 0):
            raise ValueError("sequence durations must be >= 0")
        return out

    def validate_timing(self, num_sequences: int) -> np.ndarray:
        """Check that every sequence plus readout fits in a trigger period.

        Returns the idle windows ``1/R - t_seq_k - t_meas``.
        """
        t_seq = self.sequence_durations(num_sequences)
        period = 1.0 / self.repetition_rate
        idle = period - t_seq - self.t_meas
        if np.any(idle < 0):
            worst = int(np.argmin(idle)) + 1
            raise ValueError(
                f"sequence {worst} plus readout ({t_seq[worst - 1] + self.t_meas:.3e} s) "
                f"does not fit in the {period:.3e} s trigger period"
            )
        return idle

    def to_dict(self) -> dict:
        return {
            "t1": self.t1,
            "repetition_rate": self.repetition_rate,
            "t_meas": self.t_meas,
            "t_seq": list(self.t_seq) if isinstance(self.t_seq, tuple) else self.t_seq,
            "assignment_error": self.assignment_error,
            "centroid_ground": [self.centroid_ground.i, self.centroid_ground.q],
            "centroid_excited": [self.centroid_excited.i, self.centroid_excited.q],
            "iq_sigma": self.iq_sigma,
            "seed": self.seed,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "SimConfig":
        known = {
            "t1",
            "repetition_rate",
            "t_meas",
            "t_seq",
            "assignment_error",
            "centroid_ground",
            "centroid_excited",
            "iq_sigma",
            "seed",
        }
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown simulator config keys: {sorted(unknown)}")
        kwargs = dict(data)
        for key in ("centroid_ground", "centroid_excited"):
            if key in kwargs:
                kwargs[key] = IQPoint(*kwargs[key])
        return cls(**kwargs)

    @classmethod
    def from_file(cls, path) -> "SimConfig":
        data = load_config_file(path)
        return cls.from_dict(data.get("sim", data))


def load_config_file(path) -> dict:
    """Load a JSON or TOML config file, dispatching on the extension."""
    path = Path(path)
    if path.suffix.lower() == ".toml":
        try:
            import tomllib  # Python >= 3.11
        except ModuleNotFoundError:
            import tomli as tomllib
        with open(path, "rb") as fh:
            return tomllib.load(fh)
    with open(path, "r") as fh:
        return json.load(fh)


@dataclass(frozen=True, eq=False)
class TruthRecord:
    """Ground-truth post-measurement states of a simulated stream."""

    states: np.ndarray

    def __post_init__(self) -> None:
        states = np.ascontiguousarray(self.states, dtype=np.uint8).reshape(-1)
        if states.max(initial=0) > 1:
            raise ValueError("states must be 0 or 1")
        states.setflags(write=False)
        object.__setattr__(self, "states", states)

    def __len__(self) -> int:
        return len(self.states)


def _chain_states(reset: np.ndarray, flip: np.ndarray) -> np.ndarray:
    """Evaluate ``s_p = (s_(p-1) and not reset_p) xor flip_p`` from ``s = 0``.

    Between reset events the state is a running XOR of the flip draws, so the
    whole chain reduces to cumulative sums anchored at the last reset.
    """
    x = np.cumsum(flip, dtype=np.int64)
    y = x - flip  # exclusive prefix sum
    idx = np.arange(len(flip), dtype=np.int64)
    last_reset = np.maximum.accumulate(np.where(reset, idx, -1))
    anchor = np.where(last_reset >= 0, y[np.maximum(last_reset, 0)], 0)
    return ((x - anchor) % 2).astype(np.uint8)


def _emit(cfg: SimConfig, states: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    emitted = states ^ (rng.random(len(states)) < cfg.assignment_error)
    centers = np.array(
        [cfg.centroid_ground.as_complex(), cfg.centroid_excited.as_complex()],
        dtype=np.complex128,
    )
    noise = rng.standard_normal((len(states), 2))
    return centers[emitted] + cfg.iq_sigma * (noise[:, 0] + 1j * noise[:, 1])


def _simulate(cfg: SimConfig, meta: SequenceMeta, num_repetitions: int, mode: str) -> tuple[ShotStream, TruthRecord]:
    if num_repetitions < 1:
        raise ValueError("need at least one repetition")
    K = len(meta)
    idle = cfg.validate_timing(K)
    etas = meta.flip_probabilities()
    n = K * num_repetitions
    rng = np.random.default_rng(cfg.seed)

    # fixed draw order: reset draws, flip draws, then emission noise
    u_reset = rng.random(n)
    u_flip = rng.random(n)
    slot = np.arange(n, dtype=np.int64) % K

    if mode == MODE_RESTLESS:
        # decay in the idle window of the previous trigger period
        prev_slot = np.roll(slot, 1)
        p_decay = 1.0 - np.exp(-idle[prev_slot] / cfg.t1)
        p_decay[0] = 0.0  # first shot starts from a fresh ground state
        reset = u_reset < p_decay
    elif mode == MODE_STANDARD:
        # active reset; excitation survives it only with the residual probability
        p_carry = math.exp(-((1.0 / cfg.repetition_rate) - cfg.t_meas) / cfg.t1)
        reset = u_reset >= p_carry
        reset[0] = True
    else:
        raise ValueError(f"unknown mode {mode!r}")

    flip = u_flip < etas[slot]
    states = _chain_states(reset, flip)
    iq = _emit(cfg, states, rng)
    stream = ShotStream(
        iq=iq,
        num_sequences=K,
        num_repetitions=num_repetitions,
        repetition_rate=cfg.repetition_rate,
        mode=mode,
    )
    return stream, TruthRecord(states=states)


def simulate_restless(cfg: SimConfig, meta: SequenceMeta, num_repetitions: int) -> tuple[ShotStream, TruthRecord]:
    """Simulate a reset-free acquisition.  Bit-identical per (config, meta)."""
    return _simulate(cfg, meta, num_repetitions, MODE_RESTLESS)


def simulate_standard(cfg: SimConfig, meta: SequenceMeta, num_repetitions: int) -> tuple[ShotStream, TruthRecord]:
    """Simulate an acquisition with active reset between shots."""
    return _simulate(cfg, meta, num_repetitions, MODE_STANDARD)


# -- analytic traces ---------------------------------------------------------


def _affine_cycle_trace(c: np.ndarray, d: np.ndarray, num_repetitions: int):
    """Evaluate ``p_j = c_k p_(j-1) + d_k`` over cycles from ``p_0 = 0``.

    The per-cycle map is itself affine, so boundary values follow a geometric
    series and the full trace is an outer product.  Returns ``(trace,
    boundary)`` where ``trace`` has shape ``(num_repetitions, K)``.
    """
    K = len(c)
    prefix_mul = np.empty(K)
    prefix_add = np.empty(K)
    mul, add = 1.0, 0.0
    for k in range(K):
        mul = c[k] * mul
        add = c[k] * add + d[k]
        prefix_mul[k] = mul
        prefix_add[k] = add
    cycle_mul, cycle_add = mul, add

    i = np.arange(num_repetitions)
    if abs(1.0 - cycle_mul) < 1e-12:
        boundary = cycle_add * i
    else:
        boundary = cycle_add * (1.0 - np.power(cycle_mul, i)) / (1.0 - cycle_mul)
    trace = boundary[:, None] * prefix_mul[None, :] + prefix_add[None, :]
    return trace, boundary


def _model_coefficients(etas: np.ndarray, repetition_rate: float, t1: float, a: float, b: float):
    decay = math.exp(-1.0 / (repetition_rate * t1))
    u = a * decay
    c = u * (1.0 - 2.0 * etas)
    d = u * etas + b
    return c, d, u


def _validate_model_params(repetition_rate: float, t1: float, a: float, b: float) -> None:
    if not (t1 > 0 and math.isfinite(t1)):
        raise ValueError(f"T1 must be positive, got {t1}")
    if not 0.0 < a <= 1.0:
        raise ValueError(f"slope parameter must lie in (0, 1], got {a}")
    if b < 0.0:
        raise ValueError(f"offset parameter must be >= 0, got {b}")
    decay = math.exp(-1.0 / (repetition_rate * t1))
    if a * decay + b > 1.0 + 1e-12:
        raise ValueError(
            f"parameters allow populations outside [0, 1]: a*decay + b = {a * decay + b:.6f} > 1"
        )


def excited_population_trace(
    meta: SequenceMeta,
    num_repetitions: int,
    repetition_rate: float,
    t1: float,
    a: float = 1.0,
    b: float = 0.0,
) -> np.ndarray:
    """Per-shot excited-state population of the phenomenological model.

    Iterates ``p_j = a [p_(j-1) (1 - 2 eta_k) + eta_k] exp(-1/(R T1)) + b``
    from ``p_0 = 0`` and returns all ``K * N_s`` values.  The slope ``a`` and
    offset ``b`` absorb state-preparation-and-measurement imperfections not
    modelled explicitly.
    """
    _validate_model_params(repetition_rate, t1, a, b)
    etas = meta.flip_probabilities()
    c, d, _ = _model_coefficients(etas, repetition_rate, t1, a, b)
    trace, _ = _affine_cycle_trace(c, d, num_repetitions)
    return trace.reshape(-1)


def expected_pa(
    meta: SequenceMeta,
    num_repetitions: int,
    repetition_rate: float,
    t1: float,
    a: float = 1.0,
    b: float = 0.0,
) -> np.ndarray:
    """Model prediction of the per-sequence ground-start share.

    ``1 - mean_i p_(k + i K)`` for each sequence slot ``k``, i.e. the model
    analogue of the post-selection weight ``|M_A|_k / N_s`` when label ``A``
    is the ground state.
    """
    _validate_model_params(repetition_rate, t1, a, b)
    etas = meta.flip_probabilities()
    c, d, _ = _model_coefficients(etas, repetition_rate, t1, a, b)
    trace, _ = _affine_cycle_trace(c, d, num_repetitions)
    return 1.0 - trace.mean(axis=0)


def restless_steady_state(eta: float, repetition_rate: float, t1: float, a: float = 1.0, b: float = 0.0) -> float:
    """Fixed point of the model recursion for a constant flip probability."""
    _validate_model_params(repetition_rate, t1, a, b)
    decay = math.exp(-1.0 / (repetition_rate * t1))
    denom = 1.0 - a * decay * (1.0 - 2.0 * eta)
    return (a * decay * eta + b) / denom


def expected_initial_ground_share(cfg: SimConfig, meta: SequenceMeta, num_repetitions: int) -> np.ndarray:
    """Exact chain prediction of the per-sequence predecessor-ground share.

    Propagates the simulator's own dynamics (idle-window decay, then flip)
    and the emission assignment error, and averages the probability that a
    shot's predecessor is labelled as ground over the available repetitions.
    Matches the empirical ``|M_A|_k / (|M_A|_k + |M_B|_k)`` when the
    discriminator is oriented with ground below threshold.
    """
    K = len(meta)
    idle = cfg.validate_timing(K)
    etas = meta.flip_probabilities()
    # decay factor entering slot k comes from the idle window after slot k-1
    survive = np.exp(-idle[np.roll(np.arange(K), 1)] / cfg.t1)
    c = survive * (1.0 - 2.0 * etas)
    d = etas.copy()
    trace, _ = _affine_cycle_trace(c, d, num_repetitions)
    excited = trace.reshape(-1)
    eps = cfg.assignment_error
    label_b = excited * (1.0 - eps) + (1.0 - excited) * eps
    ground_prob = 1.0 - label_b
    n = K * num_repetitions
    slot = np.arange(1, n, dtype=np.int64) % K
    sums = np.zeros(K)
    counts = np.zeros(K, dtype=np.int64)
    np.add.at(sums, slot, ground_prob[:-1])
    np.add.at(counts, slot, 1)
    return sums / counts


# -- randomized-benchmarking data --------------------------------------------


def _rb_alpha(epc: float, dimension: int) -> float:
    if dimension not in (2, 4):
        raise ValueError(f"dimension must be 2 or 4, got {dimension}")
    scale = dimension / (dimension - 1.0)
    alpha = 1.0 - epc * scale
    if not 0.0 < alpha <= 1.0:
        raise ValueError(f"error per Clifford {epc} out of range for dimension {dimension}")
    return alpha


def rb_decay_curve(lengths: np.ndarray, epc: float, dimension: int = 2) -> np.ndarray:
    """Ideal sequence-survival decay ``A + (B - A) alpha^(N/2)``.

    ``A = 1/dimension`` is the fully-mixed asymptote, ``B = 1`` the
    zero-length survival, and ``alpha`` maps to the error per Clifford as
    ``epc = (1 - alpha) (dimension - 1) / dimension``.
    """
    alpha = _rb_alpha(epc, dimension)
    asymptote = 1.0 / dimension
    return asymptote + (1.0 - asymptote) * np.power(alpha, np.asarray(lengths, dtype=np.float64) / 2.0)


@dataclass(frozen=True, eq=False)
class RBCurves:
    """Per-sequence survival curves of a randomized-benchmarking run."""

    lengths: np.ndarray
    survival: np.ndarray  # shape (n_sequences, n_lengths)
    shots_per_point: int
    dimension: int = 2

    def __post_init__(self) -> None:
        lengths = np.ascontiguousarray(self.lengths, dtype=np.float64).reshape(-1)
        survival = np.ascontiguousarray(self.survival, dtype=np.float64)
        if survival.ndim != 2 or survival.shape[1] != len(lengths):
            raise ValueError("survival must have shape (n_sequences, n_lengths)")
        lengths.setflags(write=False)
        survival.setflags(write=False)
        object.__setattr__(self, "lengths", lengths)
        object.__setattr__(self, "survival", survival)

    @property
    def n_sequences(self) -> int:
        return self.survival.shape[0]

    def mean_curve(self) -> tuple[np.ndarray, np.ndarray]:
        """Across-sequence means and standard errors of the mean."""
        means = self.survival.mean(axis=0)
        sem = self.survival.std(axis=0, ddof=1) / math.sqrt(self.n_sequences)
        return means, sem


def simulate_rb_curves(
    lengths: Sequence[int],
    n_sequences: int,
    shots_per_point: int,
    epc: float,
    dimension: int = 2,
    seed: int = 0,
    decay_spread: float = 0.0,
) -> RBCurves:
    """Survival curves with binomial shot noise and sequence-to-sequence scatter.

    Each sequence realisation deviates from the ensemble decay by a linearised
    offset of its decay parameter (standard deviation ``decay_spread``), which
    keeps the ensemble mean curve unbiased while reproducing the spread seen
    across random-sequence realisations.  Two-qubit data (``dimension = 4``)
    is generated at this signal level only.
    """
    lengths_arr = np.asarray(lengths, dtype=np.float64)
    if len(lengths_arr) < 3:
        raise ValueError("need at least three sequence lengths")
    if n_sequences < 2 or shots_per_point < 1:
        raise ValueError("need at least two sequences and one shot per point")
    alpha = _rb_alpha(epc, dimension)
    asymptote = 1.0 / dimension
    base = asymptote + (1.0 - asymptote) * np.power(alpha, lengths_arr / 2.0)
    sensitivity = (1.0 - asymptote) * (lengths_arr / 2.0) * np.power(alpha, lengths_arr / 2.0 - 1.0)
    rng = np.random.default_rng(seed)
    offsets = rng.standard_normal(n_sequences) * decay_spread
    probs = np.clip(base[None, :] + offsets[:, None] * sensitivity[None, :], 0.0, 1.0)
    survival = rng.binomial(shots_per_point, probs) / shots_per_point
    return RBCurves(
        lengths=lengths_arr,
        survival=survival,
        shots_per_point=shots_per_point,
        dimension=dimension,
    )


def rb_sequence_meta(
    lengths: Sequence[int],
    n_sequences: int,
    epc: float,
    seed: int = 0,
    decay_spread: float = 0.0,
) -> SequenceMeta:
    """Cycle metadata for a shot-level single-qubit benchmarking run.

    One slot per (length, realisation) pair, tagged with the realisation's
    flip probability ``(1 - alpha_r^(N/2)) / 2`` under the linearised
    per-realisation decay offset.
    """
    alpha = _rb_alpha(epc, 2)
    rng = np.random.default_rng(seed)
    gates = []
    for n_c in lengths:
        half = float(n_c) / 2.0
        base = np.power(alpha, half)
        sens = half * np.power(alpha, half - 1.0)
        for r in range(n_sequences):
            shifted = base + float(rng.standard_normal()) * decay_spread * sens
            eta = float(np.clip(0.5 * (1.0 - shifted), 0.0, 1.0))
            gates.append(
                GateSpec(
                    "clifford",
                    flip_probability=eta,
                    n_cliffords=int(n_c),
                    realization=r,
                )
            )
    return SequenceMeta(tuple(gates))
