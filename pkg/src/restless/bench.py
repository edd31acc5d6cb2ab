"""Runtime-scaling benchmarks for the analysis pipeline and two baselines.

Baselines: a two-cluster Lloyd iteration (what an unsupervised discriminator
would cost) and a deliberately wasteful full-matrix SVD for the axis (the
cautionary upper bound; it materialises an n-by-n orthogonal factor, so it is
guarded against large inputs).
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .axis import restless_axis
from .core import MODE_RESTLESS, ShotStream, wrap_axis_angle
from .discriminate import discriminator_for_stream, label_shots
from .signals import restless_signal

DEFAULT_SIZES = (1000, 3000, 10000, 30000, 100000)
DEFAULT_SVD_SIZES = (1000, 2000, 4000, 8000)
_SVD_HARD_LIMIT = 100_000
_BENCH_CYCLE = 20  # sequences per cycle for the synthetic stream


def gen_clusters(
    n_points: int,
    centers=((-0.5, -0.5), (0.5, 0.5)),
    sigma: float = 0.2,
    seed: int = 0,
) -> tuple[np.ndarray, np.ndarray]:
    """Two isotropic Gaussian IQ clusters with an exactly even split.

    Returns complex points and their true cluster indices, randomly
    interleaved so the sequence also serves as a synthetic shot stream.
    """
    if n_points < 2 or n_points % 2:
        raise ValueError("need an even number of points >= 2")
    if sigma <= 0:
        raise ValueError("cluster width must be positive")
    rng = np.random.default_rng(seed)
    labels = rng.permutation(np.repeat(np.arange(2, dtype=np.uint8), n_points // 2))
    c = np.array([complex(*centers[0]), complex(*centers[1])])
    noise = rng.standard_normal((n_points, 2))
    points = c[labels] + sigma * (noise[:, 0] + 1j * noise[:, 1])
    return points, labels


@dataclass(frozen=True, eq=False)
class KMeansResult:
    labels: np.ndarray
    centroids: np.ndarray
    iterations: int
    inertia: float
    inertia_history: tuple


def kmeans2(points, seed: int = 0, max_iter: int = 100) -> KMeansResult:
    """Two-cluster Lloyd iteration on complex points.

    Initial centroids are the farthest pair within a 64-point subsample;
    an emptied cluster is reseeded at the point farthest from the survivor.
    Deterministic for a given seed.
    """
    points = np.asarray(points, dtype=np.complex128).reshape(-1)
    n = len(points)
    if n < 2:
        raise ValueError("need at least two points")
    rng = np.random.default_rng(seed)
    sub = points[rng.choice(n, size=min(n, 64), replace=False)]
    dist = np.abs(sub[:, None] - sub[None, :])
    i0, i1 = np.unravel_index(int(np.argmax(dist)), dist.shape)
    centroids = np.array([sub[i0], sub[i1]])
    if centroids[0] == centroids[1]:
        raise ValueError("all sampled points coincide")

    assign = None
    history = []
    iterations = 0
    for iterations in range(1, max_iter + 1):
        dist = np.abs(points[:, None] - centroids)
        new_assign = (dist[:, 1] < dist[:, 0]).astype(np.uint8)
        if new_assign.all() or not new_assign.any():
            lone = centroids[int(new_assign[0])]
            far = points[int(np.argmax(np.abs(points - lone)))]
            centroids = np.array([lone, far]) if new_assign[0] == 0 else np.array([far, lone])
            dist = np.abs(points[:, None] - centroids)
            new_assign = (dist[:, 1] < dist[:, 0]).astype(np.uint8)
        history.append(float(np.sum(dist.min(axis=1) ** 2)))
        if assign is not None and np.array_equal(new_assign, assign):
            break
        assign = new_assign
        centroids = np.array(
            [points[assign == 0].mean(), points[assign == 1].mean()]
        )
    dist = np.abs(points[:, None] - centroids)
    return KMeansResult(
        labels=assign,
        centroids=centroids,
        iterations=iterations,
        inertia=float(np.sum(dist.min(axis=1) ** 2)),
        inertia_history=tuple(history),
    )


def full_svd_axis(points, force: bool = False) -> float:
    """Axis angle via a full-matrices SVD of the centred n-by-2 point matrix.

    Numerically equivalent to the closed-form principal axis but requests the
    complete n-by-n left factor, so memory grows quadratically.  Refuses more
    than 100000 points unless forced.
    """
    points = np.asarray(points, dtype=np.complex128).reshape(-1)
    n = len(points)
    if n > _SVD_HARD_LIMIT and not force:
        raise ValueError(
            f"{n} points would materialise a {n}x{n} matrix "
            f"({8 * n * n / 1e9:.1f} GB); pass force=True to insist"
        )
    centered = points - points.mean()
    mat = np.column_stack([centered.real, centered.imag])
    _, _, vt = np.linalg.svd(mat, full_matrices=True)
    v = vt[0]
    return wrap_axis_angle(math.atan2(v[1], v[0]))


# -- scaling harness -----------------------------------------------------------


def _bench_stream(points: np.ndarray) -> ShotStream:
    n = len(points)
    if n % _BENCH_CYCLE:
        raise ValueError(f"benchmark sizes must be multiples of {_BENCH_CYCLE}")
    return ShotStream(
        iq=points,
        num_sequences=_BENCH_CYCLE,
        num_repetitions=n // _BENCH_CYCLE,
        repetition_rate=1e5,
        mode=MODE_RESTLESS,
    )


def _run_restless(stream: ShotStream) -> None:
    # the core reset-free chain: difference/fold/average inside the axis
    # recovery, then threshold, label and per-sequence signal
    axis, _ = restless_axis(stream)
    disc = discriminator_for_stream(stream, axis)
    restless_signal(label_shots(stream, disc))


def _run_kmeans(points: np.ndarray) -> None:
    kmeans2(points, seed=1)


def _run_svd(points: np.ndarray) -> None:
    full_svd_axis(points)


# method name -> (input preparation, timed callable); preparation runs
# outside the timed region
_METHODS: dict[str, tuple[Callable, Callable]] = {
    "restless_analysis": (_bench_stream, _run_restless),
    "kmeans": (lambda points: points, _run_kmeans),
    "svd_full": (lambda points: points, _run_svd),
}


@dataclass(frozen=True)
class BenchRow:
    method: str
    n_points: int
    median_seconds: float
    times: tuple
    note: str = ""


@dataclass(frozen=True)
class BenchReport:
    """Timing rows plus fitted log-log scaling exponents per method."""

    rows: tuple
    exponents: dict
    repeats: int
    seed: int

    def exponent(self, method: str) -> float:
        return self.exponents[method][0]

    def to_dict(self) -> dict:
        return {
            "repeats": self.repeats,
            "seed": self.seed,
            "rows": [
                {
                    "method": r.method,
                    "n_points": r.n_points,
                    "median_seconds": r.median_seconds,
                    "times": list(r.times),
                    "note": r.note,
                }
                for r in self.rows
            ],
            "exponents": {
                m: {"exponent": a, "log_intercept": b} for m, (a, b) in self.exponents.items()
            },
        }


def run_scaling(
    methods: Sequence[str] = ("restless_analysis", "kmeans", "svd_full"),
    sizes: Optional[Sequence[int]] = None,
    svd_sizes: Optional[Sequence[int]] = None,
    repeats: int = 3,
    seed: int = 0,
) -> BenchReport:
    """Time each method over a ladder of sizes and fit ``ln t = a ln n + b``.

    Inputs are generated and prepared outside the timed region; one warm-up
    call per method is discarded and the repeats of one size run
    back-to-back, so every size is timed in its cache-warm steady state.
    The median of ``repeats`` runs per size enters the fit.
    Medians within 50 timer resolutions are annotated as unreliable.
    """
    if repeats < 1:
        raise ValueError("need at least one repeat")
    unknown = set(methods) - set(_METHODS)
    if unknown:
        raise ValueError(f"unknown benchmark methods: {sorted(unknown)}")
    resolution = time.get_clock_info("perf_counter").resolution
    rows = []
    exponents = {}
    for method in methods:
        ladder = tuple(svd_sizes or DEFAULT_SVD_SIZES) if method == "svd_full" else tuple(
            sizes or DEFAULT_SIZES
        )
        prep, fn = _METHODS[method]
        warm, _ = gen_clusters(ladder[0], seed=seed)
        fn(prep(warm))
        medians = []
        for n in ladder:
            arg = prep(gen_clusters(n, seed=seed)[0])
            # a discarded lap per size brings caches and allocator pages to
            # steady state before the timed repeats
            fn(arg)
            laps = []
            for _ in range(repeats):
                start = time.perf_counter()
                fn(arg)
                laps.append(time.perf_counter() - start)
            med = float(np.median(laps))
            note = "below timer resolution" if med < 50 * resolution else ""
            rows.append(
                BenchRow(
                    method=method,
                    n_points=n,
                    median_seconds=med,
                    times=tuple(laps),
                    note=note,
                )
            )
            medians.append(med)
        slope, intercept = np.polyfit(np.log(ladder), np.log(medians), 1)
        exponents[method] = (float(slope), float(intercept))
    return BenchReport(rows=tuple(rows), exponents=exponents, repeats=repeats, seed=seed)
