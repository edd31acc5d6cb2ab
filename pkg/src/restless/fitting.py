"""Weighted nonlinear least squares and the experiment-specific fits.

The fitter is a damped Gauss-Newton (Levenberg-Marquardt) loop: weights
multiply squared residuals, the damping factor shrinks after accepted steps
and grows after rejected ones, and the objective is non-increasing across
accepted iterations.  Box bounds are enforced by projecting trial steps.

On top of it sit the experiment fits: a cosine for amplitude calibration, an
exponential decay for randomized benchmarking with a bootstrap over sequence
subsets, and the reset-free population model with an analytic Jacobian in
``(t1, a, b)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .core import SequenceMeta
from .discriminate import LABEL_A, LABEL_B, LabeledStream
from .signals import conditioned_signals, _indicator
from .simulator import RBCurves

_TINY = 1e-300
_MAX_DAMPING = 1e12


@dataclass(frozen=True, eq=False)
class FitResult:
    """Outcome of a least-squares fit.

    ``converged`` is False when the iteration budget ran out or damping was
    exhausted; estimates should then be treated as unusable.  ``warnings``
    collects soft diagnostics (parameters at bounds, poor conditioning).
    """

    params: np.ndarray
    stderr: np.ndarray
    covariance: np.ndarray
    objective: float
    objective_history: tuple
    iterations: int
    converged: bool
    message: str
    param_names: tuple = ()
    warnings: tuple = ()
    at_bounds: tuple = ()

    def param(self, name: str) -> float:
        return float(self.params[self.param_names.index(name)])

    def param_stderr(self, name: str) -> float:
        return float(self.stderr[self.param_names.index(name)])


def finite_difference_jacobian(
    fn: Callable, x: np.ndarray, params: np.ndarray, rel_step: float = 1e-6
) -> np.ndarray:
    """Central finite-difference Jacobian, steps scaled to parameter size."""
    params = np.asarray(params, dtype=np.float64)
    cols = []
    for i in range(len(params)):
        h = rel_step * abs(params[i]) if params[i] != 0.0 else rel_step
        up = params.copy()
        dn = params.copy()
        up[i] += h
        dn[i] -= h
        cols.append((np.asarray(fn(x, up)) - np.asarray(fn(x, dn))) / (2.0 * h))
    return np.column_stack(cols)


def _parse_bounds(bounds, n_params):
    if bounds is None:
        return np.full(n_params, -np.inf), np.full(n_params, np.inf)
    lo, hi = bounds
    lo = np.full(n_params, -np.inf) if lo is None else np.asarray(lo, dtype=np.float64)
    hi = np.full(n_params, np.inf) if hi is None else np.asarray(hi, dtype=np.float64)
    if len(lo) != n_params or len(hi) != n_params:
        raise ValueError("bounds must match the number of parameters")
    if np.any(lo > hi):
        raise ValueError("lower bounds exceed upper bounds")
    return lo, hi


def fit_curve(
    fn: Callable,
    x: np.ndarray,
    y: np.ndarray,
    init: Sequence[float],
    jacobian: Optional[Callable] = None,
    weights: Optional[np.ndarray] = None,
    bounds=None,
    max_iter: int = 500,
    rel_tol: float = 1e-10,
    step_tol: float = 1e-12,
    param_names: tuple = (),
) -> FitResult:
    """Minimise ``sum_i w_i (y_i - fn(x_i, params))^2``.

    Convergence: relative objective decrease below ``rel_tol`` or accepted
    step norm below ``step_tol``.  The parameter covariance is the inverse of
    the weighted normal matrix at the optimum; for unweighted fits it is
    scaled by the residual variance.
    """
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    theta = np.asarray(init, dtype=np.float64).copy()
    n_pts, n_par = len(y), len(theta)
    if n_pts < n_par:
        raise ValueError(f"{n_pts} points cannot constrain {n_par} parameters")
    if weights is None:
        w = np.ones(n_pts)
        weighted = False
    else:
        w = np.asarray(weights, dtype=np.float64)
        if np.any(w < 0) or not np.all(np.isfinite(w)):
            raise ValueError("weights must be finite and non-negative")
        weighted = True
    lo, hi = _parse_bounds(bounds, n_par)
    theta = np.clip(theta, lo, hi)
    if jacobian is None:
        jacobian = lambda xv, p: finite_difference_jacobian(fn, xv, p)

    sw = np.sqrt(w)

    def objective(p):
        r = y - np.asarray(fn(x, p), dtype=np.float64)
        return r, float(np.sum(w * r * r))

    r, s_val = objective(theta)
    if not math.isfinite(s_val):
        raise ValueError("objective is not finite at the initial guess")
    history = [s_val]
    lam = 1e-3
    converged = False
    message = "iteration budget exhausted"
    iterations = 0

    for iterations in range(1, max_iter + 1):
        jac = np.asarray(jacobian(x, theta), dtype=np.float64)
        if jac.shape != (n_pts, n_par):
            raise ValueError(f"jacobian shape {jac.shape} != {(n_pts, n_par)}")
        if not np.all(np.isfinite(jac)):
            message = "jacobian not finite"
            break
        jw = jac * sw[:, None]
        grad = jw.T @ (r * sw)
        hess = jw.T @ jw
        scale = np.maximum(np.diag(hess), _TINY)

        bt = 1e-12 * np.maximum(1.0, np.abs(theta))
        at_lo = np.isfinite(lo) & (theta - lo <= bt)
        at_hi = np.isfinite(hi) & (hi - theta <= bt)

        accepted = False
        while lam <= _MAX_DAMPING:
            damped = hess + lam * np.diag(scale)
            try:
                step = np.linalg.solve(damped, grad)
                # a parameter pinned at a bound whose step points further
                # outside would be clipped to zero motion and drag the rest
                # of the step with it; freeze such parameters and re-solve
                # in the remaining coordinates
                free = np.ones(n_par, dtype=bool)
                for _ in range(n_par):
                    viol = free & ((at_lo & (step < 0.0)) | (at_hi & (step > 0.0)))
                    if not viol.any():
                        break
                    free &= ~viol
                    step = np.zeros(n_par)
                    if free.any():
                        step[free] = np.linalg.solve(
                            damped[np.ix_(free, free)], grad[free]
                        )
            except np.linalg.LinAlgError:
                lam *= 10.0
                continue
            if not np.all(np.isfinite(step)):
                lam *= 10.0
                continue
            trial = np.clip(theta + step, lo, hi)
            r_trial, s_trial = objective(trial)
            if math.isfinite(s_trial) and s_trial <= s_val:
                applied = trial - theta
                drop = s_val - s_trial
                theta, r, s_val = trial, r_trial, s_trial
                history.append(s_val)
                lam = max(lam / 3.0, 1e-12)
                accepted = True
                if drop <= rel_tol * max(s_val, _TINY) or np.linalg.norm(applied) <= step_tol:
                    converged = True
                    message = "converged"
                break
            lam *= 10.0
        if not accepted:
            message = "damping exhausted without an acceptable step"
            break
        if converged:
            break

    warnings = []
    jac = np.asarray(jacobian(x, theta), dtype=np.float64)
    jw = jac * sw[:, None]
    hess = jw.T @ jw
    try:
        cov = np.linalg.inv(hess)
    except np.linalg.LinAlgError:
        cov = np.linalg.pinv(hess)
        warnings.append("normal equations singular at the optimum")
    if not weighted:
        dof = n_pts - n_par
        if dof > 0:
            cov = cov * (s_val / dof)
        else:
            warnings.append("no residual degrees of freedom for error scaling")
    diag = np.diag(cov).copy()
    stderr = np.sqrt(np.maximum(diag, 0.0))

    d = np.sqrt(np.maximum(np.diag(hess), _TINY))
    corr = hess / np.outer(d, d)
    try:
        if np.linalg.cond(corr) > 1e8:
            warnings.append("parameters poorly constrained (near-degenerate model)")
    except np.linalg.LinAlgError:
        pass

    at_bounds = []
    names = param_names if param_names else tuple(f"p{i}" for i in range(n_par))
    for i in range(n_par):
        tol = 1e-12 * max(1.0, abs(theta[i]))
        if (np.isfinite(lo[i]) and theta[i] - lo[i] <= tol) or (
            np.isfinite(hi[i]) and hi[i] - theta[i] <= tol
        ):
            at_bounds.append(names[i])
    if at_bounds:
        warnings.append("parameters at bounds: " + ", ".join(at_bounds))

    return FitResult(
        params=theta,
        stderr=stderr,
        covariance=cov,
        objective=s_val,
        objective_history=tuple(history),
        iterations=iterations,
        converged=converged,
        message=message,
        param_names=names,
        warnings=tuple(warnings),
        at_bounds=tuple(at_bounds),
    )


# -- model library ------------------------------------------------------------


def line_model(x, params):
    slope, intercept = params
    return slope * x + intercept


def line_jacobian(x, params):
    return np.column_stack([x, np.ones_like(x)])


def cosine_model(x, params):
    """``amp * cos(omega x + phase) + offset``."""
    amp, omega, phase, offset = params
    return amp * np.cos(omega * x + phase) + offset


def cosine_jacobian(x, params):
    amp, omega, phase, _ = params
    arg = omega * x + phase
    s = np.sin(arg)
    return np.column_stack([np.cos(arg), -amp * x * s, -amp * s, np.ones_like(x)])


def rb_decay_model(x, params):
    """``a_inf + (b0 - a_inf) * alpha^(x/2)`` with positive decay base."""
    a_inf, b0, alpha = params
    if alpha <= 0:
        raise ValueError("decay parameter must be positive")
    t = np.power(alpha, np.asarray(x, dtype=np.float64) / 2.0)
    return a_inf + (b0 - a_inf) * t


def rb_decay_jacobian(x, params):
    a_inf, b0, alpha = params
    half = np.asarray(x, dtype=np.float64) / 2.0
    t = np.power(alpha, half)
    return np.column_stack([1.0 - t, t, (b0 - a_inf) * half * np.power(alpha, half - 1.0)])


class RestlessPopulationModel:
    """Per-sequence ground-start share as a function of ``(t1, a, b)``.

    Evaluates the affine shot recursion in closed form and propagates
    derivatives through the same recurrences, giving an analytic Jacobian.
    Parameters enter only through ``u = a exp(-1/(R T1))`` and ``b``, so the
    model carries an exact (T1, a) degeneracy; fits report it via the
    conditioning warning.
    """

    def __init__(self, meta: SequenceMeta, num_repetitions: int, repetition_rate: float):
        self.etas = meta.flip_probabilities()
        self.num_repetitions = int(num_repetitions)
        self.repetition_rate = float(repetition_rate)
        if self.num_repetitions < 1:
            raise ValueError("need at least one repetition")
        self._cache_key = None
        self._cache_val = None

    def _engine(self, params):
        key = tuple(float(p) for p in params)
        if key == self._cache_key:
            return self._cache_val
        t1, a, b = key
        x = 1.0 / (self.repetition_rate * t1)
        decay = math.exp(-x)
        u = a * decay
        g = 1.0 - 2.0 * self.etas
        c = u * g
        d = u * self.etas + b

        K = len(self.etas)
        prefix_mul = np.empty(K)
        prefix_add = np.empty(K)
        dmul_du = np.empty(K)
        dadd_du = np.empty(K)
        dadd_db = np.empty(K)
        mul, add = 1.0, 0.0
        dmul, dadd_u, dadd_b = 0.0, 0.0, 0.0
        for k in range(K):
            dmul = g[k] * mul + c[k] * dmul
            dadd_u = g[k] * add + c[k] * dadd_u + self.etas[k]
            dadd_b = c[k] * dadd_b + 1.0
            mul = c[k] * mul
            add = c[k] * add + d[k]
            prefix_mul[k] = mul
            prefix_add[k] = add
            dmul_du[k] = dmul
            dadd_du[k] = dadd_u
            dadd_db[k] = dadd_b

        cyc_mul, cyc_add = mul, add
        dcyc_mul_du = dmul
        dcyc_add_du, dcyc_add_db = dadd_u, dadd_b
        i = np.arange(self.num_repetitions, dtype=np.float64)
        if abs(1.0 - cyc_mul) < 1e-9:
            boundary = cyc_add * i
            dbound_dmul = cyc_add * i * (i - 1.0) / 2.0
            dbound_dadd = i
        else:
            pwr = np.power(cyc_mul, i)
            geo = (1.0 - pwr) / (1.0 - cyc_mul)
            pwr_m1 = np.power(cyc_mul, np.maximum(i - 1.0, 0.0))
            dgeo = (-i * pwr_m1 * (1.0 - cyc_mul) + (1.0 - pwr)) / (1.0 - cyc_mul) ** 2
            boundary = cyc_add * geo
            dbound_dmul = cyc_add * dgeo
            dbound_dadd = geo
        b_mean = boundary.mean()
        db_mean_du = (dbound_dmul * dcyc_mul_du + dbound_dadd * dcyc_add_du).mean()
        db_mean_db = (dbound_dadd * dcyc_add_db).mean()

        mean_excited = prefix_mul * b_mean + prefix_add
        dm_du = dmul_du * b_mean + prefix_mul * db_mean_du + dadd_du
        dm_db = prefix_mul * db_mean_db + dadd_db

        du_dt1 = u * x / t1
        du_da = decay
        jac = np.empty((K, 3))
        jac[:, 0] = -dm_du * du_dt1
        jac[:, 1] = -dm_du * du_da
        jac[:, 2] = -dm_db
        value = 1.0 - mean_excited
        self._cache_key = key
        self._cache_val = (value, jac)
        return self._cache_val

    def __call__(self, x, params):
        return self._engine(params)[0]

    def jacobian(self, x, params):
        return self._engine(params)[1]


# -- experiment fits -----------------------------------------------------------


def _weights_from_stderr(stderr, warnings_out: list):
    if stderr is None:
        return None
    se = np.asarray(stderr, dtype=np.float64)
    bad = ~np.isfinite(se) | (se <= 0)
    if bad.all():
        warnings_out.append("no usable uncertainties, fitting unweighted")
        return None
    if bad.any():
        floor = se[~bad].min()
        se = np.where(bad, floor, se)
        warnings_out.append("non-positive uncertainties floored to the smallest usable value")
    return 1.0 / (se * se)


def _rabi_initial_guess(x, y, warnings_out: list):
    order = np.argsort(x)
    xs, ys = x[order], y[order]
    offset = float(ys.mean())
    detrended = ys - offset
    amp = float(np.ptp(ys)) / 2.0
    if amp == 0.0:
        warnings_out.append("constant signal, oscillation parameters unconstrained")
        return np.array([0.0, math.pi / max(np.ptp(xs), 1.0), 0.0, offset])
    dx = np.diff(xs)
    if len(xs) >= 4 and np.all(dx > 0) and np.allclose(dx, dx.mean(), rtol=1e-3):
        spectrum = np.fft.rfft(detrended)
        freqs = np.fft.rfftfreq(len(xs), d=float(dx.mean()))
        peak = int(np.argmax(np.abs(spectrum[1:]))) + 1
        omega = 2.0 * math.pi * freqs[peak]
        amp = 2.0 * abs(spectrum[peak]) / len(xs)
        phase = float(np.angle(spectrum[peak])) - omega * xs[0]
    else:
        warnings_out.append("non-uniform sweep spacing, coarse initial guess")
        omega = 2.0 * math.pi / max(np.ptp(xs), 1e-12)
        phase = 0.0
    return np.array([amp, omega, phase, offset])


def _wrap_phase(phi: float) -> float:
    out = (phi + math.pi) % (2.0 * math.pi) - math.pi
    return math.pi if out == -math.pi else out


def fit_rabi(x, values, stderr=None, init=None, max_iter: int = 500) -> FitResult:
    """Fit ``amp cos(omega x + phase) + offset`` to an amplitude sweep.

    The angular frequency is seeded from the dominant FFT bin.  The result is
    canonicalised to ``amp >= 0``, ``omega >= 0`` and ``phase`` in
    ``(-pi, pi]``.  A sweep spanning less than one oscillation gets a
    conditioning warning.
    """
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(values, dtype=np.float64)
    mask = np.isfinite(y)
    if mask.sum() < 4:
        raise ValueError("need at least four finite points for a cosine fit")
    x, y = x[mask], y[mask]
    notes: list = []
    if stderr is not None:
        stderr = np.asarray(stderr, dtype=np.float64)[mask]
    weights = _weights_from_stderr(stderr, notes)
    guess = np.asarray(init, dtype=np.float64) if init is not None else _rabi_initial_guess(x, y, notes)
    res = fit_curve(
        cosine_model,
        x,
        y,
        guess,
        jacobian=cosine_jacobian,
        weights=weights,
        max_iter=max_iter,
        param_names=("amplitude", "angular_frequency", "phase", "offset"),
    )
    amp, omega, phase, offset = res.params
    if amp < 0:
        amp, phase = -amp, phase + math.pi
    if omega < 0:
        omega, phase = -omega, -phase
    params = np.array([amp, omega, phase if amp == 0 else _wrap_phase(phase), offset])
    if omega * np.ptp(x) < 2.0 * math.pi:
        notes.append("sweep spans less than one oscillation period")
    return FitResult(
        params=params,
        stderr=res.stderr,
        covariance=res.covariance,
        objective=res.objective,
        objective_history=res.objective_history,
        iterations=res.iterations,
        converged=res.converged,
        message=res.message,
        param_names=res.param_names,
        warnings=res.warnings + tuple(notes),
        at_bounds=res.at_bounds,
    )


@dataclass(frozen=True, eq=False)
class RbFitResult:
    """Decay fit plus the derived error per Clifford."""

    fit: FitResult
    alpha: float
    alpha_stderr: float
    epc: float
    epc_stderr: float
    dimension: int

    @property
    def warnings(self) -> tuple:
        return self.fit.warnings


def _rb_initial_guess(lengths, means, dimension):
    a0 = 1.0 / dimension
    shifted = means - a0
    mask = shifted > 1e-9
    if mask.sum() >= 2:
        slope, intercept = np.polyfit(lengths[mask] / 2.0, np.log(shifted[mask]), 1)
        alpha0 = float(np.clip(np.exp(slope), 1e-4, 0.9999))
        b0 = float(np.clip(a0 + math.exp(intercept), a0 + 1e-3, 1.2))
    else:
        alpha0, b0 = 0.99, 1.0
    return np.array([a0, b0, alpha0])


def fit_rb(lengths, means, stderr=None, dimension: int = 2, init=None, max_iter: int = 500) -> RbFitResult:
    """Fit the benchmarking decay and convert it to an error per Clifford.

    ``epc = (1 - alpha) (dimension - 1) / dimension`` for dimension 2 or 4.
    A decay base outside ``(0, 1]`` is flagged as unphysical but returned.
    """
    if dimension not in (2, 4):
        raise ValueError(f"dimension must be 2 or 4, got {dimension}")
    lengths = np.asarray(lengths, dtype=np.float64)
    means = np.asarray(means, dtype=np.float64)
    notes: list = []
    weights = _weights_from_stderr(stderr, notes)
    guess = np.asarray(init, dtype=np.float64) if init is not None else _rb_initial_guess(lengths, means, dimension)
    res = fit_curve(
        rb_decay_model,
        lengths,
        means,
        guess,
        jacobian=rb_decay_jacobian,
        weights=weights,
        bounds=([0.0, 0.0, 1e-9], [1.0, 1.2, 1.2]),
        max_iter=max_iter,
        param_names=("asymptote", "amplitude", "alpha"),
    )
    alpha = float(res.params[2])
    alpha_err = float(res.stderr[2])
    if not 0.0 < alpha <= 1.0:
        notes.append(f"decay parameter {alpha:.6g} outside (0, 1], unphysical")
    scale = (dimension - 1.0) / dimension
    if notes:
        res = FitResult(
            params=res.params,
            stderr=res.stderr,
            covariance=res.covariance,
            objective=res.objective,
            objective_history=res.objective_history,
            iterations=res.iterations,
            converged=res.converged,
            message=res.message,
            param_names=res.param_names,
            warnings=res.warnings + tuple(notes),
            at_bounds=res.at_bounds,
        )
    return RbFitResult(
        fit=res,
        alpha=alpha,
        alpha_stderr=alpha_err,
        epc=(1.0 - alpha) * scale,
        epc_stderr=alpha_err * scale,
        dimension=dimension,
    )


@dataclass(frozen=True, eq=False)
class EpcDistribution:
    """Bootstrap distribution of the error per Clifford."""

    samples: np.ndarray
    subset_size: int
    n_resamples: int
    n_failures: int
    seed: int
    dimension: int

    def __post_init__(self) -> None:
        samples = np.ascontiguousarray(self.samples, dtype=np.float64).reshape(-1)
        if len(samples) and (samples.min() < 0.0 or samples.max() > 1.0):
            raise ValueError("error-per-Clifford samples must lie in [0, 1]")
        samples.setflags(write=False)
        object.__setattr__(self, "samples", samples)

    @property
    def mean(self) -> float:
        return float(self.samples.mean())

    @property
    def std(self) -> float:
        return float(self.samples.std(ddof=1))

    def to_dict(self) -> dict:
        return {
            "mean": self.mean,
            "std": self.std,
            "n_samples": int(len(self.samples)),
            "n_failures": self.n_failures,
            "subset_size": self.subset_size,
            "n_resamples": self.n_resamples,
            "seed": self.seed,
            "dimension": self.dimension,
        }


def bootstrap_epc(
    curves: RBCurves,
    subset_size: int,
    n_resamples: int = 1000,
    seed: int = 0,
    dimension: Optional[int] = None,
) -> EpcDistribution:
    """Bootstrap the error per Clifford over sequence subsets.

    Each resample draws ``subset_size`` sequences without replacement using
    an independent generator keyed by ``(seed, resample index)``, so results
    do not depend on evaluation order.  Resamples whose fit fails to converge
    or lands outside the physical range are excluded and counted.
    """
    dim = curves.dimension if dimension is None else dimension
    n_curves = curves.n_sequences
    if not 2 <= subset_size <= n_curves:
        raise ValueError(f"subset size must lie in [2, {n_curves}], got {subset_size}")
    if n_resamples < 1:
        raise ValueError("need at least one resample")
    samples = []
    failures = 0
    root = math.sqrt(subset_size)
    for ridx in range(n_resamples):
        rng = np.random.default_rng([seed, ridx])
        idx = rng.choice(n_curves, size=subset_size, replace=False)
        sub = curves.survival[idx]
        means = sub.mean(axis=0)
        sem = sub.std(axis=0, ddof=1) / root
        try:
            res = fit_rb(curves.lengths, means, stderr=sem, dimension=dim)
        except (ValueError, np.linalg.LinAlgError):
            failures += 1
            continue
        if not res.fit.converged or not 0.0 < res.alpha <= 1.0 or not 0.0 <= res.epc <= 1.0:
            failures += 1
            continue
        samples.append(res.epc)
    return EpcDistribution(
        samples=np.asarray(samples),
        subset_size=subset_size,
        n_resamples=n_resamples,
        n_failures=failures,
        seed=seed,
        dimension=dim,
    )


@dataclass(frozen=True)
class ZTestResult:
    """Two-sided z-test for agreement of two uncertain values."""

    z: float
    confidence: float

    @property
    def percent(self) -> float:
        return 100.0 * self.confidence


def z_test(value1: float, stderr1: float, value2: float, stderr2: float) -> ZTestResult:
    """``z = (v1 - v2) / sqrt(s1^2 + s2^2)`` and ``erfc(|z| / sqrt(2))``."""
    denom = math.hypot(stderr1, stderr2)
    if denom == 0.0 or not math.isfinite(denom):
        raise ValueError("combined uncertainty must be positive and finite")
    z = (value1 - value2) / denom
    return ZTestResult(z=z, confidence=math.erfc(abs(z) / math.sqrt(2.0)))


def fit_restless_model(
    values,
    meta: SequenceMeta,
    repetition_rate: float,
    num_repetitions: int,
    stderr=None,
    init=None,
    max_iter: int = 500,
) -> FitResult:
    """Fit ``(t1, a, b)`` of the population model to per-sequence shares.

    Seeds ``t1`` at ``1 / (R ln 2)``, ``a = 1`` and ``b = 0`` unless given.
    Bounds keep ``a`` in ``(0, 1]`` and ``b`` in ``[0, 1]``; a fitted point
    with ``a exp(-1/(R t1)) + b > 1`` is flagged.  Because the model depends
    on the parameters only through ``a exp(-1/(R t1))`` and ``b``, expect the
    poor-conditioning warning: (t1, a) are not separately identifiable.
    """
    y = np.asarray(values, dtype=np.float64)
    model = RestlessPopulationModel(meta, num_repetitions, repetition_rate)
    if len(y) != len(model.etas):
        raise ValueError(f"got {len(y)} values for {len(model.etas)} sequences")
    notes: list = []
    weights = _weights_from_stderr(stderr, notes)
    if init is None:
        init = np.array([1.0 / (repetition_rate * math.log(2.0)), 1.0, 0.0])
    x = np.arange(1, len(y) + 1, dtype=np.float64)
    res = fit_curve(
        model,
        x,
        y,
        init,
        jacobian=model.jacobian,
        weights=weights,
        bounds=([1e-9, 1e-9, 0.0], [np.inf, 1.0, 1.0]),
        max_iter=max_iter,
        param_names=("t1", "a", "b"),
    )
    t1, a, b = res.params
    if a * math.exp(-1.0 / (repetition_rate * t1)) + b > 1.0 + 1e-9:
        notes.append("fitted parameters allow populations above 1")
    if notes:
        res = FitResult(
            params=res.params,
            stderr=res.stderr,
            covariance=res.covariance,
            objective=res.objective,
            objective_history=res.objective_history,
            iterations=res.iterations,
            converged=res.converged,
            message=res.message,
            param_names=res.param_names,
            warnings=res.warnings + tuple(notes),
            at_bounds=res.at_bounds,
        )
    return res


# -- benchmarking streams ------------------------------------------------------


def identify_ground_label(labeled: LabeledStream) -> int:
    """Pick the label of the ground state from conditioned-signal noise.

    Conditioning on the majority (ground) predecessor label leaves far more
    shots per sequence, hence smaller binomial errors.  Raises when the two
    conditioned error levels are too close to call.
    """
    sig_a, sig_b = conditioned_signals(labeled)
    se_a = float(np.nanmean(np.where(sig_a.counts > 0, sig_a.stderr, np.nan)))
    se_b = float(np.nanmean(np.where(sig_b.counts > 0, sig_b.stderr, np.nan)))
    if not (math.isfinite(se_a) and math.isfinite(se_b)):
        raise ValueError("conditioned signals are empty on one side")
    if abs(se_a - se_b) <= 0.02 * max(se_a, se_b):
        raise ValueError(
            f"ground label ambiguous: conditioned errors {se_a:.4g} and {se_b:.4g} are too close"
        )
    return LABEL_A if se_a < se_b else LABEL_B


@dataclass(frozen=True, eq=False)
class RbSelection:
    """Shots retained by conditioning on a ground-state predecessor."""

    mask: np.ndarray
    retained_fraction: float
    ground_label: int

    def __post_init__(self) -> None:
        mask = np.ascontiguousarray(self.mask, dtype=bool)
        mask.setflags(write=False)
        object.__setattr__(self, "mask", mask)


def rb_postselect(labeled: LabeledStream, ground_label: Optional[int] = None) -> RbSelection:
    """Keep shots whose predecessor outcome is the ground label.

    The first shot has no predecessor and is never retained.  The ground
    label is identified from the data when not supplied.
    """
    if ground_label is None:
        ground_label = identify_ground_label(labeled)
    labels = labeled.labels
    mask = np.zeros(len(labels), dtype=bool)
    mask[1:] = labels[:-1] == ground_label
    return RbSelection(
        mask=mask,
        retained_fraction=float(mask[1:].mean()),
        ground_label=int(ground_label),
    )


def rb_curves_from_labels(
    labeled: LabeledStream,
    meta: SequenceMeta,
    selection: Optional[RbSelection] = None,
) -> RBCurves:
    """Per-(length, realisation) survival curves from a labelled stream.

    Survival is one minus the state-change indicator mean.  With a selection,
    only retained shots enter; every (length, realisation) cell must keep at
    least one shot.
    """
    flags, slots, _ = _indicator(labeled)
    if selection is not None:
        keep = selection.mask[1:]
        flags, slots = flags[keep], slots[keep]
    cells = {}
    for k, gate in enumerate(meta.gates, start=1):
        if gate.n_cliffords is None or gate.realization is None:
            raise ValueError(f"sequence {k} has no benchmarking tags")
        cells[k] = (int(gate.n_cliffords), int(gate.realization))
    lengths = sorted({nc for nc, _ in cells.values()})
    realizations = sorted({r for _, r in cells.values()})
    l_index = {nc: j for j, nc in enumerate(lengths)}
    r_index = {r: j for j, r in enumerate(realizations)}
    sums = np.zeros((len(realizations), len(lengths)))
    counts = np.zeros((len(realizations), len(lengths)), dtype=np.int64)
    K = len(meta)
    cell_l = np.array([l_index[cells[k][0]] for k in range(1, K + 1)])
    cell_r = np.array([r_index[cells[k][1]] for k in range(1, K + 1)])
    np.add.at(sums, (cell_r[slots - 1], cell_l[slots - 1]), flags)
    np.add.at(counts, (cell_r[slots - 1], cell_l[slots - 1]), 1)
    if np.any(counts == 0):
        raise ValueError("some (length, realisation) cells kept no shots")
    survival = 1.0 - sums / counts
    return RBCurves(
        lengths=np.asarray(lengths, dtype=np.float64),
        survival=survival,
        shots_per_point=int(round(counts.mean())),
        dimension=2,
    )
