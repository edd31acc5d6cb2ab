import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.special import erf, ndtri

from restless.axis import (
    AxisRecoveryError,
    difference_points,
    fold_first_quadrant,
    principal_axis,
    restless_axis,
    snr,
    standard_axis,
)
from restless.core import wrap_axis_angle

from conftest import make_stream

# independently derived reference values (half-normal moment quadrature)
SNR_SINGLE_GAUSSIAN_MEDIAN_SPLIT = 1.3236080967885126
SNR_PM1_MIXTURE_ZERO_SPLIT = 1.4594609951805862


def _normal_grid(n):
    """Deterministic stand-in for a standard normal sample (quantile grid)."""
    return ndtri((np.arange(n) + 0.5) / n)


# -- folding -----------------------------------------------------------------


def test_fold_maps_to_first_quadrant():
    z = np.array([1 + 1j, -1 + 1j, 1 - 1j, -1 - 1j, -3 + 0j, 2j])
    folded = fold_first_quadrant(z)
    assert np.all(folded.real >= 0) and np.all(folded.imag >= 0)
    assert np.allclose(folded[:4], 1 + 1j)
    assert folded[4] == 3 + 0j


@given(
    st.lists(
        st.tuples(
            st.floats(-1e6, 1e6, allow_nan=False), st.floats(-1e6, 1e6, allow_nan=False)
        ),
        min_size=1,
        max_size=30,
    )
)
def test_fold_idempotent_and_sign_invariant(pairs):
    z = np.array([complex(a, b) for a, b in pairs])
    folded = fold_first_quadrant(z)
    assert np.array_equal(fold_first_quadrant(folded), folded)
    assert np.array_equal(fold_first_quadrant(-z), folded)
    assert np.array_equal(fold_first_quadrant(np.conj(z)), folded)


# -- principal axis -------------------------------------------------------------


def test_principal_axis_two_points():
    for phi in [0.0, 0.3, 1.2, 2.9]:
        pts = np.array([0j, np.exp(1j * phi)])
        assert math.isclose(principal_axis(pts), wrap_axis_angle(phi), abs_tol=1e-12)


def test_principal_axis_matches_variance_scan(rng):
    # anisotropic cloud rotated by a known angle
    phi = 0.6
    cloud = (rng.standard_normal(4000) * 2.0 + 1j * rng.standard_normal(4000) * 0.1) * np.exp(
        1j * phi
    )
    theta = principal_axis(cloud)

    angles = np.linspace(0, math.pi, 20001, endpoint=False)
    centered = cloud - cloud.mean()
    var = [np.var(np.real(centered * np.exp(-1j * a))) for a in angles]
    theta_scan = angles[int(np.argmax(var))]
    assert abs(theta - theta_scan) < 1e-3
    assert abs(theta - phi) < 0.01


def test_principal_axis_rejects_coincident_points():
    with pytest.raises(AxisRecoveryError):
        principal_axis(np.full(5, 1 + 1j))


@settings(max_examples=40, deadline=None)
@given(
    phi=st.floats(min_value=-3.0, max_value=3.0),
    seed=st.integers(min_value=0, max_value=1000),
)
def test_principal_axis_rotation_equivariance(phi, seed):
    rng = np.random.default_rng(seed)
    cloud = rng.standard_normal(200) * 3.0 + 1j * rng.standard_normal(200) * 0.2
    base = principal_axis(cloud)
    rotated = principal_axis(cloud * np.exp(1j * phi))
    diff = abs(wrap_axis_angle(base + phi) - rotated)
    assert min(diff, math.pi - diff) < 1e-9


def test_standard_axis_anchors_at_centroid():
    pts = np.array([0j, 2 + 0j, 1 + 1j, 1 - 1j]) + (5 + 3j)
    axis = standard_axis(pts)
    assert math.isclose(axis.origin.i, 6.0)
    assert math.isclose(axis.origin.q, 3.0)
    assert math.isclose(axis.theta, 0.0, abs_tol=1e-12)
    # centroid projects to zero by construction
    assert abs(axis.project([pts.mean()])[0]) < 1e-12


# -- SNR ---------------------------------------------------------------------


def test_snr_single_gaussian_median_split():
    # one cluster split at its own median: spread nearly swallows the gap,
    # value pinned by half-normal moments
    proj = _normal_grid(200001)
    got = snr(proj, threshold=0.0)
    assert abs(got - SNR_SINGLE_GAUSSIAN_MEDIAN_SPLIT) < 2e-3


def test_snr_two_clusters():
    half = _normal_grid(100001)
    proj = np.concatenate([half - 1.0, half + 1.0])
    got = snr(proj, threshold=0.0)
    assert abs(got - SNR_PM1_MIXTURE_ZERO_SPLIT) < 5e-3
    # well-separated clusters score far higher
    far = np.concatenate([half * 0.05 - 1.0, half * 0.05 + 1.0])
    assert snr(far, threshold=0.0) > 10


def test_snr_edge_cases():
    assert snr(np.array([1.0, 2.0]), threshold=5.0) == 0.0  # nothing above
    assert snr(np.array([1.0, 1.0, 3.0, 3.0]), threshold=2.0) == math.inf  # zero spread
    assert snr(np.array([1.0, 1.0, 1.0, 1.0]), threshold=1.0) == 0.0  # all at threshold


# -- outcome differences ---------------------------------------------------------


def test_difference_points_enumerated():
    s = make_stream([1 + 0j, 2 + 1j, 5 + 0j], num_sequences=2)
    d = difference_points(s)
    assert np.allclose(d.diff, [1 + 1j, 3 - 1j])
    assert np.allclose(d.folded, [1 + 1j, 3 + 1j])
    # differences are attributed to the later shot's sequence
    assert d.sequence_index.tolist() == [2, 1]


def test_difference_points_needs_two_shots():
    s = make_stream([1 + 0j], num_sequences=2)
    with pytest.raises(Exception):
        difference_points(s)


def test_folded_mean_by_sequence():
    s = make_stream([0j, 1 + 0j, -1 + 0j, 3 + 0j], num_sequences=2)
    d = difference_points(s)
    # diffs: j=2: 1, j=3: -2, j=4: 4 -> folded 1, 2, 4 at slots 2, 1, 2
    means, counts = d.folded_mean_by_sequence()
    assert counts.tolist() == [1, 2]
    assert np.allclose(means, [2.0, 2.5])


# -- full axis recovery -----------------------------------------------------------


def _alternating_stream(theta, n=6000, sigma=0.03, seed=0, gap=1.0):
    """Stream that hops between two clusters along direction theta.

    Change probabilities differ per sequence slot so the per-slot folded
    means disperse along the signal direction, as in a real sweep.
    """
    rng = np.random.default_rng(seed)
    etas = np.array([0.05, 0.35, 0.65, 0.95])
    flips = rng.random(n) < etas[np.arange(n) % 4]
    states = np.cumsum(flips) % 2
    centers = np.array([0j, gap * np.exp(1j * theta)])
    iq = centers[states] + sigma * (rng.standard_normal(n) + 1j * rng.standard_normal(n))
    return make_stream(iq, num_sequences=4)


def _folded_normal_mean(mu, sd):
    return mu * erf(mu / (sd * math.sqrt(2))) + sd * math.sqrt(2 / math.pi) * math.exp(
        -mu * mu / (2 * sd * sd)
    )


def _fold_line_oracle(theta, sigma, gap=1.0):
    """Expected folded-difference line direction.

    Outcome differences are the cluster gap plus noise of width sigma*sqrt(2)
    per coordinate; folding shifts both the change lump and the pure-noise
    lump, so the line through the per-slot means is tilted away from the bare
    gap direction by an O(sigma) amount.  This is the estimator's true
    expectation, derived from folded-normal moments.
    """
    tau = sigma * math.sqrt(2)
    noise_center = tau * math.sqrt(2 / math.pi)
    lx = _folded_normal_mean(abs(gap * math.cos(theta)), tau)
    ly = _folded_normal_mean(abs(gap * math.sin(theta)), tau)
    return math.atan2(ly - noise_center, lx - noise_center)


# angles clear of the fold-degenerate bands near 0 and pi/2, where the
# cluster gap projected on one coordinate drops below the noise width
@pytest.mark.parametrize("theta", [0.3, 0.7, 1.2, 2.4])
def test_restless_axis_matches_folded_moment_oracle(theta):
    sigma = 0.03
    stream = _alternating_stream(theta, sigma=sigma)
    axis, diag = restless_axis(stream)
    oracle = _fold_line_oracle(theta, sigma)
    assert abs(diag.theta_d - oracle) < 0.012
    # branch choice lands on the candidate nearer the true direction
    candidates = (diag.theta_d, wrap_axis_angle(math.pi - diag.theta_d))
    target = wrap_axis_angle(theta)
    best = min(candidates, key=lambda c: min(abs(c - target), math.pi - abs(c - target)))
    assert axis.theta == pytest.approx(best)
    assert diag.chosen in ("a", "b")
    chosen_snr = diag.snr_branch_a if diag.chosen == "a" else diag.snr_branch_b
    other_snr = diag.snr_branch_b if diag.chosen == "a" else diag.snr_branch_a
    assert chosen_snr >= other_snr
    assert chosen_snr > 2.0  # well-separated clusters


@pytest.mark.parametrize("theta", [0.3, 0.7, 1.2, 2.4])
def test_restless_axis_approaches_truth_at_low_noise(theta):
    stream = _alternating_stream(theta, sigma=0.01)
    axis, _ = restless_axis(stream)
    diff = abs(axis.theta - wrap_axis_angle(theta))
    assert min(diff, math.pi - diff) < 0.01


def test_restless_axis_branch_disambiguation_beats_folding_ambiguity():
    # folding alone cannot distinguish theta from pi - theta; the branch rule can
    theta = 0.4
    stream = _alternating_stream(theta, n=8000, sigma=0.03)
    axis, _ = restless_axis(stream)
    wrong = wrap_axis_angle(math.pi - theta)
    assert abs(axis.theta - theta) < 0.02
    assert abs(axis.theta - wrong) > 0.5


def test_restless_axis_diagnostics_dict():
    stream = _alternating_stream(1.0, n=500)
    _, diag = restless_axis(stream)
    d = diag.to_dict()
    for key in ("theta_d", "theta_m", "snr_branch_a", "snr_branch_b", "chosen"):
        assert key in d
