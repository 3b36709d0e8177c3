"""Monte Carlo metric estimators and the second-moment bound.

Closed forms used as oracles here, for standard normal xi's:

* linear f: E[sign<c, xi1 - xi2> (xi1 - xi2)] = (2/sqrt(pi)) c/‖c‖, so the
  signal power is 4/pi and the descent inner product is (2/sqrt(pi)) ‖c‖.
* linear f, d=1: the shared-direction moment is E|X Y| for jointly normal
  X, Y with variance 2 and covariance 1, which evaluates to
  (4/pi) (sqrt(3)/2 + pi/12) = 1.4359911242... A 10^7-sample check gave
  1.436966 +- 0.000627, consistent with that value.
* constant f: all signs are +1 and the shared moment collapses to
  E<xi1 - xi2, xi1 - xi3> = d.
* (m, k) = (2, 1): the ranking estimate is +-(xi1 - xi2), so ‖g‖² is
  ‖xi1 - xi2‖² exactly and its mean is 2d.
"""

from __future__ import annotations

import math

import numpy as np
import pytest

from rankopt.benchmarks import quadratic, rosenbrock
from rankopt.rng import make_rng
from rankopt.variance import (
    ISOTROPIC_SIGNAL_CAP,
    LINEAR_ALIGNMENT,
    MetricEstimate,
    descent_inner_product,
    empirical_second_moment,
    generic_cap,
    second_moment_bound,
    shared_direction_moment,
    signal_power,
)
from rankopt.variance import _sqnorm_jackknife

SHARED_MOMENT_LINEAR_1D = 1.4359911242


def linear(c):
    c = np.asarray(c, dtype=np.float64)
    return lambda x: float(np.asarray(x) @ c)


def accumulate(samples):
    """The single-pass sufficient statistics signal_power feeds the jackknife."""
    q = np.einsum("ij,ij->i", samples, samples)
    return (
        samples.sum(axis=0),
        samples.T @ samples,
        q @ samples,
        float(q.sum()),
        float((q * q).sum()),
    )


def explicit_jackknife(samples):
    """Literal leave-one-out computation of the same estimate and error."""
    n = samples.shape[0]
    w = samples.sum(axis=0)
    plain = float(w @ w) / n**2
    loo = np.array([float((w - v) @ (w - v)) for v in samples]) / (n - 1) ** 2
    value = n * plain - (n - 1) * loo.mean()
    spread = float(((loo - loo.mean()) ** 2).sum())
    return value, math.sqrt((n - 1) / n * spread)


class TestJackknife:
    def test_matches_the_explicit_loop(self):
        samples = make_rng(0).standard_normal((12, 3)) + np.array([1.0, -2.0, 0.5])
        estimate = _sqnorm_jackknife(*accumulate(samples), samples.shape[0])
        value, std_error = explicit_jackknife(samples)
        assert estimate.value == pytest.approx(value, rel=1e-10)
        assert estimate.std_error == pytest.approx(std_error, rel=1e-10)

    def test_removes_the_plug_in_bias(self):
        """‖sample mean‖² of N(mu, I) over-shoots ‖mu‖² by d/n; the corrected
        estimate should not, up to Monte Carlo error over many repetitions."""
        rng = make_rng(1)
        mu = np.array([1.0, 0.0])
        reps, n = 3000, 6
        corrected = np.empty(reps)
        plain = np.empty(reps)
        for i in range(reps):
            samples = rng.standard_normal((n, 2)) + mu
            corrected[i] = _sqnorm_jackknife(*accumulate(samples), n).value
            plain[i] = float(samples.mean(axis=0) @ samples.mean(axis=0))
        se = corrected.std(ddof=1) / math.sqrt(reps)
        assert abs(corrected.mean() - 1.0) < 4 * se
        assert plain.mean() - 1.0 > 0.25  # the uncorrected bias, d/n = 1/3

    def test_exact_on_identical_samples(self):
        """With zero spread the estimate is the common ‖v‖² with zero error."""
        samples = np.tile([3.0, 4.0], (5, 1))
        estimate = _sqnorm_jackknife(*accumulate(samples), 5)
        assert estimate.value == pytest.approx(25.0, rel=1e-12)
        assert estimate.std_error == pytest.approx(0.0, abs=1e-9)


class TestMetricEstimate:
    def test_needs_two_samples(self):
        with pytest.raises(ValueError, match="2 samples"):
            MetricEstimate(value=1.0, std_error=0.1, n_samples=1)

    def test_rejects_negative_error(self):
        with pytest.raises(ValueError, match="negative"):
            MetricEstimate(value=1.0, std_error=-0.1, n_samples=10)


class TestSignalPower:
    def test_linear_function_hits_four_over_pi(self):
        estimate = signal_power(
            linear([3.0, 4.0]), np.zeros(2), 0.7, n_samples=40_000, rng=make_rng(2)
        )
        assert estimate.value == pytest.approx(4.0 / math.pi, abs=3 * estimate.std_error)

    def test_vanishes_at_a_quadratic_minimizer(self):
        fn = quadratic(3)
        estimate = signal_power(fn, np.zeros(3), 0.5, n_samples=40_000, rng=make_rng(3))
        assert abs(estimate.value) <= 3 * estimate.std_error

    def test_respects_the_isotropic_cap(self):
        fn = quadratic(8)
        x = np.full(8, 5.0)
        estimate = signal_power(fn, x, 0.1, n_samples=40_000, rng=make_rng(4))
        assert estimate.value <= ISOTROPIC_SIGNAL_CAP + 3 * estimate.std_error
        assert estimate.value <= generic_cap(8) + 3 * estimate.std_error

    def test_alignment_constant_squares_to_the_linear_power(self):
        assert LINEAR_ALIGNMENT**2 == pytest.approx(4.0 / math.pi, rel=1e-15)

    def test_rejects_bad_smoothing(self):
        with pytest.raises(ValueError, match="smoothing"):
            signal_power(linear([1.0]), np.zeros(1), 0.0, n_samples=10)


class TestSharedDirectionMoment:
    def test_constant_function_gives_dimension(self):
        estimate = shared_direction_moment(
            lambda x: 7.0, np.zeros(5), 1.0, n_samples=60_000, rng=make_rng(5)
        )
        assert estimate.value == pytest.approx(5.0, abs=3 * estimate.std_error)

    def test_linear_one_dimensional_constant(self):
        estimate = shared_direction_moment(
            linear([2.0]), np.zeros(1), 0.3, n_samples=100_000, rng=make_rng(6)
        )
        assert estimate.value == pytest.approx(
            SHARED_MOMENT_LINEAR_1D, abs=3 * estimate.std_error + 1e-6
        )

    def test_respects_the_generic_cap(self):
        fn = rosenbrock(2)
        estimate = shared_direction_moment(
            fn, np.array([-1.0, 2.0]), 0.1, n_samples=60_000, rng=make_rng(7)
        )
        assert estimate.value <= generic_cap(2) + 3 * estimate.std_error


class TestSecondMomentBound:
    def test_frozen_arithmetic(self):
        assert second_moment_bound(5, 3, 10, 0.0, 0.0) == pytest.approx(20.0 / 9.0, rel=1e-15)
        assert second_moment_bound(5, 3, 10, 1.5, 2.0) == pytest.approx(
            20.0 / 9.0 + 48.0 / 81.0 * 2.0 + 1.5, rel=1e-15
        )

    def test_pairwise_case_has_no_cross_term(self):
        assert second_moment_bound(2, 1, 10, 0.75, 99.0) == pytest.approx(
            20.75, rel=1e-15
        )

    def test_full_ranking_with_generic_caps(self):
        cap = generic_cap(100)
        expected = 200.0 / 45.0 + 720.0 / 2025.0 * cap + cap
        assert second_moment_bound(10, 10, 100, cap, cap) == pytest.approx(
            expected, rel=1e-15
        )

    def test_rejects_negative_metrics(self):
        with pytest.raises(ValueError, match="negative"):
            second_moment_bound(5, 3, 10, -0.1, 0.0)


class TestEmpiricalSecondMoment:
    def test_two_point_ranking_is_exactly_a_difference_norm(self):
        """For (2, 1) the estimate is +-(xi1 - xi2), so the mean of ‖g‖² is 2d."""
        fn = quadratic(6)
        estimate = empirical_second_moment(
            fn,
            np.full(6, 2.0),
            0.05,
            num_directions=2,
            num_ranked=1,
            n_batches=5_000,
            rng=make_rng(8),
        )
        assert estimate.value == pytest.approx(12.0, abs=4 * estimate.std_error)

    def test_ranking_both_points_changes_nothing_for_pairs(self):
        estimate = empirical_second_moment(
            quadratic(4),
            np.full(4, 2.0),
            0.05,
            num_directions=2,
            num_ranked=2,
            n_batches=5_000,
            rng=make_rng(9),
        )
        assert estimate.value == pytest.approx(8.0, abs=4 * estimate.std_error)

    def test_fuller_rankings_average_down_the_norm(self):
        """At a far point, ranking all 10 directions beats ranking only the
        best one by a wide margin; the gap must clear both error bars."""
        fn = quadratic(10)
        x = np.full(10, 5.0)
        top_only = empirical_second_moment(
            fn, x, 0.01, num_directions=10, num_ranked=1, n_batches=4_000, rng=make_rng(10)
        )
        full = empirical_second_moment(
            fn, x, 0.01, num_directions=10, num_ranked=10, n_batches=4_000, rng=make_rng(11)
        )
        assert full.value + 3 * full.std_error < top_only.value - 3 * top_only.std_error

    def test_deterministic_given_a_seeded_generator(self):
        args = dict(num_directions=5, num_ranked=3, n_batches=500)
        a = empirical_second_moment(quadratic(3), np.ones(3), 0.1, rng=make_rng(12), **args)
        b = empirical_second_moment(quadratic(3), np.ones(3), 0.1, rng=make_rng(12), **args)
        assert a == b


class TestDescentInnerProduct:
    def test_linear_function_alignment(self):
        c = np.array([3.0, 4.0])
        estimate = descent_inner_product(
            linear(c), c, np.zeros(2), 0.5, n_samples=60_000, rng=make_rng(13)
        )
        assert estimate.value == pytest.approx(
            5.0 * LINEAR_ALIGNMENT, abs=3 * estimate.std_error
        )

    def test_positive_on_a_quadratic_away_from_the_minimum(self):
        fn = quadratic(3)
        x = np.full(3, 2.0)
        estimate = descent_inner_product(
            fn, fn.grad(x), x, 0.1, n_samples=40_000, rng=make_rng(14)
        )
        assert estimate.value > 3 * estimate.std_error

    def test_rejects_mismatched_gradient(self):
        with pytest.raises(ValueError, match="shape"):
            descent_inner_product(linear([1.0]), np.zeros(2), np.zeros(1), 0.1)
