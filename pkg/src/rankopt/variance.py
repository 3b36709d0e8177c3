"""Monte Carlo diagnostics for the comparison-based gradient estimates.

Two quantities control the estimator's second moment at a point: the signal
power ``‖E[sign(f(x+mu xi1) - f(x+mu xi2)) (xi1 - xi2)]‖²`` and the shared
direction moment ``E[s12 s13 <xi1 - xi2, xi1 - xi3>]``, the cross term of two
pairwise estimates anchored on the same first direction. Both are capped by
2d for any function, the signal power by 32/pi when the Hessian is a scalar
multiple of the identity, and together they bound the full estimator:

    E‖g‖² <= 2d/|edges| + neighbor_pairs/|edges|² * shared + signal.

Everything here estimates those quantities at a caller-chosen point, which
lower-bounds the corresponding maxima over x while the caps still apply
pointwise. Estimates carry honest standard errors; the signal power, a
squared norm of a sample mean, uses the jackknife for both its bias
correction and its error bar, the plain means use sd/sqrt(n).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .estimator import edge_count, neighbor_pair_count
from .oracles import evaluate_points

__all__ = [
    "MetricEstimate",
    "LINEAR_ALIGNMENT",
    "ISOTROPIC_SIGNAL_CAP",
    "generic_cap",
    "signal_power",
    "shared_direction_moment",
    "second_moment_bound",
    "empirical_second_moment",
    "descent_inner_product",
]

Array = np.ndarray

# E|<u, xi1 - xi2>| for a unit vector u and standard normal xi's: the slope
# relating the estimate's mean to the gradient direction on a linear function.
LINEAR_ALIGNMENT = 2.0 / math.sqrt(math.pi)

# Cap on the signal power when the Hessian is c * identity.
ISOTROPIC_SIGNAL_CAP = 32.0 / math.pi

_DEFAULT_PAIR_SAMPLES = 200_000
_DEFAULT_BATCHES = 10_000
_CHUNK = 20_000


def generic_cap(dim: int) -> float:
    """Cap 2d that holds for both metrics on any function."""
    if dim < 1:
        raise ValueError(f"dimension must be positive, got {dim}")
    return 2.0 * dim


@dataclass(frozen=True)
class MetricEstimate:
    """A Monte Carlo estimate with its standard error and sample count."""

    value: float
    std_error: float
    n_samples: int

    def __post_init__(self) -> None:
        if self.n_samples < 2:
            raise ValueError(f"need at least 2 samples, got {self.n_samples}")
        if not np.isfinite(self.value) or not np.isfinite(self.std_error):
            raise ValueError("estimate and standard error must be finite")
        if self.std_error < 0.0:
            raise ValueError(f"standard error cannot be negative, got {self.std_error}")


def _check_point_mu(x, smoothing: float) -> tuple[Array, float]:
    point = np.asarray(x, dtype=np.float64)
    if point.ndim != 1 or point.size == 0:
        raise ValueError(f"x must be a non-empty vector, got shape {point.shape}")
    mu = float(smoothing)
    if not np.isfinite(mu) or mu <= 0.0:
        raise ValueError(f"smoothing must be positive, got {smoothing!r}")
    return point, mu


def _signs(f, x: Array, mu: float, xi_a: Array, xi_b: Array) -> Array:
    """sign(f(x + mu a) - f(x + mu b)) per row, with ties counting as +1."""
    values_a = evaluate_points(f, x[None, :] + mu * xi_a)
    values_b = evaluate_points(f, x[None, :] + mu * xi_b)
    return np.where(values_a - values_b >= 0.0, 1.0, -1.0)


def _mean_and_se(total: float, total_sq: float, n: int) -> tuple[float, float]:
    mean = total / n
    var = max(total_sq - n * mean * mean, 0.0) / (n - 1)
    return mean, math.sqrt(var / n)


def signal_power(
    f,
    x,
    smoothing: float,
    n_samples: int = _DEFAULT_PAIR_SAMPLES,
    rng: np.random.Generator | None = None,
) -> MetricEstimate:
    """Squared norm of the mean pairwise estimate at x.

    The naive plug-in ``‖sample mean‖²`` over-shoots the true squared norm by
    tr(cov)/n, which matters exactly where the quantity is interesting (near
    a minimizer it is 0). The jackknife removes that bias for quadratic
    functionals and supplies the standard error, both computed from
    single-pass accumulators.
    """
    point, mu = _check_point_mu(x, smoothing)
    if n_samples < 2:
        raise ValueError(f"n_samples must be >= 2, got {n_samples}")
    rng = rng or np.random.default_rng()
    dim = point.shape[0]
    total = np.zeros(dim)  # sum of per-sample vectors v_i
    cross = np.zeros((dim, dim))  # sum of outer products v_i v_i^T
    weighted = np.zeros(dim)  # sum of ‖v_i‖² v_i
    sq_sum = 0.0  # sum of ‖v_i‖²
    sq_sq_sum = 0.0  # sum of ‖v_i‖⁴
    done = 0
    while done < n_samples:
        size = min(_CHUNK, n_samples - done)
        xi1 = rng.standard_normal((size, dim))
        xi2 = rng.standard_normal((size, dim))
        v = _signs(f, point, mu, xi1, xi2)[:, None] * (xi1 - xi2)
        q = np.einsum("ij,ij->i", v, v)
        total += v.sum(axis=0)
        cross += v.T @ v
        weighted += q @ v
        sq_sum += float(q.sum())
        sq_sq_sum += float((q * q).sum())
        done += size
    return _sqnorm_jackknife(total, cross, weighted, sq_sum, sq_sq_sum, n_samples)


def _sqnorm_jackknife(
    total: Array,
    cross: Array,
    weighted: Array,
    sq_sum: float,
    sq_sq_sum: float,
    n: int,
) -> MetricEstimate:
    """Jackknife estimate and SE for ‖mean of the samples‖².

    Works entirely from accumulated moments: with W the sample sum,
    p_i = <W, v_i> and q_i = ‖v_i‖², each leave-one-out value is
    (‖W‖² - 2 p_i + q_i) / (n-1)², and the needed sums of p_i, p_i²,
    p_i q_i, q_i, q_i² come from W, W^T cross W, <W, weighted>, sq_sum,
    sq_sq_sum.
    """
    w_sq = float(total @ total)
    plain = w_sq / (n * n)
    loo_scale = (n - 1.0) ** 2
    loo_mean = ((n - 2.0) * w_sq + sq_sum) / (n * loo_scale)
    value = n * plain - (n - 1.0) * loo_mean
    # Centered sums for the spread of the leave-one-out values.
    sum_p_sq = float(total @ cross @ total)
    sum_pq = float(total @ weighted)
    mean_p = w_sq / n
    mean_q = sq_sum / n
    centered_pp = max(sum_p_sq - n * mean_p * mean_p, 0.0)
    centered_qq = max(sq_sq_sum - n * mean_q * mean_q, 0.0)
    centered_pq = sum_pq - n * mean_p * mean_q
    spread = max(4.0 * centered_pp - 4.0 * centered_pq + centered_qq, 0.0) / loo_scale**2
    std_error = math.sqrt((n - 1.0) / n * spread)
    return MetricEstimate(value=value, std_error=std_error, n_samples=n)


def shared_direction_moment(
    f,
    x,
    smoothing: float,
    n_samples: int = _DEFAULT_PAIR_SAMPLES,
    rng: np.random.Generator | None = None,
) -> MetricEstimate:
    """E[s12 s13 <xi1 - xi2, xi1 - xi3>] at x: the shared-anchor cross term."""
    point, mu = _check_point_mu(x, smoothing)
    if n_samples < 2:
        raise ValueError(f"n_samples must be >= 2, got {n_samples}")
    rng = rng or np.random.default_rng()
    dim = point.shape[0]
    total = 0.0
    total_sq = 0.0
    done = 0
    while done < n_samples:
        size = min(_CHUNK, n_samples - done)
        xi1 = rng.standard_normal((size, dim))
        xi2 = rng.standard_normal((size, dim))
        xi3 = rng.standard_normal((size, dim))
        s12 = _signs(f, point, mu, xi1, xi2)
        s13 = _signs(f, point, mu, xi1, xi3)
        inner = np.einsum("ij,ij->i", xi1 - xi2, xi1 - xi3)
        samples = s12 * s13 * inner
        total += float(samples.sum())
        total_sq += float((samples * samples).sum())
        done += size
    mean, se = _mean_and_se(total, total_sq, n_samples)
    return MetricEstimate(value=mean, std_error=se, n_samples=n_samples)


def second_moment_bound(
    m: int, k: int, dim: int, signal: float, shared: float
) -> float:
    """Upper bound on E‖g‖² for an (m, k) ranking estimate.

    ``signal`` and ``shared`` may be estimates at a point or the generic 2d
    caps; the bound is 2d/|edges| + neighbor_pairs/|edges|² * shared + signal.
    """
    edges = edge_count(m, k)
    pairs = neighbor_pair_count(m, k)
    if dim < 1:
        raise ValueError(f"dimension must be positive, got {dim}")
    if signal < 0.0 or shared < 0.0:
        raise ValueError("metric values cannot be negative")
    return 2.0 * dim / edges + pairs / edges**2 * shared + signal


def empirical_second_moment(
    f,
    x,
    smoothing: float,
    *,
    num_directions: int,
    num_ranked: int,
    n_batches: int = _DEFAULT_BATCHES,
    rng: np.random.Generator | None = None,
) -> MetricEstimate:
    """Mean ‖g‖² over independent exactly-ranked batches at x.

    Reproduces the production pipeline (stable ordering, degree weights,
    edge-count normalization) in vectorized form across batches.
    """
    point, mu = _check_point_mu(x, smoothing)
    if n_batches < 2:
        raise ValueError(f"n_batches must be >= 2, got {n_batches}")
    m, k = num_directions, num_ranked
    edges = edge_count(m, k)  # validates (m, k) as a side effect
    rng = rng or np.random.default_rng()
    dim = point.shape[0]
    ranked_weights = 2.0 * np.arange(1, k + 1) - m - 1
    chunk = max(1, _CHUNK // m)
    total = 0.0
    total_sq = 0.0
    done = 0
    while done < n_batches:
        size = min(chunk, n_batches - done)
        dirs = rng.standard_normal((size, m, dim))
        flat = point[None, :] + mu * dirs.reshape(size * m, dim)
        values = evaluate_points(f, flat).reshape(size, m)
        order = np.argsort(values, axis=1, kind="stable")
        weights = np.full((size, m), float(k))
        np.put_along_axis(
            weights, order[:, :k], np.broadcast_to(ranked_weights, (size, k)), axis=1
        )
        grads = np.einsum("bm,bmd->bd", weights, dirs) / edges
        samples = np.einsum("bd,bd->b", grads, grads)
        total += float(samples.sum())
        total_sq += float((samples * samples).sum())
        done += size
    mean, se = _mean_and_se(total, total_sq, n_batches)
    return MetricEstimate(value=mean, std_error=se, n_samples=n_batches)


def descent_inner_product(
    f,
    grad_at_x,
    x,
    smoothing: float,
    n_samples: int = _DEFAULT_PAIR_SAMPLES,
    rng: np.random.Generator | None = None,
) -> MetricEstimate:
    """Mean <grad f(x), pairwise estimate> at x.

    On a linear function this converges to 2/sqrt(pi) times the gradient
    norm; shrinking the smoothing radius can only help on curved functions.
    """
    point, mu = _check_point_mu(x, smoothing)
    grad = np.asarray(grad_at_x, dtype=np.float64)
    if grad.shape != point.shape:
        raise ValueError(
            f"gradient shape {grad.shape} does not match point shape {point.shape}"
        )
    if n_samples < 2:
        raise ValueError(f"n_samples must be >= 2, got {n_samples}")
    rng = rng or np.random.default_rng()
    dim = point.shape[0]
    total = 0.0
    total_sq = 0.0
    done = 0
    while done < n_samples:
        size = min(_CHUNK, n_samples - done)
        xi1 = rng.standard_normal((size, dim))
        xi2 = rng.standard_normal((size, dim))
        signs = _signs(f, point, mu, xi1, xi2)
        samples = signs * ((xi1 - xi2) @ grad)
        total += float(samples.sum())
        total_sq += float((samples * samples).sum())
        done += size
    mean, se = _mean_and_se(total, total_sq, n_samples)
    return MetricEstimate(value=mean, std_error=se, n_samples=n_samples)
