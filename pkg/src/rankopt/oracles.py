"""Ranking oracles over real-valued functions.

Every backend answers the same two questions: rank the k best points out of
m (best first), and pick the single best point. The exact backend orders by
true function values, the noisy backend perturbs each value with fresh
Gaussian noise per request, and the deferred backend parks the request until
an external answer arrives, which is how human feedback plugs in. A metering
wrapper counts evaluated points so every algorithm reports query budgets the
same way.

Returned indices are 1-based, matching the convention used throughout the
package for anything that crosses an oracle boundary. Exact ties order by
ascending index, deterministically.
"""

from __future__ import annotations

import secrets
import threading
from dataclasses import dataclass, field

import numpy as np

from .estimator import RankingOutcome

__all__ = [
    "OracleRequest",
    "NoiseSpec",
    "OracleValueError",
    "AlreadyResolvedError",
    "CancelledRequestError",
    "exact_rank",
    "noisy_rank",
    "argmin_select",
    "deferred_rank",
    "PendingRanking",
    "ExactOracle",
    "NoisyOracle",
    "ValueOracle",
    "MeteredOracle",
]

Array = np.ndarray


class OracleValueError(RuntimeError):
    """A queried point produced a non-finite function value.

    ``index`` is the 1-based position of the offending point in the request.
    """

    def __init__(self, message: str, index: int) -> None:
        super().__init__(message)
        self.index = index


class AlreadyResolvedError(RuntimeError):
    """A deferred request received a second answer; the first one stands."""


class CancelledRequestError(RuntimeError):
    """The session behind a deferred request was cancelled."""


@dataclass(frozen=True)
class OracleRequest:
    """An (m, k) ranking query: m points, asking for the k best."""

    points: Array
    k: int
    request_id: str = field(default_factory=lambda: secrets.token_hex(8))

    def __post_init__(self) -> None:
        points = np.array(self.points, dtype=np.float64)
        if points.ndim != 2 or points.shape[0] < 2:
            raise ValueError(
                f"points must be a 2-d array with at least 2 rows, got shape {points.shape}"
            )
        if not np.all(np.isfinite(points)):
            raise ValueError("points contain non-finite values")
        if not isinstance(self.k, (int, np.integer)) or not 1 <= self.k <= points.shape[0]:
            raise ValueError(f"k must be in 1..{points.shape[0]}, got {self.k!r}")
        points.setflags(write=False)
        object.__setattr__(self, "points", points)
        object.__setattr__(self, "k", int(self.k))

    @property
    def m(self) -> int:
        return self.points.shape[0]


@dataclass(frozen=True)
class NoiseSpec:
    """Additive Gaussian observation noise on function values."""

    sigma: float = 0.0

    def __post_init__(self) -> None:
        sigma = float(self.sigma)
        if not np.isfinite(sigma) or sigma < 0.0:
            raise ValueError(f"sigma must be finite and >= 0, got {self.sigma!r}")
        object.__setattr__(self, "sigma", sigma)


def evaluate_points(f, points: Array) -> Array:
    """Evaluate f at each row of points, using f.batch when available.

    Raises OracleValueError naming the first offending 1-based index if any
    value comes back non-finite.
    """
    batch = getattr(f, "batch", None)
    if callable(batch):
        values = np.asarray(batch(points), dtype=np.float64)
        if values.shape != (points.shape[0],):
            raise ValueError(
                f"batch evaluation returned shape {values.shape}, "
                f"expected ({points.shape[0]},)"
            )
    else:
        values = np.array([float(f(p)) for p in points])
    bad = np.flatnonzero(~np.isfinite(values))
    if bad.size:
        index = int(bad[0]) + 1
        raise OracleValueError(
            f"function value at point {index} is not finite ({values[bad[0]]})", index
        )
    return values


def _rank_values(values: Array, k: int) -> RankingOutcome:
    # Stable sort: ties resolve to the lower index, deterministically.
    order = np.argsort(values, kind="stable")
    ordered_best = tuple(int(i) + 1 for i in order[:k])
    return RankingOutcome(m=values.shape[0], ordered_best=ordered_best)


def exact_rank(f, request: OracleRequest) -> RankingOutcome:
    """Rank by true function values."""
    return _rank_values(evaluate_points(f, request.points), request.k)


def noisy_rank(
    f, request: OracleRequest, noise: NoiseSpec, rng: np.random.Generator
) -> RankingOutcome:
    """Rank by function values plus fresh i.i.d. Gaussian noise.

    Noise is drawn once per request; repeating a request redraws it. With
    sigma = 0 no draws are consumed at all, so a zero-noise run is
    bit-identical to an exact one.
    """
    values = evaluate_points(f, request.points)
    if noise.sigma > 0.0:
        values = values + rng.normal(0.0, noise.sigma, size=values.shape)
    return _rank_values(values, request.k)


def argmin_select(f, points) -> int:
    """1-based index of the point with the smallest value (ties: lowest index)."""
    pts = np.asarray(points, dtype=np.float64)
    if pts.ndim != 2 or pts.shape[0] < 1:
        raise ValueError(f"points must be a non-empty 2-d array, got shape {pts.shape}")
    values = evaluate_points(f, pts)
    return int(np.argmin(values)) + 1


class PendingRanking:
    """A ranking request waiting for an external answer.

    ``resolve`` validates the answer against the request: indices must be
    distinct, within 1..m, and no more than k of them; shorter answers are
    allowed because the answerer picks how many to rank. A malformed answer
    raises and leaves the request pending; a second valid answer raises
    AlreadyResolvedError. ``wait`` blocks until resolution, cancellation, or
    timeout.
    """

    def __init__(self, request: OracleRequest) -> None:
        self.request = request
        self._outcome: RankingOutcome | None = None
        self._cancelled = False
        self._event = threading.Event()
        self._lock = threading.Lock()

    @property
    def resolved(self) -> bool:
        return self._outcome is not None

    @property
    def cancelled(self) -> bool:
        return self._cancelled

    def resolve(self, ordered_best) -> RankingOutcome:
        with self._lock:
            if self._cancelled:
                raise CancelledRequestError(
                    f"request {self.request.request_id} was cancelled"
                )
            if self._outcome is not None:
                raise AlreadyResolvedError(
                    f"request {self.request.request_id} already has an answer"
                )
            ordered = tuple(int(i) for i in ordered_best)
            if len(ordered) > self.request.k:
                raise ValueError(
                    f"answer ranks {len(ordered)} points but the request allows "
                    f"at most {self.request.k}"
                )
            # RankingOutcome enforces distinctness, bounds, and non-emptiness.
            outcome = RankingOutcome(m=self.request.m, ordered_best=ordered)
            self._outcome = outcome
            self._event.set()
            return outcome

    def cancel(self) -> None:
        with self._lock:
            if self._outcome is None:
                self._cancelled = True
                self._event.set()

    def wait(self, timeout: float | None = None) -> RankingOutcome:
        if not self._event.wait(timeout):
            raise TimeoutError(
                f"request {self.request.request_id} unanswered after {timeout}s"
            )
        if self._cancelled:
            raise CancelledRequestError(
                f"request {self.request.request_id} was cancelled"
            )
        assert self._outcome is not None
        return self._outcome


def deferred_rank(request: OracleRequest) -> PendingRanking:
    """Park a ranking request until someone answers it."""
    return PendingRanking(request)


class ExactOracle:
    """Ranks and selects by true function values."""

    def __init__(self, f) -> None:
        self._f = f

    def rank(self, points, k: int) -> RankingOutcome:
        return exact_rank(self._f, OracleRequest(points=points, k=k))

    def select(self, points) -> int:
        return argmin_select(self._f, points)


class NoisyOracle:
    """Ranks and selects by noise-perturbed function values.

    Each request perturbs the true values with fresh N(0, sigma²) draws from
    the supplied generator, which should be a dedicated noise stream.
    """

    def __init__(self, f, noise: NoiseSpec, rng: np.random.Generator) -> None:
        self._f = f
        self.noise = noise
        self._rng = rng

    def _noisy_values(self, points: Array) -> Array:
        values = evaluate_points(self._f, points)
        if self.noise.sigma > 0.0:
            values = values + self._rng.normal(0.0, self.noise.sigma, size=values.shape)
        return values

    def rank(self, points, k: int) -> RankingOutcome:
        request = OracleRequest(points=points, k=k)
        return _rank_values(self._noisy_values(request.points), request.k)

    def select(self, points) -> int:
        pts = np.asarray(points, dtype=np.float64)
        if pts.ndim != 2 or pts.shape[0] < 1:
            raise ValueError(f"points must be a non-empty 2-d array, got shape {pts.shape}")
        return int(np.argmin(self._noisy_values(pts))) + 1


class ValueOracle:
    """Returns raw (optionally noise-perturbed) function values.

    Backs the finite-difference baseline, which needs numbers, not ranks.
    """

    def __init__(
        self,
        f,
        noise: NoiseSpec | None = None,
        rng: np.random.Generator | None = None,
    ) -> None:
        if noise is not None and noise.sigma > 0.0 and rng is None:
            raise ValueError("a noise stream requires a generator")
        self._f = f
        self.noise = noise or NoiseSpec(0.0)
        self._rng = rng

    def values(self, points) -> Array:
        pts = np.asarray(points, dtype=np.float64)
        values = evaluate_points(self._f, pts)
        if self.noise.sigma > 0.0:
            assert self._rng is not None
            values = values + self._rng.normal(0.0, self.noise.sigma, size=values.shape)
        return values

    def select(self, points) -> int:
        return int(np.argmin(self.values(points))) + 1


class MeteredOracle:
    """Counts every point the wrapped oracle evaluates.

    All algorithms meter identically: each call adds the number of points it
    submits, whatever the backend does with them.
    """

    def __init__(self, inner) -> None:
        self._inner = inner
        self.queries = 0

    def rank(self, points, k: int) -> RankingOutcome:
        self.queries += int(np.asarray(points).shape[0])
        return self._inner.rank(points, k)

    def select(self, points) -> int:
        self.queries += int(np.asarray(points).shape[0])
        return self._inner.select(points)

    def values(self, points) -> Array:
        self.queries += int(np.asarray(points).shape[0])
        return self._inner.values(points)
