"""Gradient estimation from ranking feedback.

A query perturbs a base point along m Gaussian directions and a ranking
oracle returns the indices of the k best perturbed points, best first. The
outcome expands into a comparison DAG: one edge per ordered pair the ranking
pins down. Each edge (i, j), meaning point i beat point j, contributes the
two-point estimate ``directions[j] - directions[i]``, and the edge average is
the gradient estimate. Counting in/out degrees collapses the edge sum into a
single weighted sum over directions, which is the form computed here; the
explicit edge sum survives only in tests as a cross-check.

Oracle indices are 1-based everywhere they cross an API boundary (ranking
outcomes, DAG nodes and edges, selection results); positions inside numpy
arrays stay 0-based.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "PerturbationBatch",
    "RankingOutcome",
    "ComparisonDag",
    "GradientEstimate",
    "sample_perturbations",
    "build_dag",
    "edge_count",
    "neighbor_pair_count",
    "rank_weights",
    "estimate_gradient",
    "pairwise_estimate",
]

Array = np.ndarray


def _frozen_array(values, name: str, *, ndim: int) -> Array:
    out = np.array(values, dtype=np.float64)
    if out.ndim != ndim:
        raise ValueError(f"{name} must be {ndim}-dimensional, got shape {out.shape}")
    if out.size == 0:
        raise ValueError(f"{name} must be non-empty")
    if not np.all(np.isfinite(out)):
        raise ValueError(f"{name} contains non-finite values")
    out.setflags(write=False)
    return out


@dataclass(frozen=True)
class PerturbationBatch:
    """One oracle query's worth of perturbed points.

    ``candidates`` is derived: row i equals ``base_point + mu * directions[i]``
    bit for bit. Directions are kept alongside the points so estimators never
    reconstruct them by dividing through mu.
    """

    base_point: Array
    mu: float
    directions: Array
    candidates: Array = None  # type: ignore[assignment]

    def __post_init__(self) -> None:
        base = _frozen_array(self.base_point, "base_point", ndim=1)
        directions = _frozen_array(self.directions, "directions", ndim=2)
        mu = float(self.mu)
        if not np.isfinite(mu) or mu <= 0.0:
            raise ValueError(f"mu must be positive and finite, got {mu}")
        if directions.shape[0] < 2:
            raise ValueError("a batch needs at least 2 directions")
        if directions.shape[1] != base.shape[0]:
            raise ValueError(
                f"direction dimension {directions.shape[1]} does not match "
                f"base point dimension {base.shape[0]}"
            )
        derived = base + mu * directions
        derived.setflags(write=False)
        if self.candidates is not None:
            given = np.array(self.candidates, dtype=np.float64)
            if given.shape != derived.shape or not np.array_equal(given, derived):
                raise ValueError(
                    "candidates must equal base_point + mu * directions exactly"
                )
        object.__setattr__(self, "base_point", base)
        object.__setattr__(self, "mu", mu)
        object.__setattr__(self, "directions", directions)
        object.__setattr__(self, "candidates", derived)

    @property
    def m(self) -> int:
        return self.directions.shape[0]

    @property
    def dim(self) -> int:
        return self.base_point.shape[0]


@dataclass(frozen=True)
class RankingOutcome:
    """Ranked indices returned by an (m, k) oracle, best first, 1-based."""

    m: int
    ordered_best: tuple[int, ...]

    def __post_init__(self) -> None:
        if not isinstance(self.m, (int, np.integer)) or self.m < 2:
            raise ValueError(f"m must be an integer >= 2, got {self.m!r}")
        ordered = tuple(int(i) for i in self.ordered_best)
        if not 1 <= len(ordered) <= self.m:
            raise ValueError(
                f"ranking must name between 1 and {self.m} indices, got {len(ordered)}"
            )
        if len(set(ordered)) != len(ordered):
            raise ValueError(f"ranking contains repeated indices: {ordered}")
        for i in ordered:
            if not 1 <= i <= self.m:
                raise ValueError(f"index {i} outside 1..{self.m}")
        object.__setattr__(self, "m", int(self.m))
        object.__setattr__(self, "ordered_best", ordered)

    @property
    def k(self) -> int:
        return len(self.ordered_best)


@dataclass(frozen=True)
class ComparisonDag:
    """Directed comparisons implied by a ranking; edge (i, j) means i beat j."""

    node_count: int
    edges: frozenset[tuple[int, int]]

    def __post_init__(self) -> None:
        if self.node_count < 2:
            raise ValueError("a comparison DAG needs at least 2 nodes")
        edges = frozenset((int(i), int(j)) for i, j in self.edges)
        for i, j in edges:
            if i == j:
                raise ValueError(f"self-comparison ({i}, {j}) is not allowed")
            if not (1 <= i <= self.node_count and 1 <= j <= self.node_count):
                raise ValueError(f"edge ({i}, {j}) outside 1..{self.node_count}")
        object.__setattr__(self, "edges", edges)


@dataclass(frozen=True)
class GradientEstimate:
    """Edge-averaged gradient estimate and the per-direction weights behind it.

    ``vector`` points uphill in expectation; descent updates subtract it.
    ``weights[i]`` is the coefficient of ``directions[i]`` (oracle index i+1)
    in the pre-average sum, so ``vector == weights @ directions / edge_count``
    and the weights always sum to zero.
    """

    vector: Array
    edge_count: int
    weights: Array

    def __post_init__(self) -> None:
        vector = _frozen_array(self.vector, "vector", ndim=1)
        weights = _frozen_array(self.weights, "weights", ndim=1)
        if self.edge_count < 1:
            raise ValueError(f"edge_count must be positive, got {self.edge_count}")
        object.__setattr__(self, "vector", vector)
        object.__setattr__(self, "weights", weights)
        object.__setattr__(self, "edge_count", int(self.edge_count))


def sample_perturbations(
    base_point, m: int, mu: float, rng: np.random.Generator
) -> PerturbationBatch:
    """Draw m i.i.d. standard normal directions around a base point."""
    if not isinstance(m, (int, np.integer)) or m < 2:
        raise ValueError(f"m must be an integer >= 2, got {m!r}")
    base = np.asarray(base_point, dtype=np.float64)
    if base.ndim != 1 or base.size == 0:
        raise ValueError(f"base_point must be a non-empty vector, got shape {base.shape}")
    directions = rng.standard_normal((int(m), base.shape[0]))
    return PerturbationBatch(base_point=base, mu=mu, directions=directions)


def build_dag(outcome: RankingOutcome) -> ComparisonDag:
    """Expand a ranking into every pairwise comparison it implies.

    Ranked indices beat everything ranked after them and every unranked
    index; unranked indices are mutually incomparable.
    """
    ranked = outcome.ordered_best
    unranked = [q for q in range(1, outcome.m + 1) if q not in set(ranked)]
    edges: set[tuple[int, int]] = set()
    for pos, i in enumerate(ranked):
        for j in ranked[pos + 1 :]:
            edges.add((i, j))
        for q in unranked:
            edges.add((i, q))
    return ComparisonDag(node_count=outcome.m, edges=frozenset(edges))


def _check_mk(m: int, k: int) -> tuple[int, int]:
    if not isinstance(m, (int, np.integer)) or m < 2:
        raise ValueError(f"m must be an integer >= 2, got {m!r}")
    if not isinstance(k, (int, np.integer)) or not 1 <= k <= m:
        raise ValueError(f"k must be an integer in 1..{m}, got {k!r}")
    return int(m), int(k)


def edge_count(m: int, k: int) -> int:
    """Number of comparisons an (m, k) ranking pins down: km - (k² + k)/2."""
    m, k = _check_mk(m, k)
    return k * m - (k * k + k) // 2


def neighbor_pair_count(m: int, k: int) -> int:
    """Number of ordered pairs of distinct edges sharing an endpoint.

    Counted over the undirected copy of the comparison DAG; equals
    sum(deg(v) * (deg(v) - 1)) over nodes, with closed form
    m²k + mk² - k³ + k² - 4mk + 2k.
    """
    m, k = _check_mk(m, k)
    return m * m * k + m * k * k - k**3 + k * k - 4 * m * k + 2 * k


def rank_weights(outcome: RankingOutcome) -> Array:
    """Per-direction weights equivalent to summing over all DAG edges.

    The index ranked j-th (1-based) gets weight 2j - m - 1, every unranked
    index gets weight k; the weights sum to zero. Position i in the returned
    array is oracle index i+1.
    """
    m, k = outcome.m, outcome.k
    weights = np.full(m, float(k))
    for pos, i in enumerate(outcome.ordered_best, start=1):
        weights[i - 1] = float(2 * pos - m - 1)
    weights.setflags(write=False)
    return weights


def estimate_gradient(
    batch: PerturbationBatch, outcome: RankingOutcome
) -> GradientEstimate:
    """Average the two-point estimates over every comparison in the outcome.

    Computed as the degree-weighted sum ``weights @ directions / |edges|``,
    which is algebraically identical to summing ``xi_j - xi_i`` over DAG
    edges but costs O(m d) instead of O(m² d).
    """
    if outcome.m != batch.m:
        raise ValueError(
            f"outcome ranks {outcome.m} points but batch has {batch.m} directions"
        )
    weights = rank_weights(outcome)
    n_edges = edge_count(outcome.m, outcome.k)
    vector = (weights @ batch.directions) / float(n_edges)
    return GradientEstimate(vector=vector, edge_count=n_edges, weights=weights)


def pairwise_estimate(f_sign: float, xi1, xi2) -> Array:
    """Two-point estimate sign(f(x + mu xi1) - f(x + mu xi2)) * (xi1 - xi2).

    The caller supplies the sign (ties count as +1). Flipping the sign and
    swapping the arguments are the same operation, which is how the (m=2, k=1)
    ranking pipeline reduces to this estimator.
    """
    sign = float(f_sign)
    if sign not in (-1.0, 1.0):
        raise ValueError(f"f_sign must be -1 or +1, got {f_sign!r}")
    a = np.asarray(xi1, dtype=np.float64)
    b = np.asarray(xi2, dtype=np.float64)
    if a.shape != b.shape or a.ndim != 1:
        raise ValueError(f"direction shapes differ: {a.shape} vs {b.shape}")
    return sign * (a - b)
