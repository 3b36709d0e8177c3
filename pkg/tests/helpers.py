"""Brute-force reference implementations shared across test modules.

These deliberately re-derive everything from first principles (literal
double loops, explicit edge sums) so the production code is checked against
independent arithmetic, not against itself.
"""

from __future__ import annotations

import numpy as np

from rankopt.estimator import ComparisonDag, PerturbationBatch, RankingOutcome


def brute_force_edges(outcome: RankingOutcome) -> set[tuple[int, int]]:
    """Edge set straight from the definition: ranked beats later-ranked and unranked."""
    ranked = list(outcome.ordered_best)
    unranked = [q for q in range(1, outcome.m + 1) if q not in ranked]
    edges = set()
    for a in range(len(ranked)):
        for b in range(a + 1, len(ranked)):
            edges.add((ranked[a], ranked[b]))
        for q in unranked:
            edges.add((ranked[a], q))
    return edges


def brute_force_neighbor_pairs(dag: ComparisonDag) -> int:
    """Ordered pairs of distinct undirected edges sharing their second endpoint.

    Literal quadratic loop over the doubled (both-orientations) edge list.
    """
    doubled = []
    for i, j in dag.edges:
        doubled.append((i, j))
        doubled.append((j, i))
    count = 0
    for i1, j1 in doubled:
        for i2, j2 in doubled:
            if j1 == j2 and i1 != i2:
                count += 1
    return count


def edge_sum_estimate(batch: PerturbationBatch, dag: ComparisonDag) -> np.ndarray:
    """Gradient estimate as the explicit average over DAG edges."""
    total = np.zeros(batch.dim)
    for i, j in sorted(dag.edges):
        total += batch.directions[j - 1] - batch.directions[i - 1]
    return total / len(dag.edges)


def random_outcome(m: int, k: int, rng: np.random.Generator) -> RankingOutcome:
    ordered = rng.permutation(m)[:k] + 1
    return RankingOutcome(m=m, ordered_best=tuple(int(i) for i in ordered))
