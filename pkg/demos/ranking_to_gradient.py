"""From one ranked batch to a descent direction, by hand.

Walks the whole pipeline once at small scale: perturb a point, rank the
perturbed copies, expand the ranking into pairwise comparisons, and average
those comparisons into a direction worth stepping along.
"""

import numpy as np

from rankopt.estimator import (
    RankingOutcome,
    build_dag,
    edge_count,
    estimate_gradient,
    rank_weights,
    sample_perturbations,
)
from rankopt.oracles import ExactOracle
from rankopt.rng import DIRECTION_STREAM, make_rng

np.set_printoptions(precision=3, suppress=True)

# A bowl in two dimensions, so everything fits on screen. The current
# point sits away from the minimum; the true gradient points at [8, -4].
def f(x):
    return float(np.sum(np.square(x)))

x = np.array([4.0, -2.0])

# Draw m = 5 standard normal directions and place candidates at
# x + mu * direction. Small mu probes the local slope.
rng = make_rng(7, DIRECTION_STREAM)
batch = sample_perturbations(x, m=5, mu=0.1, rng=rng)
print("candidate points:")
print(batch.candidates)

# An exact oracle stands in for whoever ranks the candidates. Asking for
# k = 3 returns the indices of the three smallest values, best first,
# 1-based, without revealing any numbers.
oracle = ExactOracle(f)
outcome = oracle.rank(batch.candidates, 3)
print("oracle says (best first):", outcome.ordered_best)

# The ranking implies comparisons: each ranked index beats everything
# ranked after it and every unranked index. Unranked indices stay
# incomparable with each other.
dag = build_dag(outcome)
print("implied comparisons (winner, loser):", sorted(dag.edges))
print("count matches the closed form:", len(dag.edges) == edge_count(5, 3))

# Each comparison (i, j) contributes xi_j - xi_i, pointing from the winning
# perturbation toward the losing one, i.e. uphill. Averaging over all
# comparisons and stepping against the average walks downhill.
naive = np.zeros(2)
for i, j in sorted(dag.edges):
    naive += batch.directions[j - 1] - batch.directions[i - 1]
naive /= len(dag.edges)

# The library never loops over edges: position in the ranking determines a
# per-direction weight, and the weighted sum is the same vector in O(m d).
estimate = estimate_gradient(batch, outcome)
print("per-direction weights:", rank_weights(outcome))
print("edge average:        ", naive)
print("weighted form:       ", estimate.vector)

# The estimate correlates with the true gradient; a fixed step against it
# already lowers f.
grad = 2.0 * x
cosine = estimate.vector @ grad / (np.linalg.norm(estimate.vector) * np.linalg.norm(grad))
print(f"cosine to the true gradient: {cosine:.3f}")
step = x - 0.5 * estimate.vector
print(f"f before {f(x):.3f} -> after {f(step):.3f}")
