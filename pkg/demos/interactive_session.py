"""The feedback loop a human answers, driven here by a scripted stand-in.

The interactive optimizer is written as pure state transitions: propose a
ranking round, fold the answer in, propose a selection round, move or stay.
Nothing in the transitions knows where answers come from, which is exactly
what lets the HTTP service and this script share the arithmetic. A robot
answerer with a hidden objective plays the human, and a renderer turns
vectors into the payloads a person would actually look at.
"""

import numpy as np

from rankopt.optimize import (
    InteractiveConfig,
    apply_ranking,
    apply_selection,
    initial_state,
    propose_rank_batch,
    select_candidates,
)
from rankopt.oracles import ExactOracle
from rankopt.rng import DIRECTION_STREAM, make_rng
from rankopt.service.renderers import RendererSpec, render

np.set_printoptions(precision=3, suppress=True)

# The hidden objective: distance to a target color, in the 3-vector space a
# sigmoid maps onto RGB. The "human" prefers swatches closer to the target.
target = np.array([0.8, -0.4, 0.2])
def preference(x):
    return float(np.sum(np.square(np.asarray(x) - target)))

robot = ExactOracle(preference)
config = InteractiveConfig(num_directions=6, step_size=1.0, smoothing=0.1)
rng = make_rng(23, DIRECTION_STREAM)
state = initial_state(np.zeros(3))

# What the answerer would see: each candidate rendered as a 64x64 PNG.
swatch = RendererSpec(id="color-swatch", dim=3)
payload = render(swatch, state.best_point)
print(f"payload: {payload.media_type}, {payload.encoding}, {len(payload.data)} chars")

for round_number in range(1, 9):
    # Rank phase: six perturbed copies of the anchor go out; the answerer
    # returns their order, best first. Ranking everything (k = m) feeds the
    # estimate the most comparisons per round.
    batch = propose_rank_batch(state, config, rng)
    outcome = robot.rank(batch.candidates, config.num_directions)
    state = apply_ranking(state, config, batch, outcome)

    # Select phase: the anchor, the round's best candidate, and five trial
    # steps along the averaged estimate. One tap picks the new anchor; the
    # averaged estimate survives only while the anchor stays put.
    candidates = select_candidates(state, config)
    winner = robot.select(candidates)
    state, moved = apply_selection(state, config, candidates, winner)
    print(
        f"round {round_number}: picked row {winner} "
        f"({'moved' if moved else 'stayed'}), "
        f"preference {preference(state.best_point):.4f}"
    )

print("final point:", state.best_point)
print("target:     ", target)

# The HTTP service wraps these same transitions behind five endpoints and
# an append-only event log per session:
#
#     rankopt serve --config service.json
#
#     POST /sessions                     -> session id + first rank batch
#     GET  /sessions/{id}/batch          -> pending batch (points + payloads)
#     POST /sessions/{id}/rankings       -> ordered candidate ids
#     POST /sessions/{id}/selections     -> one winning candidate id
#     GET  /sessions/{id}/export         -> the trajectory as JSON lines
#
# Restarting the service replays the logs and every pending batch comes
# back byte for byte; submitting the same answer twice replays the stored
# response instead of double-stepping the optimizer.
