"""Descent loops driven by ranking feedback.

Three step families share one runner: plain rank-based steps (rank m
perturbed points, move against the edge-averaged estimate), the two-point
pairwise special case, and a finite-difference baseline that needs raw
values instead of ranks. An optional line search replaces the fixed step
with a selection query over geometrically shrunk trial steps.

The interactive loop used for human feedback is phrased as pure state
transitions (propose a batch, apply a ranking, apply a selection) so a
synchronous run and an HTTP session can share the exact same arithmetic;
``interactive_step`` composes one phase transition for in-process use.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .estimator import (
    GradientEstimate,
    PerturbationBatch,
    estimate_gradient,
    pairwise_estimate,
    sample_perturbations,
)

__all__ = [
    "LineSearchSpec",
    "OptimizerConfig",
    "IterationRecord",
    "InteractiveConfig",
    "InteractiveState",
    "HORIZON_SCHEDULE",
    "resolve_schedule",
    "zo_rank_sgd_step",
    "pairwise_step",
    "zo_sgd_step",
    "line_search_step",
    "run",
    "initial_state",
    "propose_rank_batch",
    "apply_ranking",
    "select_candidates",
    "apply_selection",
    "interactive_step",
    "run_interactive",
    "query_budget_stop",
    "write_trajectory",
    "read_trajectory",
    "TRAJECTORY_FORMAT",
    "TRAJECTORY_VERSION",
]

Array = np.ndarray

HORIZON_SCHEDULE = "horizon"

RANK_PHASE = "rank"
SELECT_PHASE = "select"


@dataclass(frozen=True)
class LineSearchSpec:
    """Selection query over trial steps x - step * shrink^p * g.

    ``num_candidates`` counts the unmoved point plus the trials, so exponents
    run p = 1..num_candidates-1; staying put is always on the menu, which
    makes exact-oracle runs monotone in f.
    """

    num_candidates: int = 5
    shrink: float = 0.1

    def __post_init__(self) -> None:
        if not isinstance(self.num_candidates, (int, np.integer)) or self.num_candidates < 2:
            raise ValueError(
                f"num_candidates must be an integer >= 2, got {self.num_candidates!r}"
            )
        shrink = float(self.shrink)
        if not 0.0 < shrink < 1.0:
            raise ValueError(f"shrink must lie in (0, 1), got {self.shrink!r}")
        object.__setattr__(self, "num_candidates", int(self.num_candidates))
        object.__setattr__(self, "shrink", shrink)


@dataclass(frozen=True)
class OptimizerConfig:
    """Settings for a fixed-length descent run.

    ``num_directions`` (m) points are ranked per iteration and the oracle
    returns the best ``num_ranked`` (k) of them. With ``schedule`` set to
    ``"horizon"``, step size and smoothing are derived from the dimension and
    iteration budget as sqrt(1/(d T)) and smoothing_scale * sqrt(d / T); the
    scale stands in for a dimension constant with no closed form and defaults
    to 1. ``decay`` multiplies both step size and smoothing after every
    iteration.
    """

    num_directions: int
    num_ranked: int
    step_size: float | None = None
    smoothing: float | None = None
    iterations: int = 100
    line_search: LineSearchSpec | None = None
    decay: float = 1.0
    schedule: str | None = None
    smoothing_scale: float = 1.0

    def __post_init__(self) -> None:
        if not isinstance(self.num_directions, (int, np.integer)) or self.num_directions < 2:
            raise ValueError(
                f"num_directions must be an integer >= 2, got {self.num_directions!r}"
            )
        if (
            not isinstance(self.num_ranked, (int, np.integer))
            or not 1 <= self.num_ranked <= self.num_directions
        ):
            raise ValueError(
                f"num_ranked must lie in 1..{self.num_directions}, got {self.num_ranked!r}"
            )
        if not isinstance(self.iterations, (int, np.integer)) or self.iterations < 0:
            raise ValueError(f"iterations must be an integer >= 0, got {self.iterations!r}")
        decay = float(self.decay)
        if not 0.0 < decay <= 1.0:
            raise ValueError(f"decay must lie in (0, 1], got {self.decay!r}")
        if self.schedule not in (None, HORIZON_SCHEDULE):
            raise ValueError(f"unknown schedule {self.schedule!r}")
        scale = float(self.smoothing_scale)
        if not np.isfinite(scale) or scale <= 0.0:
            raise ValueError(f"smoothing_scale must be positive, got {self.smoothing_scale!r}")
        if self.schedule is None:
            for name in ("step_size", "smoothing"):
                value = getattr(self, name)
                if value is None or not np.isfinite(float(value)) or float(value) <= 0.0:
                    raise ValueError(f"{name} must be positive without a schedule, got {value!r}")
                object.__setattr__(self, name, float(value))
        object.__setattr__(self, "num_directions", int(self.num_directions))
        object.__setattr__(self, "num_ranked", int(self.num_ranked))
        object.__setattr__(self, "iterations", int(self.iterations))
        object.__setattr__(self, "decay", decay)
        object.__setattr__(self, "smoothing_scale", scale)


def resolve_schedule(config: OptimizerConfig, dim: int) -> tuple[float, float]:
    """Initial (step_size, smoothing), deriving them from (d, T) if scheduled."""
    if dim < 1:
        raise ValueError(f"dimension must be positive, got {dim}")
    if config.schedule == HORIZON_SCHEDULE:
        if config.iterations < 1:
            raise ValueError("the horizon schedule needs at least 1 iteration")
        step = math.sqrt(1.0 / (dim * config.iterations))
        smoothing = config.smoothing_scale * math.sqrt(dim / config.iterations)
        return step, smoothing
    assert config.step_size is not None and config.smoothing is not None
    return config.step_size, config.smoothing


@dataclass(frozen=True)
class IterationRecord:
    """What one iteration did: where it moved, what it cost, what it saw.

    ``queries`` counts oracle points consumed by this iteration alone;
    ``accepted_exponent`` is the line-search exponent that won (None when the
    run has no line search or the unmoved point won); ``f_value`` is the true
    objective at ``point_after`` when the caller knows the function.
    """

    t: int
    point_before: Array
    point_after: Array
    grad_norm: float
    queries: int
    step_size: float
    smoothing: float
    accepted_exponent: int | None = None
    f_value: float | None = None

    def __post_init__(self) -> None:
        before = np.array(self.point_before, dtype=np.float64)
        after = np.array(self.point_after, dtype=np.float64)
        before.setflags(write=False)
        after.setflags(write=False)
        object.__setattr__(self, "point_before", before)
        object.__setattr__(self, "point_after", after)


def zo_rank_sgd_step(
    x: Array,
    oracle,
    rng: np.random.Generator,
    *,
    num_directions: int,
    num_ranked: int,
    step_size: float,
    smoothing: float,
) -> tuple[Array, GradientEstimate, PerturbationBatch]:
    """One rank-feedback descent step: perturb, rank, move against the estimate."""
    batch = sample_perturbations(x, num_directions, smoothing, rng)
    outcome = oracle.rank(batch.candidates, num_ranked)
    estimate = estimate_gradient(batch, outcome)
    return x - step_size * estimate.vector, estimate, batch


def pairwise_step(
    x: Array,
    oracle,
    rng: np.random.Generator,
    *,
    step_size: float,
    smoothing: float,
) -> tuple[Array, GradientEstimate, PerturbationBatch]:
    """One two-point comparison step.

    The comparison winner fixes the sign: if the first perturbation wins the
    estimate is -(xi1 - xi2), otherwise +(xi1 - xi2). This is the (m=2, k=1)
    ranking step computed through the explicit sign form.
    """
    batch = sample_perturbations(x, 2, smoothing, rng)
    winner = oracle.rank(batch.candidates, 1).ordered_best[0]
    f_sign = -1.0 if winner == 1 else 1.0
    vector = pairwise_estimate(f_sign, batch.directions[0], batch.directions[1])
    weights = np.array([f_sign, -f_sign])
    estimate = GradientEstimate(vector=vector, edge_count=1, weights=weights)
    return x - step_size * estimate.vector, estimate, batch


def zo_sgd_step(
    x: Array,
    value_oracle,
    rng: np.random.Generator,
    *,
    num_directions: int,
    step_size: float,
    smoothing: float,
) -> tuple[Array, Array]:
    """One forward-difference step from raw values: m directions plus the center."""
    if num_directions < 1:
        raise ValueError(f"num_directions must be >= 1, got {num_directions}")
    dim = x.shape[0]
    directions = rng.standard_normal((num_directions, dim))
    points = np.vstack([x[None, :], x + smoothing * directions])
    values = value_oracle.values(points)
    coeffs = (values[1:] - values[0]) / smoothing
    grad = (coeffs @ directions) / num_directions
    return x - step_size * grad, grad


def line_search_step(
    x: Array,
    grad: Array,
    select_oracle,
    *,
    step_size: float,
    spec: LineSearchSpec,
) -> tuple[Array, int | None]:
    """Pick the best of x and its geometrically shrunk trial steps.

    Returns the winning point and the accepted exponent p (trial points use
    step_size * shrink^p for p = 1..num_candidates-1), or (x, None) when the
    unmoved point wins.
    """
    scales = step_size * spec.shrink ** np.arange(1, spec.num_candidates)
    candidates = np.vstack([x[None, :], x[None, :] - scales[:, None] * grad[None, :]])
    winner = select_oracle.select(candidates)
    if winner == 1:
        return x, None
    return candidates[winner - 1], winner - 1


def query_budget_stop(max_queries: int):
    """Stop rule: halt once cumulative iteration queries reach the budget."""
    if max_queries < 1:
        raise ValueError(f"max_queries must be positive, got {max_queries}")

    def stop(records: list[IterationRecord]) -> bool:
        return sum(r.queries for r in records) >= max_queries

    return stop


def run(
    config: OptimizerConfig,
    oracle,
    x0,
    rng: np.random.Generator,
    *,
    algorithm: str = "rank",
    objective=None,
    stop=None,
) -> list[IterationRecord]:
    """Run a full descent loop and return one record per iteration.

    ``algorithm`` picks the step family: "rank" (rank m points per
    iteration), "pairwise" (two-point comparisons; requires m=2, k=1), or
    "value" (finite differences; the oracle must expose raw values). The
    optional ``stop`` callable sees the records so far after each iteration
    and returns True to halt early. ``objective``, when given, fills in true
    f values on the records.
    """
    if algorithm not in ("rank", "pairwise", "value"):
        raise ValueError(f"unknown algorithm {algorithm!r}")
    if algorithm == "pairwise" and (config.num_directions, config.num_ranked) != (2, 1):
        raise ValueError("pairwise runs require num_directions=2, num_ranked=1")
    x = np.array(x0, dtype=np.float64)
    if x.ndim != 1 or x.size == 0:
        raise ValueError(f"x0 must be a non-empty vector, got shape {x.shape}")
    step_size, smoothing = resolve_schedule(config, x.shape[0])
    records: list[IterationRecord] = []
    for t in range(1, config.iterations + 1):
        if algorithm == "rank":
            moved, estimate, _ = zo_rank_sgd_step(
                x,
                oracle,
                rng,
                num_directions=config.num_directions,
                num_ranked=config.num_ranked,
                step_size=step_size,
                smoothing=smoothing,
            )
            grad = estimate.vector
            queries = config.num_directions
        elif algorithm == "pairwise":
            moved, estimate, _ = pairwise_step(
                x, oracle, rng, step_size=step_size, smoothing=smoothing
            )
            grad = estimate.vector
            queries = 2
        else:
            moved, grad = zo_sgd_step(
                x,
                oracle,
                rng,
                num_directions=config.num_directions,
                step_size=step_size,
                smoothing=smoothing,
            )
            queries = config.num_directions + 1
        exponent: int | None = None
        if config.line_search is not None:
            moved, exponent = line_search_step(
                x, grad, oracle, step_size=step_size, spec=config.line_search
            )
            queries += config.line_search.num_candidates
        records.append(
            IterationRecord(
                t=t,
                point_before=x,
                point_after=moved,
                grad_norm=float(np.linalg.norm(grad)),
                queries=queries,
                step_size=step_size,
                smoothing=smoothing,
                accepted_exponent=exponent,
                f_value=float(objective(moved)) if objective is not None else None,
            )
        )
        x = moved
        step_size *= config.decay
        smoothing *= config.decay
        if stop is not None and stop(records):
            break
    return records


# --- interactive loop -------------------------------------------------------


@dataclass(frozen=True)
class InteractiveConfig:
    """Settings for the feedback-driven loop.

    ``num_directions`` candidates are offered per ranking round; the answerer
    ranks as many as they like (up to m). Selection rounds offer the current
    point, the round's best candidate, and trial steps along the averaged
    estimate scaled by shrink^p for p = 0..num_directions-2.
    """

    num_directions: int = 6
    step_size: float = 1.0
    smoothing: float = 0.1
    shrink: float = 0.5

    def __post_init__(self) -> None:
        if not isinstance(self.num_directions, (int, np.integer)) or self.num_directions < 2:
            raise ValueError(
                f"num_directions must be an integer >= 2, got {self.num_directions!r}"
            )
        step = float(self.step_size)
        smoothing = float(self.smoothing)
        shrink = float(self.shrink)
        if not np.isfinite(step) or step <= 0.0:
            raise ValueError(f"step_size must be positive, got {self.step_size!r}")
        if not np.isfinite(smoothing) or smoothing <= 0.0:
            raise ValueError(f"smoothing must be positive, got {self.smoothing!r}")
        if not 0.0 < shrink < 1.0:
            raise ValueError(f"shrink must lie in (0, 1), got {self.shrink!r}")
        object.__setattr__(self, "num_directions", int(self.num_directions))
        object.__setattr__(self, "step_size", step)
        object.__setattr__(self, "smoothing", smoothing)
        object.__setattr__(self, "shrink", shrink)


@dataclass(frozen=True)
class InteractiveState:
    """Where the feedback-driven loop stands between queries.

    ``grad_memory`` is the running mean of the ``averaged_count`` gradient
    estimates folded in since the last accepted move; both reset when a
    selection moves the anchor point. ``candidate_best`` is the top-ranked
    point of the latest ranking round and only exists in the select phase.
    """

    best_point: Array
    grad_memory: Array
    averaged_count: int
    phase: str
    candidate_best: Array | None = None

    def __post_init__(self) -> None:
        best = np.array(self.best_point, dtype=np.float64)
        memory = np.array(self.grad_memory, dtype=np.float64)
        if best.ndim != 1 or best.size == 0:
            raise ValueError(f"best_point must be a non-empty vector, got {best.shape}")
        if memory.shape != best.shape:
            raise ValueError("grad_memory must match best_point's shape")
        if self.phase not in (RANK_PHASE, SELECT_PHASE):
            raise ValueError(f"phase must be 'rank' or 'select', got {self.phase!r}")
        if self.averaged_count < 0:
            raise ValueError("averaged_count cannot be negative")
        if self.averaged_count == 0 and np.any(memory != 0.0):
            raise ValueError("grad_memory must be zero when nothing has been averaged")
        if self.phase == SELECT_PHASE:
            if self.candidate_best is None:
                raise ValueError("select phase requires candidate_best")
            cand = np.array(self.candidate_best, dtype=np.float64)
            if cand.shape != best.shape:
                raise ValueError("candidate_best must match best_point's shape")
            cand.setflags(write=False)
            object.__setattr__(self, "candidate_best", cand)
        elif self.candidate_best is not None:
            raise ValueError("candidate_best only exists in the select phase")
        best.setflags(write=False)
        memory.setflags(write=False)
        object.__setattr__(self, "best_point", best)
        object.__setattr__(self, "grad_memory", memory)
        object.__setattr__(self, "averaged_count", int(self.averaged_count))

    @property
    def dim(self) -> int:
        return self.best_point.shape[0]


def initial_state(x0) -> InteractiveState:
    x = np.asarray(x0, dtype=np.float64)
    return InteractiveState(
        best_point=x,
        grad_memory=np.zeros_like(x),
        averaged_count=0,
        phase=RANK_PHASE,
    )


def propose_rank_batch(
    state: InteractiveState, config: InteractiveConfig, rng: np.random.Generator
) -> PerturbationBatch:
    """Sample the next ranking round's candidates around the anchor point."""
    if state.phase != RANK_PHASE:
        raise ValueError(f"cannot propose a rank batch in phase {state.phase!r}")
    return sample_perturbations(
        state.best_point, config.num_directions, config.smoothing, rng
    )


def apply_ranking(
    state: InteractiveState,
    config: InteractiveConfig,
    batch: PerturbationBatch,
    outcome,
) -> InteractiveState:
    """Fold a ranking round's estimate into the running mean; enter selection."""
    if state.phase != RANK_PHASE:
        raise ValueError(f"cannot apply a ranking in phase {state.phase!r}")
    if batch.m != config.num_directions:
        raise ValueError(
            f"batch has {batch.m} directions, config expects {config.num_directions}"
        )
    estimate = estimate_gradient(batch, outcome)
    count = state.averaged_count
    memory = (count * state.grad_memory + estimate.vector) / (count + 1)
    return InteractiveState(
        best_point=state.best_point,
        grad_memory=memory,
        averaged_count=count + 1,
        phase=SELECT_PHASE,
        candidate_best=batch.candidates[outcome.ordered_best[0] - 1],
    )


def select_candidates(state: InteractiveState, config: InteractiveConfig) -> Array:
    """Points for a selection round, in wire order.

    Row 1 is the anchor point, row 2 the latest round's best candidate, and
    rows 3..m+1 the trial steps step_size * shrink^p along the averaged
    estimate for p = 0..m-2.
    """
    if state.phase != SELECT_PHASE:
        raise ValueError(f"cannot build select candidates in phase {state.phase!r}")
    powers = config.shrink ** np.arange(0, config.num_directions - 1)
    trials = state.best_point[None, :] - (
        config.step_size * powers[:, None] * state.grad_memory[None, :]
    )
    assert state.candidate_best is not None
    return np.vstack([state.best_point[None, :], state.candidate_best[None, :], trials])


def apply_selection(
    state: InteractiveState,
    config: InteractiveConfig,
    candidates: Array,
    winner_index: int,
) -> tuple[InteractiveState, bool]:
    """Move (or stay) according to the selection answer.

    Picking the anchor (index 1) keeps the running mean for the next ranking
    round; any other pick moves the anchor there and resets the memory.
    Returns the new state and whether the anchor moved.
    """
    if state.phase != SELECT_PHASE:
        raise ValueError(f"cannot apply a selection in phase {state.phase!r}")
    if not 1 <= winner_index <= candidates.shape[0]:
        raise ValueError(
            f"winner index {winner_index} outside 1..{candidates.shape[0]}"
        )
    if winner_index == 1:
        next_state = InteractiveState(
            best_point=state.best_point,
            grad_memory=state.grad_memory,
            averaged_count=state.averaged_count,
            phase=RANK_PHASE,
        )
        return next_state, False
    moved_to = candidates[winner_index - 1]
    next_state = InteractiveState(
        best_point=moved_to,
        grad_memory=np.zeros_like(moved_to),
        averaged_count=0,
        phase=RANK_PHASE,
    )
    return next_state, True


def interactive_step(
    state: InteractiveState,
    config: InteractiveConfig,
    rank_oracle,
    select_oracle,
    rng: np.random.Generator,
    *,
    num_ranked: int | None = None,
) -> InteractiveState:
    """Advance one phase of the interactive loop with synchronous oracles."""
    if state.phase == RANK_PHASE:
        batch = propose_rank_batch(state, config, rng)
        outcome = rank_oracle.rank(batch.candidates, num_ranked or config.num_directions)
        return apply_ranking(state, config, batch, outcome)
    candidates = select_candidates(state, config)
    winner = select_oracle.select(candidates)
    next_state, _ = apply_selection(state, config, candidates, winner)
    return next_state


def run_interactive(
    config: InteractiveConfig,
    rank_oracle,
    select_oracle,
    x0,
    rng: np.random.Generator,
    *,
    rounds: int,
    num_ranked: int | None = None,
    objective=None,
) -> tuple[InteractiveState, list[IterationRecord]]:
    """Drive full rank+select rounds and record one entry per round.

    A round costs m ranked points plus m+1 selection points. Records where
    the anchor stayed put have point_after == point_before and no accepted
    exponent; a move to the round's best candidate also has no exponent.
    """
    if rounds < 0:
        raise ValueError(f"rounds must be >= 0, got {rounds}")
    state = initial_state(x0)
    records: list[IterationRecord] = []
    for t in range(1, rounds + 1):
        before = state.best_point
        batch = propose_rank_batch(state, config, rng)
        outcome = rank_oracle.rank(batch.candidates, num_ranked or config.num_directions)
        state = apply_ranking(state, config, batch, outcome)
        grad_norm = float(np.linalg.norm(state.grad_memory))
        candidates = select_candidates(state, config)
        winner = select_oracle.select(candidates)
        state, moved = apply_selection(state, config, candidates, winner)
        exponent = winner - 3 if moved and winner >= 3 else None
        records.append(
            IterationRecord(
                t=t,
                point_before=before,
                point_after=state.best_point,
                grad_norm=grad_norm,
                queries=config.num_directions + candidates.shape[0],
                step_size=config.step_size,
                smoothing=config.smoothing,
                accepted_exponent=exponent,
                f_value=(
                    float(objective(state.best_point)) if objective is not None else None
                ),
            )
        )
    return state, records


# --- trajectory files -------------------------------------------------------

TRAJECTORY_FORMAT = "rankopt.trajectory"
TRAJECTORY_VERSION = 1


def record_to_dict(record: IterationRecord) -> dict:
    """Wire form of one record: a flat JSON object without the points."""
    return {
        "t": record.t,
        "f": record.f_value,
        "grad_norm": record.grad_norm,
        "queries": record.queries,
        "step_size": record.step_size,
        "smoothing": record.smoothing,
        "accepted_exponent": record.accepted_exponent,
    }


def write_trajectory(records: list[IterationRecord], path) -> None:
    """Write records as line-delimited JSON behind a version header."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(trajectory_text(records))


def trajectory_text(records: list[IterationRecord]) -> str:
    header = {"format": TRAJECTORY_FORMAT, "version": TRAJECTORY_VERSION}
    lines = [json.dumps(header)]
    lines.extend(json.dumps(record_to_dict(r)) for r in records)
    return "\n".join(lines) + "\n"


def read_trajectory(path) -> list[dict]:
    """Read a trajectory file back into record dicts, checking the header."""
    with open(path, "r", encoding="utf-8") as fh:
        lines = [line for line in fh.read().splitlines() if line.strip()]
    if not lines:
        raise ValueError(f"{path} is empty")
    header = json.loads(lines[0])
    if header.get("format") != TRAJECTORY_FORMAT:
        raise ValueError(f"{path} is not a trajectory file: header {header!r}")
    if header.get("version") != TRAJECTORY_VERSION:
        raise ValueError(f"unsupported trajectory version {header.get('version')!r}")
    return [json.loads(line) for line in lines[1:]]
