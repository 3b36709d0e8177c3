"""Event-sourced interactive sessions behind the HTTP layer.

One append-only JSONL file per session: a header line, then one event per
line. Events are logged (and flushed) before any acknowledgement goes out,
and they carry everything needed to rebuild the optimizer state without
re-running randomness: rank batches log their directions, select batches
their candidate points, submissions their exact body and the response that
was sent. Replaying a log therefore reconstructs byte-identical state, and a
restarted service keeps serving mid-session, including replaying the stored
response when a client retries a submission it already made.

Within a session all writes are serialized by one lock; reads take the same
lock briefly and see a consistent prefix. Sessions are independent.
"""

from __future__ import annotations

import json
import secrets
import threading
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from ..benchmarks import get_function
from ..estimator import PerturbationBatch, RankingOutcome
from ..optimize import (
    InteractiveConfig,
    InteractiveState,
    IterationRecord,
    apply_ranking,
    apply_selection,
    initial_state,
    propose_rank_batch,
    record_to_dict,
    select_candidates,
    trajectory_text,
)
from ..rng import DIRECTION_STREAM, INIT_STREAM, make_rng
from .renderers import RendererSpec, render

__all__ = [
    "LOG_FORMAT",
    "LOG_VERSION",
    "UnknownSessionError",
    "ConflictError",
    "ValidationFailure",
    "SessionStore",
]

LOG_FORMAT = "rankopt.session"
LOG_VERSION = 1

_CONFIG_KEYS = ("num_directions", "step_size", "smoothing", "shrink")


class UnknownSessionError(Exception):
    """No session with that id (or the capability token is wrong)."""


class ConflictError(Exception):
    """The request is well-formed but clashes with the session's state."""


class ValidationFailure(Exception):
    """The request itself is malformed; the session is untouched."""


def _canonical(body: dict) -> str:
    return json.dumps(body, sort_keys=True, separators=(",", ":"))


def _now() -> str:
    return datetime.now(timezone.utc).isoformat()


def _rank_instruction(m: int) -> str:
    return f"Rank the candidates you can judge, best first (anywhere from 1 to {m})."


_SELECT_INSTRUCTION = "Pick the id of the single best candidate."


@dataclass(frozen=True)
class PendingBatch:
    """The one batch a session is waiting on, with everything replay logged."""

    batch_id: str
    phase: str
    points: np.ndarray  # wire-order candidate points, one per row
    candidate_ids: tuple[str, ...]
    batch: PerturbationBatch | None  # rank phase only
    instruction: str


class Session:
    """Mutable per-session record; the store does all the mutating."""

    def __init__(
        self,
        session_id: str,
        config: InteractiveConfig,
        renderer: RendererSpec,
        state: InteractiveState,
        rng: np.random.Generator,
        seed: int,
        objective_name: str | None,
        created: str,
        path: Path,
    ) -> None:
        self.session_id = session_id
        self.config = config
        self.renderer = renderer
        self.state = state
        self.rng = rng
        self.seed = seed
        self.objective_name = objective_name
        self.objective = (
            get_function(objective_name, renderer.dim) if objective_name else None
        )
        self.created = created
        self.path = path
        self.lock = threading.Lock()
        self.terminated = False
        self.batch_seq = 0
        self.pending: PendingBatch | None = None
        self.records: list[IterationRecord] = []
        self.moves_accepted = 0
        self.resolved: dict[str, tuple[str, dict]] = {}
        self.events: list[dict] = []
        self._fh = None

    def next_batch_id(self) -> str:
        self.batch_seq += 1
        return f"b{self.batch_seq:04d}"

    def append_events(self, *events: dict) -> None:
        """Persist events before anything is acknowledged or mutated."""
        for event in events:
            self._fh.write(json.dumps(event, separators=(",", ":")) + "\n")
        self._fh.flush()
        self.events.extend(events)

    def close(self) -> None:
        if self._fh is not None:
            self._fh.close()
            self._fh = None


class SessionStore:
    """All live sessions, rebuilt from their logs on startup."""

    def __init__(self, data_dir) -> None:
        self.data_dir = Path(data_dir)
        self.data_dir.mkdir(parents=True, exist_ok=True)
        self._lock = threading.Lock()
        self._sessions: dict[str, Session] = {}
        for path in sorted(self.data_dir.glob("*.jsonl")):
            session = _replay(path)
            self._sessions[session.session_id] = session

    def close(self) -> None:
        with self._lock:
            for session in self._sessions.values():
                session.close()

    def session_ids(self) -> list[str]:
        with self._lock:
            return sorted(self._sessions)

    def get_session(self, session_id: str) -> Session:
        with self._lock:
            try:
                return self._sessions[session_id]
            except KeyError:
                raise UnknownSessionError(f"no session {session_id!r}") from None

    # --- operations ----------------------------------------------------------

    def create_session(self, payload: dict) -> dict:
        config, renderer, seed, x0, objective_name = _parse_create(payload)
        session_id = secrets.token_hex(16)
        created = _now()
        if x0 is None:
            x0 = make_rng(seed, INIT_STREAM).standard_normal(renderer.dim)
        session = Session(
            session_id=session_id,
            config=config,
            renderer=renderer,
            state=initial_state(x0),
            rng=make_rng(seed, DIRECTION_STREAM),
            seed=seed,
            objective_name=objective_name,
            created=created,
            path=self.data_dir / f"{session_id}.jsonl",
        )
        session._fh = open(session.path, "a", encoding="utf-8")
        header = {"format": LOG_FORMAT, "version": LOG_VERSION, "session_id": session_id}
        session._fh.write(json.dumps(header, separators=(",", ":")) + "\n")
        created_event = {
            "event": "session_created",
            "time": created,
            "session_id": session_id,
            "seed": seed,
            "x0": np.asarray(x0, dtype=np.float64).tolist(),
            "config": {key: getattr(config, key) for key in _CONFIG_KEYS},
            "renderer": {"id": renderer.id, "dim": renderer.dim},
            "objective": objective_name,
        }
        pending, batch_event = _build_rank_batch(session)
        session.append_events(created_event, batch_event)
        session.pending = pending
        with self._lock:
            self._sessions[session_id] = session
        return {"session_id": session_id, "batch": _batch_body(session)}

    def status(self, session_id: str) -> dict:
        session = self.get_session(session_id)
        with session.lock:
            return {
                "session_id": session.session_id,
                "phase": session.state.phase,
                "terminated": session.terminated,
                "pending_batch_id": session.pending.batch_id if session.pending else None,
                "rounds_completed": len(session.records),
                "moves_accepted": session.moves_accepted,
                "averaged_rounds": session.state.averaged_count,
                "dim": session.state.dim,
                "created": session.created,
                "best_point": session.state.best_point.tolist(),
                "best": render(session.renderer, session.state.best_point).to_dict(),
            }

    def batch_view(self, session_id: str) -> dict:
        session = self.get_session(session_id)
        with session.lock:
            if session.terminated:
                raise ConflictError("session is terminated")
            return _batch_body(session)

    def submit_ranking(self, session_id: str, body: dict) -> dict:
        session = self.get_session(session_id)
        with session.lock:
            _check_keys(body, {"batch_id", "ranking"}, "ranking submission")
            batch_id = body.get("batch_id")
            ranking = body.get("ranking")
            if not isinstance(batch_id, str) or not batch_id:
                raise ValidationFailure("batch_id must be a non-empty string")
            if not isinstance(ranking, list) or not all(isinstance(i, str) for i in ranking):
                raise ValidationFailure("ranking must be a list of candidate ids")
            replayed = _replay_or_conflict(session, batch_id, body, phase="rank")
            if replayed is not None:
                return replayed
            pending = session.pending
            indices = _ranking_indices(pending, ranking)
            outcome = RankingOutcome(
                m=session.config.num_directions, ordered_best=indices
            )
            new_state = apply_ranking(session.state, session.config, pending.batch, outcome)
            next_pending, batch_event = _select_batch_for(session, new_state)
            response = {
                "status": "ok",
                "phase": "select",
                "next_batch_id": next_pending.batch_id,
                "averaged_rounds": new_state.averaged_count,
            }
            submitted = {
                "event": "ranking_submitted",
                "time": _now(),
                "batch_id": batch_id,
                "body": body,
                "response": response,
            }
            session.append_events(submitted, batch_event)
            session.state = new_state
            session.pending = next_pending
            session.resolved[batch_id] = (_canonical(body), response)
            return response

    def submit_selection(self, session_id: str, body: dict) -> dict:
        session = self.get_session(session_id)
        with session.lock:
            _check_keys(body, {"batch_id", "selection"}, "selection submission")
            batch_id = body.get("batch_id")
            selection = body.get("selection")
            if not isinstance(batch_id, str) or not batch_id:
                raise ValidationFailure("batch_id must be a non-empty string")
            if not isinstance(selection, str) or not selection:
                raise ValidationFailure("selection must be a single candidate id")
            replayed = _replay_or_conflict(session, batch_id, body, phase="select")
            if replayed is not None:
                return replayed
            pending = session.pending
            if selection not in pending.candidate_ids:
                raise ValidationFailure(f"unknown candidate id {selection!r}")
            winner = pending.candidate_ids.index(selection) + 1
            grad_norm = float(np.linalg.norm(session.state.grad_memory))
            before = session.state.best_point
            new_state, moved = apply_selection(
                session.state, session.config, pending.points, winner
            )
            record = IterationRecord(
                t=len(session.records) + 1,
                point_before=before,
                point_after=new_state.best_point,
                grad_norm=grad_norm,
                queries=session.config.num_directions + pending.points.shape[0],
                step_size=session.config.step_size,
                smoothing=session.config.smoothing,
                accepted_exponent=winner - 3 if moved and winner >= 3 else None,
                f_value=(
                    float(session.objective(new_state.best_point))
                    if session.objective is not None
                    else None
                ),
            )
            next_pending, batch_event = _build_rank_batch(session, new_state)
            message = (
                "moved to the selected candidate"
                if moved
                else "no move; refining the gradient estimate"
            )
            response = {
                "status": "ok",
                "moved": moved,
                "message": message,
                "phase": "rank",
                "next_batch_id": next_pending.batch_id,
                "rounds_completed": len(session.records) + 1,
            }
            submitted = {
                "event": "selection_submitted",
                "time": _now(),
                "batch_id": batch_id,
                "body": body,
                "response": response,
                "record": record_to_dict(record),
            }
            session.append_events(submitted, batch_event)
            session.state = new_state
            session.pending = next_pending
            session.records.append(record)
            session.moves_accepted += int(moved)
            session.resolved[batch_id] = (_canonical(body), response)
            return response

    def history(self, session_id: str) -> dict:
        session = self.get_session(session_id)
        with session.lock:
            return {"session_id": session.session_id, "events": list(session.events)}

    def export(self, session_id: str) -> str:
        session = self.get_session(session_id)
        with session.lock:
            return trajectory_text(session.records)

    def terminate(self, session_id: str) -> dict:
        session = self.get_session(session_id)
        with session.lock:
            if not session.terminated:
                session.append_events(
                    {"event": "session_terminated", "time": _now()}
                )
                session.terminated = True
                session.pending = None
            return {"session_id": session.session_id, "terminated": True}


# --- helpers ------------------------------------------------------------------


def _check_keys(body: dict, allowed: set, what: str) -> None:
    if not isinstance(body, dict):
        raise ValidationFailure(f"{what} must be an object")
    unknown = set(body) - allowed
    if unknown:
        raise ValidationFailure(f"unknown {what} keys: {sorted(unknown)}")


def _parse_create(payload: dict):
    _check_keys(payload, {"config", "renderer", "x0", "seed", "objective"}, "create")
    renderer_data = payload.get("renderer")
    if not isinstance(renderer_data, dict) or "id" not in renderer_data:
        raise ValidationFailure("renderer must be an object with an 'id'")
    _check_keys(renderer_data, {"id", "dim"}, "renderer")
    if "dim" not in renderer_data:
        raise ValidationFailure("renderer needs a 'dim'")
    try:
        renderer = RendererSpec(id=renderer_data["id"], dim=renderer_data["dim"])
    except (TypeError, ValueError) as exc:
        raise ValidationFailure(f"renderer: {exc}") from None

    config_data = payload.get("config") or {}
    _check_keys(config_data, set(_CONFIG_KEYS), "config")
    try:
        config = InteractiveConfig(**config_data)
    except (TypeError, ValueError) as exc:
        raise ValidationFailure(f"config: {exc}") from None

    seed = payload.get("seed")
    if seed is None:
        seed = secrets.randbits(31)
    if not isinstance(seed, int) or isinstance(seed, bool) or seed < 0:
        raise ValidationFailure(f"seed must be a non-negative integer, got {seed!r}")

    x0 = payload.get("x0")
    if x0 is not None:
        point = np.asarray(x0, dtype=np.float64)
        if point.ndim != 1 or point.shape[0] != renderer.dim:
            raise ValidationFailure(
                f"x0 has {point.shape} but the renderer needs ({renderer.dim},)"
            )
        if not np.all(np.isfinite(point)):
            raise ValidationFailure("x0 must be finite")
        x0 = point

    objective_name = payload.get("objective")
    if objective_name is not None:
        if not isinstance(objective_name, str):
            raise ValidationFailure("objective must be a function name")
        try:
            get_function(objective_name, renderer.dim)
        except ValueError as exc:
            raise ValidationFailure(str(exc)) from None
    return config, renderer, seed, x0, objective_name


def _replay_or_conflict(
    session: Session, batch_id: str, body: dict, *, phase: str
) -> dict | None:
    """Shared duplicate/stale/phase handling for both submission kinds."""
    if batch_id in session.resolved:
        stored_body, stored_response = session.resolved[batch_id]
        if _canonical(body) == stored_body:
            return dict(stored_response)
        raise ConflictError(
            f"batch {batch_id} was already resolved with a different submission"
        )
    if session.terminated:
        raise ConflictError("session is terminated")
    pending = session.pending
    if pending is None or batch_id != pending.batch_id:
        raise ConflictError(
            f"batch {batch_id} is not the pending batch"
            + (f" ({pending.batch_id})" if pending else "")
        )
    if pending.phase != phase:
        raise ConflictError(
            f"pending batch {pending.batch_id} is in the {pending.phase} phase"
        )
    return None


def _ranking_indices(pending: PendingBatch, ranking: list[str]) -> tuple[int, ...]:
    if not ranking:
        raise ValidationFailure("ranking cannot be empty")
    for candidate_id in ranking:
        if candidate_id not in pending.candidate_ids:
            raise ValidationFailure(f"unknown candidate id {candidate_id!r}")
    if len(set(ranking)) != len(ranking):
        raise ValidationFailure("ranking repeats a candidate id")
    return tuple(pending.candidate_ids.index(i) + 1 for i in ranking)


def _candidate_ids(batch_id: str, count: int) -> tuple[str, ...]:
    return tuple(f"{batch_id}c{j:02d}" for j in range(1, count + 1))


def _build_rank_batch(
    session: Session, state: InteractiveState | None = None
) -> tuple[PendingBatch, dict]:
    """Draw the next rank batch and its event; caller logs and installs it."""
    batch = propose_rank_batch(state or session.state, session.config, session.rng)
    batch_id = session.next_batch_id()
    ids = _candidate_ids(batch_id, batch.m)
    event = {
        "event": "batch_issued",
        "time": _now(),
        "batch_id": batch_id,
        "phase": "rank",
        "base_point": batch.base_point.tolist(),
        "smoothing": batch.mu,
        "directions": batch.directions.tolist(),
        "candidate_ids": list(ids),
    }
    pending = PendingBatch(
        batch_id=batch_id,
        phase="rank",
        points=batch.candidates,
        candidate_ids=ids,
        batch=batch,
        instruction=_rank_instruction(batch.m),
    )
    return pending, event


def _select_batch_for(
    session: Session, state: InteractiveState
) -> tuple[PendingBatch, dict]:
    points = select_candidates(state, session.config)
    batch_id = session.next_batch_id()
    ids = _candidate_ids(batch_id, points.shape[0])
    event = {
        "event": "batch_issued",
        "time": _now(),
        "batch_id": batch_id,
        "phase": "select",
        "candidates": points.tolist(),
        "candidate_ids": list(ids),
    }
    pending = PendingBatch(
        batch_id=batch_id,
        phase="select",
        points=points,
        candidate_ids=ids,
        batch=None,
        instruction=_SELECT_INSTRUCTION,
    )
    return pending, event


def _batch_body(session: Session) -> dict:
    pending = session.pending
    if pending is None:
        raise ConflictError("session has no pending batch")
    return {
        "session_id": session.session_id,
        "batch_id": pending.batch_id,
        "phase": pending.phase,
        "instruction": pending.instruction,
        "candidates": [
            {
                "candidate_id": candidate_id,
                "point": point.tolist(),
                "payload": render(session.renderer, point).to_dict(),
            }
            for candidate_id, point in zip(pending.candidate_ids, pending.points)
        ],
    }


def _replay(path: Path) -> Session:
    """Rebuild a session from its log; randomness is advanced, never re-used."""
    with open(path, "r", encoding="utf-8") as fh:
        lines = [line for line in fh.read().splitlines() if line.strip()]
    if not lines:
        raise ValueError(f"{path} is empty")
    header = json.loads(lines[0])
    if header.get("format") != LOG_FORMAT:
        raise ValueError(f"{path} is not a session log: header {header!r}")
    if header.get("version") != LOG_VERSION:
        raise ValueError(f"unsupported session log version {header.get('version')!r}")
    session: Session | None = None
    for line in lines[1:]:
        event = json.loads(line)
        kind = event.get("event")
        if kind == "session_created":
            config = InteractiveConfig(**event["config"])
            renderer = RendererSpec(**event["renderer"])
            session = Session(
                session_id=event["session_id"],
                config=config,
                renderer=renderer,
                state=initial_state(np.asarray(event["x0"], dtype=np.float64)),
                rng=make_rng(event["seed"], DIRECTION_STREAM),
                seed=event["seed"],
                objective_name=event.get("objective"),
                created=event["time"],
                path=path,
            )
        elif kind == "batch_issued":
            batch_id = event["batch_id"]
            session.batch_seq = max(session.batch_seq, int(batch_id[1:]))
            ids = tuple(event["candidate_ids"])
            if event["phase"] == "rank":
                directions = np.asarray(event["directions"], dtype=np.float64)
                session.rng.standard_normal(directions.shape)  # keep the stream aligned
                batch = PerturbationBatch(
                    base_point=np.asarray(event["base_point"], dtype=np.float64),
                    mu=event["smoothing"],
                    directions=directions,
                )
                session.pending = PendingBatch(
                    batch_id=batch_id,
                    phase="rank",
                    points=batch.candidates,
                    candidate_ids=ids,
                    batch=batch,
                    instruction=_rank_instruction(batch.m),
                )
            else:
                session.pending = PendingBatch(
                    batch_id=batch_id,
                    phase="select",
                    points=np.asarray(event["candidates"], dtype=np.float64),
                    candidate_ids=ids,
                    batch=None,
                    instruction=_SELECT_INSTRUCTION,
                )
        elif kind == "ranking_submitted":
            pending = session.pending
            indices = tuple(
                pending.candidate_ids.index(i) + 1 for i in event["body"]["ranking"]
            )
            outcome = RankingOutcome(
                m=session.config.num_directions, ordered_best=indices
            )
            session.state = apply_ranking(
                session.state, session.config, pending.batch, outcome
            )
            session.resolved[event["batch_id"]] = (
                _canonical(event["body"]),
                event["response"],
            )
            session.pending = None
        elif kind == "selection_submitted":
            pending = session.pending
            winner = pending.candidate_ids.index(event["body"]["selection"]) + 1
            before = session.state.best_point
            grad_norm = float(np.linalg.norm(session.state.grad_memory))
            session.state, moved = apply_selection(
                session.state, session.config, pending.points, winner
            )
            stored = event["record"]
            session.records.append(
                IterationRecord(
                    t=stored["t"],
                    point_before=before,
                    point_after=session.state.best_point,
                    grad_norm=grad_norm,
                    queries=stored["queries"],
                    step_size=stored["step_size"],
                    smoothing=stored["smoothing"],
                    accepted_exponent=stored["accepted_exponent"],
                    f_value=stored["f"],
                )
            )
            session.moves_accepted += int(moved)
            session.resolved[event["batch_id"]] = (
                _canonical(event["body"]),
                event["response"],
            )
            session.pending = None
        elif kind == "session_terminated":
            session.terminated = True
            session.pending = None
        else:
            raise ValueError(f"unknown event kind {kind!r} in {path}")
        session.events.append(event)
    session._fh = open(path, "a", encoding="utf-8")
    return session
