"""Benchmark functions and the experiment harness.

Runs are fully determined by (spec, seed): the initial point, perturbation
directions, and oracle noise each draw from their own stream of the seed, so
rerunning a spec reproduces every trajectory bit for bit and a zero-noise
run matches an exact-oracle run exactly. Aggregation aligns seeds on
cumulative query counts, which per-seed runs of one spec share by
construction.
"""

from __future__ import annotations

import concurrent.futures
import csv
import json
import warnings
from dataclasses import dataclass, field

import numpy as np

from .optimize import (
    IterationRecord,
    LineSearchSpec,
    OptimizerConfig,
    query_budget_stop,
    run,
)
from .oracles import ExactOracle, MeteredOracle, NoiseSpec, NoisyOracle, ValueOracle
from .rng import DIRECTION_STREAM, INIT_STREAM, NOISE_STREAM, make_rng
from .variance import generic_cap, second_moment_bound

__all__ = [
    "Benchmark",
    "quadratic",
    "rosenbrock",
    "get_function",
    "FUNCTION_NAMES",
    "ExperimentSpec",
    "AggregateResult",
    "ExperimentResult",
    "GridRow",
    "GridStudy",
    "run_experiment",
    "mk_grid_study",
    "spec_from_dict",
    "spec_to_dict",
    "load_spec",
    "write_aggregate_csv",
    "write_grid_csv",
]

Array = np.ndarray


@dataclass(frozen=True)
class Benchmark:
    """A benchmark objective with analytic gradient and known minimum."""

    name: str
    dim: int
    minimum: float
    init_scale: float
    _eval: object = field(repr=False)
    _batch: object = field(repr=False)
    _grad: object = field(repr=False)

    def __call__(self, x) -> float:
        return float(self._eval(np.asarray(x, dtype=np.float64)))

    def batch(self, points) -> Array:
        """Values at each row of points."""
        return self._batch(np.asarray(points, dtype=np.float64))

    def grad(self, x) -> Array:
        """Analytic gradient at x."""
        return self._grad(np.asarray(x, dtype=np.float64))


def quadratic(dim: int) -> Benchmark:
    """f(x) = ‖x‖²; minimum 0 at the origin."""
    if dim < 1:
        raise ValueError(f"quadratic needs dim >= 1, got {dim}")
    return Benchmark(
        name="quadratic",
        dim=dim,
        minimum=0.0,
        init_scale=10.0,
        _eval=lambda x: float(x @ x),
        _batch=lambda pts: np.einsum("ij,ij->i", pts, pts),
        _grad=lambda x: 2.0 * x,
    )


def _rosenbrock_values(points: Array) -> Array:
    first = points[:, :-1]
    second = points[:, 1:]
    return ((1.0 - first) ** 2 + 100.0 * (second - first**2) ** 2).sum(axis=1)


def _rosenbrock_grad(x: Array) -> Array:
    grad = np.zeros_like(x)
    coupling = x[1:] - x[:-1] ** 2
    grad[:-1] = -2.0 * (1.0 - x[:-1]) - 400.0 * x[:-1] * coupling
    grad[1:] += 200.0 * coupling
    return grad


def rosenbrock(dim: int) -> Benchmark:
    """Chained banana valleys; minimum 0 at the all-ones point. Needs dim >= 2."""
    if dim < 2:
        raise ValueError(f"rosenbrock needs dim >= 2, got {dim}")
    return Benchmark(
        name="rosenbrock",
        dim=dim,
        minimum=0.0,
        init_scale=1.0,
        _eval=lambda x: float(_rosenbrock_values(x[None, :])[0]),
        _batch=_rosenbrock_values,
        _grad=_rosenbrock_grad,
    )


_FUNCTIONS = {"quadratic": quadratic, "rosenbrock": rosenbrock}
FUNCTION_NAMES = tuple(sorted(_FUNCTIONS))


def get_function(name: str, dim: int) -> Benchmark:
    if name not in _FUNCTIONS:
        raise ValueError(f"unknown function {name!r}; choose from {FUNCTION_NAMES}")
    return _FUNCTIONS[name](dim)


@dataclass(frozen=True)
class ExperimentSpec:
    """Everything that determines a benchmark run except the seed list's order."""

    function: str
    dim: int
    config: OptimizerConfig
    algorithm: str = "rank"
    noise_sigma: float = 0.0
    seeds: tuple[int, ...] = (0, 1, 2, 3, 4, 5, 6, 7, 8, 9)
    query_budget: int | None = None

    def __post_init__(self) -> None:
        get_function(self.function, self.dim)  # validates name and dimension
        if self.algorithm not in ("rank", "pairwise", "value"):
            raise ValueError(f"unknown algorithm {self.algorithm!r}")
        sigma = float(self.noise_sigma)
        if not np.isfinite(sigma) or sigma < 0.0:
            raise ValueError(f"noise_sigma must be finite and >= 0, got {self.noise_sigma!r}")
        seeds = tuple(int(s) for s in self.seeds)
        if not seeds:
            raise ValueError("at least one seed is required")
        if len(set(seeds)) != len(seeds):
            raise ValueError(f"seeds contain duplicates: {seeds}")
        if self.query_budget is not None and self.query_budget < 1:
            raise ValueError(f"query_budget must be positive, got {self.query_budget!r}")
        object.__setattr__(self, "noise_sigma", sigma)
        object.__setattr__(self, "seeds", seeds)


@dataclass(frozen=True)
class AggregateResult:
    """Mean and spread of the objective across seeds, aligned on query counts.

    Row 0 is the initial point (0 queries). ``std_f`` uses ddof=1 when more
    than one seed survived, else 0.
    """

    queries: Array
    mean_f: Array
    std_f: Array
    n_seeds: int

    def __post_init__(self) -> None:
        queries = np.array(self.queries, dtype=np.int64)
        mean_f = np.array(self.mean_f, dtype=np.float64)
        std_f = np.array(self.std_f, dtype=np.float64)
        if not (queries.shape == mean_f.shape == std_f.shape) or queries.ndim != 1:
            raise ValueError("queries, mean_f, std_f must be 1-d and the same length")
        for arr in (queries, mean_f, std_f):
            arr.setflags(write=False)
        object.__setattr__(self, "queries", queries)
        object.__setattr__(self, "mean_f", mean_f)
        object.__setattr__(self, "std_f", std_f)

    @property
    def final_mean(self) -> float:
        return float(self.mean_f[-1])

    @property
    def final_std(self) -> float:
        return float(self.std_f[-1])


@dataclass(frozen=True)
class ExperimentResult:
    spec: ExperimentSpec
    aggregate: AggregateResult
    trajectories: dict[int, list[IterationRecord]]
    initial_values: dict[int, float]
    failures: dict[int, str]


def _run_seed(spec: ExperimentSpec, seed: int) -> tuple[float, list[IterationRecord]]:
    fn = get_function(spec.function, spec.dim)
    x0 = make_rng(seed, INIT_STREAM).standard_normal(spec.dim) * fn.init_scale
    directions_rng = make_rng(seed, DIRECTION_STREAM)
    if spec.algorithm == "value":
        backend = ValueOracle(
            fn,
            NoiseSpec(spec.noise_sigma),
            make_rng(seed, NOISE_STREAM) if spec.noise_sigma > 0 else None,
        )
    elif spec.noise_sigma > 0:
        backend = NoisyOracle(fn, NoiseSpec(spec.noise_sigma), make_rng(seed, NOISE_STREAM))
    else:
        backend = ExactOracle(fn)
    oracle = MeteredOracle(backend)
    stop = query_budget_stop(spec.query_budget) if spec.query_budget else None
    records = run(
        spec.config,
        oracle,
        x0,
        directions_rng,
        algorithm=spec.algorithm,
        objective=fn,
        stop=stop,
    )
    consumed = sum(r.queries for r in records)
    if consumed != oracle.queries:
        raise RuntimeError(
            f"query accounting drifted: records say {consumed}, meter says {oracle.queries}"
        )
    return float(fn(x0)), records


def run_experiment(spec: ExperimentSpec, *, workers: int = 1) -> ExperimentResult:
    """Run every seed, aggregate the survivors, and keep the raw trajectories.

    A seed that raises is recorded under ``failures`` with a warning; the
    aggregate covers the seeds that finished. All seeds of one spec share the
    same cumulative query grid, which aggregation checks.
    """
    if workers < 1:
        raise ValueError(f"workers must be >= 1, got {workers}")
    results: dict[int, tuple[float, list[IterationRecord]]] = {}
    failures: dict[int, str] = {}
    if workers == 1:
        for seed in spec.seeds:
            try:
                results[seed] = _run_seed(spec, seed)
            except Exception as exc:  # noqa: BLE001 - per-seed isolation is the point
                failures[seed] = f"{type(exc).__name__}: {exc}"
    else:
        with concurrent.futures.ThreadPoolExecutor(max_workers=workers) as pool:
            futures = {seed: pool.submit(_run_seed, spec, seed) for seed in spec.seeds}
            for seed, future in futures.items():
                try:
                    results[seed] = future.result()
                except Exception as exc:  # noqa: BLE001
                    failures[seed] = f"{type(exc).__name__}: {exc}"
    for seed, message in failures.items():
        warnings.warn(f"seed {seed} failed and is excluded from the aggregate: {message}")
    if not results:
        raise RuntimeError(f"every seed failed: {failures}")
    # Deterministic fold in seed order, whatever the completion order was.
    ordered = [seed for seed in spec.seeds if seed in results]
    grids = []
    curves = []
    for seed in ordered:
        initial, records = results[seed]
        grids.append(np.cumsum([r.queries for r in records], dtype=np.int64))
        curves.append(np.array([initial] + [r.f_value for r in records]))
    for other in grids[1:]:
        if not np.array_equal(grids[0], other):
            raise RuntimeError("seeds disagree on the query grid; aggregation would lie")
    stacked = np.vstack(curves)
    queries = np.concatenate([[0], grids[0]]) if grids[0].size else np.array([0])
    aggregate = AggregateResult(
        queries=queries,
        mean_f=stacked.mean(axis=0),
        std_f=stacked.std(axis=0, ddof=1) if stacked.shape[0] > 1 else np.zeros(stacked.shape[1]),
        n_seeds=len(ordered),
    )
    return ExperimentResult(
        spec=spec,
        aggregate=aggregate,
        trajectories={seed: results[seed][1] for seed in ordered},
        initial_values={seed: results[seed][0] for seed in ordered},
        failures=failures,
    )


@dataclass(frozen=True)
class GridRow:
    num_directions: int
    num_ranked: int
    final_mean: float
    final_std: float
    total_queries: int
    predicted_second_moment: float


@dataclass(frozen=True)
class GridStudy:
    rows: tuple[GridRow, ...]
    results: tuple[ExperimentResult, ...]


def mk_grid_study(
    function: str,
    dim: int,
    mk_pairs,
    base_config: OptimizerConfig,
    seeds,
    *,
    noise_sigma: float = 0.0,
    workers: int = 1,
) -> GridStudy:
    """Sweep (m, k) combinations under one base configuration.

    Each row reports the final aggregate statistics next to the estimator's
    predicted second-moment cap for that (m, k), computed from the generic 2d
    metric caps so the column is deterministic.
    """
    pairs = [(int(m), int(k)) for m, k in mk_pairs]
    if not pairs:
        raise ValueError("mk_pairs must be non-empty")
    rows = []
    results = []
    for m, k in pairs:
        config = OptimizerConfig(
            num_directions=m,
            num_ranked=k,
            step_size=base_config.step_size,
            smoothing=base_config.smoothing,
            iterations=base_config.iterations,
            line_search=base_config.line_search,
            decay=base_config.decay,
            schedule=base_config.schedule,
            smoothing_scale=base_config.smoothing_scale,
        )
        spec = ExperimentSpec(
            function=function,
            dim=dim,
            config=config,
            algorithm="rank",
            noise_sigma=noise_sigma,
            seeds=tuple(seeds),
        )
        result = run_experiment(spec, workers=workers)
        cap = generic_cap(dim)
        rows.append(
            GridRow(
                num_directions=m,
                num_ranked=k,
                final_mean=result.aggregate.final_mean,
                final_std=result.aggregate.final_std,
                total_queries=int(result.aggregate.queries[-1]),
                predicted_second_moment=second_moment_bound(m, k, dim, cap, cap),
            )
        )
        results.append(result)
    return GridStudy(rows=tuple(rows), results=tuple(results))


# --- config and output files -------------------------------------------------


def spec_to_dict(spec: ExperimentSpec) -> dict:
    config = spec.config
    line_search = None
    if config.line_search is not None:
        line_search = {
            "num_candidates": config.line_search.num_candidates,
            "shrink": config.line_search.shrink,
        }
    return {
        "function": spec.function,
        "dim": spec.dim,
        "algorithm": spec.algorithm,
        "noise_sigma": spec.noise_sigma,
        "seeds": list(spec.seeds),
        "query_budget": spec.query_budget,
        "config": {
            "num_directions": config.num_directions,
            "num_ranked": config.num_ranked,
            "step_size": config.step_size,
            "smoothing": config.smoothing,
            "iterations": config.iterations,
            "decay": config.decay,
            "schedule": config.schedule,
            "smoothing_scale": config.smoothing_scale,
            "line_search": line_search,
        },
    }


def spec_from_dict(data: dict) -> ExperimentSpec:
    """Build a spec from its JSON form, rejecting unknown keys loudly."""
    allowed = {"function", "dim", "algorithm", "noise_sigma", "seeds", "query_budget", "config"}
    unknown = set(data) - allowed
    if unknown:
        raise ValueError(f"unknown spec keys: {sorted(unknown)}")
    if "function" not in data or "dim" not in data or "config" not in data:
        raise ValueError("spec needs at least 'function', 'dim', and 'config'")
    config_data = dict(data["config"])
    config_allowed = {
        "num_directions",
        "num_ranked",
        "step_size",
        "smoothing",
        "iterations",
        "decay",
        "schedule",
        "smoothing_scale",
        "line_search",
    }
    unknown = set(config_data) - config_allowed
    if unknown:
        raise ValueError(f"unknown config keys: {sorted(unknown)}")
    line_search = config_data.pop("line_search", None)
    if line_search is not None:
        line_search = LineSearchSpec(**line_search)
    config = OptimizerConfig(line_search=line_search, **config_data)
    return ExperimentSpec(
        function=data["function"],
        dim=int(data["dim"]),
        config=config,
        algorithm=data.get("algorithm", "rank"),
        noise_sigma=data.get("noise_sigma", 0.0),
        seeds=tuple(data.get("seeds", ExperimentSpec.__dataclass_fields__["seeds"].default)),
        query_budget=data.get("query_budget"),
    )


def load_spec(path) -> ExperimentSpec:
    with open(path, "r", encoding="utf-8") as fh:
        return spec_from_dict(json.load(fh))


def write_aggregate_csv(aggregate: AggregateResult, path) -> None:
    """Plot-ready aggregate curve: queries, mean_f, std_f, n_seeds."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["queries", "mean_f", "std_f", "n_seeds"])
        for q, mean, std in zip(aggregate.queries, aggregate.mean_f, aggregate.std_f):
            writer.writerow([int(q), repr(float(mean)), repr(float(std)), aggregate.n_seeds])


def write_grid_csv(study: GridStudy, path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(
            [
                "num_directions",
                "num_ranked",
                "final_mean",
                "final_std",
                "total_queries",
                "predicted_second_moment",
            ]
        )
        for row in study.rows:
            writer.writerow(
                [
                    row.num_directions,
                    row.num_ranked,
                    repr(row.final_mean),
                    repr(row.final_std),
                    row.total_queries,
                    repr(row.predicted_second_moment),
                ]
            )
