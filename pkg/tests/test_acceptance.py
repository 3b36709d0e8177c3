"""Desk-scale acceptance checks, one test per advertised guarantee.

Every test pins its own tolerances and seeds, so the whole module is
deterministic, and prints a single verdict line straight to the real stdout
(pytest capture cannot swallow it). Read the verdicts off any console log:

    [acceptance] <what was checked>: PASS|FAIL

Known failure: the plugged-in second-moment bound does not survive
(m, k) = (100, 1). Ranking 100 directions and keeping one conditions every
comparison on the argmin direction, whose squared norm is inflated well past
the unconditioned value the bound assumes. The check runs unweakened and
fails; README.md discusses the measurement.
"""

from __future__ import annotations

import json
import math
from contextlib import contextmanager

import numpy as np
from fastapi.testclient import TestClient

from rankopt.benchmarks import ExperimentSpec, get_function, run_experiment
from rankopt.estimator import (
    RankingOutcome,
    build_dag,
    edge_count,
    estimate_gradient,
    neighbor_pair_count,
    rank_weights,
    sample_perturbations,
)
from rankopt.optimize import (
    InteractiveConfig,
    LineSearchSpec,
    OptimizerConfig,
    run,
    run_interactive,
)
from rankopt.oracles import ExactOracle, NoiseSpec, NoisyOracle
from rankopt.rng import DIRECTION_STREAM, INIT_STREAM, NOISE_STREAM, make_rng
from rankopt.service import SessionStore, create_app
from rankopt.variance import (
    ISOTROPIC_SIGNAL_CAP,
    LINEAR_ALIGNMENT,
    descent_inner_product,
    empirical_second_moment,
    generic_cap,
    second_moment_bound,
    shared_direction_moment,
    signal_power,
)


VERDICTS: list[tuple[str, str]] = []


@contextmanager
def criterion(label: str):
    """Record and print the verdict for one check; failures still propagate.

    The print lands in pytest's captured output; conftest.py re-emits the
    recorded verdicts after the run where capture cannot hide them.
    """
    try:
        yield
    except BaseException:
        VERDICTS.append((label, "FAIL"))
        print(f"[acceptance] {label}: FAIL", flush=True)
        raise
    VERDICTS.append((label, "PASS"))
    print(f"[acceptance] {label}: PASS", flush=True)


def linear(c):
    """f(x) = <c, x>, the one function whose ranking signal is exactly known."""
    coefs = np.asarray(c, dtype=np.float64)
    return lambda x: float(np.asarray(x) @ coefs)


def init_point(fn, seed: int) -> np.ndarray:
    return make_rng(seed, INIT_STREAM).standard_normal(fn.dim) * fn.init_scale


def test_graph_statistics_match_exhaustive_counts():
    """Closed-form edge and neighbor-pair counts against literal enumeration
    over every (m, k) with m up to 12, on rankings of shuffled indices."""
    with criterion("graph statistics match exhaustive counts"):
        rng = make_rng(101)
        for m in range(2, 13):
            for k in range(1, m + 1):
                ranked = tuple(int(i) + 1 for i in rng.permutation(m)[:k])
                dag = build_dag(RankingOutcome(m=m, ordered_best=ranked))
                edges = sorted(dag.edges)
                assert len(edges) == edge_count(m, k), (m, k)
                sharing = sum(
                    1
                    for a in edges
                    for b in edges
                    if a != b and set(a) & set(b)
                )
                assert sharing == neighbor_pair_count(m, k), (m, k)


def test_weighted_estimate_matches_edge_sum():
    """The O(m d) weighted form equals the naive sum over comparison edges to
    1e-12 relative error, and the weights always cancel exactly."""
    with criterion("weighted estimate matches the edge sum"):
        rng = make_rng(202)
        for _ in range(1000):
            m = int(rng.integers(2, 13))
            k = int(rng.integers(1, m + 1))
            dim = int(rng.integers(1, 7))
            batch = sample_perturbations(np.zeros(dim), m, 0.1, rng)
            ranked = tuple(int(i) + 1 for i in rng.permutation(m)[:k])
            outcome = RankingOutcome(m=m, ordered_best=ranked)
            assert rank_weights(outcome).sum() == 0.0
            fast = estimate_gradient(batch, outcome).vector
            slow = np.zeros(dim)
            for i, j in build_dag(outcome).edges:
                slow += batch.directions[j - 1] - batch.directions[i - 1]
            slow /= edge_count(m, k)
            assert np.linalg.norm(fast - slow) <= 1e-12 * max(
                np.linalg.norm(slow), 1.0
            )


def test_two_point_special_case_is_bitwise_identical():
    """Running m=2, k=1 through the general rank pipeline reproduces the
    dedicated two-point comparison step exactly, iterate for iterate."""
    with criterion("two-point special case is bitwise identical"):
        fn = get_function("quadratic", 7)
        cfg = OptimizerConfig(
            num_directions=2,
            num_ranked=1,
            step_size=0.1,
            smoothing=0.05,
            iterations=60,
        )
        x0 = init_point(fn, 3)
        general = run(cfg, ExactOracle(fn), x0, make_rng(3, DIRECTION_STREAM))
        special = run(
            cfg, ExactOracle(fn), x0, make_rng(3, DIRECTION_STREAM),
            algorithm="pairwise",
        )
        assert len(general) == len(special) == 60
        for a, b in zip(general, special):
            assert (a.point_after == b.point_after).all()
            assert a.queries == b.queries


def test_pairwise_signal_aligns_with_gradient():
    """On a linear function the mean estimate projects onto the gradient with
    the known 2/sqrt(pi) factor (3 SE at n=1e5); on the quadratic, shrinking
    the smoothing radius never hurts the projection (paired draws)."""
    with criterion("pairwise signal aligns with the gradient"):
        c = np.array([3.0, 0.0, -4.0])
        aligned = descent_inner_product(
            linear(c), c, np.zeros(3), 0.5, n_samples=100_000, rng=make_rng(404)
        )
        target = LINEAR_ALIGNMENT * 5.0
        assert abs(aligned.value - target) <= 3.0 * aligned.std_error

        fn = get_function("quadratic", 5)
        x = np.full(5, 2.0)
        tight = descent_inner_product(
            fn, fn.grad(x), x, 1e-3, n_samples=100_000, rng=make_rng(405)
        )
        loose = descent_inner_product(
            fn, fn.grad(x), x, 1.0, n_samples=100_000, rng=make_rng(405)
        )
        assert tight.value >= loose.value


def test_metric_estimates_respect_generic_caps():
    """Signal power and the shared-direction moment stay below 2d (+3 SE) at
    init-scale points; the quadratic's signal power also respects the
    isotropic 32/pi cap. Curvature coupling needs d >= 2, so the curved
    benchmark runs at d in {10, 100} only."""
    with criterion("metric estimates respect the generic caps"):
        cases = [
            ("quadratic", 1),
            ("quadratic", 10),
            ("quadratic", 100),
            ("rosenbrock", 10),
            ("rosenbrock", 100),
        ]
        for name, dim in cases:
            fn = get_function(name, dim)
            x = init_point(fn, dim)
            power = signal_power(
                fn, x, 0.1, n_samples=200_000, rng=make_rng(50 + dim)
            )
            shared = shared_direction_moment(
                fn, x, 0.1, n_samples=200_000, rng=make_rng(60 + dim)
            )
            cap = generic_cap(dim)
            assert power.value <= cap + 3.0 * power.std_error, (name, dim)
            assert shared.value <= cap + 3.0 * shared.std_error, (name, dim)
            if name == "quadratic":
                assert power.value <= ISOTROPIC_SIGNAL_CAP + 3.0 * power.std_error


def test_second_moment_stays_under_plugged_in_bound():
    """Measured E||estimate||^2 against the closed-form bound evaluated with
    metric estimates from the same point, allowing 3x the combined SE.

    Expected to fail at (m, k) = (100, 1): keeping one winner out of 100
    makes every comparison share the argmin direction, and conditioning on
    having won inflates that direction's squared norm (about 15.5 here
    against an unconditioned 2d = 20 budget split across 99 edges). The
    pairs whose comparison sets do not depend on the ranking pass.
    """
    with criterion("second moment stays under the plugged-in bound"):
        dim = 10
        fn = get_function("quadratic", dim)
        x = init_point(fn, 0)
        power = signal_power(fn, x, 0.1, n_samples=200_000, rng=make_rng(606))
        shared = shared_direction_moment(
            fn, x, 0.1, n_samples=200_000, rng=make_rng(607)
        )
        violations = []
        for m, k in [(2, 1), (5, 3), (10, 10), (100, 1)]:
            measured = empirical_second_moment(
                fn, x, 0.1,
                num_directions=m,
                num_ranked=k,
                n_batches=10_000,
                rng=make_rng(608),
            )
            bound = second_moment_bound(m, k, dim, power.value, shared.value)
            pair_coef = neighbor_pair_count(m, k) / edge_count(m, k) ** 2
            combined_se = math.sqrt(
                measured.std_error**2
                + (pair_coef * shared.std_error) ** 2
                + power.std_error**2
            )
            if measured.value > bound + 3.0 * combined_se:
                violations.append(
                    f"(m={m}, k={k}): measured {measured.value:.4f} "
                    f"> bound {bound:.4f} + 3*{combined_se:.4f}"
                )
        assert not violations, "; ".join(violations)


def test_final_values_order_by_feedback_richness():
    """Ten full rankings of ten beat one winner out of a hundred, and more
    ranked positions never hurt, at a fixed iteration budget on the d=100
    quadratic."""
    with criterion("final values order by feedback richness"):

        def final_mean(m: int, k: int) -> float:
            spec = ExperimentSpec(
                function="quadratic",
                dim=100,
                config=OptimizerConfig(
                    num_directions=m,
                    num_ranked=k,
                    step_size=50.0,
                    smoothing=0.01,
                    iterations=200,
                    line_search=LineSearchSpec(num_candidates=5, shrink=0.1),
                ),
                seeds=tuple(range(10)),
            )
            return float(run_experiment(spec).aggregate.mean_f[-1])

        assert final_mean(10, 10) < final_mean(100, 1)
        by_k = [final_mean(10, k) for k in (1, 5, 10)]
        assert by_k[0] >= by_k[1] >= by_k[2], by_k


def test_longer_horizons_reach_smaller_gradients():
    """With step size and smoothing derived from (d, T), the median best
    gradient norm over ten seeds improves as the budget grows 100x. Plain
    (10, 10) ranking steps; the schedule assumes no line search."""
    with criterion("longer horizons reach smaller gradients"):
        fn = get_function("quadratic", 100)
        medians = []
        for horizon in (100, 1000, 10_000):
            cfg = OptimizerConfig(
                num_directions=10,
                num_ranked=10,
                iterations=horizon,
                schedule="horizon",
            )
            per_seed = []
            for seed in range(10):
                records = run(
                    cfg, ExactOracle(fn), init_point(fn, seed),
                    make_rng(seed, DIRECTION_STREAM),
                )
                per_seed.append(
                    min(float(np.linalg.norm(fn.grad(r.point_after))) for r in records)
                )
            medians.append(float(np.median(per_seed)))
        assert medians[0] > medians[1] > medians[2], medians


def test_line_search_never_increases_f():
    """With exact rankings the unmoved point sits among the line-search
    candidates, so f is non-increasing along every trajectory."""
    with criterion("line search never increases f"):
        for name, eta, mu in (("quadratic", 1.0, 0.05), ("rosenbrock", 0.5, 0.01)):
            fn = get_function(name, 10)
            cfg = OptimizerConfig(
                num_directions=5,
                num_ranked=3,
                step_size=eta,
                smoothing=mu,
                iterations=150,
                line_search=LineSearchSpec(num_candidates=4, shrink=0.5),
            )
            for seed in range(10):
                x0 = init_point(fn, seed)
                records = run(
                    cfg, ExactOracle(fn), x0,
                    make_rng(seed, DIRECTION_STREAM),
                    objective=fn,
                )
                values = [fn(x0)] + [r.f_value for r in records]
                assert all(b <= a for a, b in zip(values, values[1:])), (name, seed)


def test_noise_degrades_final_values_monotonically():
    """Zero observation noise reproduces the exact-oracle run bit for bit,
    and final mean f only worsens as the noise scale climbs 0 -> 1 -> 10."""
    with criterion("noise degrades final values monotonically"):
        fn = get_function("quadratic", 10)
        cfg = OptimizerConfig(
            num_directions=5,
            num_ranked=3,
            step_size=0.05,
            smoothing=0.1,
            iterations=300,
        )
        for seed in (0, 3):
            x0 = init_point(fn, seed)
            exact = run(cfg, ExactOracle(fn), x0, make_rng(seed, DIRECTION_STREAM))
            silent = run(
                cfg,
                NoisyOracle(fn, NoiseSpec(0.0), make_rng(seed, NOISE_STREAM)),
                x0,
                make_rng(seed, DIRECTION_STREAM),
            )
            for a, b in zip(exact, silent):
                assert (a.point_after == b.point_after).all()

        def final_mean(sigma: float) -> float:
            spec = ExperimentSpec(
                function="quadratic",
                dim=10,
                config=cfg,
                noise_sigma=sigma,
                seeds=tuple(range(10)),
            )
            return float(run_experiment(spec).aggregate.mean_f[-1])

        scale = 1.0
        quiet, mild, loud = (final_mean(s) for s in (0.0, scale, 10 * scale))
        assert quiet < mild < loud, (quiet, mild, loud)


def test_http_sessions_match_in_process_runs(tmp_path):
    """A scripted answerer driving the HTTP service lands on the same
    trajectory as run_interactive with matched seeds, and replaying the event
    log reproduces every wire body byte for byte."""
    with criterion("scripted sessions match in-process runs and replay"):
        fn = get_function("quadratic", 3)
        x0 = [4.0, -2.5, 1.25]
        seed, rounds = 17, 4
        data_dir = tmp_path / "sessions"

        with TestClient(create_app(data_dir)) as client:
            created = client.post(
                "/sessions",
                json={
                    "renderer": {"id": "color-swatch", "dim": 3},
                    "seed": seed,
                    "x0": x0,
                    "objective": "quadratic",
                },
            )
            assert created.status_code == 201, created.text
            sid = created.json()["session_id"]
            for _ in range(rounds):
                batch = client.get(f"/sessions/{sid}/batch").json()
                points = np.array([c["point"] for c in batch["candidates"]])
                order = np.argsort(fn.batch(points), kind="stable")
                ranking = [batch["candidates"][i]["candidate_id"] for i in order]
                posted = client.post(
                    f"/sessions/{sid}/rankings",
                    json={"batch_id": batch["batch_id"], "ranking": ranking},
                )
                assert posted.status_code == 200, posted.text
                batch = client.get(f"/sessions/{sid}/batch").json()
                points = np.array([c["point"] for c in batch["candidates"]])
                winner = batch["candidates"][int(np.argmin(fn.batch(points)))]
                posted = client.post(
                    f"/sessions/{sid}/selections",
                    json={
                        "batch_id": batch["batch_id"],
                        "selection": winner["candidate_id"],
                    },
                )
                assert posted.status_code == 200, posted.text
            live_status = client.get(f"/sessions/{sid}").json()
            live_batch = client.get(f"/sessions/{sid}/batch").json()
            live_history = client.get(f"/sessions/{sid}/history").json()
            live_export = client.get(f"/sessions/{sid}/export").text

        oracle = ExactOracle(fn)
        final, records = run_interactive(
            InteractiveConfig(),
            oracle,
            oracle,
            np.array(x0),
            make_rng(seed, DIRECTION_STREAM),
            rounds=rounds,
            objective=fn,
        )
        assert live_status["best_point"] == final.best_point.tolist()
        assert live_status["rounds_completed"] == rounds
        for row, record in zip(live_export.splitlines()[1:], records):
            parsed = json.loads(row)
            assert parsed["f"] == record.f_value
            assert parsed["grad_norm"] == record.grad_norm

        with TestClient(create_app(data_dir)) as revived:
            assert revived.get(f"/sessions/{sid}").json() == live_status
            assert revived.get(f"/sessions/{sid}/batch").json() == live_batch
            assert revived.get(f"/sessions/{sid}/history").json() == live_history
            assert revived.get(f"/sessions/{sid}/export").text == live_export
