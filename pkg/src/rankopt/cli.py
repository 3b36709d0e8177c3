"""Command-line front end.

Subcommands map one-to-one onto the library's harness calls: ``run`` executes
an experiment spec, ``grid`` sweeps (m, k) combinations, ``noise-sweep``
repeats a spec across oracle noise levels, ``variance-check`` measures the
estimator diagnostics at a point and fails loudly (exit 1) when a measured
value escapes its bound, ``plot`` renders an aggregate CSV, and ``serve``
starts the interactive session service. Specs are JSON files in the shape
produced by ``spec_to_dict``; outputs are CSV tables plus JSONL trajectories.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from dataclasses import replace
from pathlib import Path

from .benchmarks import (
    get_function,
    load_spec,
    mk_grid_study,
    run_experiment,
    spec_to_dict,
    write_aggregate_csv,
    write_grid_csv,
)
from .optimize import write_trajectory
from .rng import INIT_STREAM, make_rng
from .service.app import create_app, load_service_config
from .variance import (
    ISOTROPIC_SIGNAL_CAP,
    empirical_second_moment,
    generic_cap,
    second_moment_bound,
    shared_direction_moment,
    signal_power,
)

__all__ = ["main"]


def _parse_seeds(text: str) -> tuple[int, ...]:
    try:
        seeds = tuple(int(part) for part in text.split(",") if part.strip() != "")
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad seed list {text!r}; want e.g. 0,1,2")
    if not seeds:
        raise argparse.ArgumentTypeError("seed list is empty")
    return seeds


def _parse_pairs(text: str) -> list[tuple[int, int]]:
    pairs = []
    for part in text.split(","):
        pieces = part.strip().split("x")
        if len(pieces) != 2:
            raise argparse.ArgumentTypeError(
                f"bad pair {part!r}; want e.g. 10x1,10x5,10x10"
            )
        try:
            pairs.append((int(pieces[0]), int(pieces[1])))
        except ValueError:
            raise argparse.ArgumentTypeError(f"bad pair {part!r}")
    if not pairs:
        raise argparse.ArgumentTypeError("pair list is empty")
    return pairs


def _parse_sigmas(text: str) -> list[float]:
    try:
        sigmas = [float(part) for part in text.split(",") if part.strip() != ""]
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad sigma list {text!r}; want e.g. 0,0.01,0.1")
    if not sigmas:
        raise argparse.ArgumentTypeError("sigma list is empty")
    return sigmas


def _load_spec_with_overrides(args):
    spec = load_spec(args.spec)
    if args.seeds is not None:
        spec = replace(spec, seeds=args.seeds)
    if getattr(args, "budget", None) is not None:
        spec = replace(spec, query_budget=args.budget)
    return spec


def _write_trajectories(result, out: Path) -> None:
    for seed, records in result.trajectories.items():
        write_trajectory(records, out / f"trajectory_seed{seed}.jsonl")


def cmd_run(args) -> int:
    spec = _load_spec_with_overrides(args)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    result = run_experiment(spec, workers=args.workers)
    write_aggregate_csv(result.aggregate, out / "aggregate.csv")
    _write_trajectories(result, out)
    (out / "spec.json").write_text(json.dumps(spec_to_dict(spec), indent=2) + "\n")
    agg = result.aggregate
    print(
        f"{spec.function} d={spec.dim} {spec.algorithm}: "
        f"final mean f {agg.final_mean:.6g} (std {agg.final_std:.3g}) "
        f"over {agg.n_seeds} seeds, {int(agg.queries[-1])} queries -> {out}"
    )
    if result.failures:
        for seed, message in sorted(result.failures.items()):
            print(f"seed {seed} failed: {message}", file=sys.stderr)
        return 1
    return 0


def cmd_grid(args) -> int:
    spec = _load_spec_with_overrides(args)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    study = mk_grid_study(
        spec.function,
        spec.dim,
        args.pairs,
        spec.config,
        args.seeds or spec.seeds,
        noise_sigma=spec.noise_sigma,
        workers=args.workers,
    )
    write_grid_csv(study, out / "grid.csv")
    for row, result in zip(study.rows, study.results):
        write_aggregate_csv(
            result.aggregate,
            out / f"aggregate_m{row.num_directions}k{row.num_ranked}.csv",
        )
        print(
            f"m={row.num_directions} k={row.num_ranked}: "
            f"final mean f {row.final_mean:.6g} "
            f"(predicted second moment {row.predicted_second_moment:.4g})"
        )
    print(f"wrote {out / 'grid.csv'}")
    return 0


def cmd_noise_sweep(args) -> int:
    spec = _load_spec_with_overrides(args)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    rows = []
    for sigma in args.sigmas:
        result = run_experiment(replace(spec, noise_sigma=sigma), workers=args.workers)
        agg = result.aggregate
        write_aggregate_csv(agg, out / f"aggregate_sigma{sigma:g}.csv")
        rows.append((sigma, agg.final_mean, agg.final_std, agg.n_seeds))
        print(f"sigma={sigma:g}: final mean f {agg.final_mean:.6g} (std {agg.final_std:.3g})")
    with open(out / "noise_sweep.csv", "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["sigma", "final_mean", "final_std", "n_seeds"])
        for sigma, mean, std, n in rows:
            writer.writerow([repr(float(sigma)), repr(mean), repr(std), n])
    print(f"wrote {out / 'noise_sweep.csv'}")
    return 0


def cmd_variance_check(args) -> int:
    fn = get_function(args.function, args.dim)
    if args.point == "origin":
        x = [0.0] * args.dim
    else:
        x = make_rng(args.seed, INIT_STREAM).standard_normal(args.dim) * fn.init_scale
    rng = make_rng(args.seed)
    signal = signal_power(fn, x, args.smoothing, n_samples=args.pair_samples, rng=rng)
    shared = shared_direction_moment(
        fn, x, args.smoothing, n_samples=args.pair_samples, rng=rng
    )
    measured = empirical_second_moment(
        fn,
        x,
        args.smoothing,
        num_directions=args.num_directions,
        num_ranked=args.num_ranked,
        n_batches=args.batches,
        rng=rng,
    )
    cap = generic_cap(args.dim)
    bound = second_moment_bound(
        args.num_directions,
        args.num_ranked,
        args.dim,
        max(signal.value + 3 * signal.std_error, 0.0),
        max(shared.value + 3 * shared.std_error, 0.0),
    )
    print(f"signal power          {signal.value:.4f} +- {signal.std_error:.4f}")
    print(f"shared direction      {shared.value:.4f} +- {shared.std_error:.4f}")
    print(f"measured second moment {measured.value:.4f} +- {measured.std_error:.4f}")
    print(f"predicted bound        {bound:.4f}")
    checks = [
        ("signal power within the generic cap", signal.value <= cap + 3 * signal.std_error),
        ("shared moment within the generic cap", shared.value <= cap + 3 * shared.std_error),
        (
            "measured second moment within the bound",
            measured.value <= bound + 3 * measured.std_error,
        ),
    ]
    if args.function == "quadratic":
        checks.insert(
            1,
            (
                "signal power within the isotropic cap",
                signal.value <= ISOTROPIC_SIGNAL_CAP + 3 * signal.std_error,
            ),
        )
    failed = False
    for label, ok in checks:
        print(f"{'ok  ' if ok else 'FAIL'} {label}")
        failed = failed or not ok
    return 1 if failed else 0


def cmd_plot(args) -> int:
    try:
        import matplotlib

        matplotlib.use("Agg")
        import matplotlib.pyplot as plt
    except ImportError:
        print(
            "plotting needs matplotlib; install the plots extra: pip install 'rankopt[plots]'",
            file=sys.stderr,
        )
        return 1
    with open(args.csv, newline="", encoding="utf-8") as fh:
        rows = list(csv.DictReader(fh))
    if not rows:
        print(f"{args.csv} has no data rows", file=sys.stderr)
        return 1
    queries = [float(r["queries"]) for r in rows]
    mean = [float(r["mean_f"]) for r in rows]
    std = [float(r["std_f"]) for r in rows]
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.plot(queries, mean, color="tab:blue")
    ax.fill_between(
        queries,
        [m - s for m, s in zip(mean, std)],
        [m + s for m, s in zip(mean, std)],
        alpha=0.25,
        color="tab:blue",
    )
    if all(m > 0 for m in mean):
        ax.set_yscale("log")
    ax.set_xlabel("oracle queries")
    ax.set_ylabel("objective (mean over seeds)")
    ax.set_title(Path(args.csv).stem)
    out = args.out or str(Path(args.csv).with_suffix(".png"))
    fig.tight_layout()
    fig.savefig(out, dpi=150)
    print(f"wrote {out}")
    return 0


def cmd_serve(args) -> int:
    config = load_service_config(args.config)
    app = create_app(config.data_dir, static_dir=args.static)
    import uvicorn

    uvicorn.run(app, host=config.host, port=config.port, log_level=config.log_level)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="rankopt", description="Optimization driven by ranking feedback."
    )
    commands = parser.add_subparsers(dest="command", required=True)

    def add_common(sub):
        sub.add_argument("spec", help="experiment spec (JSON)")
        sub.add_argument("--out", required=True, help="output directory")
        sub.add_argument("--seeds", type=_parse_seeds, default=None, help="e.g. 0,1,2")
        sub.add_argument("--workers", type=int, default=1, help="parallel seed workers")

    run_cmd = commands.add_parser("run", help="run one experiment spec")
    add_common(run_cmd)
    run_cmd.add_argument("--budget", type=int, default=None, help="stop after this many queries")
    run_cmd.set_defaults(handler=cmd_run)

    grid_cmd = commands.add_parser("grid", help="sweep (m, k) combinations")
    add_common(grid_cmd)
    grid_cmd.add_argument(
        "--pairs", type=_parse_pairs, required=True, help="e.g. 10x1,10x5,10x10"
    )
    grid_cmd.set_defaults(handler=cmd_grid)

    sweep_cmd = commands.add_parser("noise-sweep", help="repeat a spec across noise levels")
    add_common(sweep_cmd)
    sweep_cmd.add_argument(
        "--sigmas", type=_parse_sigmas, required=True, help="e.g. 0,0.01,0.1"
    )
    sweep_cmd.set_defaults(handler=cmd_noise_sweep)

    check_cmd = commands.add_parser(
        "variance-check", help="measure estimator diagnostics and verify their bounds"
    )
    check_cmd.add_argument("--function", default="quadratic")
    check_cmd.add_argument("--dim", type=int, default=10)
    check_cmd.add_argument("--num-directions", type=int, default=10)
    check_cmd.add_argument("--num-ranked", type=int, default=5)
    check_cmd.add_argument("--smoothing", type=float, default=0.1)
    check_cmd.add_argument(
        "--point", choices=("origin", "init"), default="init",
        help="measure at the origin or at a seeded initial point",
    )
    check_cmd.add_argument("--seed", type=int, default=0)
    check_cmd.add_argument("--pair-samples", type=int, default=200_000)
    check_cmd.add_argument("--batches", type=int, default=10_000)
    check_cmd.set_defaults(handler=cmd_variance_check)

    plot_cmd = commands.add_parser("plot", help="render an aggregate CSV to a PNG")
    plot_cmd.add_argument("csv", help="aggregate CSV written by run/grid/noise-sweep")
    plot_cmd.add_argument("--out", default=None, help="output image path")
    plot_cmd.set_defaults(handler=cmd_plot)

    serve_cmd = commands.add_parser("serve", help="start the interactive session service")
    serve_cmd.add_argument("--config", default=None, help="service config (JSON)")
    serve_cmd.add_argument("--static", default=None, help="directory of UI assets to mount")
    serve_cmd.set_defaults(handler=cmd_serve)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.handler(args)
    except (OSError, ValueError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
