"""Command-line entry points: run, bench, synth, serve, report.

Exit codes: 0 success, 1 usage error, 2 runtime failure. All subcommands
honor --seed for reproducible output. Log verbosity comes from the
MVLAB_LOG environment variable (debug/info/warning/error).
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import os
import sys
from pathlib import Path

from . import bench as bench_mod
from .model import ManifestError, enumerate_universes, parse_manifest
from .runner import COUNTED_STATUSES, MultiverseRunner, RunConfig
from .sampling import SamplerKind, make_plan
from .stats import BOOTSTRAP_OFFLINE, report_to_csv_rows, sensitivity_report
from .synth import PRESET_NAMES, generate, load_table, preset

log = logging.getLogger("mvlab")

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_RUNTIME = 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message: str) -> None:  # argparse would exit(2)
        raise UsageError(message)


def _setup_logging() -> None:
    level = os.environ.get("MVLAB_LOG", "warning").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING),
                        format="%(levelname)s %(name)s: %(message)s")


def default_workers() -> int:
    return max(1, (os.cpu_count() or 2) - 1)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="mvlab", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="execute a multiverse headlessly to completion")
    run_p.add_argument("manifest", type=Path)
    run_p.add_argument("--sampler", choices=[k.value for k in SamplerKind], default="round_robin")
    run_p.add_argument("--seed", type=int, default=0)
    run_p.add_argument("--workers", type=int, default=default_workers())
    run_p.add_argument("--timeout", type=float, default=60.0)
    run_p.add_argument("--out", type=Path, default=Path("mvlab-out"))

    bench_p = sub.add_parser("bench", help="termination, trajectory, and bias-MSE benchmarks")
    bench_p.add_argument("--preset", choices=list(PRESET_NAMES))
    bench_p.add_argument("--table", type=Path, help="precomputed-outcome CSV")
    bench_p.add_argument("--sampler", choices=[k.value for k in SamplerKind], default="round_robin")
    bench_p.add_argument("--repeats", type=int, default=50)
    bench_p.add_argument("--seed", type=int, default=0)
    bench_p.add_argument("--data-seed", type=int, default=11,
                         help="seed for generating the preset multiverse")
    bench_p.add_argument("--sketch-interactions", action="store_true",
                         help="add pairwise option columns to the sketching design")
    bench_p.add_argument("--out", type=Path, default=Path("mvlab-bench"))

    synth_p = sub.add_parser("synth", help="write a synthetic multiverse outcome table")
    synth_p.add_argument("--preset", required=True)
    synth_p.add_argument("--seed", type=int, default=0)
    synth_p.add_argument("--out", type=Path, required=True, help="output CSV path")

    serve_p = sub.add_parser("serve", help="host the monitoring service and dashboard")
    serve_p.add_argument("manifest", type=Path)
    serve_p.add_argument("--port", type=int, default=8646)
    serve_p.add_argument("--host", default="127.0.0.1")
    serve_p.add_argument("--sampler", choices=[k.value for k in SamplerKind], default="round_robin")
    serve_p.add_argument("--seed", type=int, default=0)
    serve_p.add_argument("--workers", type=int, default=default_workers())
    serve_p.add_argument("--timeout", type=float, default=60.0)
    serve_p.add_argument("--out", type=Path, default=Path("mvlab-out"))
    serve_p.add_argument("--static", type=Path, default=None,
                         help="directory of built dashboard assets")

    report_p = sub.add_parser("report", help="offline sensitivity report from an outcome table")
    report_p.add_argument("--table", type=Path, required=True)
    report_p.add_argument("--method", choices=["ad", "f", "ks", "lr"], default="ad")
    report_p.add_argument("--seed", type=int, default=0)
    report_p.add_argument("--bootstrap", type=int, default=BOOTSTRAP_OFFLINE)
    report_p.add_argument("--out", type=Path, required=True)
    return parser


def _write_csv(path: Path, rows: list[list[str]]) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        csv.writer(fh).writerows(rows)


def _offline_report(mv, method: str, n_resamples: int, seed: int):
    from .stats import OutcomeSample

    samples = [
        OutcomeSample(universe_id=u.id, y=float(y), g=1.0 / mv.n)
        for u, y in zip(mv.universes, mv.outcomes)
    ]
    return sensitivity_report(
        mv.space, mv.universes, samples, method=method,
        with_ci=True, n_resamples=n_resamples, seed=seed,
    )


def cmd_run(args: argparse.Namespace) -> int:
    try:
        text = args.manifest.read_text()
    except OSError as exc:
        raise UsageError(f"cannot read manifest: {exc}") from exc
    space = parse_manifest(text)
    if not space.command_template:
        raise UsageError("manifest has no command template; nothing to execute")
    universes = enumerate_universes(space)
    plan = make_plan(args.sampler, space, universes, args.seed)
    out: Path = args.out
    out.mkdir(parents=True, exist_ok=True)
    plan.write_csv(out / "plan.csv")
    config = RunConfig(workers=args.workers, timeout=args.timeout)
    runner = MultiverseRunner(
        space, plan, universes, config,
        results_path=out / "results.jsonl",
        snapshots_path=out / "snapshots.jsonl",
    )
    runner.start()
    runner.join()
    results = runner.results()
    failed = sum(1 for r in results.values() if r.status not in COUNTED_STATUSES)
    (out / "run.json").write_text(json.dumps({
        "manifest": str(args.manifest),
        "sampler": args.sampler,
        "seed": args.seed,
        "workers": args.workers,
        "total": len(universes),
        "completed": len(results),
        "failed": failed,
    }, indent=2))
    samples = runner.counted_samples()
    scores = sensitivity_report(
        space, universes, samples, method="ad",
        with_ci=True, n_resamples=BOOTSTRAP_OFFLINE, seed=args.seed,
    )
    _write_csv(out / "sensitivity.csv", report_to_csv_rows(scores))
    log.info("run complete: %d/%d universes, %d failed", len(results), len(universes), failed)
    if failed * 2 > len(universes):
        print(f"mvlab run: {failed}/{len(universes)} universes failed", file=sys.stderr)
        return EXIT_RUNTIME
    return EXIT_OK


def _bench_multiverse(args: argparse.Namespace):
    if args.preset and args.table:
        raise UsageError("give either --preset or --table, not both")
    if not args.preset and not args.table:
        raise UsageError("one of --preset or --table is required")
    if args.preset:
        return generate(preset(args.preset), seed=args.data_seed)
    return load_table(args.table.read_text(), name=args.table.stem)


def cmd_bench(args: argparse.Namespace) -> int:
    mv = _bench_multiverse(args)
    kind = SamplerKind(args.sampler)
    out: Path = args.out
    out.mkdir(parents=True, exist_ok=True)

    config = bench_mod.BenchConfig(
        repeats=args.repeats, sketch_pairwise=args.sketch_interactions
    )
    result = bench_mod.termination_benchmark(mv, kind, config, seed=args.seed)
    rows = [["repeat", "fraction"]] + [
        [str(i), repr(float(f))] for i, f in enumerate(result.fractions)
    ]
    _write_csv(out / "fractions.csv", rows)
    (out / "summary.json").write_text(result.summary_json())

    trajectory = bench_mod.correlation_trajectory(
        mv, kind, repeats=args.repeats, seed=args.seed,
        sketch_pairwise=args.sketch_interactions,
    )
    _write_csv(out / "trajectory.csv", trajectory.csv_rows())

    mse_rows = [["sampler", "corrected", "mse_mean", "burn_in", "repeats"]]
    for corrected in (True, False):
        mse = bench_mod.bias_mse_experiment(
            mv, kind, repeats=args.repeats, seed=args.seed, corrected=corrected,
            sketch_pairwise=args.sketch_interactions,
        )
        mse_rows.append([kind.value, str(corrected).lower(), repr(mse.mean),
                         str(mse.burn_in), str(args.repeats)])
    _write_csv(out / "mse.csv", mse_rows)

    (out / "bench.json").write_text(json.dumps({
        "source": args.preset or str(args.table),
        "sampler": kind.value,
        "repeats": args.repeats,
        "seed": args.seed,
        "sketch_interactions": args.sketch_interactions,
        "universes": mv.n,
        "decisions": [
            {"name": d.name, "cardinality": d.cardinality} for d in mv.space.decisions
        ],
    }, indent=2))
    return EXIT_OK


def cmd_synth(args: argparse.Namespace) -> int:
    try:
        spec = preset(args.preset)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    mv = generate(spec, seed=args.seed)
    out: Path = args.out
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(mv.to_csv())
    sidecar = out.with_suffix(out.suffix + ".truth.json")
    sidecar.write_text(json.dumps({
        "name": spec.name,
        "seed": args.seed,
        "sigma": spec.sigma,
        "universes": mv.n,
        "true_mean": mv.true_mean,
        "true_sensitive": sorted(spec.true_sensitive),
        "true_ranking": list(spec.true_ranking),
        "decisions": [
            {"name": d.name, "options": [{"name": o.name, "mean": o.mean} for o in d.options]}
            for d in spec.decisions
        ],
    }, indent=2))
    return EXIT_OK


def cmd_serve(args: argparse.Namespace) -> int:
    import uvicorn

    from .service import ServiceSession, create_app

    try:
        text = args.manifest.read_text()
    except OSError as exc:
        raise UsageError(f"cannot read manifest: {exc}") from exc
    space = parse_manifest(text)
    universes = enumerate_universes(space)
    plan = make_plan(args.sampler, space, universes, args.seed)
    out: Path = args.out
    out.mkdir(parents=True, exist_ok=True)
    runner = MultiverseRunner(
        space, plan, universes,
        RunConfig(workers=args.workers, timeout=args.timeout),
        results_path=out / "results.jsonl",
        snapshots_path=out / "snapshots.jsonl",
    )
    static = str(args.static) if args.static else None
    app = create_app(ServiceSession(space=space, runner=runner), static_dir=static)

    @app.on_event("shutdown")
    def _graceful() -> None:
        try:
            runner.pause()
        except Exception:
            pass
        runner.join(timeout=args.timeout)

    try:
        uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
    except (OSError, SystemExit) as exc:
        print(f"mvlab serve: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    return EXIT_OK


def cmd_report(args: argparse.Namespace) -> int:
    try:
        text = args.table.read_text()
    except OSError as exc:
        raise UsageError(f"cannot read table: {exc}") from exc
    mv = load_table(text, name=args.table.stem)
    scores = _offline_report(mv, args.method, args.bootstrap, args.seed)
    _write_csv(args.out, report_to_csv_rows(scores))
    return EXIT_OK


COMMANDS = {
    "run": cmd_run,
    "bench": cmd_bench,
    "synth": cmd_synth,
    "serve": cmd_serve,
    "report": cmd_report,
}


def main(argv: list[str] | None = None) -> int:
    _setup_logging()
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"mvlab: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ManifestError as exc:
        print(f"mvlab: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except KeyboardInterrupt:
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
