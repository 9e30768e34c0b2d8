#!/usr/bin/env python3
"""Reproduce the sampling-efficiency and bias-correction experiments.

Runs every preset x sampler combination of the termination benchmark, the
correlation trajectories, and the bias-MSE comparison, writing plot-ready
CSVs plus a summary table to --out. With default settings (50 repeats) this
takes a few minutes on a laptop; --repeats 200 reproduces the full-scale
numbers.
"""

import argparse
import csv
import json
import sys
import time
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "src"))

from mvlab.bench import (
    BenchConfig,
    bias_mse_experiment,
    correlation_trajectory,
    termination_benchmark,
)
from mvlab.sampling import SamplerKind
from mvlab.synth import PRESET_NAMES, generate, preset

SAMPLERS = [k.value for k in SamplerKind]


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", type=Path, default=Path("benchmark-results"))
    parser.add_argument("--repeats", type=int, default=50)
    parser.add_argument("--seed", type=int, default=101)
    parser.add_argument("--data-seed", type=int, default=11)
    parser.add_argument("--presets", nargs="*", default=list(PRESET_NAMES))
    parser.add_argument("--skip-trajectories", action="store_true")
    args = parser.parse_args()
    args.out.mkdir(parents=True, exist_ok=True)

    summary_rows = []
    mse_rows = []
    for name in args.presets:
        mv = generate(preset(name), seed=args.data_seed)
        print(f"== {name}: n={mv.n}, decisions={len(mv.space.decisions)}")
        for sampler in SAMPLERS:
            started = time.monotonic()
            result = termination_benchmark(
                mv, sampler, BenchConfig(repeats=args.repeats), seed=args.seed
            )
            q1, q3 = result.iqr
            summary_rows.append({
                "preset": name, "sampler": sampler,
                "mean": result.mean, "median": result.median, "q1": q1, "q3": q3,
            })
            print(f"   {sampler:12s} median={result.median:.3f} mean={result.mean:.3f} "
                  f"[{time.monotonic() - started:.0f}s]")

            with open(args.out / f"fractions_{name}_{sampler}.csv", "w", newline="") as fh:
                writer = csv.writer(fh)
                writer.writerow(["repeat", "fraction"])
                for i, f in enumerate(result.fractions):
                    writer.writerow([i, repr(float(f))])

            if not args.skip_trajectories:
                trajectory = correlation_trajectory(
                    mv, sampler, repeats=args.repeats, seed=args.seed
                )
                with open(args.out / f"trajectory_{name}_{sampler}.csv", "w", newline="") as fh:
                    csv.writer(fh).writerows(trajectory.csv_rows())

            for corrected in (True, False):
                mse = bias_mse_experiment(
                    mv, sampler, repeats=args.repeats, seed=args.seed + 1,
                    corrected=corrected,
                )
                mse_rows.append({
                    "preset": name, "sampler": sampler,
                    "corrected": corrected, "mse": mse.mean, "burn_in": mse.burn_in,
                })

    with open(args.out / "termination_summary.csv", "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=list(summary_rows[0]))
        writer.writeheader()
        writer.writerows(summary_rows)
    with open(args.out / "mse_summary.csv", "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=list(mse_rows[0]))
        writer.writeheader()
        writer.writerows(mse_rows)
    (args.out / "config.json").write_text(json.dumps(vars(args), indent=2, default=str))
    print(f"wrote {args.out}/termination_summary.csv and mse_summary.csv")
    return 0


if __name__ == "__main__":
    sys.exit(main())
