#!/usr/bin/env python3
import sys
import time

from schinzel_lab.config import load_experiments
from schinzel_lab.runner import ExperimentRunner


def run_benchmark(
    config_path="configs/experiments.yml", experiment_name="pair_corr_d1_k1_m2", threads=None
):
    print(f"Loading {experiment_name} from {config_path}...")
    try:
        experiments = load_experiments(config_path)
    except Exception as e:
        print(f"Error loading configs: {e}")
        sys.exit(1)

    if experiment_name not in experiments:
        print(f"Experiment {experiment_name} not found. Available: {list(experiments.keys())}")
        sys.exit(1)

    config = experiments[experiment_name]
    if threads is not None:
        config = config.model_copy(update={"threads": threads})
    runner = ExperimentRunner(config)

    print("\nStarting benchmark...")
    start_time = time.perf_counter()
    report = runner.run()
    end_time = time.perf_counter()

    duration = end_time - start_time
    rows = len(report.rows) if report.rows is not None else 0

    print("\n" + "=" * 40)
    print("BENCHMARK RESULTS")
    print("=" * 40)
    print(f"Experiment: {experiment_name}")
    print(f"Threads:    {config.threads}")
    print(f"Duration:   {duration:.4f} seconds")
    print(f"Compute:    {runner.metrics.get('compute_s', 0.0):.4f} seconds")
    print(f"Rows:       {rows:,}")
    print("=" * 40)


if __name__ == "__main__":
    import argparse

    parser = argparse.ArgumentParser(description="schinzel-lab benchmarking tool")
    parser.add_argument("--config", default="configs/experiments.yml", help="Path to catalogue")
    parser.add_argument(
        "--experiment", default="pair_corr_d1_k1_m2", help="Experiment name to benchmark"
    )
    parser.add_argument("--threads", type=int, default=None, help="Override worker processes")
    args = parser.parse_args()

    run_benchmark(args.config, args.experiment, args.threads)
