#!/usr/bin/env python3
"""
Standalone benchmark script for batch/cron execution.
Runs every preset (or the ones named on the command line) and writes one
results directory per preset.
"""
import sys
from pathlib import Path

# Add parent directory to path for imports
sys.path.insert(0, str(Path(__file__).parent.parent))

from rare_mcmc.config import configure_logging, get_settings
from rare_mcmc.errors import RareMCMCError
from rare_mcmc.services.harness import PRESETS, emit_csv, parse_config, run_experiment


def run_presets(names):
    """Run the named presets and print a summary table."""
    configure_logging()
    settings = get_settings()
    print("=" * 50)
    print("rare_mcmc benchmark - Starting")
    print("=" * 50)

    failures = 0
    for name in names:
        print(f"\n--- Preset: {name} ---")
        try:
            config = parse_config({"preset": name, "label": name})
            result = run_experiment(config)
            emit_csv(result, Path(settings.output_dir) / name)
        except RareMCMCError as e:
            print(f"    ERROR: {e}")
            failures += 1
            continue

        print(f"    threshold {result.threshold:.6g}, p_max {result.p_max:.5e}")
        for estimator, report in result.reports.items():
            print(f"    {estimator:>4}: avg {report.avg_est:.5e}  std {report.std_dev:.3e}  "
                  f"hit {report.hit_rate:.4f}  {report.avg_runtime_s:.1f}s/batch")
        for estimator, message in result.errors.items():
            print(f"    {estimator:>4}: FAILED {message}")
            failures += 1

    print("\n" + "=" * 50)
    print("rare_mcmc benchmark - Complete")
    print(f"  Presets run: {len(names)}")
    print(f"  Failures: {failures}")
    print("=" * 50)
    return 1 if failures else 0


if __name__ == "__main__":
    raise SystemExit(run_presets(sys.argv[1:] or list(PRESETS)))
