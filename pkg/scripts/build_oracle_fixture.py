#!/usr/bin/env python3
"""
Recompute the committed oracle values (closed form where available,
nested quadrature otherwise) and rewrite the fixture file.
"""
import sys
from pathlib import Path

# Add parent directory to path for imports
sys.path.insert(0, str(Path(__file__).parent.parent))

from rare_mcmc.config import configure_logging, get_settings
from rare_mcmc.services.oracle import FIXTURE_GRID, build_fixture


if __name__ == "__main__":
    configure_logging()
    target = sys.argv[1] if len(sys.argv) > 1 else get_settings().oracle_fixture
    results = build_fixture(target)
    for (n, beta, a), result in zip(FIXTURE_GRID, results):
        print(f"n={n} beta={beta:g} a={a:g}: {result.value:.12e} +/- {result.abs_error_bound:.1e} ({result.method})")
    print(f"Wrote {target}")
