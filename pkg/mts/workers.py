"""
workers.py — Worker count for joblib fan-out

Partition fits and grid-search folds both fan out with joblib. The count
comes from an explicit argument, else from TCK_N_JOBS, else 1. Results never
depend on it.

Usage:
    Parallel(n_jobs=resolve_n_jobs(n_jobs))(...)
"""

import os
from typing import Optional

from mts.errors import ConfigError

N_JOBS_ENV = "TCK_N_JOBS"


def resolve_n_jobs(n_jobs: Optional[int] = None) -> int:
    if n_jobs is not None:
        return n_jobs
    raw = os.environ.get(N_JOBS_ENV, "1")
    try:
        return int(raw)
    except ValueError:
        raise ConfigError(f"{N_JOBS_ENV} must be an integer, got {raw!r}")
