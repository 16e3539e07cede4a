"""Worker-thread sizing, controlled by the ISOGUARD_THREADS environment variable."""
from __future__ import annotations

import os
from collections.abc import Callable
from concurrent.futures import ThreadPoolExecutor

from .errors import IsoguardError

ENV_VAR = "ISOGUARD_THREADS"


def worker_count() -> int:
    """Configured worker cap; 0 or unset means one worker per CPU."""
    raw = os.environ.get(ENV_VAR, "0")
    try:
        n = int(raw)
    except ValueError:
        raise IsoguardError(f"{ENV_VAR} must be an integer, got {raw!r}") from None
    if n < 0:
        raise IsoguardError(f"{ENV_VAR} must be >= 0, got {n}")
    return n if n > 0 else (os.cpu_count() or 1)


def run_indexed(fn: Callable[[int], object], n_items: int) -> list:
    """Evaluate fn(0..n_items-1), results in index order.

    Each fn(i) must be self-contained (seeded by i), so the thread schedule
    cannot change the outcome.
    """
    workers = min(worker_count(), n_items)
    if workers <= 1:
        return [fn(i) for i in range(n_items)]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, range(n_items)))
