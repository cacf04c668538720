"""Optional numba acceleration.

numba is only required for the accelerated kernels, installed with the ``accel``
extra.  Without it, the decorators below are no-ops and callers fall back to the
vectorized numpy code paths, which produce identical results.
"""

from __future__ import annotations

import os
from typing import Any, Callable

__all__ = ["HAS_NUMBA", "njit", "prange", "resolve_threads", "set_threads"]

try:
    from numba import get_num_threads, njit, prange, set_num_threads

    HAS_NUMBA = True
except ImportError:  # pragma: no cover
    HAS_NUMBA = False
    prange = range

    def njit(*_: Any, **__: Any) -> Callable[[Callable], Callable]:  # type: ignore
        return lambda f: f


THREADS_ENV = "MANIFOLD_REPAIR_THREADS"


def resolve_threads(threads: int | None = None) -> int:
    """Resolve a thread count: explicit value, then the env var, then 0 (auto)."""
    if threads is None:
        env = os.getenv(THREADS_ENV, "").strip()
        try:
            threads = int(env) if env else 0
        except ValueError:
            raise ValueError(
                f"{THREADS_ENV} must be an integer, got {env!r}"
            ) from None
    if threads < 0:
        raise ValueError(f"threads must be >= 0, got {threads}")
    return threads


def set_threads(threads: int) -> int:
    """Apply `threads` to the numba thread pool and return the count in use.

    0 means "use every available core".  Without numba, this always returns 1.
    """
    if not HAS_NUMBA:
        return 1
    from numba import config

    # NUMBA_NUM_THREADS is the size of the launched pool, the hard upper limit
    threads = config.NUMBA_NUM_THREADS if threads == 0 else threads
    threads = min(threads, config.NUMBA_NUM_THREADS)
    set_num_threads(threads)
    return int(get_num_threads())
