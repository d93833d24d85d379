"""Small shared helpers."""

from __future__ import annotations

import math
import os

THREADS_ENV = "THETAFOCK_THREADS"


def max_threads() -> int:
    """Internal parallelism cap from THETAFOCK_THREADS (default serial).

    Results are assembled in deterministic order regardless of the value.
    """
    raw = os.environ.get(THREADS_ENV)
    if not raw:
        return 1
    try:
        n = int(raw)
    except ValueError:
        return 1
    return max(1, min(n, os.cpu_count() or 1))


def fsum_complex(values) -> complex:
    """Exact-within-rounding sum of complex numbers via paired fsum."""
    vals = list(values)
    return complex(math.fsum(v.real for v in vals), math.fsum(v.imag for v in vals))
