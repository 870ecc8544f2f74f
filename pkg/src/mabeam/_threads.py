"""BLAS thread control.

All matrices in this package are tiny (N <= 16, Schur systems of a few
hundred rows); multithreaded BLAS spends far more time coordinating
threads than computing, so the solvers pin their hot loops to one thread.
"""

from __future__ import annotations

import contextlib
import functools

try:
    from threadpoolctl import threadpool_limits
except ImportError:  # pragma: no cover - threadpoolctl ships with scipy stacks
    threadpool_limits = None


def single_threaded_blas():
    if threadpool_limits is None:  # pragma: no cover
        return contextlib.nullcontext()
    return threadpool_limits(limits=1)


def serial_blas(fn):
    """Run the wrapped function under a single-threaded BLAS pool."""

    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        with single_threaded_blas():
            return fn(*args, **kwargs)

    return wrapper
