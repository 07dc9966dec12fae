"""Seed handling and worker-pool helpers.

Every random stream in walklab is a ``numpy.random.Generator`` backed by the
Philox-4x64 counter-based bit generator.  Child streams are derived with
``numpy.random.SeedSequence(master_seed, spawn_key=(index,))`` which hashes the
pair (master seed, index) into a fresh key.  Results therefore depend only on
the master seed and the replica index, never on scheduling order or thread
count.
"""
from __future__ import annotations

import os
import secrets
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Sequence, TypeVar

import numpy as np

T = TypeVar("T")

THREADS_ENV = "WALKLAB_THREADS"


def make_rng(seed: int, *key: int) -> np.random.Generator:
    """Philox generator for ``seed`` and an optional child key path."""
    ss = np.random.SeedSequence(int(seed), spawn_key=tuple(int(k) for k in key))
    return np.random.Generator(np.random.Philox(ss))


def fresh_seed() -> int:
    """A random 63-bit seed, for runs where the caller supplied none."""
    return secrets.randbits(63)


def resolve_threads(threads: int | None = None) -> int:
    """Worker count: the argument, else ``WALKLAB_THREADS``, else the usable cores."""
    if threads is not None:
        if threads < 1:
            raise ValueError(f"threads must be >= 1, got {threads}")
        return int(threads)
    env = os.environ.get(THREADS_ENV)
    if env:
        try:
            val = int(env)
        except ValueError:
            raise ValueError(f"{THREADS_ENV} must be an integer, got {env!r}") from None
        if val > 0:
            return val
    try:
        return len(os.sched_getaffinity(0))
    except AttributeError:  # pragma: no cover - non-linux
        return os.cpu_count() or 1


def parallel_map(fn: Callable[[int], T], indices: Sequence[int], threads: int | None = None) -> list[T]:
    """Apply ``fn`` to each index, returning results in index order.

    The heavy kernels are numba functions compiled with ``nogil=True`` so a
    thread pool gives real parallelism.
    """
    workers = resolve_threads(threads)
    if workers <= 1 or len(indices) <= 1:
        return [fn(i) for i in indices]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, indices))
