"""Counter-based random streams keyed by (master seed, stream path).

Every stream is a Philox generator seeded through ``SeedSequence`` with the
stream path as spawn key, so any stream can be reconstructed on its own and
the output of a chunked computation never depends on how chunks are
scheduled.
"""

from __future__ import annotations

import hashlib
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, List, Sequence, TypeVar

import numpy as np

T = TypeVar("T")

SEED_MASK = (1 << 64) - 1


def name_key(name: str) -> int:
    """Stable 32-bit key derived from a string (experiment names, labels)."""
    return int.from_bytes(hashlib.sha256(name.encode()).digest()[:4], "little")


def stream(seed: int, *path: int) -> np.random.Generator:
    if seed < 0:
        raise ValueError("seed must be nonnegative")
    ss = np.random.SeedSequence(int(seed) & SEED_MASK, spawn_key=tuple(int(k) for k in path))
    return np.random.Generator(np.random.Philox(ss))


def chunk_sizes(n: int, chunk: int) -> List[int]:
    if n < 0 or chunk < 1:
        raise ValueError("need n >= 0 and chunk >= 1")
    full, rest = divmod(n, chunk)
    return [chunk] * full + ([rest] if rest else [])


def map_chunks(fn: Callable[[int, int], T], n: int, chunk: int, threads: int = 1) -> List[T]:
    """Apply ``fn(chunk_index, chunk_size)`` over fixed chunks, results in order.

    Chunk boundaries depend only on ``n`` and ``chunk``, so the list returned
    is the same for any thread count as long as ``fn`` draws from a stream
    keyed by the chunk index.
    """
    sizes = chunk_sizes(n, chunk)
    if threads <= 1 or len(sizes) <= 1:
        return [fn(i, m) for i, m in enumerate(sizes)]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, range(len(sizes)), sizes))


def ordered_concat(parts: Sequence[np.ndarray]) -> np.ndarray:
    return np.concatenate(parts) if len(parts) else np.zeros(0)
