# Seeded random streams and optional thread-parallel mapping
import zlib
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Iterable, List, TypeVar

import numpy as np

T = TypeVar("T")
R = TypeVar("R")


def stream_key(*labels) -> List[int]:
    # Stable across processes and Python versions, unlike hash()
    return [zlib.crc32(str(label).encode()) for label in labels]


def derive_rng(seed: int, *labels) -> np.random.Generator:
    """Return the generator for the stream named by ``labels`` under ``seed``."""
    return np.random.default_rng(np.random.SeedSequence(entropy=int(seed) & (2**64 - 1), spawn_key=stream_key(*labels)))


def parallel_map(fn: Callable[[T], R], items: Iterable[T], workers: int = 1) -> List[R]:
    items = list(items)
    if workers <= 1 or len(items) <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))
