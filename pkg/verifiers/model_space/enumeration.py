"""
Enumeration, counting and chunking of the model class M(k).

Indices are 0-based throughout: covariate j of the user-facing documents is
index j here, so a model is a strictly increasing tuple of integers < p.
"""
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Iterator, List, NamedTuple, Optional, Tuple, TypeVar

from pydantic import BaseModel, ConfigDict, model_validator

from verifiers.errors import InputError
from verifiers.linalg_core import ModelIndex

logger = logging.getLogger(__name__)

T = TypeVar("T")


class ModelClassSpec(BaseModel):
    """All nonempty models of size between min_size and k over p covariates."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    p: int
    k: int
    min_size: int = 1

    @model_validator(mode="after")
    def _check_sizes(self) -> "ModelClassSpec":
        if self.p < 1:
            raise ValueError(f"p must be positive, got {self.p}")
        if not 1 <= self.k <= self.p:
            raise ValueError(f"need 1 <= k <= p, got k={self.k}, p={self.p}")
        if not 1 <= self.min_size <= self.k:
            raise ValueError(f"need 1 <= min_size <= k, got {self.min_size}")
        return self

    @classmethod
    def exact(cls, p: int, k: int) -> "ModelClassSpec":
        """Models of size exactly k."""
        return cls(p=p, k=k, min_size=k)


class ModelCount(NamedTuple):
    count: int
    bound: float


def count_models(spec: ModelClassSpec) -> ModelCount:
    """Exact count sum_s C(p, s) plus the analytic bound (e p / k)^k."""
    count = sum(math.comb(spec.p, s) for s in range(spec.min_size, spec.k + 1))
    try:
        bound = (math.e * spec.p / spec.k) ** spec.k
    except OverflowError:
        bound = math.inf
    return ModelCount(count=count, bound=bound)


def _unrank(p: int, s: int, rank: int) -> List[int]:
    combo: List[int] = []
    x = 0
    for i in range(s):
        while True:
            block = math.comb(p - x - 1, s - i - 1)
            if rank < block:
                combo.append(x)
                x += 1
                break
            rank -= block
            x += 1
    return combo


def _advance(combo: List[int], p: int) -> bool:
    s = len(combo)
    for i in range(s - 1, -1, -1):
        if combo[i] < p - s + i:
            combo[i] += 1
            for j in range(i + 1, s):
                combo[j] = combo[j - 1] + 1
            return True
    return False


def enumerate_models(spec: ModelClassSpec, start: int = 0, stop: Optional[int] = None) -> Iterator[ModelIndex]:
    """
    Stream models in ascending size, lexicographic within a size.

    Args:
        spec: model class
        start: first position (inclusive) in the enumeration order
        stop: last position (exclusive); None runs to the end

    Returns:
        Iterator over model tuples; positions [start, stop) only
    """
    total = count_models(spec).count
    stop = total if stop is None else min(stop, total)
    if start < 0 or start > stop:
        raise InputError(f"invalid range [{start}, {stop})")
    position = start
    offset = 0
    for s in range(spec.min_size, spec.k + 1):
        block = math.comb(spec.p, s)
        if position >= offset + block:
            offset += block
            continue
        if position >= stop:
            return
        combo = _unrank(spec.p, s, position - offset)
        while position < stop:
            yield tuple(combo)
            position += 1
            if not _advance(combo, spec.p):
                break
        offset += block


def chunk_models(spec: ModelClassSpec, n_chunks: int) -> List[range]:
    """Contiguous ranges partitioning the enumeration order; earlier chunks take the remainder."""
    if n_chunks < 1:
        raise InputError(f"n_chunks must be >= 1, got {n_chunks}")
    total = count_models(spec).count
    n_chunks = min(n_chunks, total)
    base, extra = divmod(total, n_chunks)
    ranges = []
    start = 0
    for i in range(n_chunks):
        size = base + (1 if i < extra else 0)
        ranges.append(range(start, start + size))
        start += size
    return ranges


def map_chunks(
    spec: ModelClassSpec,
    worker: Callable[[Iterator[ModelIndex]], T],
    threads: int = 1,
    chunks_per_thread: int = 4,
) -> List[T]:
    """Run ``worker`` on each chunk's model stream; results come back in chunk order."""
    if threads <= 1:
        return [worker(enumerate_models(spec))]
    chunks = chunk_models(spec, threads * chunks_per_thread)
    with ThreadPoolExecutor(max_workers=threads) as pool:
        futures = [pool.submit(worker, enumerate_models(spec, c.start, c.stop)) for c in chunks]
        return [f.result() for f in futures]


def first_argmax(partials: List[Tuple[float, Optional[ModelIndex]]]) -> Tuple[float, Optional[ModelIndex]]:
    """Combine chunk-level (value, model) maxima; ties keep the earliest chunk."""
    best: Tuple[float, Optional[ModelIndex]] = (-math.inf, None)
    for value, model in partials:
        if model is not None and value > best[0]:
            best = (value, model)
    return best


def first_argmin(partials: List[Tuple[float, Optional[ModelIndex]]]) -> Tuple[float, Optional[ModelIndex]]:
    """Combine chunk-level (value, model) minima; ties keep the earliest chunk."""
    best: Tuple[float, Optional[ModelIndex]] = (math.inf, None)
    for value, model in partials:
        if model is not None and value < best[0]:
            best = (value, model)
    return best
