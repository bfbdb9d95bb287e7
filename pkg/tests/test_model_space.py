import math
from itertools import combinations

import pytest
from pydantic import ValidationError

from verifiers.model_space import (
    ModelClassSpec,
    chunk_models,
    count_models,
    enumerate_models,
    first_argmax,
    first_argmin,
    map_chunks,
)


def test_singletons():
    assert list(enumerate_models(ModelClassSpec(p=3, k=1))) == [(0,), (1,), (2,)]


def test_power_set_order():
    models = list(enumerate_models(ModelClassSpec(p=3, k=3)))
    assert [len(m) for m in models] == [1, 1, 1, 2, 2, 2, 3]
    assert models[3:6] == [(0, 1), (0, 2), (1, 2)]


def test_matches_bitmask_filter():
    expected = set()
    for mask in range(1, 2 ** 5):
        members = tuple(j for j in range(5) if mask >> j & 1)
        if len(members) <= 2:
            expected.add(members)
    models = list(enumerate_models(ModelClassSpec(p=5, k=2)))
    assert len(models) == 15
    assert set(models) == expected


@pytest.mark.parametrize(
    "p,k,count",
    [(10, 2, 55), (4, 4, 15), (6, 6, 63), (100, 3, 166750)],
)
def test_counts_and_bound(p, k, count):
    result = count_models(ModelClassSpec(p=p, k=k))
    assert result.count == count
    assert result.count <= result.bound


def test_bound_value():
    assert count_models(ModelClassSpec(p=10, k=2)).bound == pytest.approx((math.e * 5) ** 2)


def test_exact_size_class():
    spec = ModelClassSpec.exact(5, 3)
    models = list(enumerate_models(spec))
    assert models == list(combinations(range(5), 3))
    assert count_models(spec).count == 10


@pytest.mark.parametrize("kwargs", [dict(p=0, k=1), dict(p=3, k=0), dict(p=3, k=4), dict(p=3, k=2, min_size=3)])
def test_invalid_spec(kwargs):
    with pytest.raises(ValidationError):
        ModelClassSpec(**kwargs)


def test_single_chunk():
    assert chunk_models(ModelClassSpec(p=5, k=2), 1) == [range(0, 15)]


def test_even_chunks():
    chunks = chunk_models(ModelClassSpec(p=5, k=2), 3)
    assert [len(c) for c in chunks] == [5, 5, 5]


@pytest.mark.parametrize("n_chunks", [2, 4, 7, 50])
def test_chunk_union_is_full_enumeration(n_chunks):
    spec = ModelClassSpec(p=6, k=3)
    full = list(enumerate_models(spec))
    pieces = []
    for c in chunk_models(spec, n_chunks):
        pieces.extend(enumerate_models(spec, c.start, c.stop))
    assert pieces == full


def test_map_chunks_is_thread_count_invariant():
    spec = ModelClassSpec(p=7, k=3)

    def worker(models):
        best = (-math.inf, None)
        for m in models:
            value = float(sum(m) % 5)
            if value > best[0]:
                best = (value, m)
        return best

    serial = first_argmax(map_chunks(spec, worker, threads=1))
    threaded = first_argmax(map_chunks(spec, worker, threads=3))
    assert serial == threaded == (4.0, (4,))


def test_argmin_ignores_empty_chunks():
    assert first_argmin([(math.inf, None), (2.0, (1,)), (2.0, (3,))]) == (2.0, (1,))
