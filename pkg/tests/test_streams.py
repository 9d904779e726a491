import numpy as np
import pytest

from levelcurv.families import builtin, list_builtin
from levelcurv.streams import chunked_until, pmap, set_default_workers, stream


def test_streams_are_keyed_not_positional():
    a = stream(1, 2, 3).random(4)
    assert np.array_equal(a, stream(1, 2, 3).random(4))
    assert not np.array_equal(a, stream(1, 3, 2).random(4))
    assert not np.array_equal(a, stream(2, 2, 3).random(4))


@pytest.mark.parametrize("workers", [1, 2, 5])
def test_pmap_keeps_order(workers):
    assert pmap(lambda k: k * k, range(20), workers) == [k * k for k in range(20)]


@pytest.mark.parametrize("workers", [1, 3, 8])
def test_chunked_until_prefix_is_worker_independent(workers):
    calls = []

    def fn(k):
        calls.append(k)
        return k

    out = chunked_until(fn, lambda p: sum(p) >= 10, 100, workers)
    assert out == [0, 1, 2, 3, 4]


def test_default_workers_validation():
    with pytest.raises(ValueError):
        set_default_workers(0)


def test_builtin_catalog():
    names = [b.name for b in list_builtin()]
    assert names == ["sphere2", "sphere3", "linear", "broughton", "plane3"]
    assert builtin("broughton").n == 2 and builtin("sphere3").n == 3
    with pytest.raises(KeyError):
        builtin("torus")
