import numpy as np

from rrtpc.rng import UniformStream


def test_buffering_preserves_sequence():
    ref = np.random.Generator(np.random.Philox(99)).random(10000)
    s = UniformStream(99, block=7)
    got = []
    sizes = [1, 3, 4, 2, 11, 5]
    i = 0
    while len(got) < 10000:
        got.extend(s.take(sizes[i % len(sizes)]))
        i += 1
    np.testing.assert_array_equal(np.array(got[:10000]), ref)


def test_same_seed_same_stream():
    assert UniformStream(5).take(20) == UniformStream(5).take(20)
    assert UniformStream(5).take(20) != UniformStream(6).take(20)


def test_seed_range():
    UniformStream(2**64 - 1)
    for bad in (-1, 2**64):
        try:
            UniformStream(bad)
        except ValueError:
            continue
        raise AssertionError("seed outside uint64 accepted")
