import numpy as np
import pytest

from idlefair.rng import (
    ExponentialSource,
    RngStream,
    UniformSource,
    exponential_from_uniform,
    sample_exponential,
    sample_uniforms,
)


def test_same_stream_is_bit_identical():
    a = sample_uniforms(RngStream(42, 3), 1000)
    b = sample_uniforms(RngStream(42, 3), 1000)
    assert np.array_equal(a, b)


def test_distinct_streams_differ():
    a = sample_uniforms(RngStream(42, 3), 1000)
    b = sample_uniforms(RngStream(42, 4), 1000)
    c = sample_uniforms(RngStream(43, 3), 1000)
    assert not np.array_equal(a, b)
    assert not np.array_equal(a, c)


def test_stream_independence_correlation():
    # paired samples from sibling streams are uncorrelated
    n = 100_000
    a = sample_uniforms(RngStream(7, 1), n)
    b = sample_uniforms(RngStream(7, 2), n)
    corr = np.corrcoef(a, b)[0, 1]
    assert abs(corr) < 0.01


def test_substream_tree_distinct():
    root = RngStream(5, 0)
    seen = set()
    for i in range(50):
        s = root.substream(i)
        seen.add(s)
        for j in range(5):
            seen.add(s.substream(j))
    assert len(seen) == 50 * 6
    # derived streams draw independently of their parents and siblings
    a = RngStream(5, 0).substream(1).generator().random(4)
    b = RngStream(5, 0).substream(2).generator().random(4)
    assert not (a == b).any()


def test_substream_label_bounds():
    with pytest.raises(ValueError):
        RngStream(1, 0).substream(-1)
    with pytest.raises(ValueError):
        RngStream(1, 0).substream(2**32)


def test_exponential_mean_rate_one():
    # Monte Carlo oracle: SE = 1/sqrt(1e6) = 1e-3, band is 4 SE
    samples = sample_exponential(RngStream(11, 0), 1.0, size=1_000_000)
    assert abs(samples.mean() - 1.0) < 0.004


def test_exponential_mean_rate_two():
    samples = sample_exponential(RngStream(11, 1), 2.0, size=1_000_000)
    assert abs(samples.mean() - 0.5) < 0.002


def test_exponential_rejects_bad_rate():
    with pytest.raises(ValueError):
        sample_exponential(RngStream(1, 0), 0.0)
    with pytest.raises(ValueError):
        sample_exponential(RngStream(1, 0), -1.0)


def test_inverse_cdf_maps_zero_to_zero():
    assert exponential_from_uniform(0.0, 3.0) == 0.0


def test_uniform_source_matches_generator():
    stream = RngStream(9, 9)
    src = UniformSource(stream)
    direct = stream.generator().random(20000)
    buffered = np.array([src.next() for _ in range(20000)])
    assert np.array_equal(direct, buffered)


def test_exponential_source_matches_transform():
    stream = RngStream(9, 10)
    src = ExponentialSource(stream, 2.5)
    direct = exponential_from_uniform(stream.generator().random(10000), 2.5)
    buffered = np.array([src.next() for _ in range(10000)])
    assert np.allclose(direct, buffered, rtol=0, atol=0)
