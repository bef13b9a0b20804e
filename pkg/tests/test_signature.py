import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from rformer.series import TimeSeries
from rformer.signature import (
    fold_increments,
    levels_mul,
    numeric_signature_oracle,
    path_signature,
    segment_signature,
    time_augment,
)
from rformer.tensor_algebra import level_max_norm, tensor_mul, unit


def test_segment_closed_form_1d():
    s = segment_signature([2.0], 3)
    np.testing.assert_allclose(s.flatten(), [1, 2, 2, 4 / 3], rtol=1e-15)


def test_segment_zero_increment_is_unit():
    s = segment_signature([0.0, 0.0], 3)
    for x, y in zip(s.levels, unit(2, 3).levels):
        assert np.array_equal(x, y)


def test_segment_level_two_by_hand():
    s = segment_signature([1.0, 0.0], 2)
    np.testing.assert_array_equal(s.level(2), [[0.5, 0.0], [0.0, 0.0]])


def test_segment_rejects_bad_input():
    with pytest.raises(ValueError):
        segment_signature([np.nan], 2)
    with pytest.raises(ValueError):
        segment_signature([1.0], 0)


def test_l_path_level_two():
    s = path_signature([[0, 0], [1, 0], [1, 1]], 2)
    assert s[(1, 2)] == 1.0
    assert s[(2, 1)] == 0.0
    assert s[(1, 1)] == 0.5
    assert s[(2, 2)] == 0.5


def test_l_path_against_riemann_oracle():
    def f(t):
        t = np.asarray(t)
        return np.column_stack([np.clip(t, 0, 1), np.clip(t - 1, 0, 1)])

    oracle = numeric_signature_oracle(f, 0.0, 2.0, depth=2, grid=20_000)
    exact = path_signature([[0, 0], [1, 0], [1, 1]], 2)
    np.testing.assert_allclose(oracle.flatten(), exact.flatten(), atol=1e-3)


def test_single_segment_path_equals_segment():
    rng = np.random.default_rng(1)
    p, q = rng.normal(size=(2, 3))
    a = path_signature([p, q], 3)
    b = segment_signature(q - p, 3)
    for x, y in zip(a.levels, b.levels):
        np.testing.assert_allclose(x, y, rtol=1e-15, atol=0)


def test_midpoint_insertion_is_noop():
    rng = np.random.default_rng(2)
    pts = rng.normal(size=(6, 2))
    i = 3
    refined = np.insert(pts, i + 1, 0.5 * (pts[i] + pts[i + 1]), axis=0)
    np.testing.assert_allclose(path_signature(refined, 4).flatten(), path_signature(pts, 4).flatten(), atol=1e-12)


def test_path_signature_rejects_bad_input():
    with pytest.raises(ValueError):
        path_signature([[0.0, 1.0]], 2)
    with pytest.raises(ValueError):
        path_signature([[0.0], [np.inf]], 2)


def test_time_augment():
    s = TimeSeries([0.0, 1.0], [[5.0], [7.0]])
    a = time_augment(s)
    np.testing.assert_array_equal(a.values, [[0, 5], [1, 7]])
    assert time_augment(TimeSeries([0, 1, 2], np.zeros((3, 2)))).dim == 3


def test_time_augment_makes_constant_path_visible():
    s = TimeSeries([0.0, 1.0, 3.0], [[2.0], [2.0], [2.0]])
    assert level_max_norm(path_signature(s.values, 2), 1) == 0
    assert path_signature(time_augment(s).values, 2)[(1,)] == 3.0


def test_oracle_straight_line():
    oracle = numeric_signature_oracle(lambda t: np.column_stack([t, t]), 0.0, 1.0, depth=2, grid=5000)
    exact = path_signature([[0, 0], [1, 1]], 2)
    np.testing.assert_allclose(oracle.flatten(), exact.flatten(), rtol=1e-3)


def test_oracle_constant_path():
    oracle = numeric_signature_oracle(lambda t: np.full((np.size(t), 2), 3.0), 0.0, 1.0, depth=3, grid=1000)
    np.testing.assert_allclose(oracle.flatten(), unit(2, 3).flatten(), atol=1e-12)


def test_levy_area_of_half_circle():
    oracle = numeric_signature_oracle(lambda t: np.column_stack([np.cos(t), np.sin(t)]), 0.0, np.pi, depth=2)
    area = 0.5 * (oracle[(1, 2)] - oracle[(2, 1)])
    # half disc enclosed by the arc and its chord
    assert area == pytest.approx(np.pi / 2, rel=1e-4)


def random_path(rng, n_points, dim):
    return np.cumsum(rng.normal(size=(n_points, dim)), axis=0)


@settings(max_examples=100, deadline=None)
@given(
    dim=st.integers(1, 3),
    depth=st.integers(2, 4),
    n_points=st.integers(3, 50),
    seed=st.integers(0, 2**32 - 1),
)
def test_chen_identity(dim, depth, n_points, seed):
    rng = np.random.default_rng(seed)
    pts = random_path(rng, n_points, dim)
    k = int(rng.integers(1, n_points - 1))
    whole = path_signature(pts, depth)
    split = tensor_mul(path_signature(pts[: k + 1], depth), path_signature(pts[k:], depth))
    assert np.max(np.abs(whole.flatten() - split.flatten())) < 1e-10


@settings(max_examples=50, deadline=None)
@given(dim=st.integers(1, 3), n_points=st.integers(2, 30), seed=st.integers(0, 2**32 - 1))
def test_retiming_invariance(dim, n_points, seed):
    rng = np.random.default_rng(seed)
    vals = random_path(rng, n_points, dim)
    t1 = np.cumsum(rng.uniform(0.1, 1.0, n_points))
    t2 = np.cumsum(rng.uniform(0.1, 5.0, n_points))
    a = path_signature(TimeSeries(t1, vals).values, 3)
    b = path_signature(TimeSeries(t2, vals).values, 3)
    for x, y in zip(a.levels, b.levels):
        assert np.array_equal(x, y)


@settings(max_examples=50, deadline=None)
@given(dim=st.integers(1, 3), n_points=st.integers(2, 30), seed=st.integers(0, 2**32 - 1))
def test_factorial_decay(dim, n_points, seed):
    rng = np.random.default_rng(seed)
    pts = random_path(rng, n_points, dim)
    tv = np.abs(np.diff(pts, axis=0)).sum()
    s = path_signature(pts, 5)
    for k in range(6):
        assert level_max_norm(s, k) <= tv**k / math.factorial(k) * (1 + 1e-9)


@settings(max_examples=50, deadline=None)
@given(dim=st.integers(1, 3), depth=st.integers(1, 4), n_points=st.integers(2, 20), seed=st.integers(0, 2**32 - 1))
def test_vectorised_fold_matches_reference(dim, depth, n_points, seed):
    rng = np.random.default_rng(seed)
    pts = random_path(rng, n_points, dim)
    inc = np.diff(pts, axis=0)
    padded = np.concatenate([inc, np.zeros((3, dim))])
    ref = path_signature(pts, depth)
    for got in (fold_increments(inc, depth), fold_increments(padded, depth)):
        for x, y in zip(got, ref.levels):
            np.testing.assert_allclose(x, y, atol=1e-12 * max(1.0, np.abs(y).max()))


def test_levels_mul_matches_tensor_mul():
    rng = np.random.default_rng(3)
    a = path_signature(random_path(rng, 5, 2), 3)
    b = path_signature(random_path(rng, 5, 2), 3)
    got = levels_mul(list(a.levels), list(b.levels), 2)
    for x, y in zip(got, tensor_mul(a, b).levels):
        np.testing.assert_allclose(x, y, rtol=1e-14, atol=1e-14)
