from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fusedlasso import (
    InputError,
    Segmentation,
    Signal,
    StepModel,
    as_signal,
    compress,
    eps_sign_consistent,
    expand,
    set_distance,
)


def test_signal_rejects_bad_input():
    with pytest.raises(InputError):
        Signal([])
    with pytest.raises(InputError):
        Signal([1.0, math.nan])
    with pytest.raises(InputError):
        Signal([1.0, math.inf])


def test_signal_is_read_only():
    s = as_signal([1, 2, 3])
    assert s.n == 3
    with pytest.raises(ValueError):
        s.values[0] = 5.0


def test_segmentation_validation():
    with pytest.raises(InputError):
        Segmentation(4, [2, 2], [0, 1, 2], 0.0)
    with pytest.raises(InputError):
        Segmentation(4, [0], [0, 1], 0.0)
    with pytest.raises(InputError):
        Segmentation(4, [2], [1.0, 1.0], 0.0)  # zero jump
    with pytest.raises(InputError):
        Segmentation(4, [2], [1.0], 0.0)


def test_expand_compress_roundtrip():
    seg = Segmentation(6, [2, 5], [0.0, 3.0, -1.0], 0.5)
    m = expand(seg)
    assert m.tolist() == [0, 0, 3, 3, 3, -1]
    assert compress(m, 0.5) == seg
    assert seg.signs.tolist() == [1, -1]
    assert seg.lengths().tolist() == [2, 3, 1]


@settings(max_examples=60, deadline=None)
@given(st.lists(st.integers(-3, 3), min_size=1, max_size=40))
def test_compress_is_inverse_of_expand(values):
    m = np.asarray(values, dtype=float)
    np.testing.assert_array_equal(expand(compress(m)), m)


def test_compress_tolerance_merges_nearby_levels():
    seg = compress([1.0, 1.0 + 1e-12, 2.0], atol=1e-9)
    assert seg.change_points.tolist() == [2]
    assert seg.levels[0] == pytest.approx(1.0 + 5e-13, abs=1e-15)


def test_set_distance_cases():
    assert set_distance([], []) == 0.0
    assert set_distance([3], []) == math.inf
    assert set_distance([1, 10], [2]) == 8.0
    assert set_distance([5], [5]) == 0.0


def test_eps_sign_consistency():
    truth = StepModel(100, [30, 60], [0.0, 1.0, 0.0])
    near = Segmentation(100, [31, 58], [0.0, 1.0, 0.2], 1.0)
    assert eps_sign_consistent(near, truth, 0.05)
    wrong_sign = Segmentation(100, [31, 58], [0.0, 1.0, 2.0], 1.0)
    assert not eps_sign_consistent(wrong_sign, truth, 0.05)
    spurious = Segmentation(100, [31, 58, 90], [0.0, 1.0, 0.2, 0.5], 1.0)
    assert not eps_sign_consistent(spurious, truth, 0.05)
    # extra point near a true one of the wrong sign is tolerated if a right one exists
    extra = Segmentation(100, [29, 31, 58], [0.0, 1.0, 0.5, 0.0], 1.0)
    assert eps_sign_consistent(extra, truth, 0.05)
    # eps = 0 can never succeed
    exact = Segmentation(100, [30, 60], [0.0, 1.0, 0.0], 1.0)
    assert not eps_sign_consistent(exact, truth, 0.0)


def test_step_model_helpers():
    t = StepModel.from_lengths([2, 3, 5], [1, 2, 3], 0.5)
    assert t.change_points.tolist() == [2, 5]
    assert t.has_staircase()
    assert t.min_segment_fraction() == pytest.approx(0.2)
    assert not StepModel.from_lengths([2, 2], [1, 0]).has_staircase()
    with pytest.raises(InputError):
        StepModel(4, [2], [1.0, 1.0])
    with pytest.raises(InputError):
        StepModel(4, [2], [1.0, 2.0], -1.0)
