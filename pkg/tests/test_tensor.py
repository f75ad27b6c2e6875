import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from zvpred import ValidationError, as_tensor, count_zeros, tensor_get, tensor_zeros


def test_zeros_examples():
    assert tensor_zeros((1, 2, 2)).tolist() == [[[0, 0], [0, 0]]]
    assert tensor_zeros((2, 1, 1)).reshape(-1).tolist() == [0, 0]
    assert tensor_zeros((1, 1, 1)).reshape(-1).tolist() == [0]


@pytest.mark.parametrize("shape", [(0, 1, 1), (1, 0, 2), (2, 3, 0)])
def test_zeros_rejects_zero_dimension(shape):
    with pytest.raises(ValidationError):
        tensor_zeros(shape)


def test_get_row_major_layout():
    t = as_tensor([1, 2, 3, 4], (1, 2, 2))
    assert tensor_get(t, 0, 0, 1) == 2
    assert tensor_get(t, 0, 1, 0) == 3
    t2 = as_tensor([5, 6], (2, 1, 1))
    assert tensor_get(t2, 1, 0, 0) == 6


@pytest.mark.parametrize("idx", [(-1, 0, 0), (1, 0, 0), (0, 2, 0), (0, 0, 2)])
def test_get_out_of_bounds(idx):
    t = as_tensor([1, 2, 3, 4], (1, 2, 2))
    with pytest.raises(IndexError):
        tensor_get(t, *idx)


@given(
    c=st.integers(1, 3),
    h=st.integers(1, 5),
    w=st.integers(1, 5),
    seed=st.integers(0, 2**31),
)
def test_get_round_trips_flat_order(c, h, w, seed):
    rng = np.random.default_rng(seed)
    flat = rng.standard_normal(c * h * w).astype(np.float32)
    t = as_tensor(flat, (c, h, w))
    walked = [
        tensor_get(t, ci, y, x)
        for ci in range(c)
        for y in range(h)
        for x in range(w)
    ]
    assert walked == flat.tolist()


def test_count_zeros_examples():
    assert count_zeros(as_tensor([0, 1, 0, 2], (1, 2, 2)), 0.0) == 2
    assert count_zeros(tensor_zeros((1, 3, 3)), 0.0) == 9
    assert count_zeros(as_tensor([1e-9, 1.0], (2, 1, 1)), 1e-6) == 1


def test_count_zeros_rejects_negative_threshold():
    with pytest.raises(ValidationError):
        count_zeros(tensor_zeros((1, 1, 1)), -1.0)


@given(seed=st.integers(0, 2**31), n_zero=st.integers(0, 12))
def test_zero_plus_nonzero_partition(seed, n_zero):
    rng = np.random.default_rng(seed)
    values = rng.standard_normal(12) + 0.5
    values[:n_zero] = 0.0
    rng.shuffle(values)
    t = as_tensor(values, (3, 2, 2))
    zeros = count_zeros(t, 0.0)
    nonzeros = int(np.count_nonzero(t))
    assert zeros + nonzeros == t.size


def test_as_tensor_length_mismatch():
    with pytest.raises(ValidationError):
        as_tensor([1, 2, 3], (1, 2, 2))
