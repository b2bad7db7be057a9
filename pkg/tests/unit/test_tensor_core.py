from __future__ import annotations

import numpy as np
import pytest

from gtn.errors import DimensionError, NonFiniteError
from gtn.tensor import (
    Rng,
    Tensor,
    add,
    concat_rows,
    elementwise,
    equal,
    expand_rows,
    matmul,
    mean_axis,
    mul,
    relu,
    sigmoid,
    sub,
    sum_rows,
    take_rows,
)
from gtn.tensor.ops import matmul_arrays


def test_tensor_rejects_empty_and_non_finite():
    with pytest.raises(DimensionError):
        Tensor([])
    with pytest.raises(NonFiniteError):
        Tensor([1.0, float("nan")])
    with pytest.raises(NonFiniteError):
        Tensor([[float("inf")]])
    with pytest.raises(DimensionError):
        Tensor([1.0, 2.0, 3.0], shape=(2, 2))


def test_tensor_is_read_only_and_numpy_returns_a_copy():
    t = Tensor([[1.0, 2.0], [3.0, 4.0]])
    with pytest.raises(ValueError):
        t.array[0, 0] = 9.0
    copy = t.numpy()
    copy[0, 0] = 9.0
    assert t.array[0, 0] == 1.0
    assert t.data.tolist() == [1.0, 2.0, 3.0, 4.0]


def test_flat_index_is_row_major():
    t = Tensor.zeros((2, 3, 4))
    assert t.flat_index((0, 0, 0)) == 0
    assert t.flat_index((1, 2, 3)) == 23
    assert t.flat_index((1, 0, 2)) == 14
    assert t.unravel(14) == (1, 0, 2)
    with pytest.raises(IndexError):
        t.flat_index((2, 0, 0))
    with pytest.raises(DimensionError):
        t.flat_index((0, 0))


def test_reshape_and_transpose():
    t = Tensor(list(range(6)), shape=(2, 3))
    assert t.reshape(3, 2).tolist() == [[0.0, 1.0], [2.0, 3.0], [4.0, 5.0]]
    assert t.T.shape == (3, 2)
    assert t.T.tolist()[0] == [0.0, 3.0]
    with pytest.raises(DimensionError):
        t.reshape(4, 2)


def test_matmul_matches_hand_computed_product():
    a = Tensor([[1.0, 2.0], [3.0, 4.0]])
    b = Tensor([[5.0, 6.0], [7.0, 8.0]])
    assert matmul(a, b).tolist() == [[19.0, 22.0], [43.0, 50.0]]
    assert (a @ b).tolist() == [[19.0, 22.0], [43.0, 50.0]]


def test_matmul_shape_mismatch_names_both_shapes():
    a = Tensor.zeros((2, 3))
    b = Tensor.zeros((2, 3))
    with pytest.raises(DimensionError) as exc:
        matmul(a, b)
    assert "(2, 3)" in str(exc.value)


def test_matmul_equals_naive_triple_loop_bit_for_bit():
    rng = Rng(5)
    a = rng.normal((7, 13))
    b = rng.normal((13, 5))
    expected = np.zeros((7, 5))
    for i in range(7):
        for j in range(5):
            acc = a[i, 0] * b[0, j]
            for k in range(1, 13):
                acc = acc + a[i, k] * b[k, j]
            expected[i, j] = acc
    assert matmul_arrays(a, b).tobytes() == expected.tobytes()


def test_matmul_is_deterministic_across_calls():
    rng = Rng(11)
    a = Tensor.wrap(rng.normal((16, 32)))
    b = Tensor.wrap(rng.normal((32, 8)))
    assert equal(matmul(a, b), matmul(a, b))


def test_binary_ops_require_identical_shapes():
    a = Tensor.ones((2, 3))
    b = Tensor.ones((3, 2))
    for op in (add, sub, mul):
        with pytest.raises(DimensionError):
            op(a, b)
    with pytest.raises(DimensionError):
        elementwise("add", a)


def test_elementwise_values():
    a = Tensor([1.0, -2.0, 0.0])
    b = Tensor([0.5, 0.5, 0.5])
    assert add(a, b).tolist() == [1.5, -1.5, 0.5]
    assert sub(a, b).tolist() == [0.5, -2.5, -0.5]
    assert mul(a, b).tolist() == [0.5, -1.0, 0.0]
    assert relu(a).tolist() == [1.0, 0.0, 0.0]
    assert (a * 2.0).tolist() == [2.0, -4.0, 0.0]


def test_sigmoid_is_stable_for_large_inputs():
    out = sigmoid(Tensor([-1000.0, 0.0, 1000.0])).tolist()
    assert out[0] == 0.0
    assert out[1] == 0.5
    assert out[2] == 1.0


def test_shape_helpers():
    v = Tensor([1.0, 2.0])
    m = expand_rows(v, 3)
    assert m.shape == (3, 2)
    assert sum_rows(m).tolist() == [3.0, 6.0]
    assert mean_axis(m, 0).tolist() == [1.0, 2.0]
    stacked = concat_rows([m, Tensor([[5.0, 6.0]])])
    assert stacked.shape == (4, 2)
    assert take_rows(stacked, [3, 0]).tolist() == [[5.0, 6.0], [1.0, 2.0]]
    with pytest.raises(DimensionError):
        concat_rows([m, Tensor([[1.0, 2.0, 3.0]])])
    with pytest.raises(DimensionError):
        mean_axis(m, 2)


def test_equal_is_bitwise():
    a = Tensor([0.1 + 0.2])
    b = Tensor([0.3])
    assert not equal(a, b)
    assert equal(a, Tensor([0.1 + 0.2]))
    assert not equal(Tensor.zeros((2, 2)), Tensor.zeros(4))
