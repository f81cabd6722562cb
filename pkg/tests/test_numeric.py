import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from msdn._validation import ContractError
from msdn.numeric import Rng, matmul


def test_matmul_identity():
    np.testing.assert_array_equal(matmul(np.eye(2), [[1, 2], [3, 4]]), [[1, 2], [3, 4]])


def test_matmul_zero():
    np.testing.assert_array_equal(matmul([[0]], [[5]]), [[0]])


def test_matmul_hand_value():
    np.testing.assert_array_equal(matmul([[1, 2], [3, 4]], [[5], [6]]), [[17], [39]])


def test_matmul_shape_error_names_both_shapes():
    with pytest.raises(ContractError, match="2x3.*2x3"):
        matmul(np.ones((2, 3)), np.ones((2, 3)))


def test_matmul_associative_and_transpose(rng):
    for _ in range(50):
        p, q, r, s = rng.integers(1, 8, size=4)
        A, B, C = rng.normal(size=(p, q)), rng.normal(size=(q, r)), rng.normal(size=(r, s))
        left, right = matmul(matmul(A, B), C), matmul(A, matmul(B, C))
        assert np.max(np.abs(left - right)) <= 1e-9 * max(1.0, np.max(np.abs(left)))
        np.testing.assert_allclose(matmul(A, B).T, matmul(B.T, A.T), atol=1e-12, rtol=0)


def test_shuffle_small_cases():
    assert Rng(0).shuffle(0).tolist() == []
    assert Rng(0).shuffle(1).tolist() == [0]


def test_shuffle_deterministic():
    assert Rng(7).shuffle(10).tolist() == Rng(7).shuffle(10).tolist()


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 500), st.integers(0, 2**32))
def test_shuffle_is_permutation(n, seed):
    assert sorted(Rng(seed).shuffle(n).tolist()) == list(range(n))


def test_streams_differ():
    assert Rng(3, 0).shuffle(50).tolist() != Rng(3, 1).shuffle(50).tolist()


def test_uniform_degenerate_and_range():
    np.testing.assert_array_equal(Rng(0).uniform(0, 0, (3, 2)), np.zeros((3, 2)))
    u = Rng(1).uniform(-2, 3, (1000,))
    assert u.min() >= -2 and u.max() < 3


def test_uniform_mean():
    assert abs(Rng(2).uniform(0, 1, (10_000,)).mean() - 0.5) <= 0.02


def test_uniform_deterministic_and_checked():
    np.testing.assert_array_equal(Rng(5).uniform(0, 1, (4, 4)), Rng(5).uniform(0, 1, (4, 4)))
    with pytest.raises(ContractError):
        Rng(0).uniform(1, 0, (2,))
