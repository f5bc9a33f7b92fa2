import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from mcsvgd.kernel import (BANDWIDTH_FLOOR, KernelConfig, kernel_eval, kernel_grad, kernel_matrix,
                           median_bandwidth)

finite = st.floats(-5, 5, allow_nan=False, allow_infinity=False)


def test_median_three_points():
    assert median_bandwidth(np.array([[0.0], [1.0], [2.0]])) == pytest.approx(1 / math.log(3))
    assert median_bandwidth(np.array([[0.0], [1.0], [2.0]])) == pytest.approx(0.9102392266)


def test_median_two_points():
    assert median_bandwidth(np.array([[0.0], [2.0]])) == pytest.approx(4 / math.log(2))
    assert median_bandwidth(np.array([[0.0], [2.0]])) == pytest.approx(5.7707801636)


def test_median_all_equal_uses_floor():
    assert median_bandwidth(np.ones((5, 2))) == BANDWIDTH_FLOOR


def test_median_lower_median_for_even_count():
    # four points give six distances {1,1,1,2,2,3}; lower median is index 2 -> 1
    x = np.array([[0.0], [1.0], [2.0], [3.0]])
    assert median_bandwidth(x) == pytest.approx(1 / math.log(4))


@pytest.mark.parametrize("n", [0, 1])
def test_median_needs_two(n):
    with pytest.raises(ValueError, match="median heuristic undefined"):
        median_bandwidth(np.zeros((n, 1)))


def test_kernel_values():
    assert kernel_eval([0.3], [0.3], 1.0) == 1.0
    assert kernel_eval([0.0], [1.0], 1.0) == pytest.approx(math.exp(-1))
    assert kernel_eval([0.0, 0.0], [1.0, 1.0], 2.0) == pytest.approx(math.exp(-1))
    assert kernel_eval([0.0], [1.0], KernelConfig(1.0, "fixed")) == pytest.approx(math.exp(-1))


def test_kernel_grad_values():
    assert np.all(kernel_grad([0.4, -1.0], [0.4, -1.0], 0.7) == 0.0)
    assert kernel_grad([1.0], [0.0], 1.0)[0] == pytest.approx(-2 * math.exp(-1))
    assert kernel_grad([1.0], [0.0], 1.0)[0] == pytest.approx(-0.7357588823)


def test_dimension_mismatch():
    with pytest.raises(ValueError, match="dimension mismatch"):
        kernel_eval([0.0], [0.0, 1.0], 1.0)
    with pytest.raises(ValueError, match="dimension mismatch"):
        kernel_grad([0.0], [0.0, 1.0], 1.0)


def test_config_validation():
    with pytest.raises(ValueError):
        KernelConfig(bandwidth=0.0)
    with pytest.raises(ValueError):
        KernelConfig(mode="silverman")
    assert KernelConfig(2.5, "fixed").resolve(np.zeros((3, 1))) == 2.5


@given(arrays(float, 3, elements=finite), arrays(float, 3, elements=finite), st.floats(0.1, 10))
def test_symmetry_and_antisymmetry(a, b, h):
    assert kernel_eval(a, b, h) == kernel_eval(b, a, h)
    np.testing.assert_allclose(kernel_grad(a, b, h), -kernel_grad(b, a, h), atol=1e-300)


@settings(max_examples=50)
@given(arrays(float, (20, 2), elements=finite), st.floats(0.1, 10))
def test_gram_psd(x, h):
    K, _ = kernel_matrix(x, h)
    assert np.linalg.eigvalsh(K).min() >= -1e-10


@settings(max_examples=50)
@given(arrays(float, 2, elements=st.floats(-2, 2)), arrays(float, 2, elements=st.floats(-2, 2)),
       st.floats(0.5, 5))
def test_grad_matches_finite_differences(a, b, h):
    g = kernel_grad(a, b, h)
    eps = 1e-6
    fd = np.array([(kernel_eval(a + eps * e, b, h) - kernel_eval(a - eps * e, b, h)) / (2 * eps)
                   for e in np.eye(2)])
    np.testing.assert_allclose(g, fd, rtol=1e-6, atol=1e-9)


@given(arrays(float, (6, 2), elements=finite), st.randoms(use_true_random=False))
def test_median_permutation_invariant(x, rnd):
    perm = list(range(6))
    rnd.shuffle(perm)
    assert median_bandwidth(x) == median_bandwidth(x[perm])


def test_kernel_matrix_layout():
    x = np.array([[0.0], [1.0], [3.0]])
    K, diff = kernel_matrix(x, 2.0)
    assert K[0, 2] == pytest.approx(kernel_eval(x[0], x[2], 2.0))
    assert diff[2, 0, 0] == 3.0
