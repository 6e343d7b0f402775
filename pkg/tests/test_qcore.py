import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from escqkd import qcore
from escqkd.qcore import ValidationError


def test_entropy_uniform():
    for k in (1, 2, 3, 7):
        assert qcore.entropy(np.full(k, 1 / k)) == pytest.approx(math.log2(k), abs=1e-14)


def test_entropy_ignores_zeros():
    assert qcore.entropy([0.5, 0.0, 0.5]) == pytest.approx(1.0)


def test_entropy_rejects_bad_input():
    with pytest.raises(ValidationError):
        qcore.entropy([0.5, 0.6])
    with pytest.raises(ValidationError):
        qcore.entropy([1.1, -0.1])


def test_mutual_information_extremes():
    assert qcore.mutual_information(np.eye(4) / 4) == pytest.approx(2.0)
    assert qcore.mutual_information(np.full((3, 5), 1 / 15)) == pytest.approx(0.0, abs=1e-14)


def test_binary_symmetric_channel():
    p = 0.11
    j = np.array([[1 - p, p], [p, 1 - p]]) / 2
    h = -p * math.log2(p) - (1 - p) * math.log2(1 - p)
    assert qcore.mutual_information(j) == pytest.approx(1 - h, abs=1e-13)


def test_joint_validation():
    with pytest.raises(ValidationError):
        qcore.JointDistribution2(np.array([[0.5, 0.5], [0.5, 0.0]]))
    with pytest.raises(ValidationError):
        qcore.TripartiteDistribution(np.ones((2, 2)) / 4)


@settings(max_examples=60, deadline=None)
@given(arrays(np.float64, (3, 2, 4), elements=st.floats(0.0, 1.0)))
def test_conditional_mi_two_routes(x):
    if x.sum() < 1e-3:
        return
    j = qcore.TripartiteDistribution(x / x.sum())
    a = qcore.conditional_mutual_information(j)
    b = qcore.conditional_mutual_information_grouped(j)
    assert a == pytest.approx(b, abs=1e-10)
    assert a >= 0


def test_conditional_mi_independent_given_e():
    # A and B are copies of E: nothing left once E is known
    t = np.zeros((3, 3, 3))
    for k in range(3):
        t[k, k, k] = 1 / 3
    j = qcore.TripartiteDistribution(t)
    assert qcore.conditional_mutual_information(j) == pytest.approx(0.0, abs=1e-14)
    assert qcore.mutual_information(j.marginal("ab")) == pytest.approx(math.log2(3))


def test_partial_trace_bell_state():
    psi = np.array([1, 0, 0, 1]) / math.sqrt(2)
    rho = qcore.partial_trace(psi, (2, 2), keep=0)
    np.testing.assert_allclose(rho, np.eye(2) / 2, atol=1e-15)


def test_partial_trace_product_state():
    a = np.array([1, 1j]) / math.sqrt(2)
    b = np.array([0.6, 0.0, 0.8])
    psi = np.kron(a, b)
    np.testing.assert_allclose(qcore.partial_trace(psi, (2, 3), keep=1), np.outer(b, b.conj()), atol=1e-15)
    np.testing.assert_allclose(qcore.partial_trace(psi, (2, 3), keep=0), np.outer(a, a.conj()), atol=1e-15)


def test_povm_validation():
    z = qcore.Povm(np.array([np.diag([1.0, 0.0]), np.diag([0.0, 1.0])]))
    assert len(z) == 2 and z.dim == 2
    np.testing.assert_allclose(z.probabilities(np.eye(2) / 2), [0.5, 0.5])
    with pytest.raises(ValidationError):
        qcore.Povm(np.array([np.diag([1.0, 0.0]), np.diag([0.0, 0.9])]))
    with pytest.raises(ValidationError):
        qcore.Povm(np.array([np.diag([1.2, 0.5]), np.diag([-0.2, 0.5])]))
    with pytest.raises(ValidationError):
        qcore.Povm(np.array([[[0.5, 0.1], [0.0, 0.5]], [[0.5, -0.1], [0.0, 0.5]]]))


def test_as_state_norm():
    qcore.as_state([0.6, 0.8j])
    with pytest.raises(ValidationError):
        qcore.as_state([1.0, 1.0])
