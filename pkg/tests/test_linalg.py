import numpy as np
import pytest

from altm.errors import NumericalError, ParameterError, ShapeError
from altm.linalg import (
    ActivationKind,
    Rng,
    activate,
    as_matrix,
    elementwise,
    frobenius,
    gaussian_init,
    matmul,
    random_orthogonal,
)
from utils.seeding import derive_seed


def test_rng_is_deterministic_per_seed():
    assert np.array_equal(Rng(7).normal(3, 4), Rng(7).normal(3, 4))
    assert not np.array_equal(Rng(7).normal(3, 4), Rng(8).normal(3, 4))


def test_child_streams_depend_only_on_seed_and_name():
    parent = Rng(11)
    parent.normal(5, 5)  # consuming the parent must not shift its children
    assert np.array_equal(parent.child("a").normal(2, 2), Rng(11).child("a").normal(2, 2))
    assert not np.array_equal(Rng(11).child("a").normal(2, 2), Rng(11).child("b").normal(2, 2))


def test_derive_seed():
    assert derive_seed(0, "network") == derive_seed(0, "network")
    assert derive_seed(0, "network") != derive_seed(1, "network")
    assert 0 <= derive_seed(2**64 - 1, "x") < 2**64
    with pytest.raises(ValueError):
        derive_seed(-1, "x")


def test_as_matrix_validates():
    m = as_matrix([[1, 2], [3, 4]])
    assert m.dtype == np.float64 and m.shape == (2, 2)
    with pytest.raises(ShapeError):
        as_matrix([1.0, 2.0])
    with pytest.raises(ShapeError):
        as_matrix(np.zeros((0, 3)))
    with pytest.raises(NumericalError):
        as_matrix([[np.nan]])


def test_matmul_names_both_shapes():
    with pytest.raises(ShapeError, match=r"\(2, 3\).*\(2, 3\)"):
        matmul(np.ones((2, 3)), np.ones((2, 3)))
    assert np.array_equal(matmul(np.eye(2), np.ones((2, 3))), np.ones((2, 3)))


def test_gaussian_init():
    w = gaussian_init(200, 200, 0.1, Rng(0))
    assert w.shape == (200, 200)
    assert abs(w.std() - 0.1) < 0.005
    with pytest.raises(ParameterError):
        gaussian_init(2, 2, 0.0, Rng(0))


@pytest.mark.parametrize("n", [1, 3, 16])
def test_random_orthogonal(n):
    q = random_orthogonal(n, Rng(n))
    assert np.allclose(q.T @ q, np.eye(n), atol=1e-10)


def test_elementwise_kinds():
    a = np.array([[1.0, -2.0]])
    b = np.array([[3.0, 4.0]])
    assert np.array_equal(elementwise("add", a, b), [[4.0, 2.0]])
    assert np.array_equal(elementwise("sub", a, b), [[-2.0, -6.0]])
    assert np.array_equal(elementwise("hadamard", a, b), [[3.0, -8.0]])
    assert np.array_equal(elementwise("scale", a, scalar=2.0), [[2.0, -4.0]])
    with pytest.raises(ShapeError):
        elementwise("add", a, np.ones((2, 2)))
    with pytest.raises(ParameterError):
        elementwise("scale", a)
    with pytest.raises(ParameterError):
        elementwise("pow", a, b)  # type: ignore[arg-type]


def test_activation_derivatives():
    z = np.array([[-1.0, 0.0, 2.0]])
    assert np.array_equal(activate(z, ActivationKind.RELU), [[0.0, 0.0, 2.0]])
    # relu'(0) is 0
    assert np.array_equal(activate(z, ActivationKind.RELU, derivative=True), [[0.0, 0.0, 1.0]])
    assert np.array_equal(activate(z, ActivationKind.LINEAR, derivative=True), np.ones_like(z))
    assert np.allclose(
        elementwise("map-activation", z, activation="tanh", derivative=True), 1.0 - np.tanh(z) ** 2
    )


def test_frobenius():
    assert frobenius(np.array([[3.0, 4.0]])) == pytest.approx(5.0)


def test_gaussian_init_is_centred():
    sigma = 0.3
    w = gaussian_init(1000, 1000, sigma, Rng(1))
    # standard error of the mean is sigma / 1000
    assert abs(w.mean()) <= 4 * sigma / 1000


def test_matmul_matches_the_definition():
    a, b = Rng(2).normal(3, 4), Rng(3).normal(4, 2)
    expected = np.zeros((3, 2))
    for i in range(3):
        for j in range(2):
            for k in range(4):
                expected[i, j] += a[i, k] * b[k, j]
    assert np.allclose(matmul(a, b), expected, rtol=0.0, atol=1e-12)


def test_matmul_is_associative():
    a, b, c = Rng(4).normal(3, 5), Rng(5).normal(5, 4), Rng(6).normal(4, 2)
    assert np.max(np.abs(matmul(matmul(a, b), c) - matmul(a, matmul(b, c)))) <= 1e-10
