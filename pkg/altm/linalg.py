"""
Dense double-precision linear algebra and seeded random initialisation.

A *Matrix* is a 2-D ``numpy.ndarray`` of dtype float64, row-major.  Inputs
travel as column batches: shape ``(features, batch)``.

Randomness comes from :class:`Rng`, a thin wrapper around numpy's PCG64 bit
generator.  Normal variates use numpy's ziggurat ``standard_normal``; the
algorithm is fixed, so equal seeds give bit-identical draws on every
platform numpy supports.
"""

from __future__ import annotations

__all__ = [
    "Matrix",
    "Rng",
    "ActivationKind",
    "ACTIVATIONS",
    "as_matrix",
    "zeros",
    "identity",
    "matmul",
    "gaussian_init",
    "random_orthogonal",
    "elementwise",
    "activate",
    "frobenius",
]

from enum import Enum
from typing import Callable, Literal

import numpy as np
from numpy.typing import ArrayLike, NDArray

from altm.errors import NumericalError, ParameterError, ShapeError
from utils.seeding import derive_seed

Matrix = NDArray[np.float64]

ElementwiseKind = Literal["add", "sub", "scale", "hadamard", "map-activation"]


class ActivationKind(str, Enum):
    """Nonlinearity applied after every trunk layer."""

    LINEAR = "linear"
    TANH = "tanh"
    RELU = "relu"


def _tanh_grad(z: Matrix) -> Matrix:
    t = np.tanh(z)
    return 1.0 - t * t


# kind -> (function, derivative w.r.t. the pre-activation)
ACTIVATIONS: dict[ActivationKind, tuple[Callable[[Matrix], Matrix], Callable[[Matrix], Matrix]]] = {
    ActivationKind.LINEAR: (lambda z: z.copy(), lambda z: np.ones_like(z)),
    ActivationKind.TANH: (np.tanh, _tanh_grad),
    # relu'(0) == 0 by convention
    ActivationKind.RELU: (lambda z: np.maximum(z, 0.0), lambda z: (z > 0.0).astype(np.float64)),
}


class Rng:
    """
    Single-owner seeded random stream (PCG64).

    Attributes:
        seed: the 64-bit seed this stream was created from.
    """

    __slots__ = ("seed", "_gen")

    def __init__(self, seed: int) -> None:
        self.seed = int(seed)
        self._gen = np.random.Generator(np.random.PCG64(self.seed))

    def child(self, name: str) -> "Rng":
        """Independent stream for component *name*, derived from this seed only."""
        return Rng(derive_seed(self.seed, name))

    def normal(self, rows: int, cols: int) -> Matrix:
        return self._gen.standard_normal((rows, cols))

    def uniform(self, size: int | tuple[int, ...]) -> NDArray[np.float64]:
        return self._gen.random(size)

    def signs(self, size: int) -> NDArray[np.float64]:
        """Uniform draws from {-1, +1}."""
        return np.where(self._gen.random(size) < 0.5, -1.0, 1.0)

    def permutation(self, n: int) -> NDArray[np.int64]:
        return self._gen.permutation(n)

    def integers(self, high: int, size: int) -> NDArray[np.int64]:
        return self._gen.integers(0, high, size=size)

    def choice(self, n: int, size: int) -> NDArray[np.int64]:
        """*size* distinct indices from ``range(n)``, sorted."""
        return np.sort(self._gen.choice(n, size=size, replace=False))


# ------------------------------------------------------------------
# Construction
# ------------------------------------------------------------------
def as_matrix(values: ArrayLike) -> Matrix:
    """
    Copy *values* into a fresh float64 Matrix.

    Raises:
        ShapeError: if the input is not 2-D or has an empty dimension.
        NumericalError: if any entry is NaN or infinite.
    """
    arr = np.array(values, dtype=np.float64, copy=True)
    if arr.ndim != 2 or arr.shape[0] == 0 or arr.shape[1] == 0:
        raise ShapeError(f"expected a non-empty 2-D matrix, got shape {arr.shape}")
    _check_finite(arr, "as_matrix")
    return arr


def zeros(rows: int, cols: int) -> Matrix:
    return np.zeros((rows, cols), dtype=np.float64)


def identity(n: int) -> Matrix:
    return np.eye(n, dtype=np.float64)


# ------------------------------------------------------------------
# Operations
# ------------------------------------------------------------------
def matmul(a: Matrix, b: Matrix) -> Matrix:
    """
    Standard matrix product ``a @ b``.

    Raises:
        ShapeError: if ``a.cols != b.rows``; the message names both shapes.
    """
    if a.ndim != 2 or b.ndim != 2 or a.shape[1] != b.shape[0]:
        raise ShapeError(f"cannot multiply {a.shape} by {b.shape}")
    out = a @ b
    _check_finite(out, "matmul")
    return out


def gaussian_init(rows: int, cols: int, sigma: float, rng: Rng) -> Matrix:
    """
    Matrix with i.i.d. N(0, sigma^2) entries.

    Raises:
        ParameterError: if *sigma* is not strictly positive or dims are < 1.
    """
    if not sigma > 0.0 or not np.isfinite(sigma):
        raise ParameterError(f"sigma must be positive, got {sigma}")
    if rows < 1 or cols < 1:
        raise ParameterError(f"dimensions must be positive, got {rows}x{cols}")
    return sigma * rng.normal(rows, cols)


def random_orthogonal(n: int, rng: Rng) -> Matrix:
    """Haar-distributed orthogonal ``n x n`` matrix (QR with sign fix)."""
    q, r = np.linalg.qr(rng.normal(n, n))
    signs = np.sign(np.diag(r))
    signs[signs == 0.0] = 1.0
    return q * signs


def elementwise(
    kind: ElementwiseKind,
    a: Matrix,
    b: Matrix | None = None,
    *,
    scalar: float | None = None,
    activation: ActivationKind | str | None = None,
    derivative: bool = False,
) -> Matrix:
    """
    Pointwise operation on one or two matrices.

    Args:
        kind: ``add``/``sub``/``hadamard`` need *b* of identical shape;
            ``scale`` needs *scalar*; ``map-activation`` needs *activation*.
        derivative: with ``map-activation``, apply the derivative instead.

    Raises:
        ShapeError: on shape mismatch.
        ParameterError: on a missing operand or unknown kind.
    """
    if kind in ("add", "sub", "hadamard"):
        if b is None:
            raise ParameterError(f"{kind} needs a second operand")
        if a.shape != b.shape:
            raise ShapeError(f"{kind}: shapes {a.shape} and {b.shape} differ")
        if kind == "add":
            out = a + b
        elif kind == "sub":
            out = a - b
        else:
            out = a * b
    elif kind == "scale":
        if scalar is None:
            raise ParameterError("scale needs a scalar")
        out = scalar * a
    elif kind == "map-activation":
        if activation is None:
            raise ParameterError("map-activation needs an activation kind")
        out = activate(a, ActivationKind(activation), derivative=derivative)
    else:
        raise ParameterError(f"unknown elementwise kind {kind!r}")
    _check_finite(out, kind)
    return out


def activate(z: Matrix, kind: ActivationKind, *, derivative: bool = False) -> Matrix:
    fn, grad = ACTIVATIONS[kind]
    return grad(z) if derivative else fn(z)


def frobenius(a: Matrix) -> float:
    return float(np.linalg.norm(a))


# ------------------------------------------------------------------
# Helpers
# ------------------------------------------------------------------
def _check_finite(arr: NDArray[np.float64], where: str) -> None:
    if not np.all(np.isfinite(arr)):
        raise NumericalError(f"{where} produced non-finite values")
