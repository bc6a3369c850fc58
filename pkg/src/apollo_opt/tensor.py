"""Dense float64 vectors/matrices and the small arithmetic surface the
optimizers are written against.

A "tensor" here is a C-contiguous numpy float64 ndarray; shape is metadata
and every reduction treats the array as a flat vector. The functions below
add the contracts the optimizer math relies on: same-shape operands (the
only broadcast allowed is scalar-vs-tensor), guarded denominators, and
64-bit precision throughout. Keeping the checks in one place keeps the
optimizer code free of defensive clutter.
"""

from __future__ import annotations

import numbers

import numpy as np

from .errors import DivisionByZeroError, ShapeMismatchError

__all__ = [
    "tensor",
    "zeros_like",
    "elementwise",
    "add",
    "sub",
    "mul",
    "div",
    "emax",
    "eabs",
    "square",
    "dot",
    "norm4_pow4",
]


def tensor(values, shape=None) -> np.ndarray:
    """Build a float64 array from any nested sequence or scalar.

    If shape is given the data is reshaped to it; the element count must
    match exactly.
    """
    arr = np.asarray(values, dtype=np.float64)
    if shape is not None:
        if int(np.prod(shape)) != arr.size:
            raise ShapeMismatchError(arr.shape, tuple(shape), op="tensor")
        arr = arr.reshape(shape)
    return np.ascontiguousarray(arr)


def zeros_like(a: np.ndarray) -> np.ndarray:
    return np.zeros_like(np.asarray(a, dtype=np.float64))


def _is_scalar(x) -> bool:
    return isinstance(x, numbers.Real) or (
        isinstance(x, np.ndarray) and x.ndim == 0
    )


def _pair(a, b, op: str):
    """Coerce operands, allowing scalar-vs-tensor but nothing looser."""
    if _is_scalar(a) and not _is_scalar(b):
        b = np.asarray(b, dtype=np.float64)
        return np.float64(a), b
    if _is_scalar(b) and not _is_scalar(a):
        a = np.asarray(a, dtype=np.float64)
        return a, np.float64(b)
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise ShapeMismatchError(a.shape, b.shape, op=op)
    return a, b


def add(a, b) -> np.ndarray:
    a, b = _pair(a, b, "add")
    return np.add(a, b)


def sub(a, b) -> np.ndarray:
    a, b = _pair(a, b, "sub")
    return np.subtract(a, b)


def mul(a, b) -> np.ndarray:
    a, b = _pair(a, b, "mul")
    return np.multiply(a, b)


def div(a, b) -> np.ndarray:
    """Elementwise division. Any zero in the denominator is an error;
    callers guard their denominators (rectify output, bias corrections)."""
    a, b = _pair(a, b, "div")
    if np.any(np.asarray(b) == 0.0):
        raise DivisionByZeroError("division by zero denominator entry")
    return np.divide(a, b)


def emax(a, b) -> np.ndarray:
    a, b = _pair(a, b, "max")
    return np.maximum(a, b)


def eabs(a) -> np.ndarray:
    return np.abs(np.asarray(a, dtype=np.float64))


def square(a) -> np.ndarray:
    a = np.asarray(a, dtype=np.float64)
    return a * a

_ELEMENTWISE = {
    "add": add,
    "sub": sub,
    "mul": mul,
    "div": div,
    "max": emax,
    "abs": eabs,
    "square": square,
}


def elementwise(op: str, a, b=None) -> np.ndarray:
    """Dispatch by name. 'abs' and 'square' are unary; the rest binary."""
    try:
        fn = _ELEMENTWISE[op]
    except KeyError:
        raise ValueError(f"unknown elementwise op {op!r}") from None
    if op in ("abs", "square"):
        if b is not None:
            raise ValueError(f"{op} is unary")
        return fn(a)
    if b is None:
        raise ValueError(f"{op} needs two operands")
    return fn(a, b)


def dot(a, b) -> float:
    """Flat inner product, accumulated in float64."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise ShapeMismatchError(a.shape, b.shape, op="dot")
    return float(np.dot(a.ravel(), b.ravel()))


def norm4_pow4(a) -> float:
    """Sum of fourth powers: the fourth power of the vector 4-norm.

    This is the quantity the update coefficient consumes directly, so it
    is exposed instead of the norm itself.
    """
    a = np.asarray(a, dtype=np.float64)
    sq = a.ravel() * a.ravel()
    return float(np.dot(sq, sq))
