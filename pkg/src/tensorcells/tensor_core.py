"""Dense multi-way array kernels and index arithmetic.

Everything here works on plain float64 numpy arrays in row-major (last
index fastest) order. Mode indices and linear indices are 0-based; the
linear<->multi index maps are big-endian mixed-radix expansions, so
``reshape_vector`` is a pure view of the flat data.
"""

from __future__ import annotations

import math
from typing import Sequence

import numpy as np

Shape = tuple[int, ...]

__all__ = [
    "Shape",
    "check_shape",
    "size_of",
    "linear_to_multi",
    "multi_to_linear",
    "mode_product",
    "outer_accumulate",
    "reshape_vector",
]


def check_shape(dims: Sequence[int]) -> Shape:
    """Validate mode sizes (every dim >= 1) and return them as a tuple."""
    dims = tuple(int(d) for d in dims)
    if not dims or any(d < 1 for d in dims):
        raise ValueError(f"mode sizes must be positive integers, got {dims}")
    return dims


def size_of(dims: Sequence[int]) -> int:
    """Element count of a shape (product of mode sizes)."""
    return math.prod(check_shape(dims))


def linear_to_multi(p: int, dims: Sequence[int]) -> tuple[int, ...]:
    """Big-endian mixed-radix digits of linear index ``p`` in bases ``dims``.

    The first mode is the most significant digit, matching row-major
    storage. Inverse of :func:`multi_to_linear`.
    """
    dims = check_shape(dims)
    total = math.prod(dims)
    if not 0 <= p < total:
        raise IndexError(f"linear index {p} out of range [0, {total})")
    digits = []
    for d in reversed(dims):
        digits.append(p % d)
        p //= d
    return tuple(reversed(digits))


def multi_to_linear(idx: Sequence[int], dims: Sequence[int]) -> int:
    """Collapse a multi-index to its row-major linear index."""
    dims = check_shape(dims)
    if len(idx) != len(dims):
        raise IndexError(f"multi-index {tuple(idx)} has order {len(idx)}, expected {len(dims)}")
    p = 0
    for i, d in zip(idx, dims):
        if not 0 <= i < d:
            raise IndexError(f"index component {i} out of range [0, {d})")
        p = p * d + i
    return p


def mode_product(t: np.ndarray, m: np.ndarray, mode: int) -> np.ndarray:
    """Mode-``mode`` product of tensor ``t`` with matrix ``m``.

    ``m`` has shape (r_out, r_in) with r_in == t.shape[mode]; the result
    replaces that mode size by r_out:

        out[..., a, ...] = sum_b m[a, b] * t[..., b, ...]
    """
    t = np.asarray(t, dtype=np.float64)
    m = np.asarray(m, dtype=np.float64)
    if m.ndim != 2:
        raise ValueError(f"mode_product needs a matrix, got ndim={m.ndim}")
    if not 0 <= mode < t.ndim:
        raise ValueError(f"mode {mode} out of range for order-{t.ndim} tensor")
    if t.shape[mode] != m.shape[1]:
        raise ValueError(
            f"mode {mode} has size {t.shape[mode]}, matrix contracts size {m.shape[1]}"
        )
    out = np.tensordot(m, t, axes=([1], [mode]))
    return np.moveaxis(out, 0, mode)


def outer_accumulate(vectors: Sequence[np.ndarray], target: np.ndarray, scale: float = 1.0) -> None:
    """Add ``scale * (v_1 outer v_2 outer ... outer v_d)`` into ``target`` in place."""
    if len(vectors) != target.ndim:
        raise ValueError(f"{len(vectors)} vectors for an order-{target.ndim} target")
    lengths = tuple(np.shape(v)[0] for v in vectors)
    if lengths != target.shape:
        raise ValueError(f"vector lengths {lengths} do not match target shape {target.shape}")
    term = np.asarray(vectors[0], dtype=np.float64)
    for v in vectors[1:]:
        term = np.multiply.outer(term, np.asarray(v, dtype=np.float64))
    target += scale * term


def reshape_vector(v: np.ndarray, dims: Sequence[int]) -> np.ndarray:
    """View a flat vector as a tensor with the given mode sizes (no copy)."""
    dims = check_shape(dims)
    v = np.asarray(v, dtype=np.float64)
    if v.ndim != 1 or v.shape[0] != math.prod(dims):
        raise ValueError(f"cannot reshape length-{v.shape} vector into {dims}")
    return v.reshape(dims)
