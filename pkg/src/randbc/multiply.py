"""Deterministic matrix products: the inner-product algorithm, one blocked
formula level, and the full recursion.

All routines run in a caller-chosen ScalarMode and are bitwise reproducible:
the accumulation orders are fixed (see _engine) and never depend on batch
shape, chunking, or schedule.
"""

from __future__ import annotations

import numpy as np

from . import _engine
from .formula import BilinearFormula
from .precision import DOUBLE, ScalarMode

__all__ = [
    "standard_multiply",
    "apply_bc",
    "recursive_apply",
    "pad_to_shape",
    "crop",
]


def _as_operands(A, B, mode: ScalarMode):
    A = mode.array(A)
    B = mode.array(B)
    if A.ndim != 2 or B.ndim != 2:
        raise ValueError("operands must be 2-D matrices")
    return A, B


def mode_tensors(f: BilinearFormula, mode: ScalarMode):
    """The formula's coefficient triple rounded into the mode, with a unit
    leading batch axis as expected by the engine."""
    return (
        mode.array(f.u)[None],
        mode.array(f.v)[None],
        mode.array(f.w)[None],
    )


def standard_multiply(A, B, mode: ScalarMode = DOUBLE) -> np.ndarray:
    """Inner-product algorithm: each entry is a sequential sum, over the
    shared dimension in ascending order, of rounded products."""
    A, B = _as_operands(A, B, mode)
    if A.shape[1] != B.shape[0]:
        raise ValueError("inner dimensions do not conform")
    with mode.context():
        return _engine.leaf_matmul(A[None], B[None], mode)[0]


def _check_blocked(A, B, n: int, levels: int):
    if A.shape != B.shape or A.shape[0] != A.shape[1]:
        raise ValueError("operands must be square and of equal size")
    step = n ** levels
    if A.shape[0] % step or A.shape[0] // step < 1:
        raise ValueError(
            f"size {A.shape[0]} is not m*{n}^{levels}; pad_to_shape can fix that"
        )


def apply_bc(f: BilinearFormula, A, B, mode: ScalarMode = DOUBLE, stats=None) -> np.ndarray:
    """One blocked level of the formula; block products use standard_multiply."""
    A, B = _as_operands(A, B, mode)
    _check_blocked(A, B, f.n, 1)
    levels = [mode_tensors(f, mode)]
    return _engine.apply_levels(levels, A[None], B[None], mode, stats)[0]


def recursive_apply(
    f: BilinearFormula,
    A,
    B,
    Q: int,
    mode: ScalarMode = DOUBLE,
    base: str = "standard",
    stats=None,
) -> np.ndarray:
    """Q recursion levels of the formula over an m*n^Q sized operand pair.

    Q = 0 is exactly standard_multiply; Q = 1 is exactly apply_bc.  The
    recursion performs f.rank**Q base-case block products (observable through
    the optional stats counter under key "leaf_multiplies").
    """
    if Q < 0:
        raise ValueError("Q must be >= 0")
    if base != "standard":
        raise ValueError(f"unknown base multiplier: {base!r}")
    if Q == 0:
        out = standard_multiply(A, B, mode)
        if stats is not None:
            stats["leaf_multiplies"] = stats.get("leaf_multiplies", 0) + 1
        return out
    A, B = _as_operands(A, B, mode)
    _check_blocked(A, B, f.n, Q)
    levels = [mode_tensors(f, mode)] * Q
    return _engine.apply_levels(levels, A[None], B[None], mode, stats)[0]


def pad_to_shape(A, n: int, Q: int):
    """Zero-pad a square matrix to the smallest m*n^Q >= its size.

    Returns (padded, original_size); crop() undoes the padding on a product.
    """
    A = np.asarray(A)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError("pad_to_shape expects a square matrix")
    if n < 1 or Q < 0:
        raise ValueError("need n >= 1 and Q >= 0")
    size = A.shape[0]
    step = n ** Q
    m = max(1, -(-size // step))
    target = m * step
    if target == size:
        return A.copy(), size
    out = np.zeros((target, target), dtype=A.dtype)
    out[:size, :size] = A
    return out, size


def crop(M, size: int) -> np.ndarray:
    """Drop padding rows/columns back to the original leading block."""
    M = np.asarray(M)
    if size > M.shape[0] or size > M.shape[1]:
        raise ValueError("crop size exceeds matrix")
    return M[:size, :size].copy()
