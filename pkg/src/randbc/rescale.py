"""Diagonal rescaling baseline wrapped around the deterministic recursion.

Two step kinds, applied to the current operand pair in schedule order:

  outside : C = D_A @ G(D_A^-1 A, B D_B^-1) @ D_B with D_A the row maxima of
            |A| and D_B the column maxima of |B|; the diagonal factors are
            restored around the product afterwards (reverse schedule order)
  inside  : C = G(A D, D^-1 B) with d_k = sqrt(rowmax_k(|B|) / colmax_k(|A|));
            nothing to restore since the factors cancel between the operands

In exact arithmetic every schedule returns A @ B unchanged; in rounded
arithmetic the scaling changes which errors the recursion commits.  All factor
computation and application happens in the measured mode.  Division is
multiplication by the rounded reciprocal, one rounding per entry, and maxima
are comparisons (exact).  A zero row or column maximum makes the requested
scaling undefined and raises.
"""

from __future__ import annotations

import numpy as np

from .formula import BilinearFormula, strassen_formula
from .multiply import recursive_apply
from .precision import DOUBLE, ScalarMode

__all__ = ["OUTSIDE", "INSIDE", "DEFAULT_SCHEDULE", "rescaled_multiply"]

OUTSIDE = "outside"
INSIDE = "inside"

# "2x O-I": outside-inside applied twice.
DEFAULT_SCHEDULE = (OUTSIDE, INSIDE, OUTSIDE, INSIDE)


def _abs_max(x: np.ndarray, axis: int, mode: ScalarMode, what: str) -> np.ndarray:
    with mode.context():
        m = np.abs(x).max(axis=axis)
        if np.any(mode.to_double(m) == 0.0):
            raise ValueError(f"degenerate input: zero {what} maximum")
        return m


def _recip(d: np.ndarray, mode: ScalarMode) -> np.ndarray:
    one = mode.array(np.ones(d.shape))
    with mode.product_context():
        return np.divide(one, d)


def _scale_rows(x, d, mode):
    with mode.product_context():
        return np.multiply(d[:, None], x)


def _scale_cols(x, d, mode):
    with mode.product_context():
        return np.multiply(x, d[None, :])


def rescaled_multiply(
    A,
    B,
    Q: int,
    schedule=DEFAULT_SCHEDULE,
    mode: ScalarMode = DOUBLE,
    formula: BilinearFormula | None = None,
) -> np.ndarray:
    """Deterministic recursion with diagonal pre/post scaling.

    schedule is a sequence over {"outside", "inside"}; the empty schedule is
    bitwise identical to recursive_apply.  The recursion formula defaults to
    the 7-term one.
    """
    f = formula if formula is not None else strassen_formula()
    A = mode.array(A)
    B = mode.array(B)
    restore = []
    for step in schedule:
        if step == OUTSIDE:
            da = _abs_max(A, 1, mode, "row")
            db = _abs_max(B, 0, mode, "column")
            A = _scale_rows(A, _recip(da, mode), mode)
            B = _scale_cols(B, _recip(db, mode), mode)
            restore.append((da, db))
        elif step == INSIDE:
            bmax = _abs_max(B, 1, mode, "row")
            amax = _abs_max(A, 0, mode, "column")
            with mode.product_context():
                ratio = np.divide(bmax, amax)
                d = np.sqrt(ratio)
            A = _scale_cols(A, d, mode)
            B = _scale_rows(B, _recip(d, mode), mode)
        else:
            raise ValueError(f"unknown schedule step: {step!r}")
    C = recursive_apply(f, A, B, Q, mode)
    for da, db in reversed(restore):
        C = _scale_rows(C, da, mode)
        C = _scale_cols(C, db, mode)
    return C
