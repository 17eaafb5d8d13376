"""Vectorized fixed-order evaluator for batched blocked bilinear formulas.

Each numpy ufunc application below performs exactly one mode-rounded scalar
operation per output element, so the per-element rounding sequence is the
same as an elementwise interpretation of the algorithm:

  * block combinations sum_kl c[k,l] X_kl accumulate the inner (column) index
    first within each row, then fold the completed row sums in row order;
  * block products accumulate rank-one terms sequentially over the shared
    dimension, first term initializing;
  * outputs accumulate over formula terms in ascending term order.

Terms with zero coefficients are multiplied and added like any other; with
round-to-nearest arithmetic adding an exact zero never changes a value, so
this matches implementations that skip structural zeros.

Multiplications run under the mode's product context (decimal: t digits);
additions run under the ambient mode context (decimal: exact).

Arrays carry two leading axes (trial, branch): coefficient tensors have shape
(Tc, R, n, n) with Tc in {1, T}, operands start as (T0, 1, s, s) with
T0 in {1, T}, and broadcasting aligns them.  Batching changes nothing
bitwise because every output element's operation chain is independent.
"""

from __future__ import annotations

import numpy as np

from .precision import ScalarMode


def _empty(shape, mode: ScalarMode):
    return np.empty(shape, dtype=mode.dtype)


def _mul(mode: ScalarMode, x, y, out) -> None:
    with mode.product_context():
        np.multiply(x, y, out=out)


def leaf_matmul(x: np.ndarray, y: np.ndarray, mode: ScalarMode) -> np.ndarray:
    """Batched product over the last two axes, sequential over the shared dim."""
    shared = x.shape[-1]
    if y.shape[-2] != shared:
        raise ValueError("inner dimensions do not conform")
    lead = np.broadcast_shapes(x.shape[:-2], y.shape[:-2])
    shape = lead + (x.shape[-2], y.shape[-1])
    if shared == 0:
        return mode.array(np.zeros(shape))
    acc = _empty(shape, mode)
    term = _empty(shape, mode)
    for k in range(shared):
        col = x[..., :, k : k + 1]
        row = y[..., k : k + 1, :]
        if k == 0:
            _mul(mode, col, row, acc)
        else:
            _mul(mode, col, row, term)
            np.add(acc, term, out=acc)
    return acc


def _expand(x: np.ndarray, coeff: np.ndarray, mode: ScalarMode) -> np.ndarray:
    """Form the R block combinations of every batched operand.

    x (T0, K, s, s), coeff (Tc, R, n, n) -> (T, K*R, s/n, s/n)
    """
    Tc, R, n, _ = coeff.shape
    T0, K, s, _ = x.shape
    mb = s // n
    T = max(T0, Tc)
    shape = (T, K, R, mb, mb)
    row = _empty(shape, mode)
    term = _empty(shape, mode)
    acc = _empty(shape, mode)
    for k in range(n):
        for l in range(n):
            blk = x[:, :, None, k * mb : (k + 1) * mb, l * mb : (l + 1) * mb]
            c = coeff[:, :, k, l][:, None, :, None, None]
            if l == 0:
                _mul(mode, c, blk, row)
            else:
                _mul(mode, c, blk, term)
                np.add(row, term, out=row)
        if k == 0:
            acc, row = row, acc
        else:
            np.add(acc, row, out=acc)
    return acc.reshape(T, K * R, mb, mb)


def _contract(children: np.ndarray, coeff: np.ndarray, mode: ScalarMode) -> np.ndarray:
    """Accumulate weighted children into the parent blocks.

    children (T, K, R, mb, mb), coeff (Tc, R, n, n) -> (T, K, n*mb, n*mb)
    """
    Tc, R, n, _ = coeff.shape
    T, K, _, mb, _ = children.shape
    s = n * mb
    out = _empty((T, K, s, s), mode)
    acc = _empty((T, K, mb, mb), mode)
    term = _empty((T, K, mb, mb), mode)
    for i in range(n):
        for j in range(n):
            for r in range(R):
                c = coeff[:, r, i, j][:, None, None, None]
                if r == 0:
                    _mul(mode, c, children[:, :, r], acc)
                else:
                    _mul(mode, c, children[:, :, r], term)
                    np.add(acc, term, out=acc)
            out[:, :, i * mb : (i + 1) * mb, j * mb : (j + 1) * mb] = acc
    return out


def apply_levels(levels, a: np.ndarray, b: np.ndarray, mode: ScalarMode, stats=None) -> np.ndarray:
    """Evaluate a blocked formula recursion given per-level coefficient triples.

    levels   : sequence of (u, v, w) mode-typed arrays, each (Tc, R, n, n);
               levels[0] splits the full operands
    a, b     : mode-typed operands of shape (T0, s, s)
    returns  : (T, s, s) where T is the broadcast trial count
    """
    if not levels:
        raise ValueError("need at least one level")
    with mode.context():
        x = a[:, None]
        y = b[:, None]
        for u, v, w_ in levels:
            n = u.shape[-1]
            if x.shape[-1] % n:
                raise ValueError("operand size not divisible by block grid")
            x = _expand(x, u, mode)
            y = _expand(y, v, mode)
        prod = leaf_matmul(x, y, mode)
        if stats is not None:
            stats["leaf_multiplies"] = (
                stats.get("leaf_multiplies", 0) + prod.shape[0] * prod.shape[1]
            )
        for u, v, w_ in reversed(levels):
            R = w_.shape[1]
            T, KR, mb, _ = prod.shape
            children = prod.reshape(T, KR // R, R, mb, mb)
            prod = _contract(children, w_, mode)
        out = prod[:, 0]
    if mode.kind != "decimal" and not np.all(np.isfinite(out)):
        raise OverflowError(f"result left the {mode.kind} range")
    return out
