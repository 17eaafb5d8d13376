"""Worst-case error bounds: exact-arithmetic algorithmic bounds, rounding
bounds for the floating point model, and their combinations.

Notation used throughout: Y is the formula's realized six-index coefficient
tensor, X the exact multiplication indicator, so |Y - X| (Frobenius) measures
the algorithmic defect; kappa is the diagonal deficiency and
eta = 1/(1-kappa) - 1.  The rounding bounds assume one rounded operation per
scalar step with unit roundoff eps and sequential accumulation, giving

    scalar grid (m = 1):  1.01 (4n + R - 1)     sqrt(R) eps |A| |B| J
    blocked (mn x mn)  :  1.01 (4n + m + R - 2) sqrt(R) eps |A| |B| J

with J = sqrt(sum_r |U_r|^2 |V_r|^2 |W_r|^2).  Randomized execution multiplies
the rounding bound by 1/(1 - kappa); totals add the exact-arithmetic
algorithmic term.  Each bound's small-eps hypothesis is factor * eps <=
threshold (default 0.01); reports record the threshold they were checked
against.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .formula import (
    BilinearFormula,
    kappa,
    realized_tensor,
    residual_norm,
    target_tensor,
    weight_norm_product,
)
from .precision import ScalarMode

__all__ = [
    "BoundReport",
    "NUMERICAL_BOUNDS",
    "bound_deterministic",
    "bound_randomized",
    "bound_sup_constant",
    "bound_numerical",
    "randomized_penalty_coefficient",
]

NUMERICAL_BOUNDS = (
    "scalar_p5",
    "block_p6",
    "randomized_p7",
    "total_det_p8",
    "total_rand_p9",
)

DEFAULT_HYPOTHESIS_THRESHOLD = 0.01


@dataclass(frozen=True)
class BoundReport:
    """One evaluated bound; empirical_value is filled by callers that also
    measured the quantity being bounded."""

    bound_name: str
    hypothesis_ok: bool
    bound_value: float
    empirical_value: float | None = None
    mu: float | None = None
    hypothesis_threshold: float | None = None


def _frob(x) -> float:
    return float(np.linalg.norm(np.asarray(x, dtype=np.float64).ravel()))


def _norm_product(A, B, mode: ScalarMode | None) -> float:
    if mode is not None:
        A = mode.to_double(mode.array(A))
        B = mode.to_double(mode.array(B))
    return _frob(A) * _frob(B)


def bound_deterministic(f: BilinearFormula, A, B) -> BoundReport:
    """Exact-arithmetic bound |f(A,B) - AB| <= |A| |B| |Y - X|."""
    value = _norm_product(A, B, None) * residual_norm(f)
    return BoundReport("deterministic", True, value)


def bound_randomized(f: BilinearFormula, A, B) -> BoundReport:
    """Exact-arithmetic bound for any plan:
    |fhat(A,B) - AB| <= |A| |B| | Y/(1-kappa) - X |."""
    k = kappa(f)
    if k == 1.0:
        raise ValueError("rescale factor undefined: kappa = 1")
    diff = realized_tensor(f) / (1.0 - k) - target_tensor(f.n)
    value = _norm_product(A, B, None) * _frob(diff)
    return BoundReport("randomized", True, value)


def bound_sup_constant(f: BilinearFormula, mu: float = 1.0) -> BoundReport:
    """Worst-case excess of randomization over balls of radius mu.

    The supremum of |fhat - AB| over |A|, |B| <= mu exceeds the deterministic
    supremum by at most |eta| mu^2 |Y| (reported as empirical_value), which
    under |kappa| <= 1/2 is itself capped by

        2 mu^2 (n^-5/2 |Y - X| + 1/n) |Y - X|

    (reported as bound_value).  Raises if the cap fails while its hypothesis
    holds; the cap's constant is tight enough that residuals concentrated on
    the diagonal of Y - X can exceed it on grids with n >= 3, and a raise
    signals that the cap is unusable for this formula.
    """
    if mu <= 0:
        raise ValueError("mu must be positive")
    k = kappa(f)
    n = f.n
    Y = realized_tensor(f)
    res = _frob(Y - target_tensor(n))
    hypothesis_ok = abs(k) <= 0.5
    if k == 1.0:
        constant = float("inf")
    else:
        constant = abs(1.0 / (1.0 - k) - 1.0) * mu * mu * _frob(Y)
    cap = 2.0 * mu * mu * (n ** -2.5 * res + 1.0 / n) * res
    if hypothesis_ok and constant > cap * (1.0 + 1e-12):
        raise ValueError("randomization sup-constant exceeds its cap for this formula")
    return BoundReport("sup_constant", hypothesis_ok, cap, empirical_value=constant, mu=mu)


def bound_numerical(
    f: BilinearFormula,
    A,
    B,
    mode: ScalarMode,
    which: str,
    threshold: float = DEFAULT_HYPOTHESIS_THRESHOLD,
) -> BoundReport:
    """Rounding-error bound of the requested kind for operands A, B.

    scalar_p5      : one blocked level, m = 1 (operands n x n)
    block_p6       : one blocked level, operands mn x mn
    randomized_p7  : block_p6 times 1/(1 - kappa), any plan
    total_det_p8   : block_p6 plus the exact-arithmetic deterministic bound
    total_rand_p9  : bound on the plan-averaged result, equal to randomized_p7

    hypothesis_ok records factor * eps <= threshold for the factor listed in
    the module docstring.
    """
    if which not in NUMERICAL_BOUNDS:
        raise ValueError(f"unknown bound: {which!r}")
    A = mode.array(A)
    B = mode.array(B)
    if A.shape != B.shape or A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError("operands must be square and of equal size")
    n, R = f.n, f.rank
    if A.shape[0] % n:
        raise ValueError("operand size must be a multiple of the grid size")
    m = A.shape[0] // n
    if which == "scalar_p5":
        if m != 1:
            raise ValueError("scalar_p5 needs n x n operands")
        factor = 4 * n + R - 1
    else:
        factor = 4 * n + m + R - 2
    eps = mode.epsilon_machine
    value = 1.01 * factor * np.sqrt(R) * eps * _norm_product(A, B, mode) * weight_norm_product(f)
    if which in ("randomized_p7", "total_rand_p9"):
        k = kappa(f)
        if k >= 1.0:
            raise ValueError("rescale factor undefined or negative: kappa >= 1")
        value *= 1.0 / (1.0 - k)
    elif which == "total_det_p8":
        value += _norm_product(A, B, mode) * residual_norm(f)
    hypothesis_ok = factor * eps <= threshold
    return BoundReport(which, hypothesis_ok, float(value), hypothesis_threshold=threshold)


def randomized_penalty_coefficient(
    n: int, R: int, m: int, eps: float, weight_cap: float
) -> float:
    """First-order excess of the randomized rounding bound over the
    deterministic one, per unit of |A| |B| |Y - X|.

    Expanding 1/(1 - kappa) = 1 + kappa + O(kappa^2) and using
    |kappa| <= n^-5/2 |Y - X| gives the coefficient

        1.01 (4n + m + R - 2) sqrt(R) n^-5/2 eps J_cap.
    """
    factor = 4 * n + m + R - 2
    return 1.01 * factor * float(np.sqrt(R)) * n ** -2.5 * eps * weight_cap
