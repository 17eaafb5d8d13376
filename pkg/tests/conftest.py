"""Shared fixtures and independent oracles.

The oracles deliberately avoid the library's evaluation paths: diagnostics
are recomputed with plain Python loops and math.fsum, block application with
einsum/BLAS, and the randomized product with explicit conjugation matrices.
Agreement is therefore evidence, not tautology.
"""

import math

import numpy as np
import pytest

from randbc import (
    BilinearFormula,
    kappa,
    perturb,
    standard_formula,
    strassen_formula,
)
from randbc.rng import derive_rng


# -- fixtures ------------------------------------------------------------------


@pytest.fixture(scope="session")
def strassen():
    return strassen_formula()


@pytest.fixture(scope="session")
def all_ones():
    """R=1 formula with every coefficient 1: kappa = 0 yet badly inexact."""
    one = np.ones((1, 2, 2))
    return BilinearFormula(one, one, one)


@pytest.fixture()
def perturbed():
    """Approximate 7-term formula, fixed draw."""
    return perturb(strassen_formula(), 1e-3, 5, derive_rng(42))


# -- formula construction helpers ------------------------------------------------


def random_formula(rng, kappa_cap=0.5):
    """Seeded approximate formula with |kappa| <= kappa_cap.

    Perturbation of an exact 2x2 formula plus a w-scaling c in [0.6, 1.4];
    on an exact base the scaling alone moves kappa to exactly 1 - c, so the
    family sweeps the whole admissible kappa range instead of hugging 0.
    """
    while True:
        base = strassen_formula() if rng.random() < 0.5 else standard_formula(2)
        sigma = float(10.0 ** rng.uniform(-4, -0.7))
        extra = int(rng.integers(0, 6))
        f = perturb(base, sigma, extra, rng)
        c = float(rng.uniform(0.6, 1.4))
        f = BilinearFormula(f.u, f.v, c * f.w)
        if abs(kappa(f)) <= kappa_cap:
            return f


def scaled_w(f, c):
    """Copy of f with w multiplied by c; on an exact formula kappa becomes 1 - c."""
    return BilinearFormula(f.u, f.v, c * f.w)


# -- diagnostic oracles ----------------------------------------------------------


def oracle_kappa_sequential(f):
    """Triple-index sequential sum in the pinned order, written independently.

    Follows the same contract as the library (lexicographic (i, j, l), term
    index innermost, binary64) through Python floats only, so both should
    agree to the last bit.
    """
    u = f.u.tolist()
    v = f.v.tolist()
    w = f.w.tolist()
    n, R = f.n, f.rank
    total = 0.0
    for i in range(n):
        for j in range(n):
            for l in range(n):
                s = 0.0
                for r in range(R):
                    s += u[r][i][l] * v[r][l][j] * w[r][i][j]
                total += 1.0 - s
    return total / n ** 3


def oracle_kappa_fsum(f):
    """Order-free evaluation: exact accumulation of all n^3 R products."""
    n, R = f.n, f.rank
    terms = [
        f.u[r, i, l] * f.v[r, l, j] * f.w[r, i, j]
        for r in range(R)
        for i in range(n)
        for j in range(n)
        for l in range(n)
    ]
    return (n ** 3 - math.fsum(terms)) / n ** 3


def oracle_residual(f):
    """Six nested loops over all n^6 tuples, fsum accumulation."""
    n, R = f.n, f.rank
    squares = []
    for k in range(n):
        for l in range(n):
            for kp in range(n):
                for lp in range(n):
                    for i in range(n):
                        for j in range(n):
                            y = math.fsum(
                                f.u[r, k, l] * f.v[r, kp, lp] * f.w[r, i, j]
                                for r in range(R)
                            )
                            x = 1.0 if (k == i and lp == j and l == kp) else 0.0
                            squares.append((y - x) ** 2)
    return math.sqrt(math.fsum(squares))


def oracle_weight_norm(f):
    """Per-term norm products accumulated with fsum."""
    vals = []
    for r in range(f.rank):
        su = math.fsum(x * x for x in f.u[r].ravel())
        sv = math.fsum(x * x for x in f.v[r].ravel())
        sw = math.fsum(x * x for x in f.w[r].ravel())
        vals.append(su * sv * sw)
    return math.sqrt(math.fsum(vals))


# -- evaluation oracles ----------------------------------------------------------


def oracle_block_apply(f, A, B):
    """Direct blocked evaluation in binary64 via einsum and BLAS matmul.

    Summation orders are whatever numpy picks, so agreement with the
    sequential engine is approximate (double noise), never bitwise.
    """
    A = np.asarray(A, dtype=np.float64)
    B = np.asarray(B, dtype=np.float64)
    n = f.n
    m = A.shape[0] // n
    Ab = A.reshape(n, m, n, m).transpose(0, 2, 1, 3)
    Bb = B.reshape(n, m, n, m).transpose(0, 2, 1, 3)
    left = np.einsum("rkl,klab->rab", f.u, Ab, optimize=True)
    right = np.einsum("rkl,klab->rab", f.v, Bb, optimize=True)
    prod = np.matmul(left, right)
    Cb = np.einsum("rij,rab->ijab", f.w, prod, optimize=True)
    return Cb.transpose(0, 2, 1, 3).reshape(n * m, n * m)


def oracle_plan_matrix(plan, which, m):
    """Explicit mn x mn conjugation matrix M_i = P_i S_i built from scratch."""
    n = plan.n
    M = np.zeros((n * m, n * m))
    for j in range(n):
        pi = int(plan.perms[which][j])
        M[pi * m : (pi + 1) * m, j * m : (j + 1) * m] = plan.signs[which][j] * np.eye(m)
    return M


def oracle_sandwich(f, plan, A, B):
    """Randomized product as the explicit conjugated sandwich, binary64."""
    A = np.asarray(A, dtype=np.float64)
    m = A.shape[0] // f.n
    M1 = oracle_plan_matrix(plan, 0, m)
    M2 = oracle_plan_matrix(plan, 1, m)
    M3 = oracle_plan_matrix(plan, 2, m)
    inner = oracle_block_apply(f, M1 @ A @ M2.T, M2 @ np.asarray(B, float) @ M3.T)
    return (M1.T @ inner @ M3) / (1.0 - oracle_kappa_fsum(f))


# -- misc ------------------------------------------------------------------------


def rel_err(got, ref):
    got = np.asarray(got, dtype=np.float64)
    ref = np.asarray(ref, dtype=np.float64)
    return float(np.linalg.norm(got - ref) / np.linalg.norm(ref))


def frob(x):
    return float(np.linalg.norm(np.asarray(x, dtype=np.float64).ravel()))
