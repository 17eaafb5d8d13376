"""Bilinear matrix-multiplication formulas as explicit coefficient tensors.

A formula with R terms over an n x n block grid computes

    C_ij = sum_r w[r,i,j] * (sum_kl u[r,k,l] A_kl) * (sum_kl v[r,k,l] B_kl)

where A_kl, B_kl are the blocks of a conforming partition.  It multiplies
exactly when sum_r u[r,k,l] v[r,k',l'] w[r,i,j] equals 1 precisely on the
index tuples with i = k, k' = l, j = l' and 0 elsewhere; formulas violating
that identity are approximate, and their diagnostics below quantify by how
much.  Tensors are stored with the term index slowest, i.e. shape (R, n, n),
which is also the order used by the text file format.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .rng import as_generator

__all__ = [
    "BilinearFormula",
    "FormulaDiagnostics",
    "strassen_formula",
    "standard_formula",
    "perturb",
    "kappa",
    "eta",
    "residual_norm",
    "is_exact",
    "weight_norm_product",
    "diagnostics",
    "realized_tensor",
    "target_tensor",
    "format_formula",
    "parse_formula",
    "save_formula",
    "load_formula",
]


@dataclass(frozen=True)
class BilinearFormula:
    """Immutable coefficient triple (u, v, w), each of shape (R, n, n)."""

    u: np.ndarray
    v: np.ndarray
    w: np.ndarray

    def __post_init__(self):
        tensors = []
        for name in ("u", "v", "w"):
            t = np.array(getattr(self, name), dtype=np.float64)
            if t.ndim != 3:
                raise ValueError(f"{name} must have shape (R, n, n)")
            if not np.all(np.isfinite(t)):
                raise ValueError(f"{name} contains non-finite coefficients")
            t.flags.writeable = False
            tensors.append(t)
        u, v, w = tensors
        if not (u.shape == v.shape == w.shape):
            raise ValueError("u, v, w must share one shape")
        if u.shape[1] != u.shape[2]:
            raise ValueError("block grid must be square")
        if u.shape[0] < 1 or u.shape[1] < 1:
            raise ValueError("need at least one term and one block")
        object.__setattr__(self, "u", u)
        object.__setattr__(self, "v", v)
        object.__setattr__(self, "w", w)

    @property
    def n(self) -> int:
        """Side of the block grid."""
        return self.u.shape[1]

    @property
    def rank(self) -> int:
        """Number of terms R."""
        return self.u.shape[0]


@dataclass(frozen=True)
class FormulaDiagnostics:
    """Exact-arithmetic quality measures of a formula (always binary64)."""

    kappa: float
    eta: float
    residual_norm: float
    weight_norm_product: float
    is_exact: bool


# Classical 7-term recursion over a 2x2 grid: each row is one term's
# (u, v, w) block-coefficient grids.
_STRASSEN_TERMS = (
    (((1, 0), (0, 1)), ((1, 0), (0, 1)), ((1, 0), (0, 1))),
    (((0, 0), (1, 1)), ((1, 0), (0, 0)), ((0, 0), (1, -1))),
    (((1, 0), (0, 0)), ((0, 1), (0, -1)), ((0, 1), (0, 1))),
    (((0, 0), (0, 1)), ((-1, 0), (1, 0)), ((1, 0), (1, 0))),
    (((1, 1), (0, 0)), ((0, 0), (0, 1)), ((-1, 1), (0, 0))),
    (((-1, 0), (1, 0)), ((1, 1), (0, 0)), ((0, 0), (0, 1))),
    (((0, 1), (0, -1)), ((0, 0), (1, 1)), ((1, 0), (0, 0))),
)


def strassen_formula() -> BilinearFormula:
    """The exact 7-term 2x2 recursion with coefficients in {-1, 0, 1}."""
    u = np.array([t[0] for t in _STRASSEN_TERMS], dtype=np.float64)
    v = np.array([t[1] for t in _STRASSEN_TERMS], dtype=np.float64)
    w = np.array([t[2] for t in _STRASSEN_TERMS], dtype=np.float64)
    return BilinearFormula(u, v, w)


def standard_formula(n: int) -> BilinearFormula:
    """The n^3-term formula mirroring the inner-product algorithm.

    Term (i, l, j), enumerated with i slowest, picks A_il and B_lj and adds
    their product into C_ij; all coefficients are 0 or 1.
    """
    if n < 1:
        raise ValueError("n must be positive")
    R = n ** 3
    u = np.zeros((R, n, n))
    v = np.zeros((R, n, n))
    w = np.zeros((R, n, n))
    r = 0
    for i in range(n):
        for l in range(n):
            for j in range(n):
                u[r, i, l] = 1.0
                v[r, l, j] = 1.0
                w[r, i, j] = 1.0
                r += 1
    return BilinearFormula(u, v, w)


def perturb(
    f: BilinearFormula,
    sigma: float,
    extra_zeros: int,
    rng,
) -> BilinearFormula:
    """Gaussian-perturbed copy of a formula.

    Independently per tensor (u, then v, then w): add N(0, sigma) noise to
    every coefficient equal to 1, then to `extra_zeros` distinct uniformly
    chosen coefficients equal to 0.  Positions are indexed in canonical
    (term, row, column) order; the draw order is ones-noise, zero-position
    choice, zeros-noise.  The input formula is left untouched.
    """
    if sigma <= 0.0:
        raise ValueError("sigma must be positive")
    if extra_zeros < 0:
        raise ValueError("extra_zeros must be >= 0")
    gen = as_generator(rng)
    for name, t in (("u", f.u), ("v", f.v), ("w", f.w)):
        if extra_zeros > np.count_nonzero(t == 0.0):
            raise ValueError(f"tensor {name} has fewer than {extra_zeros} zero entries")
    out = []
    for t in (f.u, f.v, f.w):
        t = t.copy()
        flat = t.ravel()
        ones = np.flatnonzero(flat == 1.0)
        flat[ones] += gen.normal(0.0, sigma, size=ones.size)
        zeros = np.flatnonzero(flat == 0.0)
        if extra_zeros:
            pick = gen.choice(zeros.size, size=extra_zeros, replace=False)
            flat[zeros[pick]] += gen.normal(0.0, sigma, size=extra_zeros)
        out.append(t)
    return BilinearFormula(*out)


def kappa(f: BilinearFormula) -> float:
    """Mean deficiency of the diagonal coefficient sums.

    kappa = n^-3 * sum over (i, j, l) of (1 - sum_r u[r,i,l] v[r,l,j] w[r,i,j]),
    accumulated sequentially in binary64 with (i, j, l) lexicographic and the
    term index innermost.  Zero for exact formulas, but zero does not imply
    exactness.
    """
    u, v, w = f.u, f.v, f.w
    n = f.n
    total = 0.0
    for i in range(n):
        for j in range(n):
            for l in range(n):
                s = 0.0
                for r in range(f.rank):
                    s += u[r, i, l] * v[r, l, j] * w[r, i, j]
                total += 1.0 - s
    return float(total) / float(n ** 3)


def eta(f: BilinearFormula) -> float:
    """Relative rescaling excess 1/(1 - kappa) - 1; infinite when kappa = 1."""
    k = kappa(f)
    if k == 1.0:
        return math.inf
    return 1.0 / (1.0 - k) - 1.0


def realized_tensor(f: BilinearFormula) -> np.ndarray:
    """Six-index tensor y[k,l,k',l',i,j] = sum_r u[r,k,l] v[r,k',l'] w[r,i,j]."""
    return np.einsum("rkl,rmp,rij->klmpij", f.u, f.v, f.w, optimize=True)


def target_tensor(n: int) -> np.ndarray:
    """Six-index indicator of exact multiplication: 1 iff i=k, k'=l, j=l'."""
    d = np.eye(n)
    return np.einsum("ki,pj,lm->klmpij", d, d, d)


def residual_norm(f: BilinearFormula) -> float:
    """Frobenius distance over all n^6 entries between realized and exact tensors."""
    diff = realized_tensor(f) - target_tensor(f.n)
    return float(np.linalg.norm(diff.ravel()))


def is_exact(f: BilinearFormula, tol: float = 0.0) -> bool:
    """True when every realized coefficient matches the exact target within tol."""
    if tol < 0.0:
        raise ValueError("tol must be >= 0")
    diff = realized_tensor(f) - target_tensor(f.n)
    return bool(np.max(np.abs(diff)) <= tol)


def weight_norm_product(f: BilinearFormula) -> float:
    """sqrt(sum_r |U_r|_F^2 |V_r|_F^2 |W_r|_F^2), the term-norm aggregate."""
    su = np.sum(f.u * f.u, axis=(1, 2))
    sv = np.sum(f.v * f.v, axis=(1, 2))
    sw = np.sum(f.w * f.w, axis=(1, 2))
    return float(np.sqrt(np.sum(su * sv * sw)))


def diagnostics(f: BilinearFormula, tol: float = 0.0) -> FormulaDiagnostics:
    """All scalar diagnostics in one pass (binary64 throughout)."""
    return FormulaDiagnostics(
        kappa=kappa(f),
        eta=eta(f),
        residual_norm=residual_norm(f),
        weight_norm_product=weight_norm_product(f),
        is_exact=is_exact(f, tol),
    )


# -- text file format ---------------------------------------------------------
#
#   bilinear-formula v1
#   n 2
#   R 7
#   tensor u
#   <R grids of n rows with n entries each>
#   tensor v
#   ...
#   tensor w
#   ...
#
# Entries are written with repr(), so binary64 values round-trip exactly.

_MAGIC = "bilinear-formula v1"


def format_formula(f: BilinearFormula) -> str:
    lines = [_MAGIC, f"n {f.n}", f"R {f.rank}"]
    for name, t in (("u", f.u), ("v", f.v), ("w", f.w)):
        lines.append(f"tensor {name}")
        for r in range(f.rank):
            for i in range(f.n):
                lines.append(" ".join(repr(float(x)) for x in t[r, i]))
    return "\n".join(lines) + "\n"


def parse_formula(text: str) -> BilinearFormula:
    lines = [ln.strip() for ln in text.splitlines() if ln.strip()]
    if not lines or lines[0] != _MAGIC:
        raise ValueError("not a bilinear-formula v1 document")
    try:
        n = int(lines[1].split()[1])
        R = int(lines[2].split()[1])
    except (IndexError, ValueError):
        raise ValueError("malformed header") from None
    pos = 3
    tensors = {}
    for name in ("u", "v", "w"):
        if pos >= len(lines) or lines[pos] != f"tensor {name}":
            raise ValueError(f"expected 'tensor {name}' section")
        pos += 1
        rows = []
        for _ in range(R * n):
            if pos >= len(lines):
                raise ValueError("truncated tensor section")
            row = [float(tok) for tok in lines[pos].split()]
            if len(row) != n:
                raise ValueError(f"expected {n} entries per row")
            rows.append(row)
            pos += 1
        tensors[name] = np.array(rows).reshape(R, n, n)
    if pos != len(lines):
        raise ValueError("trailing content after tensors")
    return BilinearFormula(tensors["u"], tensors["v"], tensors["w"])


def save_formula(f: BilinearFormula, path) -> None:
    with open(path, "w", encoding="ascii") as fh:
        fh.write(format_formula(f))


def load_formula(path) -> BilinearFormula:
    with open(path, "r", encoding="ascii") as fh:
        return parse_formula(fh.read())
