"""Random sign and permutation conjugation of bilinear formulas.

A plan holds three independent sign vectors s1, s2, s3 in {-1, +1}^n and
three independent uniform permutations p1, p2, p3 of the block grid.  The
randomized product conjugates the operands by the orthogonal matrices
M_i = P_i S_i and rescales by 1/(1 - kappa); expanding the conjugation into
the coefficients gives the equivalent "hatted" formula

    uh[r,k,l] = u[r, p1(k), p2(l)] * s1(k) * s2(l)
    vh[r,k,l] = v[r, p2(k), p3(l)] * s2(k) * s3(l)
    wh[r,i,j] = 1/(1-kappa) * s1(i) * s3(j) * w[r, p1(i), p3(j)]

which is what the execution path applies (one plain blocked formula pass per
level).  The matrix-sandwich form is algebraically identical and is kept to
tests as an independent oracle.  In exact arithmetic the randomized product
is unbiased: averaging over all plans returns A @ B exactly.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from . import _engine
from .formula import BilinearFormula, kappa
from .multiply import _as_operands, _check_blocked
from .precision import DOUBLE, ScalarMode
from .rng import as_generator, derive_rng, derive_seed  # noqa: F401  (re-export)

__all__ = [
    "RandomizationPlan",
    "RecursivePlan",
    "identity_plan",
    "draw_plan",
    "variant_plan",
    "identity_recursive_plan",
    "draw_recursive_plan",
    "hatted_tensors",
    "plan_matrices",
    "randomized_apply",
    "recursive_randomized_apply",
    "recursive_randomized_apply_many",
    "enumerate_expectation",
    "plan_count",
    "VARIANTS",
]

VARIANTS = ("full", "sign", "perm", "none")

# Trial-axis chunking keeps the largest engine intermediate near this many
# elements; results never depend on the chunk size.
DEFAULT_CHUNK_ELEMENTS = 1 << 24


@dataclass(frozen=True)
class RandomizationPlan:
    """Signs (3, n) in {-1, +1} and permutations (3, n); perms[i][j] is the
    image of block index j."""

    signs: np.ndarray
    perms: np.ndarray

    def __post_init__(self):
        signs = np.array(self.signs, dtype=np.float64)
        perms = np.array(self.perms, dtype=np.int64)
        if signs.ndim != 2 or signs.shape[0] != 3 or signs.shape != perms.shape:
            raise ValueError("signs and perms must both have shape (3, n)")
        if not np.all(np.abs(signs) == 1.0):
            raise ValueError("signs must be +1 or -1")
        n = perms.shape[1]
        for row in perms:
            if not np.array_equal(np.sort(row), np.arange(n)):
                raise ValueError("each perms row must be a permutation of 0..n-1")
        signs.flags.writeable = False
        perms.flags.writeable = False
        object.__setattr__(self, "signs", signs)
        object.__setattr__(self, "perms", perms)

    @property
    def n(self) -> int:
        return self.perms.shape[1]


@dataclass(frozen=True)
class RecursivePlan:
    """One independent plan per recursion level; levels[0] acts at the
    outermost split."""

    levels: tuple

    def __post_init__(self):
        levels = tuple(self.levels)
        if not levels:
            raise ValueError("need at least one level")
        if any(not isinstance(p, RandomizationPlan) for p in levels):
            raise ValueError("levels must be RandomizationPlan instances")
        if len({p.n for p in levels}) != 1:
            raise ValueError("levels must share one grid size")
        object.__setattr__(self, "levels", levels)

    @property
    def depth(self) -> int:
        return len(self.levels)

    @property
    def n(self) -> int:
        return self.levels[0].n


def identity_plan(n: int) -> RandomizationPlan:
    """All signs +1 and identity permutations."""
    return RandomizationPlan(np.ones((3, n)), np.tile(np.arange(n), (3, 1)))


def draw_plan(n: int, rng) -> RandomizationPlan:
    """Uniform plan: each of the (2^n)^3 (n!)^3 plans is equally likely.

    Draw order is fixed: the 3 x n sign grid first (row-major), then the
    three permutations (Fisher-Yates shuffles on the same stream).
    """
    gen = as_generator(rng)
    signs = 1.0 - 2.0 * gen.integers(0, 2, size=(3, n)).astype(np.float64)
    perms = np.stack([gen.permutation(n) for _ in range(3)])
    return RandomizationPlan(signs, perms)


def variant_plan(plan: RandomizationPlan, variant: str) -> RandomizationPlan:
    """Restrict a plan: full keeps it, sign drops permutations, perm drops
    signs, none drops both."""
    if variant not in VARIANTS:
        raise ValueError(f"unknown variant: {variant!r}")
    n = plan.n
    ident = identity_plan(n)
    if variant == "full":
        return plan
    if variant == "sign":
        return RandomizationPlan(plan.signs, ident.perms)
    if variant == "perm":
        return RandomizationPlan(ident.signs, plan.perms)
    return ident


def identity_recursive_plan(n: int, Q: int) -> RecursivePlan:
    return RecursivePlan(tuple(identity_plan(n) for _ in range(Q)))


def draw_recursive_plan(n: int, Q: int, rng) -> RecursivePlan:
    """Q independent plans drawn sequentially from one stream."""
    gen = as_generator(rng)
    return RecursivePlan(tuple(draw_plan(n, gen) for _ in range(Q)))


def _rescale_factor(f: BilinearFormula) -> float:
    k = kappa(f)
    if k == 1.0:
        raise ValueError("rescale factor undefined: kappa = 1")
    return 1.0 / (1.0 - k)


def hatted_tensors(f: BilinearFormula, plan: RandomizationPlan, rescaled: bool = True):
    """Coefficient triple of the conjugated formula, in binary64.

    Sign flips and index permutations are exact; with rescaled=True the w
    tensor also carries the 1/(1 - kappa) factor (one binary64 rounding).
    """
    if plan.n != f.n:
        raise ValueError("plan and formula grid sizes differ")
    s1, s2, s3 = plan.signs
    p1, p2, p3 = plan.perms
    uh = f.u[:, p1[:, None], p2[None, :]] * np.outer(s1, s2)[None]
    vh = f.v[:, p2[:, None], p3[None, :]] * np.outer(s2, s3)[None]
    wh = f.w[:, p1[:, None], p3[None, :]] * np.outer(s1, s3)[None]
    if rescaled:
        wh = wh * _rescale_factor(f)
    return uh, vh, wh


def plan_matrices(plan: RandomizationPlan, m: int):
    """Explicit orthogonal conjugation matrices (M1, M2, M3), each mn x mn.

    M_i = P_i S_i: column block j holds signs[i][j] * I_m at row block
    perms[i][j].
    """
    n = plan.n
    out = []
    eye = np.eye(m)
    for i in range(3):
        M = np.zeros((m * n, m * n))
        for j in range(n):
            pi = int(plan.perms[i][j])
            M[pi * m : (pi + 1) * m, j * m : (j + 1) * m] = plan.signs[i][j] * eye
        out.append(M)
    return tuple(out)


def _plan_levels(f: BilinearFormula, plans, mode: ScalarMode):
    """Engine coefficient triples (T, R, n, n) for a list of per-trial plans,
    all at one recursion level."""
    uhs, vhs, whs = [], [], []
    for plan in plans:
        uh, vh, wh = hatted_tensors(f, plan)
        uhs.append(uh)
        vhs.append(vh)
        whs.append(wh)
    stack = lambda ts: np.stack([mode.array(t) for t in ts])
    return stack(uhs), stack(vhs), stack(whs)


def randomized_apply(
    f: BilinearFormula, plan: RandomizationPlan, A, B, mode: ScalarMode = DOUBLE, stats=None
) -> np.ndarray:
    """One randomized blocked level: the hatted formula applied like apply_bc."""
    A, B = _as_operands(A, B, mode)
    _check_blocked(A, B, f.n, 1)
    levels = [_plan_levels(f, [plan], mode)]
    return _engine.apply_levels(levels, A[None], B[None], mode, stats)[0]


def recursive_randomized_apply(
    f: BilinearFormula, rplan: RecursivePlan, A, B, mode: ScalarMode = DOUBLE, stats=None
) -> np.ndarray:
    """Independent randomization at every recursion level; the 1/(1 - kappa)
    rescaling is applied once per level."""
    A, B = _as_operands(A, B, mode)
    _check_blocked(A, B, f.n, rplan.depth)
    levels = [_plan_levels(f, [p], mode) for p in rplan.levels]
    return _engine.apply_levels(levels, A[None], B[None], mode, stats)[0]


def _max_level_elements(size: int, n: int, R: int, Q: int) -> int:
    per = size * size
    worst = per
    for _ in range(Q):
        per = per * R // (n * n)
        worst = max(worst, per)
    return worst


def recursive_randomized_apply_many(
    f: BilinearFormula,
    rplans,
    A,
    B,
    mode: ScalarMode = DOUBLE,
    chunk_elements: int = DEFAULT_CHUNK_ELEMENTS,
    stats=None,
) -> np.ndarray:
    """Evaluate many recursive plans against one operand pair.

    Returns a (len(rplans), size, size) mode-typed stack whose t-th slice is
    bitwise identical to recursive_randomized_apply with rplans[t]; the trial
    axis is processed in memory-bounded chunks that cannot affect values.
    """
    rplans = list(rplans)
    if not rplans:
        raise ValueError("need at least one plan")
    depth = rplans[0].depth
    if any(rp.depth != depth for rp in rplans):
        raise ValueError("plans must share one depth")
    A, B = _as_operands(A, B, mode)
    _check_blocked(A, B, f.n, depth)
    per_trial = _max_level_elements(A.shape[0], f.n, f.rank, depth)
    chunk = max(1, int(chunk_elements) // max(1, per_trial))
    pieces = []
    for start in range(0, len(rplans), chunk):
        group = rplans[start : start + chunk]
        levels = [
            _plan_levels(f, [rp.levels[q] for rp in group], mode) for q in range(depth)
        ]
        pieces.append(_engine.apply_levels(levels, A[None], B[None], mode, stats))
    return np.concatenate(pieces, axis=0)


def plan_count(n: int) -> int:
    """Number of distinct plans: (2^n)^3 * (n!)^3."""
    return (2 ** n) ** 3 * math.factorial(n) ** 3


def _all_plans(n: int):
    """Deterministic enumeration of every plan (signs lexicographic with +1
    first, permutations in itertools order)."""
    sign_rows = list(itertools.product((1.0, -1.0), repeat=n))
    perm_rows = list(itertools.permutations(range(n)))
    for s1, s2, s3, p1, p2, p3 in itertools.product(
        sign_rows, sign_rows, sign_rows, perm_rows, perm_rows, perm_rows
    ):
        yield RandomizationPlan(np.array([s1, s2, s3]), np.array([p1, p2, p3]))


def enumerate_expectation(
    f: BilinearFormula,
    A,
    B,
    mode: ScalarMode = DOUBLE,
    chunk_elements: int = DEFAULT_CHUNK_ELEMENTS,
) -> np.ndarray:
    """Exact expectation of the randomized product over every plan.

    Each plan's product is evaluated in the given mode (single level); the
    average is accumulated sequentially in binary64 over the enumeration
    order.  Refuses grids with more than 10^6 plans.
    """
    count = plan_count(f.n)
    if count > 1_000_000:
        raise ValueError(f"{count} plans exceed the enumeration budget")
    A, B = _as_operands(A, B, mode)
    _check_blocked(A, B, f.n, 1)
    per_trial = _max_level_elements(A.shape[0], f.n, f.rank, 1)
    chunk = max(1, int(chunk_elements) // max(1, per_trial))
    total = np.zeros(A.shape, dtype=np.float64)
    plans = []
    done = 0

    def flush():
        nonlocal done
        if not plans:
            return
        levels = [_plan_levels(f, plans, mode)]
        out = _engine.apply_levels(levels, A[None], B[None], mode)
        for t in range(out.shape[0]):
            np.add(total, mode.to_double(out[t]), out=total)
        done += len(plans)
        plans.clear()

    for plan in _all_plans(f.n):
        plans.append(plan)
        if len(plans) >= chunk:
            flush()
    flush()
    assert done == count
    return total / float(count)
