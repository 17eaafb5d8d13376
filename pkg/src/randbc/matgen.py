"""Seeded test-matrix families, including badly scaled adversarial pairs.

All generation happens in binary64; callers round into their working mode.
The A and B streams are independent substreams of the MatrixSpec seed, and the
adversarial kinds draw the pair jointly since their supports are coupled.
Index conventions below are 1-based with strict comparisons, and "half" means
exactly size/2 (no rounding), so the scaled regions are the same bands at
every even size.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .rng import derive_rng

__all__ = ["MatrixSpec", "MATRIX_KINDS", "generate"]

MATRIX_KINDS = ("gaussian", "uniform", "adv1", "adv2", "adv3", "hilbert")


@dataclass(frozen=True)
class MatrixSpec:
    """kind in MATRIX_KINDS, side length, and a u64 master seed (ignored by
    the deterministic hilbert kind)."""

    kind: str
    size: int
    seed: int = 0

    def __post_init__(self):
        if self.kind not in MATRIX_KINDS:
            raise ValueError(f"unknown matrix kind: {self.kind!r}")
        if self.size < 1:
            raise ValueError("size must be >= 1")
        if self.kind.startswith("adv") and self.size < 2:
            raise ValueError("adversarial kinds need size >= 2")
        if not 0 <= int(self.seed) < 2 ** 64:
            raise ValueError("seed must fit in u64")


def _index_grids(n: int):
    i = np.arange(1, n + 1, dtype=np.float64)[:, None]
    j = np.arange(1, n + 1, dtype=np.float64)[None, :]
    return i, j


def _scaled_uniform(rng, scale: np.ndarray) -> np.ndarray:
    # entry ~ Uniform(0, scale_ij), drawn as scale * U(0, 1)
    return rng.random(scale.shape) * scale


def generate(spec: MatrixSpec):
    """Return the (A, B) pair for a spec, both float64.

    gaussian : independent standard normal entries
    uniform  : independent U(0, 1) entries
    adv1     : A tiny on columns j > n/2, B tiny on rows i < n/2
    adv2     : A huge on the upper-right quarter (i < n/2 and j > n/2),
               B tiny on columns j < n/2
    adv3     : both tiny on the upper-right and lower-left bands
               (i < n/2, j > n/2) or (i >= n/2, j <= n/2)
    hilbert  : A = B = H with H_ij = 1/(i + j - 1)

    "tiny" means U(0, 1/n^2) and "huge" U(0, n^2); unscaled entries are
    U(0, 1).  Every entry is drawn independently.
    """
    n = spec.size
    rng_a = derive_rng(spec.seed, 0)
    rng_b = derive_rng(spec.seed, 1)
    if spec.kind == "gaussian":
        return rng_a.standard_normal((n, n)), rng_b.standard_normal((n, n))
    if spec.kind == "uniform":
        return rng_a.random((n, n)), rng_b.random((n, n))
    if spec.kind == "hilbert":
        i, j = _index_grids(n)
        H = 1.0 / (i + j - 1.0)
        return H, H.copy()

    i, j = _index_grids(n)
    half = n / 2.0
    tiny = 1.0 / (n * n)
    huge = float(n * n)
    one = np.ones((n, n))
    if spec.kind == "adv1":
        scale_a = np.where(j > half, tiny, 1.0) * one
        scale_b = np.where(i < half, tiny, 1.0) * one
    elif spec.kind == "adv2":
        scale_a = np.where((i < half) & (j > half), huge, 1.0) * one
        scale_b = np.where(j < half, tiny, 1.0) * one
    else:  # adv3
        band = ((i < half) & (j > half)) | ((i >= half) & (j <= half))
        scale_a = np.where(band, tiny, 1.0) * one
        scale_b = scale_a
    return _scaled_uniform(rng_a, scale_a), _scaled_uniform(rng_b, scale_b)
