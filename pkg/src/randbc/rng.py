"""Counter-based seeded random streams with hierarchical substream derivation.

Every random draw in the package flows through a Philox generator keyed by
(master seed, path of integers).  Distinct paths yield statistically
independent streams, so trials, recursion levels, and roles can be generated
in any schedule (or in parallel) without changing the numbers.
"""

from __future__ import annotations

import numpy as np

# Fixed role tags so independent draws never share a substream path.
ROLE_FORMULA = 0
ROLE_MATRIX = 1
ROLE_PLAN = 2
ROLE_INPUT = 3


def derive_rng(seed: int, *path: int) -> np.random.Generator:
    """Philox stream for (seed, *path); disjoint paths give independent streams."""
    ss = np.random.SeedSequence(int(seed), spawn_key=tuple(int(p) for p in path))
    return np.random.Generator(np.random.Philox(ss))


def derive_seed(seed: int, *path: int) -> int:
    """A u64 usable as a standalone master seed, derived like derive_rng."""
    ss = np.random.SeedSequence(int(seed), spawn_key=tuple(int(p) for p in path))
    return int(ss.generate_state(1, np.uint64)[0])


def as_generator(rng: int | np.random.Generator) -> np.random.Generator:
    """Accept either a ready generator or a bare integer seed."""
    if isinstance(rng, np.random.Generator):
        return rng
    return derive_rng(int(rng))
