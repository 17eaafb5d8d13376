"""Seeded error experiments with streaming CSV records.

Two experimental settings share one record schema.  Setting 1 runs a
perturbed (approximate) 7-term formula in binary64; setting 2 runs the exact
7-term formula in binary32, where all error is rounding.  Each setting has an
averaging experiment (running mean of the randomized product against the
checkpoint grid 1, 2, ..., 10, 20, ..., and so on) and a distribution
experiment (per-trial relative errors).

Reproducibility contract: every random object is drawn from a substream of
the master seed keyed by role, repeat, trial, and recursion level, so a
record is recomputable from its (seed, config) alone, trial counts can change
without reshuffling earlier trials, and the execution schedule (chunking,
algorithm subsets, matrix families selected) never affects values.  Relative
errors compare against the binary64 inner-product reference and are
accumulated in binary64.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, replace

import numpy as np

from .formula import BilinearFormula, perturb, strassen_formula
from .matgen import MATRIX_KINDS, MatrixSpec, generate
from .multiply import recursive_apply, standard_multiply
from .precision import DOUBLE, ScalarMode, parse_precision
from .randomize import (
    RecursivePlan,
    VARIANTS,
    draw_plan,
    recursive_randomized_apply_many,
    variant_plan,
)
from .rescale import DEFAULT_SCHEDULE, rescaled_multiply
from .rng import ROLE_FORMULA, ROLE_MATRIX, ROLE_PLAN, derive_rng, derive_seed

__all__ = [
    "EXPERIMENTS",
    "ALGORITHMS",
    "CSV_COLUMNS",
    "EXPERIMENT_DEFAULTS",
    "TrialRecord",
    "ExperimentConfig",
    "checkpoint_grid",
    "run_experiment",
    "sort_records",
    "format_csv",
    "write_csv",
]

log = logging.getLogger("randbc")

EXPERIMENTS = ("s1_avg", "s1_dist", "s2_avg", "s2_variants")

ALGORITHMS = (
    "deterministic",
    "full_random",
    "sign_only",
    "perm_only",
    "rescaled_2xoi",
    "standard",
)

_RANDOMIZED = ("full_random", "sign_only", "perm_only")

_VARIANT_OF = {"full_random": "full", "sign_only": "sign", "perm_only": "perm"}

_ALLOWED_ALGORITHMS = {
    "s1_avg": frozenset({"full_random"}),
    "s1_dist": frozenset({"deterministic", "full_random"}),
    "s2_avg": frozenset({"full_random", "standard"}),
    "s2_variants": frozenset(ALGORITHMS),
}

CSV_COLUMNS = (
    "experiment",
    "algorithm",
    "matrix_type",
    "n",
    "Q",
    "trial",
    "seed",
    "rel_error",
    "running_n",
)

# CLI-facing defaults per experiment; precision tokens resolve via
# parse_precision.
EXPERIMENT_DEFAULTS = {
    "s1_avg": dict(matrix_type="gaussian", size=80, recursions=3, trials=10_000, precision="f64"),
    "s1_dist": dict(matrix_type="all", size=320, recursions=5, trials=100, precision="f64"),
    "s2_avg": dict(matrix_type="gaussian", size=80, recursions=3, trials=10_000, precision="f32"),
    "s2_variants": dict(matrix_type="all", size=320, recursions=5, trials=100, precision="f32"),
}

# Trials per batched engine call in the averaging experiments.
_AVERAGE_BLOCK = 256


@dataclass(frozen=True)
class TrialRecord:
    """One CSV row; rel_error is the binary64 relative Frobenius error."""

    experiment: str
    algorithm: str
    matrix_type: str
    n: int
    Q: int
    trial: int
    seed: int
    rel_error: float
    running_n: int

    def __post_init__(self):
        if self.experiment not in EXPERIMENTS:
            raise ValueError(f"unknown experiment: {self.experiment!r}")
        if self.algorithm not in ALGORITHMS:
            raise ValueError(f"unknown algorithm: {self.algorithm!r}")
        if self.algorithm not in _ALLOWED_ALGORITHMS[self.experiment]:
            raise ValueError(
                f"algorithm {self.algorithm!r} is not defined for {self.experiment!r}"
            )
        if self.matrix_type not in MATRIX_KINDS:
            raise ValueError(f"unknown matrix kind: {self.matrix_type!r}")
        if self.n < 1 or self.Q < 0 or self.trial < 0 or self.running_n < 1:
            raise ValueError("n, Q, trial, running_n out of range")
        if not (np.isfinite(self.rel_error) and self.rel_error >= 0.0):
            raise ValueError("rel_error must be finite and non-negative")

    def csv_row(self) -> str:
        return ",".join(
            (
                self.experiment,
                self.algorithm,
                self.matrix_type,
                str(self.n),
                str(self.Q),
                str(self.trial),
                str(self.seed),
                repr(float(self.rel_error)),
                str(self.running_n),
            )
        )


@dataclass(frozen=True)
class ExperimentConfig:
    """Full description of one experiment invocation."""

    experiment: str
    matrix_type: str
    size: int
    recursions: int
    trials: int
    seed: int
    precision: ScalarMode
    perturb_sigma: float = 1e-3
    perturb_extra: int = 5
    repeats: int = 1
    algorithms: tuple | None = None
    variant: str = "full"

    def __post_init__(self):
        if self.experiment not in EXPERIMENTS:
            raise ValueError(f"unknown experiment: {self.experiment!r}")
        if self.matrix_type != "all" and self.matrix_type not in MATRIX_KINDS:
            raise ValueError(f"unknown matrix kind: {self.matrix_type!r}")
        if self.experiment in ("s1_avg", "s2_avg") and self.matrix_type == "all":
            raise ValueError("averaging experiments need a single matrix kind")
        if self.size < 2:
            raise ValueError("size must be >= 2")
        if self.recursions < 1:
            raise ValueError("recursions must be >= 1")
        if self.size % (2 ** self.recursions):
            raise ValueError(
                f"size {self.size} is not m*2^{self.recursions}; "
                "choose a conforming size or pad inputs explicitly"
            )
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        if not 0 <= int(self.seed) < 2 ** 64:
            raise ValueError("seed must fit in u64")
        if self.experiment in ("s1_avg", "s1_dist"):
            if self.perturb_sigma <= 0:
                raise ValueError("perturb_sigma must be positive")
            if self.perturb_extra < 0:
                raise ValueError("perturb_extra must be >= 0")
        if self.repeats < 1:
            raise ValueError("repeats must be >= 1")
        if self.variant not in VARIANTS:
            raise ValueError(f"unknown variant: {self.variant!r}")
        if self.variant != "full" and self.experiment != "s2_variants":
            raise ValueError(
                "plan variants other than 'full' are only defined for s2_variants"
            )
        if self.algorithms is not None:
            algs = tuple(self.algorithms)
            bad = [a for a in algs if a not in _ALLOWED_ALGORITHMS[self.experiment]]
            if bad or not algs:
                raise ValueError(f"algorithms not defined for {self.experiment}: {bad}")
            object.__setattr__(self, "algorithms", algs)


def checkpoint_grid(total: int):
    """Log-spaced running-average checkpoints 1..9, 10..90, ..., plus total."""
    if total < 1:
        raise ValueError("total must be >= 1")
    pts = set()
    decade = 1
    while decade <= total:
        for k in range(1, 10):
            if k * decade <= total:
                pts.add(k * decade)
        decade *= 10
    pts.add(total)
    return sorted(pts)


def _frob(x: np.ndarray) -> float:
    return float(np.linalg.norm(np.asarray(x, dtype=np.float64).ravel()))


def _experiment_formula(cfg: ExperimentConfig) -> BilinearFormula:
    if cfg.experiment in ("s1_avg", "s1_dist"):
        return perturb(
            strassen_formula(),
            cfg.perturb_sigma,
            cfg.perturb_extra,
            derive_rng(cfg.seed, ROLE_FORMULA),
        )
    return strassen_formula()


def _matrix_pair(cfg: ExperimentConfig, kind: str, repeat: int):
    mseed = derive_seed(cfg.seed, ROLE_MATRIX, repeat, MATRIX_KINDS.index(kind))
    return generate(MatrixSpec(kind, cfg.size, mseed))


def _trial_plan(cfg: ExperimentConfig, trial: int, Q: int, n: int) -> RecursivePlan:
    return RecursivePlan(
        tuple(draw_plan(n, derive_rng(cfg.seed, ROLE_PLAN, trial, q)) for q in range(Q))
    )


def _prepare(cfg: ExperimentConfig, kind: str, repeat: int):
    """Mode-typed operands plus the binary64 reference product and its norm."""
    mode = cfg.precision
    A64, B64 = _matrix_pair(cfg, kind, repeat)
    Am, Bm = mode.array(A64), mode.array(B64)
    Ad, Bd = mode.to_double(Am), mode.to_double(Bm)
    ref = standard_multiply(Ad, Bd, DOUBLE)
    return Am, Bm, ref, _frob(ref)


def _rel_errors(results, ref: np.ndarray, refnorm: float, mode: ScalarMode):
    res = np.stack([mode.to_double(results[t]) for t in range(results.shape[0])])
    diff = res - ref[None]
    return np.sqrt(np.sum(diff * diff, axis=(1, 2))) / refnorm


def _run_average(cfg: ExperimentConfig, repeat: int):
    mode = cfg.precision
    f = _experiment_formula(cfg)
    kind = cfg.matrix_type
    Am, Bm, ref, refnorm = _prepare(cfg, kind, repeat)
    records = []
    if cfg.experiment == "s2_avg":
        std = standard_multiply(Am, Bm, mode)
        rel = _frob(mode.to_double(std) - ref) / refnorm
        records.append(
            TrialRecord(cfg.experiment, "standard", kind, cfg.size, 0, 0, cfg.seed, rel, 1)
        )
    grid = set(checkpoint_grid(cfg.trials))
    for Q in range(1, cfg.recursions + 1):
        log.info("%s %s Q=%d: averaging %d trials", cfg.experiment, kind, Q, cfg.trials)
        total = np.zeros((cfg.size, cfg.size), dtype=np.float64)
        done = 0
        while done < cfg.trials:
            block = min(_AVERAGE_BLOCK, cfg.trials - done)
            rplans = [_trial_plan(cfg, t, Q, f.n) for t in range(done + 1, done + block + 1)]
            results = recursive_randomized_apply_many(f, rplans, Am, Bm, mode)
            for t in range(block):
                np.add(total, mode.to_double(results[t]), out=total)
                i = done + t + 1
                if i in grid:
                    rel = _frob(total / i - ref) / refnorm
                    records.append(
                        TrialRecord(
                            cfg.experiment, "full_random", kind, cfg.size, Q, i, cfg.seed, rel, i
                        )
                    )
            done += block
    return records


def _run_s1_dist(cfg: ExperimentConfig, repeat: int):
    mode = cfg.precision
    f = _experiment_formula(cfg)
    kinds = list(MATRIX_KINDS) if cfg.matrix_type == "all" else [cfg.matrix_type]
    algs = cfg.algorithms or ("deterministic", "full_random")
    records = []
    for kind in kinds:
        Am, Bm, ref, refnorm = _prepare(cfg, kind, repeat)
        for Q in range(1, cfg.recursions + 1):
            log.info("s1_dist %s Q=%d", kind, Q)
            if "deterministic" in algs:
                det = recursive_apply(f, Am, Bm, Q, mode)
                rel = _frob(mode.to_double(det) - ref) / refnorm
                records.append(
                    TrialRecord("s1_dist", "deterministic", kind, cfg.size, Q, 0, cfg.seed, rel, 1)
                )
            if "full_random" in algs:
                rplans = [_trial_plan(cfg, t, Q, f.n) for t in range(1, cfg.trials + 1)]
                results = recursive_randomized_apply_many(f, rplans, Am, Bm, mode)
                for t, rel in enumerate(_rel_errors(results, ref, refnorm, mode), start=1):
                    records.append(
                        TrialRecord(
                            "s1_dist", "full_random", kind, cfg.size, Q, t, cfg.seed, float(rel), 1
                        )
                    )
    return records


def _run_s2_variants(cfg: ExperimentConfig, repeat: int):
    mode = cfg.precision
    f = strassen_formula()
    kinds = list(MATRIX_KINDS) if cfg.matrix_type == "all" else [cfg.matrix_type]
    algs = cfg.algorithms or ALGORITHMS
    randomized = [a for a in _RANDOMIZED if a in algs]
    if cfg.variant != "full":
        keep = {"none": (), "sign": ("sign_only",), "perm": ("perm_only",)}[cfg.variant]
        randomized = [a for a in randomized if a in keep]
    records = []
    for kind in kinds:
        Am, Bm, ref, refnorm = _prepare(cfg, kind, repeat)
        if "standard" in algs:
            std = standard_multiply(Am, Bm, mode)
            rel = _frob(mode.to_double(std) - ref) / refnorm
            records.append(
                TrialRecord("s2_variants", "standard", kind, cfg.size, 0, 0, cfg.seed, rel, 1)
            )
        for Q in range(1, cfg.recursions + 1):
            log.info("s2_variants %s Q=%d", kind, Q)
            if "deterministic" in algs:
                det = recursive_apply(f, Am, Bm, Q, mode)
                rel = _frob(mode.to_double(det) - ref) / refnorm
                records.append(
                    TrialRecord(
                        "s2_variants", "deterministic", kind, cfg.size, Q, 0, cfg.seed, rel, 1
                    )
                )
            if "rescaled_2xoi" in algs:
                resc = rescaled_multiply(Am, Bm, Q, DEFAULT_SCHEDULE, mode)
                rel = _frob(mode.to_double(resc) - ref) / refnorm
                records.append(
                    TrialRecord(
                        "s2_variants", "rescaled_2xoi", kind, cfg.size, Q, 0, cfg.seed, rel, 1
                    )
                )
            if randomized:
                base = [_trial_plan(cfg, t, Q, f.n) for t in range(1, cfg.trials + 1)]
                for alg in randomized:
                    token = _VARIANT_OF[alg]
                    vplans = [
                        RecursivePlan(tuple(variant_plan(p, token) for p in rp.levels))
                        for rp in base
                    ]
                    results = recursive_randomized_apply_many(f, vplans, Am, Bm, mode)
                    rels = _rel_errors(results, ref, refnorm, mode)
                    for t, rel in enumerate(rels, start=1):
                        records.append(
                            TrialRecord(
                                "s2_variants", alg, kind, cfg.size, Q, t, cfg.seed, float(rel), 1
                            )
                        )
    return records


def run_experiment(cfg: ExperimentConfig, repeat: int = 0):
    """All records for one experiment repeat, unsorted."""
    if repeat < 0 or repeat >= cfg.repeats:
        raise ValueError("repeat index out of range")
    if cfg.experiment in ("s1_avg", "s2_avg"):
        return _run_average(cfg, repeat)
    if cfg.experiment == "s1_dist":
        return _run_s1_dist(cfg, repeat)
    return _run_s2_variants(cfg, repeat)


def sort_records(records):
    """Deterministic emission order, independent of execution schedule."""
    return sorted(
        records,
        key=lambda r: (
            r.experiment,
            r.matrix_type,
            r.algorithm,
            r.n,
            r.Q,
            r.trial,
            r.running_n,
        ),
    )


def format_csv(records) -> str:
    lines = [",".join(CSV_COLUMNS)]
    lines.extend(r.csv_row() for r in sort_records(records))
    return "\n".join(lines) + "\n"


def write_csv(records, path) -> None:
    with open(path, "w", encoding="ascii", newline="\n") as fh:
        fh.write(format_csv(records))


def repeat_out_path(path: str, repeat: int) -> str:
    """CSV path for a repeat: repeat 0 keeps the path, later ones get -repN."""
    if repeat == 0:
        return path
    stem, dot, ext = path.rpartition(".")
    if not dot:
        return f"{path}-rep{repeat + 1}"
    return f"{stem}-rep{repeat + 1}.{ext}"


def config_with_precision(cfg: ExperimentConfig, token: str) -> ExperimentConfig:
    """Convenience for tests: same config at a different precision."""
    return replace(cfg, precision=parse_precision(token))
