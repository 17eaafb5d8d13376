"""Randomized bilinear commutative-free matrix multiplication.

Exact and approximate bilinear formulas (Strassen-like), their recursive
blocked evaluation in binary64, binary32, or round-to-t-digits decimal
arithmetic, sign/permutation randomization with unbiased rescaling, a priori
error bounds, and the seeded experiments behind the `randbc` CLI.
"""

from .bounds import (
    BoundReport,
    NUMERICAL_BOUNDS,
    bound_deterministic,
    bound_numerical,
    bound_randomized,
    bound_sup_constant,
    randomized_penalty_coefficient,
)
from .experiments import (
    ALGORITHMS,
    CSV_COLUMNS,
    EXPERIMENTS,
    ExperimentConfig,
    TrialRecord,
    checkpoint_grid,
    run_experiment,
    write_csv,
)
from .formula import (
    BilinearFormula,
    FormulaDiagnostics,
    diagnostics,
    eta,
    is_exact,
    kappa,
    load_formula,
    parse_formula,
    perturb,
    realized_tensor,
    residual_norm,
    save_formula,
    standard_formula,
    strassen_formula,
    target_tensor,
    weight_norm_product,
)
from .matgen import MATRIX_KINDS, MatrixSpec, generate
from .multiply import (
    apply_bc,
    crop,
    pad_to_shape,
    recursive_apply,
    standard_multiply,
)
from .precision import (
    DOUBLE,
    HALF_AWAY,
    HALF_EVEN,
    SINGLE,
    ScalarMode,
    decimal_mode,
    fl,
    parse_precision,
    rounded_op,
    sequential_sum,
)
from .randomize import (
    RandomizationPlan,
    RecursivePlan,
    VARIANTS,
    draw_plan,
    draw_recursive_plan,
    enumerate_expectation,
    hatted_tensors,
    identity_plan,
    identity_recursive_plan,
    plan_count,
    plan_matrices,
    randomized_apply,
    recursive_randomized_apply,
    recursive_randomized_apply_many,
    variant_plan,
)
from .rescale import DEFAULT_SCHEDULE, INSIDE, OUTSIDE, rescaled_multiply
from .rng import (
    ROLE_FORMULA,
    ROLE_INPUT,
    ROLE_MATRIX,
    ROLE_PLAN,
    derive_rng,
    derive_seed,
)

__version__ = "0.1.0"

__all__ = [
    "ALGORITHMS",
    "BilinearFormula",
    "BoundReport",
    "CSV_COLUMNS",
    "DEFAULT_SCHEDULE",
    "DOUBLE",
    "EXPERIMENTS",
    "ExperimentConfig",
    "FormulaDiagnostics",
    "HALF_AWAY",
    "HALF_EVEN",
    "INSIDE",
    "MATRIX_KINDS",
    "MatrixSpec",
    "NUMERICAL_BOUNDS",
    "OUTSIDE",
    "ROLE_FORMULA",
    "ROLE_INPUT",
    "ROLE_MATRIX",
    "ROLE_PLAN",
    "RandomizationPlan",
    "RecursivePlan",
    "SINGLE",
    "ScalarMode",
    "TrialRecord",
    "VARIANTS",
    "apply_bc",
    "bound_deterministic",
    "bound_numerical",
    "bound_randomized",
    "bound_sup_constant",
    "checkpoint_grid",
    "crop",
    "decimal_mode",
    "derive_rng",
    "derive_seed",
    "diagnostics",
    "draw_plan",
    "draw_recursive_plan",
    "enumerate_expectation",
    "eta",
    "fl",
    "generate",
    "hatted_tensors",
    "identity_plan",
    "identity_recursive_plan",
    "is_exact",
    "kappa",
    "load_formula",
    "pad_to_shape",
    "parse_formula",
    "parse_precision",
    "perturb",
    "plan_count",
    "plan_matrices",
    "randomized_apply",
    "randomized_penalty_coefficient",
    "realized_tensor",
    "recursive_apply",
    "rounded_op",
    "recursive_randomized_apply",
    "recursive_randomized_apply_many",
    "rescaled_multiply",
    "residual_norm",
    "run_experiment",
    "save_formula",
    "sequential_sum",
    "standard_formula",
    "standard_multiply",
    "strassen_formula",
    "target_tensor",
    "variant_plan",
    "weight_norm_product",
    "write_csv",
]
