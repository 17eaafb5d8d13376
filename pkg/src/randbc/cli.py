"""Command line front end.

Two subcommands:

  randbc experiment <name>   run a seeded error experiment, write CSV
  randbc bounds              print diagnostics and error bounds for a formula

Experiment flags override a JSON config file (--config), which overrides the
per-experiment defaults.  All randomness is derived from --seed, so a given
(flags, seed) pair reproduces its CSV byte for byte.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys

import numpy as np

from .bounds import (
    DEFAULT_HYPOTHESIS_THRESHOLD,
    NUMERICAL_BOUNDS,
    bound_deterministic,
    bound_numerical,
    bound_randomized,
    bound_sup_constant,
)
from .experiments import (
    ALGORITHMS,
    EXPERIMENT_DEFAULTS,
    EXPERIMENTS,
    ExperimentConfig,
    repeat_out_path,
    run_experiment,
    write_csv,
)
from .formula import diagnostics, load_formula, standard_formula, strassen_formula
from .matgen import MATRIX_KINDS, MatrixSpec, generate
from .multiply import apply_bc, standard_multiply
from .precision import DOUBLE, ScalarMode, decimal_mode, parse_precision
from .randomize import draw_plan, randomized_apply
from .rng import ROLE_MATRIX, ROLE_PLAN, derive_rng, derive_seed

log = logging.getLogger("randbc")

_CONFIG_KEYS = (
    "matrix_type",
    "size",
    "recursions",
    "trials",
    "seed",
    "precision",
    "perturb_sigma",
    "perturb_extra",
    "repeats",
    "algorithms",
    "variant",
    "out",
)


def _experiment_token(name: str) -> str:
    token = name.replace("-", "_")
    if token not in EXPERIMENTS:
        raise ValueError(f"unknown experiment {name!r}; expected one of "
                         + ", ".join(e.replace("_", "-") for e in EXPERIMENTS))
    return token


def _parse_mode(token: str, tie_rule: str | None) -> ScalarMode:
    mode = parse_precision(token)
    if tie_rule is None:
        return mode
    if mode.kind != "decimal":
        raise ValueError("--tie-rule applies only to decimal precisions")
    return decimal_mode(mode.digits, tie_rule)


def _parse_algorithms(text: str) -> tuple:
    algs = tuple(a.strip().replace("-", "_") for a in text.split(",") if a.strip())
    bad = [a for a in algs if a not in ALGORITHMS]
    if bad or not algs:
        raise ValueError(f"unknown algorithms: {bad}; expected from {ALGORITHMS}")
    return algs


def _add_experiment_parser(sub) -> None:
    p = sub.add_parser("experiment", help="run a seeded error experiment")
    p.add_argument("name", help="s1-avg, s1-dist, s2-avg, or s2-variants")
    p.add_argument("--matrix-type", choices=MATRIX_KINDS + ("all",))
    p.add_argument("--size", type=int, help="matrix size (multiple of 2^recursions)")
    p.add_argument("--recursions", type=int, help="deepest recursion level Q")
    p.add_argument("--trials", type=int, help="randomized trials per (kind, Q)")
    p.add_argument("--seed", type=int, help="master seed (u64, default 0)")
    p.add_argument("--precision", help="f64, f32, or dec<t>")
    p.add_argument("--tie-rule", choices=("half_even", "half_away"),
                   help="halfway rounding for decimal precisions")
    p.add_argument("--perturb-sigma", type=float, help="setting-1 noise scale")
    p.add_argument("--perturb-extra", type=int,
                   help="setting-1 extra zero coefficients perturbed per tensor")
    p.add_argument("--repeats", type=int,
                   help="independent repeats; each writes its own CSV")
    p.add_argument("--algorithms", help="comma-separated algorithm subset")
    p.add_argument("--variant", choices=("full", "sign", "perm", "none"),
                   help="plan transformation for s2-variants randomized runs")
    p.add_argument("--config", help="JSON file with defaults for the flags above")
    p.add_argument("--out", help="output CSV path (default <name>.csv)")


def _add_bounds_parser(sub) -> None:
    p = sub.add_parser("bounds", help="print diagnostics and error bounds")
    p.add_argument("--formula", default="strassen",
                   help="strassen, standard:<n>, or a formula file path")
    p.add_argument("--matrix-type", choices=MATRIX_KINDS, default="gaussian")
    p.add_argument("--size", type=int, help="operand size (default: grid size n)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--precision", default="f32", help="mode for the rounding bounds")
    p.add_argument("--tie-rule", choices=("half_even", "half_away"))
    p.add_argument("--mu", type=float, default=1.0, help="operand norm radius")
    p.add_argument("--threshold", type=float, default=DEFAULT_HYPOTHESIS_THRESHOLD,
                   help="hypothesis cap on factor * eps")
    p.add_argument("--json", action="store_true", help="emit a JSON object")


def _build_config(args) -> tuple[ExperimentConfig, str]:
    name = _experiment_token(args.name)
    settings = dict(EXPERIMENT_DEFAULTS[name])
    settings.update(seed=0, perturb_sigma=1e-3, perturb_extra=5, repeats=1,
                    algorithms=None, variant="full", out=None)
    if args.config is not None:
        with open(args.config, "r", encoding="utf-8") as fh:
            loaded = json.load(fh)
        unknown = sorted(set(loaded) - set(_CONFIG_KEYS))
        if unknown:
            raise ValueError(f"unknown config keys: {unknown}")
        settings.update(loaded)
    for key in _CONFIG_KEYS:
        flag = getattr(args, key, None)
        if flag is not None:
            settings[key] = flag
    if isinstance(settings["algorithms"], str):
        settings["algorithms"] = _parse_algorithms(settings["algorithms"])
    elif settings["algorithms"] is not None:
        settings["algorithms"] = tuple(settings["algorithms"])
    mode = settings["precision"]
    if isinstance(mode, str):
        mode = _parse_mode(mode, args.tie_rule)
    out = settings.pop("out") or name.replace("_", "-") + ".csv"
    cfg = ExperimentConfig(
        experiment=name,
        matrix_type=settings["matrix_type"],
        size=int(settings["size"]),
        recursions=int(settings["recursions"]),
        trials=int(settings["trials"]),
        seed=int(settings["seed"]),
        precision=mode,
        perturb_sigma=float(settings["perturb_sigma"]),
        perturb_extra=int(settings["perturb_extra"]),
        repeats=int(settings["repeats"]),
        algorithms=settings["algorithms"],
        variant=settings["variant"],
    )
    return cfg, out


def _cmd_experiment(args) -> int:
    cfg, out = _build_config(args)
    for repeat in range(cfg.repeats):
        records = run_experiment(cfg, repeat)
        path = repeat_out_path(out, repeat)
        write_csv(records, path)
        log.info("wrote %d records to %s", len(records), path)
        print(path)
    return 0


def _load_cli_formula(token: str):
    if token == "strassen":
        return strassen_formula()
    if token.startswith("standard:"):
        return standard_formula(int(token.split(":", 1)[1]))
    return load_formula(token)


def _bounds_payload(args) -> dict:
    f = _load_cli_formula(args.formula)
    mode = _parse_mode(args.precision, args.tie_rule)
    size = args.size if args.size is not None else f.n
    if size % f.n:
        raise ValueError(f"size {size} is not a multiple of the grid size {f.n}")
    mseed = derive_seed(args.seed, ROLE_MATRIX, 0, MATRIX_KINDS.index(args.matrix_type))
    A, B = generate(MatrixSpec(args.matrix_type, size, mseed))
    diag = diagnostics(f)
    payload = {
        "formula": args.formula,
        "n": f.n,
        "rank": f.rank,
        "size": size,
        "matrix_type": args.matrix_type,
        "precision": mode.label,
        "kappa": diag.kappa,
        "eta": diag.eta,
        "residual_norm": diag.residual_norm,
        "weight_norm_product": diag.weight_norm_product,
        "is_exact": diag.is_exact,
        "bounds": [],
    }

    def push(report, empirical=None):
        entry = {
            "name": report.bound_name,
            "bound": report.bound_value,
            "hypothesis_ok": report.hypothesis_ok,
        }
        if empirical is not None:
            entry["empirical"] = float(empirical)
        elif report.empirical_value is not None:
            entry["empirical"] = float(report.empirical_value)
        payload["bounds"].append(entry)

    exact = standard_multiply(A, B, DOUBLE)
    got_double = apply_bc(f, A, B, DOUBLE)
    got_mode = mode.to_double(apply_bc(f, mode.array(A), mode.array(B), mode))
    push(bound_deterministic(f, A, B), np.linalg.norm(got_double - exact))
    push(bound_randomized(f, A, B))
    push(bound_sup_constant(f, args.mu))
    plan = draw_plan(f.n, derive_rng(args.seed, ROLE_PLAN, 1, 0))
    rand_double = randomized_apply(f, plan, A, B, DOUBLE)
    rand_mode = mode.to_double(randomized_apply(f, plan, mode.array(A), mode.array(B), mode))
    for which in NUMERICAL_BOUNDS:
        if which == "scalar_p5" and size != f.n:
            continue
        report = bound_numerical(f, A, B, mode, which, args.threshold)
        if which in ("scalar_p5", "block_p6"):
            push(report, np.linalg.norm(got_mode - got_double))
        elif which == "randomized_p7":
            push(report, np.linalg.norm(rand_mode - rand_double))
        elif which == "total_det_p8":
            push(report, np.linalg.norm(got_mode - exact))
        else:
            push(report)
    return payload


def _cmd_bounds(args) -> int:
    payload = _bounds_payload(args)
    if args.json:
        print(json.dumps(payload, indent=2, sort_keys=True))
        return 0
    for key in ("formula", "n", "rank", "size", "matrix_type", "precision"):
        print(f"{key} {payload[key]}")
    for key in ("kappa", "eta", "residual_norm", "weight_norm_product"):
        print(f"{key} {payload[key]!r}")
    print(f"is_exact {payload['is_exact']}")
    for entry in payload["bounds"]:
        line = f"{entry['name']} bound={entry['bound']!r}"
        if "empirical" in entry:
            line += f" empirical={entry['empirical']!r}"
        line += f" hypothesis_ok={entry['hypothesis_ok']}"
        print(line)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="randbc",
        description="randomized bilinear matrix multiplication experiments",
    )
    parser.add_argument("--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)
    _add_experiment_parser(sub)
    _add_bounds_parser(sub)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )
    try:
        if args.command == "experiment":
            return _cmd_experiment(args)
        return _cmd_bounds(args)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
