#!/usr/bin/env python3
"""Render experiment result CSVs as figures.

Two figure kinds cover the result families written by the randbc CLI:

  avg   error of the running average against trial count, one log-log
        line per recursion depth, with the standard algorithm drawn as a
        horizontal reference when its record is present
  box   per-depth box plots of the per-trial errors, one box per
        randomized algorithm and depth, with the plain recursive
        algorithm drawn as a line over depth and the standard algorithm
        as a horizontal reference

The tool is read-only over the CSV and derives nothing beyond medians
and quartiles.  Quartiles follow the median-exclusive convention with
whiskers at the furthest sample within 1.5 IQR of the box.
"""

import argparse
import sys
from pathlib import Path
from statistics import median

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
from matplotlib.patches import Patch

COLUMNS = (
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

_INT_FIELDS = ("n", "Q", "trial", "seed", "running_n")

# drawn as reference lines, never as boxes
REFERENCE_ALGORITHMS = ("deterministic", "standard")


def read_rows(path, filters=()):
    """Parse a result CSV, keeping rows whose raw fields match every
    key=value filter.  Raises on a foreign header, a malformed row, an
    unknown filter column, or an empty selection."""
    for key, _ in filters:
        if key not in COLUMNS:
            raise ValueError(f"unknown filter column: {key!r}")
    lines = Path(path).read_text().splitlines()
    if not lines or tuple(lines[0].split(",")) != COLUMNS:
        raise ValueError(f"{path}: not a result CSV (unexpected header)")
    rows = []
    for line in lines[1:]:
        parts = line.split(",")
        if len(parts) != len(COLUMNS):
            raise ValueError(f"{path}: malformed row: {line!r}")
        raw = dict(zip(COLUMNS, parts))
        if any(raw[key] != value for key, value in filters):
            continue
        row = dict(raw)
        for field in _INT_FIELDS:
            row[field] = int(row[field])
        row["rel_error"] = float(row["rel_error"])
        rows.append(row)
    if not rows:
        raise ValueError("no rows selected; check the CSV and --filter values")
    return rows


def _require_single(rows, field):
    values = sorted({str(r[field]) for r in rows})
    if len(values) > 1:
        raise ValueError(
            f"selection spans {len(values)} {field} values "
            f"({', '.join(values)}); narrow with --filter {field}=..."
        )
    return values[0]


def avg_series(rows):
    """Running-average curves {Q: [(running_n, rel_error), ...]} plus the
    standard-algorithm error (None when absent)."""
    curves = {}
    standard = None
    for row in rows:
        if row["algorithm"] == "standard":
            standard = row["rel_error"]
        elif row["algorithm"] == "full_random":
            curves.setdefault(row["Q"], []).append(
                (row["running_n"], row["rel_error"])
            )
    if not curves:
        raise ValueError("no running-average records selected")
    for Q, points in curves.items():
        points.sort()
        if len({n for n, _ in points}) != len(points):
            raise ValueError(
                f"duplicate checkpoints at Q={Q}; narrow the filter to one run"
            )
    return curves, standard


def tukey_quartiles(values):
    """Median-exclusive quartiles (q1, med, q3): the halves are split at
    the median, dropping the middle sample when the count is odd."""
    ordered = sorted(values)
    k = len(ordered)
    if k == 1:
        return ordered[0], ordered[0], ordered[0]
    half = k // 2
    return median(ordered[:half]), median(ordered), median(ordered[k - half:])


def box_stats(values, label):
    """One bxp stats dict: Tukey box, 1.5 IQR whiskers, the rest fliers."""
    q1, med, q3 = tukey_quartiles(values)
    lo_lim = q1 - 1.5 * (q3 - q1)
    hi_lim = q3 + 1.5 * (q3 - q1)
    inside = [v for v in values if lo_lim <= v <= hi_lim]
    return {
        "label": label,
        "med": med,
        "q1": q1,
        "q3": q3,
        "whislo": min(inside),
        "whishi": max(inside),
        "fliers": [v for v in values if not lo_lim <= v <= hi_lim],
    }


def _title(rows):
    experiment = _require_single(rows, "experiment")
    kind = _require_single(rows, "matrix_type")
    return f"{experiment} {kind} n={rows[0]['n']}"


def render_avg(rows, out):
    curves, standard = avg_series(rows)
    fig, ax = plt.subplots(figsize=(6.4, 4.2))
    for Q in sorted(curves):
        points = curves[Q]
        ax.plot([n for n, _ in points], [e for _, e in points], label=f"Q={Q}")
    if standard is not None:
        ax.axhline(standard, color="0.3", ls="--", lw=1.0, label="standard")
    ax.set_xscale("log")
    ax.set_yscale("log")
    ax.set_xlabel("trials averaged")
    ax.set_ylabel("relative error of average")
    ax.set_title(_title(rows))
    ax.legend()
    fig.tight_layout()
    fig.savefig(out, dpi=150)
    plt.close(fig)


def render_box(rows, out):
    by_algo = {}
    for row in rows:
        by_algo.setdefault(row["algorithm"], []).append(row)
    box_algos = sorted(a for a in by_algo if a not in REFERENCE_ALGORITHMS)
    if not box_algos:
        raise ValueError("no per-trial algorithms selected")

    fig, ax = plt.subplots(figsize=(7.0, 4.2))
    colors = plt.rcParams["axes.prop_cycle"].by_key()["color"]
    width = 0.8 / len(box_algos)
    handles = []
    depths = set()
    for i, algo in enumerate(box_algos):
        per_q = {}
        for row in by_algo[algo]:
            per_q.setdefault(row["Q"], []).append(row["rel_error"])
        depths.update(per_q)
        stats = [box_stats(per_q[Q], str(Q)) for Q in sorted(per_q)]
        positions = [
            Q + (i - (len(box_algos) - 1) / 2) * width for Q in sorted(per_q)
        ]
        color = colors[i % len(colors)]
        artists = ax.bxp(
            stats,
            positions=positions,
            widths=width * 0.9,
            showfliers=True,
            patch_artist=True,
        )
        for box in artists["boxes"]:
            box.set_facecolor(color)
            box.set_alpha(0.6)
        for med in artists["medians"]:
            med.set_color("black")
        handles.append(Patch(facecolor=color, alpha=0.6, label=algo))

    det = by_algo.get("deterministic")
    if det:
        points = sorted((r["Q"], r["rel_error"]) for r in det)
        (line,) = ax.plot(
            [q for q, _ in points],
            [e for _, e in points],
            color="black",
            marker="o",
            ms=3,
            lw=1.0,
            label="deterministic",
        )
        handles.append(line)
    std = by_algo.get("standard")
    if std:
        handles.append(
            ax.axhline(
                std[0]["rel_error"], color="0.3", ls="--", lw=1.0, label="standard"
            )
        )

    ax.set_yscale("log")
    ax.set_xticks(sorted(depths))
    ax.set_xticklabels([str(q) for q in sorted(depths)])
    ax.set_xlabel("recursion depth Q")
    ax.set_ylabel("relative error")
    ax.set_title(_title(rows))
    ax.legend(handles=handles, fontsize=8)
    fig.tight_layout()
    fig.savefig(out, dpi=150)
    plt.close(fig)


def _parse_filter(token):
    key, sep, value = token.partition("=")
    if not sep or not key:
        raise ValueError(f"filter must look like key=value, got {token!r}")
    return key, value


def build_parser():
    p = argparse.ArgumentParser(
        prog="render.py", description="Render an experiment CSV as a figure."
    )
    p.add_argument("--csv", required=True, help="result CSV produced by randbc")
    p.add_argument("--kind", required=True, choices=("avg", "box"))
    p.add_argument(
        "--filter",
        action="append",
        default=[],
        metavar="KEY=VALUE",
        help="keep only rows whose column matches (repeatable)",
    )
    p.add_argument("--out", required=True, help="output image path")
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        filters = [_parse_filter(token) for token in args.filter]
        rows = read_rows(args.csv, filters)
        if args.kind == "avg":
            render_avg(rows, args.out)
        else:
            render_box(rows, args.out)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    print(args.out)
    return 0


if __name__ == "__main__":
    sys.exit(main())
